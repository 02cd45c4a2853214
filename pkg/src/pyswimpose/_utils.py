import random
import re
from itertools import zip_longest

import numpy as np
import torch


def _get_version_tuple(version: str) -> tuple[int, ...]:
    version_extract = re.search(r"^(?:\d+\.)*\d+", version)
    if not version_extract:
        msg = f"Cannot extract version from {version}"
        raise ValueError(msg)
    return tuple(map(int, version_extract.group(0).split(".")))


def _is_version_reached(version: str, reference: str) -> bool:
    version_tuple = _get_version_tuple(version)
    reference_tuple = _get_version_tuple(reference)
    # zip and un-zip the version tuples to make them same length
    version_tuple, compare = zip(*zip_longest(version_tuple, reference_tuple, fillvalue=0))
    return version_tuple <= compare


def is_format_compatible(found: str, supported: str) -> bool:
    """Check whether a file format version can be read by the code supporting `supported`.

    The major number must be equal and the found version must not be newer than the supported one.
    """
    found_tuple = _get_version_tuple(found)
    supported_tuple = _get_version_tuple(supported)
    return found_tuple[0] == supported_tuple[0] and _is_version_reached(found, supported)


def seed_everything(seed: int) -> torch.Generator:
    """Seed python, numpy and torch and return a torch generator seeded identically."""
    random.seed(seed)
    np.random.seed(seed % 2**32)  # noqa: NPY002
    torch.manual_seed(seed)
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator
