"""Verify that pyswimpose import does not already initialize instances."""

import sys


def test_import() -> None:
    """Verify that pyswimpose import does not have side-effects.

    Importing the package must not create the FolderManager, so that the output root can still be chosen afterwards,
    e.g. by the --output flag of the command line interface or the PYSWIMPOSE_OUTPUT environment variable.
    """
    # the test only works if pyswimpose was not imported before
    assert "pyswimpose" not in sys.modules, "pyswimpose was already imported before running the test"
    import pyswimpose

    assert "pyswimpose" in sys.modules, "pyswimpose could not be imported successfully"
    assert (
        pyswimpose.FolderManager.FolderManager.has_instance() is False
    ), "Import of pyswimpose has already initialized the FolderManager, fixing the output root too early."
    hardware_info = pyswimpose.Architecture.hardware_info
    assert hardware_info._information_extracted is False, "Import of pyswimpose has already queried the device."
