import os
import sys

import psutil
import torch


class HardwareInfo:
    """Lazily collected information about the machine the models run on."""

    _information_extracted: bool = False
    _torch_device: str
    _cpu_count: int
    _total_memory_gb: float
    _python_version_str: str

    def extract_information(self) -> None:
        if not self._information_extracted:
            requested = os.environ.get("PYSWIMPOSE_DEVICE", "")
            if requested:
                self._torch_device = requested
            else:
                self._torch_device = "cuda" if torch.cuda.is_available() else "cpu"
            self._cpu_count = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
            self._total_memory_gb = psutil.virtual_memory().total / 1024**3
            version = sys.version_info
            self._python_version_str = f"{version.major}.{version.minor}"
            self._information_extracted = True

    def reset(self) -> None:
        self._information_extracted = False

    @property
    def torch_device(self) -> str:
        if not self._information_extracted:
            self.extract_information()
        return self._torch_device

    @property
    def cpu_count(self) -> int:
        if not self._information_extracted:
            self.extract_information()
        return self._cpu_count

    @property
    def total_memory_gb(self) -> float:
        if not self._information_extracted:
            self.extract_information()
        return self._total_memory_gb

    def summary(self) -> str:
        if not self._information_extracted:
            self.extract_information()
        return (
            f"python {self._python_version_str}, torch {torch.__version__}, device {self._torch_device}, "
            f"{self._cpu_count} cores, {self._total_memory_gb:.1f} GB memory"
        )


hardware_info = HardwareInfo()
