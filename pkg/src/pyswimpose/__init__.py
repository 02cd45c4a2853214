# The MIT License

# Copyright (c) 2024 pyswimpose developers

# Permission is hereby granted, free of charge, to any person obtaining a copy of
# this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to
# use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies
# of the Software, and to permit persons to whom the Software is furnished to do
# so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.


__version__ = "1.0.0"

from . import Architecture, CheckpointManager, Config, ErrorMessage, FolderManager
from .CheckpointManager import get_estimator, get_refiner, load_checkpoint, save_checkpoint
from .core import JointId, ModelConfig, Pose, SequenceSpec, StyleLabel, VideoClip, mirror_pose
from .ErrorMessage import CheckpointError, ConfigurationError, DatasetError, PoseError, debug, error
from .FolderManager import get_path, set_path

__all__ = [
    "Architecture",
    "CheckpointManager",
    "Config",
    "ErrorMessage",
    "FolderManager",
    "get_estimator",
    "get_refiner",
    "load_checkpoint",
    "save_checkpoint",
    "JointId",
    "ModelConfig",
    "Pose",
    "SequenceSpec",
    "StyleLabel",
    "VideoClip",
    "mirror_pose",
    "PoseError",
    "ConfigurationError",
    "DatasetError",
    "CheckpointError",
    "debug",
    "error",
    "get_path",
    "set_path",
]
