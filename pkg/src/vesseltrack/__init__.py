"""Multi-sensor vessel tracking: calibration, time binning, a particle
filter with LiDAR/camera measurement models, adaptive sensor selection,
a scenario simulator and zone-wise evaluation."""

from .fusion import ALL_MODES, FusionMode, SensorSuite
from .kernels import BACKEND
from .tracker import TrackerConfig, run_tracker

__version__ = "0.1.0"

__all__ = ["ALL_MODES", "BACKEND", "FusionMode", "SensorSuite", "TrackerConfig", "run_tracker", "__version__"]
