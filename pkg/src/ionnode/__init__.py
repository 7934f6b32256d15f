"""Monte Carlo simulator and analysis toolkit for a dual-type trapped-ion network node."""

from .config import NoiseConfig, noiseless
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["NoiseConfig", "noiseless", "BACKEND", "__version__"]
