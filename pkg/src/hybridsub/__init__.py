"""hybridsub - hybrid subspace learning: low-rank plus column-sparse matrix decomposition."""

__version__ = "1.0.0"
__author__ = "hybridsub developers"

from .core.app import HybridSubApp
from .core.hsl import HslConfig, HslModel, fit, fit_warm_start_path
from .core.synth import SynthSpec, generate_categorical, generate_hybrid

__all__ = [
    "HybridSubApp",
    "HslConfig",
    "HslModel",
    "fit",
    "fit_warm_start_path",
    "SynthSpec",
    "generate_hybrid",
    "generate_categorical",
]
