"""Multi-target detection measurements and their induced patch alignment model.

Subpackages by role: ``mtd_sim`` synthesizes measurements and extracts
patches with their latent group elements, ``markov1d`` holds the exact
group-offset chain (transition matrix, stationary law, mixing bounds),
``hardcore2d`` the planar hard-core anchor model, ``mra`` the induced
iid alignment model and its population moments, ``estimators`` the
moment and recovery statistics, ``serialize`` file formats, and ``cli``
the command-line front end.
"""

__version__ = "0.1.0"

from .core import (
    MtdError,
    NoiseSpec,
    SeedSpec,
    Signal1D,
    Signal2D,
    derive_stream,
    tv_distance,
)
from .mra import InducedModelSpec, MomentTensor, clean_moment, noisy_population_moment

__all__ = [
    "__version__",
    "MtdError",
    "NoiseSpec",
    "SeedSpec",
    "Signal1D",
    "Signal2D",
    "derive_stream",
    "tv_distance",
    "InducedModelSpec",
    "MomentTensor",
    "clean_moment",
    "noisy_population_moment",
]
