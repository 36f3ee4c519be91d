from importlib.metadata import version

from ._errors import WavelabError
from .evolve import EvolveConfig, Scheme, Termination, Trajectory, evolve
from .models import ModelKind, ModelSpec
from .spectral import RadialField, RadialGrid, SpectralField, State

__all__ = [
    "EvolveConfig",
    "ModelKind",
    "ModelSpec",
    "RadialField",
    "RadialGrid",
    "Scheme",
    "SpectralField",
    "State",
    "Termination",
    "Trajectory",
    "WavelabError",
    "evolve",
]

__version__ = version("supercritical-wave-lab")
