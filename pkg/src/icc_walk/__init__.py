"""Random walks on icc groups: switching elements, heavy-tailed weights and
sparse convolution of symmetric measures on the lamplighter group."""
from .errors import WalkError
from .groups import FreeAbelian, Heisenberg, Lamplighter, SymmetricSet, group_from_descriptor
from .heavytail import HeavyTailDist
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FreeAbelian",
    "HeavyTailDist",
    "Heisenberg",
    "Lamplighter",
    "SymmetricSet",
    "WalkError",
    "group_from_descriptor",
    "__version__",
]
