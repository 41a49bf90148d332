"""Port-Hamiltonian Kirchhoff plate with boundary control and a boundary observer."""

from .errors import (ConfigError, DivergenceError, GridSizeError, InsufficientDataError,
                     UnsupportedOrderError)
from .grid import BoundaryConditions, EdgeKind, Grid, PlateParams
from .plate import PlantState
from .simulate import SimConfig, SystemParams, assemble, run

__all__ = [
    "BoundaryConditions", "ConfigError", "DivergenceError", "EdgeKind", "Grid", "GridSizeError",
    "InsufficientDataError", "PlantState", "PlateParams", "SimConfig", "SystemParams",
    "UnsupportedOrderError", "assemble", "run",
]
