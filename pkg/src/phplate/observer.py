"""Boundary observer: plate copy with point error injection on the actuated edges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import PLATE_BC, BoundaryConditions, Grid, PlateParams
from .plate import PlantState, plant_rhs, total_energy


@dataclass(frozen=True)
class ObserverParams:
    """Observer gains, initial-shape parameter and injection footprint.

    ``injection = "node"`` injects at the single measurement node;
    ``"hat"`` spreads it over three nodes with weights 1/4, 1/2, 1/4 and
    samples the measurement with the same weights.
    """

    k1: float = 2000.0
    k2: float = 2000.0
    Kd11: float = 2000.0
    Kd22: float = 2000.0
    d: float = 0.05
    injection: str = "node"

    def __post_init__(self):
        for key in ("k1", "k2", "Kd11", "Kd22"):
            v = getattr(self, key)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{key} = {v} outside allowed range (0, inf)")
        if self.injection not in ("node", "hat"):
            raise ConfigError(f"injection = {self.injection} outside allowed set {{node, hat}}")


@dataclass
class ObserverState:
    w_hat: np.ndarray
    p_hat: np.ndarray

    @classmethod
    def initial(cls, grid: Grid, p: ObserverParams, bc: BoundaryConditions = PLATE_BC):
        """``w_hat = -d z1^2``, ``p_hat = 0`` (pinned nodes zeroed)."""
        Z1, _ = grid.mesh()
        w = -p.d * Z1**2
        w[bc.fixed_mask(grid)] = 0.0
        return cls(w, np.zeros(grid.shape))

    def as_plant(self) -> PlantState:
        return PlantState(self.w_hat, self.p_hat)


@dataclass
class Measurements:
    """Deflections ``ybar`` and velocities ``y`` at the two sensors."""

    ybar1: float
    ybar2: float
    y1: float
    y2: float


def measurement_node(grid: Grid) -> int:
    """Index along the actuated edges of ``z1 = 3 L1 / 4``."""
    if (grid.N1 - 1) % 4:
        raise ConfigError(f"N1 = {grid.N1} puts no node at 3 L1/4; N1 = 1 mod 4 required")
    return 3 * (grid.N1 - 1) // 4


def sensor_weights(grid: Grid, p: ObserverParams) -> np.ndarray:
    """Sampling weights along the actuated edge, summing to one."""
    m = measurement_node(grid)
    s = np.zeros(grid.N1)
    if p.injection == "node":
        s[m] = 1.0
    else:
        s[m - 1:m + 2] = (0.25, 0.5, 0.25)
    return s


def measure(plant: PlantState, grid: Grid, p: ObserverParams, params: PlateParams) -> Measurements:
    """Sensor readings from the plant."""
    s = sensor_weights(grid, p)
    v = plant.p / params.rho_A
    return Measurements(float(s @ plant.w[:, 0]), float(s @ plant.w[:, -1]),
                        float(s @ v[:, 0]), float(s @ v[:, -1]))


def correction_terms(m: Measurements, obs: ObserverState, grid: Grid, p: ObserverParams,
                     params: PlateParams) -> np.ndarray:
    """``k_hat = -k (ybar - w_hat) - K (y - p_hat / rho_A)`` at both sensors."""
    pred = measure(obs.as_plant(), grid, p, params)
    k1 = -p.k1 * (m.ybar1 - pred.ybar1) - p.Kd11 * (m.y1 - pred.y1)
    k2 = -p.k2 * (m.ybar2 - pred.ybar2) - p.Kd22 * (m.y2 - pred.y2)
    return np.array([k1, k2])


def injection_loads(khat, grid: Grid, p: ObserverParams) -> tuple[np.ndarray, np.ndarray]:
    """Edge shear densities ``-delta_h k_hat`` on ``B2`` and ``B4``.

    The discrete Dirac is the sensor weight divided by the trapezoid weight,
    so its edge integral against a test function reproduces the sampling.
    """
    delta = sensor_weights(grid, p) / grid.edge_weights("B2")
    return -khat[0] * delta, -khat[1] * delta


def observer_rhs(obs: ObserverState, u, khat, lam1: np.ndarray, lam2: np.ndarray,
                 grid: Grid, params: PlateParams, p: ObserverParams,
                 bc: BoundaryConditions = PLATE_BC, damping=0.0):
    """Observer derivatives: plate copy driven by ``Lambda u`` plus the injection."""
    q2, q4 = injection_loads(np.asarray(khat, dtype=float), grid, p)
    applied = {"B2": lam1 * u[0] + q2, "B4": lam2 * u[1] + q4}
    return plant_rhs(obs.as_plant(), grid, params, applied, bc, damping)


def error_energies(plant: PlantState, obs: ObserverState, grid: Grid, p: ObserverParams,
                   params: PlateParams, bc: BoundaryConditions = PLATE_BC) -> tuple[float, float]:
    """Error energy ``H~`` and the shaped error energy ``H~_d``."""
    err = PlantState(plant.w - obs.w_hat, plant.p - obs.p_hat)
    Ht = total_energy(err, grid, params, bc)
    s = sensor_weights(grid, p)
    e1, e2 = s @ err.w[:, 0], s @ err.w[:, -1]
    return Ht, float(Ht + 0.5 * p.k1 * e1**2 + 0.5 * p.k2 * e2**2)
