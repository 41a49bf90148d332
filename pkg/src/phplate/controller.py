"""Four-state port-Hamiltonian boundary controller."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ControllerParams:
    """Gains of the energy-shaping and damping-injection controller.

    States 1 and 2 integrate the collocated plant outputs; states 3 and 4
    form a damped oscillator with Hamiltonian ``0.5 x34^T Mc x34``.
    """

    c1: float = 5.0
    c2: float = 5.0
    Jc34: float = 1.0
    Rc33: float = 15.0
    Rc34: float = 1.0
    Rc44: float = 15.0
    G31: float = 1.0
    G32: float = 0.0
    G41: float = 0.0
    G42: float = 1.0
    Mc33: float = 25.0
    Mc34: float = 5.0
    Mc44: float = 25.0
    us1: float = -1.0
    us2: float = -1.0
    xc1_d: float = 0.0
    xc2_d: float = 0.0

    def __post_init__(self):
        for key in ("c1", "c2"):
            v = getattr(self, key)
            if not v > 0:
                raise ConfigError(f"{key} = {v} outside allowed range (0, inf)")
        if np.linalg.eigvalsh(self.R).min() < -1e-12 * max(1.0, np.abs(self.R).max()):
            raise ConfigError(
                f"Rc block [[{self.Rc33}, {self.Rc34}], [{self.Rc34}, {self.Rc44}]] "
                "is not positive semidefinite")
        if np.linalg.eigvalsh(self.M).min() <= 0:
            raise ConfigError(
                f"Mc block [[{self.Mc33}, {self.Mc34}], [{self.Mc34}, {self.Mc44}]] "
                "is not positive definite")

    @property
    def R(self) -> np.ndarray:
        return np.array([[self.Rc33, self.Rc34], [self.Rc34, self.Rc44]])

    @property
    def M(self) -> np.ndarray:
        return np.array([[self.Mc33, self.Mc34], [self.Mc34, self.Mc44]])

    @property
    def G(self) -> np.ndarray:
        """Input map of states 3, 4: rows are states, columns inputs."""
        return np.array([[self.G31, self.G32], [self.G41, self.G42]])

    @property
    def JR(self) -> np.ndarray:
        """``J - R`` restricted to states 3, 4."""
        return np.array([[-self.Rc33, self.Jc34 - self.Rc34],
                         [-self.Jc34 - self.Rc34, -self.Rc44]])


def hc_value(x: np.ndarray, p: ControllerParams) -> float:
    """Controller Hamiltonian ``H_c``."""
    x = np.asarray(x, dtype=float)
    e1 = x[0] - p.xc1_d - p.us1 / p.c1
    e2 = x[1] - p.xc2_d - p.us2 / p.c2
    return float(0.5 * p.c1 * e1**2 + 0.5 * p.c2 * e2**2 + 0.5 * x[2:] @ p.M @ x[2:])


def hc_gradient(x: np.ndarray, p: ControllerParams) -> np.ndarray:
    """Gradient of ``H_c``."""
    x = np.asarray(x, dtype=float)
    g = np.empty(4)
    g[0] = p.c1 * (x[0] - p.xc1_d) - p.us1
    g[1] = p.c2 * (x[1] - p.xc2_d) - p.us2
    g[2:] = p.M @ x[2:]
    return g


def controller_outputs(x: np.ndarray, p: ControllerParams) -> np.ndarray:
    """Collocated outputs ``y_c = G_c^T grad H_c``."""
    g = hc_gradient(x, p)
    return g[:2] + p.G.T @ g[2:]


def controller_rhs(x: np.ndarray, uc, p: ControllerParams) -> np.ndarray:
    """Controller state derivative for input ``uc``."""
    uc = np.asarray(uc, dtype=float)
    g = hc_gradient(x, p)
    dx = np.empty(4)
    dx[:2] = uc
    dx[2:] = p.JR @ g[2:] + p.G @ uc
    return dx


def interconnect(p_field: np.ndarray, lam1: np.ndarray, lam2: np.ndarray,
                 weights: np.ndarray, rho_A: float) -> np.ndarray:
    """Controller inputs ``u_c`` from the actuated-edge velocities.

    ``u_c1 = int_B2 Lambda_1 p / rho_A`` and ``u_c2`` likewise on ``B4``.
    The plant inputs are ``u = -y_c``.
    """
    v = np.asarray(p_field) / rho_A
    return np.array([np.dot(weights, lam1 * v[:, 0]), np.dot(weights, lam2 * v[:, -1])])
