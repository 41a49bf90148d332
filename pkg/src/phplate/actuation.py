"""Actuator profiles, desired edge deflection and controller set-points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ActuatorParams:
    """Profile amplitude ``Psi`` and sharpness ``sigma`` (1/m)."""

    Psi: float = 0.07
    sigma: float = 10.0

    def __post_init__(self):
        if not np.isfinite(self.Psi):
            raise ConfigError(f"Psi = {self.Psi} outside allowed range (-inf, inf)")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"sigma = {self.sigma} outside allowed range (0, inf)")


@dataclass(frozen=True)
class EquilibriumParams:
    """Target shape: parabola ``a z1^2`` then a line of slope ``b``."""

    a: float = 0.1368
    b: float = 0.1315

    def __post_init__(self):
        for key in ("a", "b"):
            v = getattr(self, key)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{key} = {v} outside allowed range (0, inf)")


def _tsech2(x):
    t = np.tanh(x)
    return t * (1.0 - t * t)


def lambda_profile(z1, params: ActuatorParams, L1: float = 1.0):
    """Actuator characteristic ``-Psi d^2/dz1^2 [tanh(s z) - tanh(s (z - L1/2))]``.

    Evaluated in closed form,
    ``2 Psi s^2 [tanh(s z) sech^2(s z) - tanh(s (z - L1/2)) sech^2(s (z - L1/2))]``.
    """
    s = params.sigma
    z = np.asarray(z1, dtype=float)
    return 2.0 * params.Psi * s**2 * (_tsech2(s * z) - _tsech2(s * (z - 0.5 * L1)))


def lambda_integral(params: ActuatorParams, L1: float = 1.0) -> float:
    """Exact ``int_0^L1 Lambda dz1 = Psi s (1 - sech^2(s L1))``."""
    s = params.sigma
    return float(params.Psi * s * np.tanh(s * L1) ** 2)


def window(z1, params: ActuatorParams, L1: float = 1.0):
    """The window ``tanh(s z) - tanh(s (z - L1/2))`` whose curvature gives Lambda."""
    s = params.sigma
    z = np.asarray(z1, dtype=float)
    return np.tanh(s * z) - np.tanh(s * (z - 0.5 * L1))


def desired_profile(z1, params: EquilibriumParams, L1: float = 1.0):
    """Target deflection along the actuated edge."""
    z = np.asarray(z1, dtype=float)
    half = 0.5 * L1
    return np.where(z < half, params.a * z**2,
                    params.b * (z - half) + params.a * half**2)


def controller_setpoints(lam1, lam2, wd, weights) -> tuple[float, float]:
    """Set-points ``x_c^{l,d} = int Lambda_l w^d`` with the given edge weights."""
    wd = np.asarray(wd, dtype=float)
    return (float(np.dot(weights, np.asarray(lam1) * wd)),
            float(np.dot(weights, np.asarray(lam2) * wd)))
