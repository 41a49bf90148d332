"""Kirchhoff plate: energy, dynamics, boundary quantities and power audit.

The elastic energy is discretised as the trapezoid integral of the bending
density built from nodal curvatures ``a = w_[20]``, ``b = w_[02]`` (closed at
the edges by the ghost layer of :func:`grid.ghost_layer1`) and cell-centred
twists ``t = w_[11]``.  The restoring force is the exact gradient of that
discrete energy, which reduces to the 13-point biharmonic away from the
edges and makes the discrete power balance hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InsufficientDataError
from .grid import (EDGES, BoundaryConditions, EdgeKind, Grid, PLATE_BC, PlateParams,
                   ghost_layer1, ghost_layer1_adjoint, integrate_domain)


@dataclass
class PlantState:
    """Deflection ``w`` and momentum density ``p = rho_A * w_t``."""

    w: np.ndarray
    p: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid) -> "PlantState":
        return cls(np.zeros(grid.shape), np.zeros(grid.shape))


@dataclass
class BoundaryQuantities:
    """Shear forces and bending moments on the four edges (raw formulas)."""

    Q1_bottom: np.ndarray
    Q1_top: np.ndarray
    M1_bottom: np.ndarray
    M1_top: np.ndarray
    Q2_left: np.ndarray
    Q2_right: np.ndarray
    M2_left: np.ndarray
    M2_right: np.ndarray


def curvatures(w: np.ndarray, grid: Grid, bc: BoundaryConditions, nu: float):
    """Nodal ``w_[20]``, ``w_[02]`` with edge closures, and cell twists ``w_[11]``."""
    E = ghost_layer1(w, grid, bc, nu)
    a = (E[:-2, 1:-1] - 2 * E[1:-1, 1:-1] + E[2:, 1:-1]) / grid.dz1**2
    b = (E[1:-1, :-2] - 2 * E[1:-1, 1:-1] + E[1:-1, 2:]) / grid.dz2**2
    u = E[1:-1, 1:-1]
    t = (u[1:, 1:] - u[:-1, 1:] - u[1:, :-1] + u[:-1, :-1]) / (grid.dz1 * grid.dz2)
    return a, b, t


def _cell_to_node_mean(c: np.ndarray) -> np.ndarray:
    n1, n2 = c.shape
    s = np.zeros((n1 + 1, n2 + 1))
    cnt = np.zeros_like(s)
    for di in (0, 1):
        for dj in (0, 1):
            s[di:di + n1, dj:dj + n2] += c
            cnt[di:di + n1, dj:dj + n2] += 1
    return s / cnt


def hamiltonian_density(s: PlantState, grid: Grid, params: PlateParams,
                        bc: BoundaryConditions = PLATE_BC) -> np.ndarray:
    """Kinetic plus bending energy density sampled at the nodes.

    The twist term is the mean of the adjacent cell values so that the
    trapezoid integral of the density equals the discrete energy exactly.
    """
    D, nu = params.D_E, params.nu
    a, b, t = curvatures(s.w, grid, bc, nu)
    kin = s.p**2 / (2 * params.rho_A)
    bend = 0.5 * D * (a**2 + b**2 + 2 * nu * a * b)
    twist = D * (1 - nu) * _cell_to_node_mean(t**2)
    return kin + bend + twist


def total_energy(s: PlantState, grid: Grid, params: PlateParams,
                 bc: BoundaryConditions = PLATE_BC) -> float:
    """Trapezoid integral of :func:`hamiltonian_density`."""
    return integrate_domain(hamiltonian_density(s, grid, params, bc), grid)


def elastic_force(w: np.ndarray, grid: Grid, params: PlateParams,
                  bc: BoundaryConditions = PLATE_BC) -> np.ndarray:
    """Gradient of the discrete bending energy with respect to nodal ``w``.

    Computed matrix-free: moments from the ghost-extended field, then the
    transposed stencils scatter them back.  Zero on pinned nodes.
    """
    D, nu = params.D_E, params.nu
    h1, h2 = grid.dz1, grid.dz2
    a, b, t = curvatures(w, grid, bc, nu)
    om = grid.node_weights()
    mx = om * D * (a + nu * b)
    my = om * D * (b + nu * a)
    G = np.zeros((grid.N1 + 2, grid.N2 + 2))
    G[:-2, 1:-1] += mx / h1**2
    G[1:-1, 1:-1] -= 2 * mx / h1**2
    G[2:, 1:-1] += mx / h1**2
    G[1:-1, :-2] += my / h2**2
    G[1:-1, 1:-1] -= 2 * my / h2**2
    G[1:-1, 2:] += my / h2**2
    F = ghost_layer1_adjoint(G, grid, bc, nu)
    # cell energy h1*h2*D(1-nu)t^2 with dt/dw = +-1/(h1*h2)
    tw = 2 * D * (1 - nu) * t
    F[1:, 1:] += tw
    F[:-1, 1:] -= tw
    F[1:, :-1] -= tw
    F[:-1, :-1] += tw
    F[bc.fixed_mask(grid)] = 0.0
    return F


def edge_load(applied: Mapping[str, np.ndarray] | None, grid: Grid,
              bc: BoundaryConditions = PLATE_BC) -> np.ndarray:
    """Nodal force from edge shear loads (trapezoid-weighted), shape ``(N1, N2)``."""
    f = np.zeros(grid.shape)
    for e, q in (applied or {}).items():
        if e not in EDGES:
            raise ValueError(f"unknown edge {e!r}")
        if bc[e].fixed:
            continue
        f[grid.edge_slice(e)] += grid.edge_weights(e) * np.asarray(q, dtype=float)
    return f


def plant_rhs(s: PlantState, grid: Grid, params: PlateParams,
              applied: Mapping[str, np.ndarray] | None = None,
              bc: BoundaryConditions = PLATE_BC, damping: np.ndarray | float = 0.0):
    """Time derivatives ``(w_t, p_t)`` of the plate.

    Parameters
    ----------
    s : PlantState
    grid, params
    applied : mapping, optional
        Edge -> shear load profile, positive when pushing ``w`` upwards.
        On ``B2`` this is ``Q1``, on ``B4`` it is ``-Q1`` of the raw formula.
    bc : BoundaryConditions
    damping : array_like or float
        Optional nonnegative viscous coefficient field; zero for the ideal plate.

    Returns
    -------
    (ndarray, ndarray)
    """
    fixed = bc.fixed_mask(grid)
    v = s.p / params.rho_A
    force = -elastic_force(s.w, grid, params, bc) + edge_load(applied, grid, bc)
    pdot = force / grid.node_weights() - np.asarray(damping) * v
    wdot = v.copy()
    wdot[fixed] = 0.0
    pdot[fixed] = 0.0
    return wdot, pdot


# --------------------------------------------------------------------------
# boundary quantities (one-sided second-order stencils on the nodal field)

_D1 = np.array([-3.0, 4.0, -1.0]) / 2
_D2 = np.array([2.0, -5.0, 4.0, -1.0])
_D3 = np.array([-2.5, 9.0, -12.0, 7.0, -1.5])


def _normal_diff(f: np.ndarray, coef: np.ndarray, order: int, h: float, axis: int, side: int):
    """Derivative along ``axis`` at the ``side`` edge, pointing into +z."""
    g = np.moveaxis(f, axis, 0)
    if side == 1:
        g = g[::-1]
    r = sum(c * g[k] for k, c in enumerate(coef)) / h**order
    return r if side == 0 else (-1) ** order * r


def _line_d2(g: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    g = np.moveaxis(np.asarray(g, dtype=float), axis, -1)
    r = np.empty_like(g)
    r[..., 1:-1] = (g[..., :-2] - 2 * g[..., 1:-1] + g[..., 2:]) / h**2
    r[..., 0] = (_D2 @ np.moveaxis(g[..., :4], -1, 0)) / h**2
    r[..., -1] = (_D2 @ np.moveaxis(g[..., ::-1][..., :4], -1, 0)) / h**2
    return np.moveaxis(r, -1, axis)


def boundary_quantities(w: np.ndarray, grid: Grid, params: PlateParams) -> BoundaryQuantities:
    """Evaluate ``Q1, M1`` on ``B2/B4`` and ``Q2, M2`` on ``B1/B3``.

    ``Q1 = D(w_[03] + (2-nu) w_[21])``, ``M1 = -D(w_[02] + nu w_[20])``,
    ``Q2 = -D(w_[30] + (2-nu) w_[12])``, ``M2 = D(w_[20] + nu w_[02])``.
    Normal derivatives use one-sided stencils, tangential ones central
    stencils (one-sided at the corners); all second order.
    """
    D, nu = params.D_E, params.nu
    h1, h2 = grid.dz1, grid.dz2
    out = {}
    for side, name in ((0, "bottom"), (1, "top")):
        wyyy = _normal_diff(w, _D3, 3, h2, 1, side)
        wyy = _normal_diff(w, _D2, 2, h2, 1, side)
        wxx = _line_d2(w, h1, axis=0)
        wxxy = _normal_diff(wxx, _D1, 1, h2, 1, side)
        wxx_e = wxx[:, 0 if side == 0 else -1]
        out[f"Q1_{name}"] = D * (wyyy + (2 - nu) * wxxy)
        out[f"M1_{name}"] = -D * (wyy + nu * wxx_e)
    for side, name in ((0, "left"), (1, "right")):
        wxxx = _normal_diff(w, _D3, 3, h1, 0, side)
        wxx = _normal_diff(w, _D2, 2, h1, 0, side)
        wyy = _line_d2(w, h2, axis=1)
        wyyx = _normal_diff(wyy, _D1, 1, h1, 0, side)
        wyy_e = wyy[0 if side == 0 else -1, :]
        out[f"Q2_{name}"] = -D * (wxxx + (2 - nu) * wyyx)
        out[f"M2_{name}"] = D * (wxx + nu * wyy_e)
    return BoundaryQuantities(**out)


def _corner_twist(w: np.ndarray, grid: Grid, i: int, j: int) -> float:
    g = w if i == 0 else w[::-1]
    g = g if j == 0 else g[:, ::-1]
    s = (1 if i == 0 else -1) * (1 if j == 0 else -1)
    return s * float(_D1 @ g[:3, :3] @ _D1) / (grid.dz1 * grid.dz2)


def port_power(s: PlantState, grid: Grid, params: PlateParams) -> float:
    """Power delivered to the plate through its boundary.

    Sum over the edges of the shear/velocity and moment/rotation-rate
    products with outward orientation, plus the concentrated corner forces
    ``2 D (1-nu) w_[11]``.
    """
    D, nu = params.D_E, params.nu
    v = s.p / params.rho_A
    bq = boundary_quantities(s.w, grid, params)
    w1, w2 = grid.edge_weights("B2"), grid.edge_weights("B1")
    vy0 = _normal_diff(v, _D1, 1, grid.dz2, 1, 0)
    vy1 = _normal_diff(v, _D1, 1, grid.dz2, 1, 1)
    vx0 = _normal_diff(v, _D1, 1, grid.dz1, 0, 0)
    vx1 = _normal_diff(v, _D1, 1, grid.dz1, 0, 1)
    P = w1 @ (bq.Q1_bottom * v[:, 0] + bq.M1_bottom * vy0)
    P -= w1 @ (bq.Q1_top * v[:, -1] + bq.M1_top * vy1)
    P += w2 @ (bq.Q2_right * v[-1, :] + bq.M2_right * vx1)
    P -= w2 @ (bq.Q2_left * v[0, :] + bq.M2_left * vx0)
    N1, N2 = grid.shape
    for i, j, sg in ((N1 - 1, N2 - 1, 1), (0, 0, 1), (N1 - 1, 0, -1), (0, N2 - 1, -1)):
        P += sg * 2 * D * (1 - nu) * _corner_twist(s.w, grid, i, j) * v[i, j]
    return float(P)


def power_balance_residual(t: np.ndarray, H: np.ndarray, P: np.ndarray,
                           dissipation: np.ndarray | None = None) -> np.ndarray:
    """Centred energy rate minus time-averaged port power.

    ``r_n = (H_{n+1} - H_{n-1}) / (2 dt) - (P_{n-1} + 2 P_n + P_{n+1}) / 4``
    (plus the averaged dissipated power if given), for ``n = 1 .. len-2``.

    Raises
    ------
    InsufficientDataError
        Fewer than three samples.
    """
    t, H, P = (np.asarray(x, dtype=float) for x in (t, H, P))
    if len(t) < 3:
        raise InsufficientDataError("power balance needs at least 3 samples")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("samples must be uniformly spaced in time")
    src = P if dissipation is None else P - np.asarray(dissipation, dtype=float)
    return (H[2:] - H[:-2]) / (2 * dt[0]) - (src[:-2] + 2 * src[1:-1] + src[2:]) / 4
