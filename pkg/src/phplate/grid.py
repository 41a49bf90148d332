"""Uniform plate grid, finite-difference stencils, ghost layers and quadrature.

Fields are arrays of shape ``(N1, N2)`` indexed ``[i, j]`` with
``z1 = i*dz1`` and ``z2 = j*dz2``.  The four edges are

* ``B1``: ``z1 = 0``   (index ``i = 0``)
* ``B2``: ``z2 = 0``   (index ``j = 0``)
* ``B3``: ``z1 = L1``  (index ``i = N1-1``)
* ``B4``: ``z2 = L2``  (index ``j = N2-1``)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, GridSizeError, UnsupportedOrderError

EDGES = ("B1", "B2", "B3", "B4")

# Edge -> (axis normal to the edge, side): side 0 is the low end.
EDGE_GEOMETRY = {"B1": (0, 0), "B2": (1, 0), "B3": (0, 1), "B4": (1, 1)}

# Sign relating a power-positive edge load q (force pushing +w) to the raw
# shear formula on that edge: raw = sign * q.
EDGE_SHEAR_SIGN = {"B1": -1.0, "B2": 1.0, "B3": 1.0, "B4": -1.0}


@dataclass(frozen=True)
class PlateParams:
    """Material and geometric plate parameters."""

    rho_A: float = 1.0
    D_E: float = 1.0
    nu: float = 0.2
    L1: float = 1.0
    L2: float = 1.0

    def __post_init__(self):
        for key in ("rho_A", "D_E", "L1", "L2"):
            v = getattr(self, key)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{key} = {v} outside allowed range (0, inf)")
        if not (0.0 <= self.nu < 0.5):
            raise ConfigError(f"nu = {self.nu} outside allowed range [0, 0.5)")


@dataclass(frozen=True)
class Grid:
    """Node-centred tensor grid on ``[0, L1] x [0, L2]``."""

    N1: int
    N2: int
    L1: float = 1.0
    L2: float = 1.0

    def __post_init__(self):
        for key in ("N1", "N2"):
            n = getattr(self, key)
            if int(n) != n or n < 9:
                raise GridSizeError(f"{key} = {n} outside allowed range [9, inf)")
        if not (self.L1 > 0 and self.L2 > 0):
            raise ConfigError("side lengths must be positive")

    @classmethod
    def for_plate(cls, params: PlateParams, N1: int, N2: int) -> "Grid":
        return cls(N1, N2, params.L1, params.L2)

    @property
    def dz1(self) -> float:
        return self.L1 / (self.N1 - 1)

    @property
    def dz2(self) -> float:
        return self.L2 / (self.N2 - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N1, self.N2)

    @property
    def z1(self) -> np.ndarray:
        return np.linspace(0.0, self.L1, self.N1)

    @property
    def z2(self) -> np.ndarray:
        return np.linspace(0.0, self.L2, self.N2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(Z1, Z2)`` of shape ``(N1, N2)``."""
        return np.meshgrid(self.z1, self.z2, indexing="ij")

    def edge_length(self, edge: str) -> int:
        """Number of nodes along ``edge``."""
        return self.N2 if EDGE_GEOMETRY[edge][0] == 0 else self.N1

    def edge_weights(self, edge: str) -> np.ndarray:
        """1D trapezoid weights along ``edge``."""
        n = self.edge_length(edge)
        h = self.dz2 if EDGE_GEOMETRY[edge][0] == 0 else self.dz1
        return _trapezoid_weights(n, h)

    def node_weights(self) -> np.ndarray:
        """2D trapezoid weights, shape ``(N1, N2)``."""
        return np.outer(_trapezoid_weights(self.N1, self.dz1),
                        _trapezoid_weights(self.N2, self.dz2))

    def edge_slice(self, edge: str) -> tuple:
        """Index tuple selecting the nodes of ``edge`` from a field."""
        axis, side = EDGE_GEOMETRY[edge]
        k = 0 if side == 0 else (self.N1 - 1 if axis == 0 else self.N2 - 1)
        return (k, slice(None)) if axis == 0 else (slice(None), k)

    def trace(self, f: np.ndarray, edge: str) -> np.ndarray:
        """Restriction of ``f`` to ``edge``."""
        return np.asarray(f)[self.edge_slice(edge)]


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


class EdgeKind(str, Enum):
    CLAMPED = "clamped"
    FREE = "free"
    ACTUATED = "actuated"
    SIMPLY_SUPPORTED = "simply_supported"

    @property
    def fixed(self) -> bool:
        """True when the edge pins ``w = 0``."""
        return self in (EdgeKind.CLAMPED, EdgeKind.SIMPLY_SUPPORTED)


@dataclass(frozen=True)
class BoundaryConditions:
    """One :class:`EdgeKind` per edge."""

    B1: EdgeKind = EdgeKind.CLAMPED
    B2: EdgeKind = EdgeKind.ACTUATED
    B3: EdgeKind = EdgeKind.FREE
    B4: EdgeKind = EdgeKind.ACTUATED

    def __post_init__(self):
        for e in EDGES:
            object.__setattr__(self, e, EdgeKind(getattr(self, e)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "BoundaryConditions":
        """Build from ``(edge, kind)`` pairs; every edge exactly once."""
        kinds: dict[str, EdgeKind] = {}
        for edge, kind in pairs:
            if edge not in EDGES:
                raise ConfigError(f"unknown edge {edge!r}")
            if edge in kinds:
                raise ConfigError(f"edge {edge} specified twice")
            try:
                kinds[edge] = EdgeKind(kind)
            except ValueError:
                raise ConfigError(f"unknown boundary kind {kind!r} on {edge}") from None
        missing = [e for e in EDGES if e not in kinds]
        if missing:
            raise ConfigError(f"no boundary condition for {', '.join(missing)}")
        return cls(**kinds)

    def __getitem__(self, edge: str) -> EdgeKind:
        return getattr(self, edge)

    def fixed_mask(self, grid: Grid) -> np.ndarray:
        """Boolean mask of nodes pinned by a clamped or simply supported edge."""
        m = np.zeros(grid.shape, dtype=bool)
        for e in EDGES:
            if self[e].fixed:
                m[grid.edge_slice(e)] = True
        return m


PLATE_BC = BoundaryConditions()
SIMPLY_SUPPORTED_BC = BoundaryConditions(*(EdgeKind.SIMPLY_SUPPORTED,) * 4)


# --------------------------------------------------------------------------
# stencils

_HALF_WIDTH = {0: 0, 1: 1, 2: 1, 3: 2, 4: 2}


def _parse_index(J) -> tuple[int, int]:
    if isinstance(J, str):
        if len(J) != 2 or not J.isdigit():
            raise UnsupportedOrderError(f"bad multi-index {J!r}")
        J = (int(J[0]), int(J[1]))
    j1, j2 = (int(v) for v in J)
    if j1 < 0 or j2 < 0 or j1 + j2 > 4:
        raise UnsupportedOrderError(f"multi-index [{j1}{j2}] has order above 4")
    return j1, j2


def _diff1d(f: np.ndarray, order: int, h: float, axis: int) -> np.ndarray:
    # central stencils written as nested first differences, which cancel far
    # less than the explicit coefficient sums
    r = _HALF_WIDTH[order]
    n = f.shape[axis]
    out = np.full(f.shape, np.nan)
    if n < 2 * r + 1:
        return out
    d = np.diff(f, order, axis=axis)
    if order % 2:
        m = d.shape[axis]
        d = 0.5 * (np.take(d, np.arange(0, m - 1), axis=axis)
                   + np.take(d, np.arange(1, m), axis=axis))
    idx = [slice(None)] * f.ndim
    idx[axis] = slice(r, n - r)
    out[tuple(idx)] = d / h**order
    return out


def partial(f: np.ndarray, J, grid: Grid, ghosts: int = 0) -> np.ndarray:
    """Central finite-difference derivative ``d^{j1+j2} f / dz1^j1 dz2^j2``.

    Parameters
    ----------
    f : ndarray
        Field of shape ``(N1 + 2*ghosts, N2 + 2*ghosts)``.
    J : tuple or str
        Multi-index ``(j1, j2)`` or a string such as ``"22"``; total order <= 4.
    grid : Grid
    ghosts : int
        Number of ghost layers carried by ``f`` on every side.

    Returns
    -------
    ndarray
        Derivative on the ``(N1, N2)`` grid, NaN where the stencil does not fit.
        Second order accurate; exact on polynomials of degree ``#J + 1``.
    """
    j1, j2 = _parse_index(J)
    f = np.asarray(f, dtype=float)
    expected = (grid.N1 + 2 * ghosts, grid.N2 + 2 * ghosts)
    if f.shape != expected:
        raise ValueError(f"field shape {f.shape} does not match {expected}")
    need1 = 2 * (j1 // 2 + j1 % 2) + 1 if j1 else 1
    need2 = 2 * (j2 // 2 + j2 % 2) + 1 if j2 else 1
    if f.shape[0] < need1 or f.shape[1] < need2:
        raise GridSizeError(f"grid {f.shape} too small for stencil [{j1}{j2}]")
    d = _diff1d(f, j1, grid.dz1, 0) if j1 else f
    d = _diff1d(d, j2, grid.dz2, 1) if j2 else d
    g = ghosts
    return d[g:g + grid.N1, g:g + grid.N2].copy()


def biharmonic(f: np.ndarray, grid: Grid, ghosts: int = 0) -> np.ndarray:
    """13-point ``f_[40] + 2 f_[22] + f_[04]``; NaN where the stencil is short."""
    return (partial(f, (4, 0), grid, ghosts) + 2.0 * partial(f, (2, 2), grid, ghosts)
            + partial(f, (0, 4), grid, ghosts))


# --------------------------------------------------------------------------
# ghost layers

def ghost_layer1(w: np.ndarray, grid: Grid, bc: BoundaryConditions, nu: float) -> np.ndarray:
    """Field padded by one ghost layer enforcing the moment/slope conditions.

    Fixed edges are zeroed.  Clamped edges reflect evenly, simply supported
    edges oddly.  Free and actuated edges get the ghost that makes the
    normal moment vanish.  Where a natural edge meets a fixed edge the ghost
    continues the pinned line (value 0); where two natural edges meet both
    second derivatives vanish.  Diagonal corner ghosts are left at 0.
    """
    N1, N2 = grid.shape
    h1, h2 = grid.dz1, grid.dz2
    E = np.zeros((N1 + 2, N2 + 2))
    E[1:-1, 1:-1] = w
    for e in EDGES:
        if bc[e].fixed:
            E[1:-1, 1:-1][grid.edge_slice(e)] = 0.0
    u = E[1:-1, 1:-1]
    for e in EDGES:
        axis, side = EDGE_GEOMETRY[e]
        kind = bc[e]
        if axis == 0:
            we, wi = (u[0], u[1]) if side == 0 else (u[-1], u[-2])
            h_n, h_t = h1, h2
            lo, hi = bc["B2"], bc["B4"]
        else:
            we, wi = (u[:, 0], u[:, 1]) if side == 0 else (u[:, -1], u[:, -2])
            h_n, h_t = h2, h1
            lo, hi = bc["B1"], bc["B3"]
        if kind is EdgeKind.CLAMPED:
            g = wi.copy()
        elif kind is EdgeKind.SIMPLY_SUPPORTED:
            g = -wi
        else:
            btan = np.zeros_like(we)
            btan[1:-1] = (we[:-2] - 2 * we[1:-1] + we[2:]) / h_t**2
            g = 2 * we - wi - nu * h_n**2 * btan
            g[0] = 0.0 if lo.fixed else 2 * we[0] - wi[0]
            g[-1] = 0.0 if hi.fixed else 2 * we[-1] - wi[-1]
        if axis == 0:
            E[0 if side == 0 else -1, 1:-1] = g
        else:
            E[1:-1, 0 if side == 0 else -1] = g
    return E


def ghost_layer1_adjoint(G: np.ndarray, grid: Grid, bc: BoundaryConditions, nu: float) -> np.ndarray:
    """Transpose of :func:`ghost_layer1` (ignoring the diagonal ghosts)."""
    N1, N2 = grid.shape
    h1, h2 = grid.dz1, grid.dz2
    F = np.array(G[1:-1, 1:-1], dtype=float)
    for e in EDGES:
        axis, side = EDGE_GEOMETRY[e]
        kind = bc[e]
        if axis == 0:
            g = np.array(G[0 if side == 0 else -1, 1:-1], dtype=float)
            view = F if side == 0 else F[::-1]
            h_n, h_t = h1, h2
            lo, hi = bc["B2"], bc["B4"]
        else:
            g = np.array(G[1:-1, 0 if side == 0 else -1], dtype=float)
            view = F.T if side == 0 else F.T[::-1]
            h_n, h_t = h2, h1
            lo, hi = bc["B1"], bc["B3"]
        # view[0] is the edge line, view[1] the first interior line
        if kind is EdgeKind.CLAMPED:
            view[1] += g
        elif kind is EdgeKind.SIMPLY_SUPPORTED:
            view[1] -= g
        else:
            if lo.fixed:
                g[0] = 0.0
            if hi.fixed:
                g[-1] = 0.0
            view[0] += 2 * g
            view[1] -= g
            s = -nu * h_n**2 / h_t**2 * g[1:-1]
            view[0, :-2] += s
            view[0, 1:-1] -= 2 * s
            view[0, 2:] += s
    for e in EDGES:
        if bc[e].fixed:
            F[grid.edge_slice(e)] = 0.0
    return F


def extend_with_bc(w: np.ndarray, grid: Grid, bc: BoundaryConditions, params: PlateParams,
                   applied: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
    """Field padded by two ghost layers enforcing the edge conditions.

    Parameters
    ----------
    w : ndarray, shape (N1, N2)
    grid, bc, params
    applied : mapping, optional
        Edge name -> shear load profile on a natural edge, counted positive
        when it pushes ``w`` upwards.  Missing edges carry zero load.

    Returns
    -------
    ndarray, shape (N1 + 4, N2 + 4)
        Layer one makes the normal moment vanish on natural edges (mirror
        conditions on fixed edges); layer two makes the central shear equal the
        applied load.  Corner blocks average the two edge-wise linear
        extrapolations.
    """
    applied = dict(applied or {})
    for e, q in applied.items():
        if e not in EDGES:
            raise ConfigError(f"unknown edge {e!r}")
        if not (bc[e] in (EdgeKind.ACTUATED, EdgeKind.FREE)) and np.any(np.asarray(q) != 0):
            raise ConfigError(f"load applied on {bc[e].value} edge {e}")
    N1, N2 = grid.shape
    h1, h2 = grid.dz1, grid.dz2
    nu, D = params.nu, params.D_E
    X = np.zeros((N1 + 4, N2 + 4))
    X[1:-1, 1:-1] = ghost_layer1(w, grid, bc, nu)

    # layer-1 diagonal corners: average of linear extrapolations (index 1 / -2)
    for a, da in ((1, 1), (N1 + 2, -1)):
        for b, db in ((1, 1), (N2 + 2, -1)):
            X[a, b] = 0.5 * ((2 * X[a + da, b] - X[a + 2 * da, b])
                             + (2 * X[a, b + db] - X[a, b + 2 * db]))

    # layer 2 from the shear condition (mirror on fixed edges)
    def b_yy(i):  # w_[02] along row i of X, interior columns 2..N2+1
        return (X[i, 1:-3] - 2 * X[i, 2:-2] + X[i, 3:-1]) / h2**2

    def a_xx(j):
        return (X[1:-3, j] - 2 * X[2:-2, j] + X[3:-1, j]) / h1**2

    for e in EDGES:
        axis, side = EDGE_GEOMETRY[e]
        kind = bc[e]
        q = np.asarray(applied.get(e, 0.0), dtype=float) * np.ones(grid.edge_length(e))
        raw = EDGE_SHEAR_SIGN[e] * q
        if axis == 0:
            k = 2 if side == 0 else N1 + 1  # edge row in X
            s = 1 if side == 0 else -1       # step towards interior
            if kind.fixed:
                sign = 1.0 if kind is EdgeKind.CLAMPED else -1.0
                X[k - 2 * s, 2:-2] = sign * X[k + 2 * s, 2:-2]
                continue
            wxyy = (b_yy(k + 1) - b_yy(k - 1)) / (2 * h1)
            # raw Q2 = -D (w_xxx + (2-nu) w_xyy)
            wxxx = -raw / D - (2 - nu) * wxyy
            if side == 1:
                X[k + 2, 2:-2] = (2 * h1**3 * wxxx + 2 * X[k + 1, 2:-2]
                                  - 2 * X[k - 1, 2:-2] + X[k - 2, 2:-2])
            else:
                X[k - 2, 2:-2] = (X[k + 2, 2:-2] - 2 * X[k + 1, 2:-2]
                                  + 2 * X[k - 1, 2:-2] - 2 * h1**3 * wxxx)
        else:
            k = 2 if side == 0 else N2 + 1
            s = 1 if side == 0 else -1
            if kind.fixed:
                sign = 1.0 if kind is EdgeKind.CLAMPED else -1.0
                X[2:-2, k - 2 * s] = sign * X[2:-2, k + 2 * s]
                continue
            wyxx = (a_xx(k + 1) - a_xx(k - 1)) / (2 * h2)
            # raw Q1 = D (w_yyy + (2-nu) w_xxy)
            wyyy = raw / D - (2 - nu) * wyxx
            if side == 1:
                X[2:-2, k + 2] = (2 * h2**3 * wyyy + 2 * X[2:-2, k + 1]
                                  - 2 * X[2:-2, k - 1] + X[2:-2, k - 2])
            else:
                X[2:-2, k - 2] = (X[2:-2, k + 2] - 2 * X[2:-2, k + 1]
                                  + 2 * X[2:-2, k - 1] - 2 * h2**3 * wyyy)

    # remaining corner-block entries, nearest first
    for (a, da) in ((1, 1), (N1 + 2, -1)):
        for (b, db) in ((1, 1), (N2 + 2, -1)):
            for ia, ib in ((-1, 0), (0, -1), (-1, -1)):
                i, j = a + ia * da, b + ib * db
                X[i, j] = 0.5 * ((2 * X[i + da, j] - X[i + 2 * da, j])
                                 + (2 * X[i, j + db] - X[i, j + 2 * db]))
    return X


# --------------------------------------------------------------------------
# quadrature

def integrate_domain(f: np.ndarray, grid: Grid) -> float:
    """2D trapezoid rule; exact for bilinear fields."""
    return float(np.sum(grid.node_weights() * np.asarray(f)))


def integrate_edge(g: np.ndarray, grid: Grid, edge: str = "B2") -> float:
    """1D trapezoid rule along ``edge``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.edge_length(edge),):
        raise ValueError(f"profile length {g.shape} does not match edge {edge}")
    return float(np.dot(grid.edge_weights(edge), g))
