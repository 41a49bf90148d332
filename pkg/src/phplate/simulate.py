"""Coupled plate/controller/observer system: assembly, integration and audit.

The closed loop is linear, so it is assembled once into ``x' = A x + b``
and advanced by the implicit midpoint rule with a single sparse LU
factorisation.  State vector layout::

    [w, p]                        open-loop
    [w, p, xc]                    controlled
    [w, p, xc, w_hat, p_hat]      controlled-observer

with fields flattened in C order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .actuation import (ActuatorParams, EquilibriumParams, controller_setpoints,
                        desired_profile, lambda_profile)
from .controller import ControllerParams, controller_outputs, controller_rhs, hc_value, interconnect
from .errors import ConfigError, DivergenceError
from .grid import PLATE_BC, BoundaryConditions, EdgeKind, Grid, PlateParams
from .observer import (ObserverParams, ObserverState, correction_terms, measure,
                       measurement_node, observer_rhs, sensor_weights)
from .plate import PlantState, plant_rhs, port_power

MODES = ("open-loop", "controlled", "controlled-observer")


@dataclass(frozen=True)
class SimConfig:
    """Time-stepping settings."""

    dt: float = 1e-3
    T: float = 40.0
    mode: str = "controlled"
    record_every: int = 10
    solver_tol: float = 1e-12
    snapshot_every: int = 1000

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt = {self.dt} outside allowed range (0, inf)")
        if not (np.isfinite(self.T) and self.T >= 0):
            raise ConfigError(f"T = {self.T} outside allowed range [0, inf)")
        if 0 < self.T < self.dt:
            raise ConfigError(f"T = {self.T} outside allowed range [dt, inf)")
        if self.mode not in MODES:
            raise ConfigError(f"mode = {self.mode} outside allowed set {{{', '.join(MODES)}}}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError(f"record_every = {self.record_every} outside allowed range [1, inf)")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise ConfigError(f"snapshot_every = {self.snapshot_every} outside allowed range [1, inf)")
        if not self.solver_tol > 0:
            raise ConfigError(f"solver_tol = {self.solver_tol} outside allowed range (0, inf)")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class SystemParams:
    """Everything that defines the continuous model and its grid.

    ``controller.xc1_d`` and ``xc2_d`` are overwritten by the set-points
    computed on the grid when the system is built.
    """

    plate: PlateParams = field(default_factory=PlateParams)
    N1: int = 41
    N2: int = 41
    actuator: ActuatorParams = field(default_factory=ActuatorParams)
    equilibrium: EquilibriumParams = field(default_factory=EquilibriumParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    observer: ObserverParams = field(default_factory=ObserverParams)
    bc: BoundaryConditions = PLATE_BC
    damping: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.damping) and self.damping >= 0):
            raise ConfigError(f"damping = {self.damping} outside allowed range [0, inf)")


@dataclass
class CoupledState:
    plant: PlantState
    xc: np.ndarray | None = None
    observer: ObserverState | None = None


# --------------------------------------------------------------------------
# sparse operators

def stiffness_matrix(grid: Grid, bc: BoundaryConditions, params: PlateParams) -> sp.csr_matrix:
    """Hessian of the discrete bending energy, assembled from closure rows.

    Rows of the curvature operators are built node by node from the edge
    closure rules; the result is ``D [Axx' W Axx + Ayy' W Ayy + nu (...)
    + 2 (1-nu) h1 h2 T' T]`` restricted to unpinned nodes.
    """
    N1, N2 = grid.shape
    h1, h2 = grid.dz1, grid.dz2
    nu, D = params.nu, params.D_E
    n = N1 * N2

    def idx(i, j):
        return i * N2 + j

    def edge_kind(axis, k):
        N = N1 if axis == 0 else N2
        lo, hi = (("B1", "B3") if axis == 0 else ("B2", "B4"))
        return bc[lo] if k == 0 else (bc[hi] if k == N - 1 else None)

    def second(i, j, axis):
        if axis == 0:
            me, other, h, k, N = edge_kind(0, i), edge_kind(1, j), h1, i, N1
            nb = lambda kk: idx(kk, j)
        else:
            me, other, h, k, N = edge_kind(1, j), edge_kind(0, i), h2, j, N2
            nb = lambda kk: idx(i, kk)
        if other is not None and other.fixed:
            return {}
        if me is None:
            return {nb(k - 1): 1 / h**2, nb(k): -2 / h**2, nb(k + 1): 1 / h**2}
        inner = 1 if k == 0 else N - 2
        if me is EdgeKind.CLAMPED:
            return {nb(inner): 2 / h**2}
        if me is EdgeKind.SIMPLY_SUPPORTED or other is not None:
            return {}
        return {c: -nu * v for c, v in second(i, j, 1 - axis).items()}

    rows = {0: ([], [], []), 1: ([], [], [])}
    for i in range(N1):
        for j in range(N2):
            for axis in (0, 1):
                r, c, v = rows[axis]
                for col, val in second(i, j, axis).items():
                    r.append(idx(i, j))
                    c.append(col)
                    v.append(val)
    Axx = sp.csr_matrix((rows[0][2], (rows[0][0], rows[0][1])), shape=(n, n))
    Ayy = sp.csr_matrix((rows[1][2], (rows[1][0], rows[1][1])), shape=(n, n))

    ii, jj = np.meshgrid(np.arange(N1 - 1), np.arange(N2 - 1), indexing="ij")
    cell = (ii * (N2 - 1) + jj).ravel()
    s = 1.0 / (h1 * h2)
    tr = np.concatenate([cell] * 4)
    tc = np.concatenate([idx(ii + 1, jj + 1).ravel(), idx(ii + 1, jj).ravel(),
                         idx(ii, jj + 1).ravel(), idx(ii, jj).ravel()])
    tv = np.concatenate([np.full(cell.size, s), np.full(cell.size, -s),
                         np.full(cell.size, -s), np.full(cell.size, s)])
    T = sp.csr_matrix((tv, (tr, tc)), shape=((N1 - 1) * (N2 - 1), n))

    W = sp.diags(grid.node_weights().ravel())
    S = D * (Axx.T @ W @ Axx + Ayy.T @ W @ Ayy + nu * (Axx.T @ W @ Ayy + Ayy.T @ W @ Axx)
             + 2 * (1 - nu) * h1 * h2 * (T.T @ T))
    F = sp.diags((~bc.fixed_mask(grid)).ravel().astype(float))
    return (F @ S @ F).tocsr()


class CoupledSystem:
    """Assembled closed loop for one mode.

    Attributes
    ----------
    A : scipy.sparse.csc_matrix
    b : ndarray
        Constant forcing (set-point offsets of the controller).
    Bu : ndarray or None
        Open-loop input matrix, shape ``(nx, 2)``; ``x' = A x + b + Bu u``.
    """

    def __init__(self, params: SystemParams, mode: str = "controlled"):
        if mode not in MODES:
            raise ConfigError(f"mode = {mode} outside allowed set {{{', '.join(MODES)}}}")
        self.params = params
        self.mode = mode
        pl = params.plate
        self.grid = grid = Grid.for_plate(pl, params.N1, params.N2)
        self.bc = params.bc
        self.n = n = grid.N1 * grid.N2
        self.z1 = grid.z1
        self.lam = lambda_profile(grid.z1, params.actuator, pl.L1)
        self.wd = desired_profile(grid.z1, params.equilibrium, pl.L1)
        self.edge_w = grid.edge_weights("B2")
        xd1, xd2 = controller_setpoints(self.lam, self.lam, self.wd, self.edge_w)
        self.ctrl = dataclasses.replace(params.controller, xc1_d=xd1, xc2_d=xd2)
        self.obs = params.observer
        self.fixed = params.bc.fixed_mask(grid).ravel()
        self.free = (~self.fixed).astype(float)
        self.weights = grid.node_weights().ravel()
        self.S = stiffness_matrix(grid, params.bc, pl)

        # actuator load vectors (power-positive on both edges)
        b1 = np.zeros(grid.shape)
        b2 = np.zeros(grid.shape)
        if params.bc["B2"] is EdgeKind.ACTUATED:
            b1[:, 0] = self.edge_w * self.lam
        if params.bc["B4"] is EdgeKind.ACTUATED:
            b2[:, -1] = self.edge_w * self.lam
        self.Bload = np.column_stack([b1.ravel(), b2.ravel()])
        if mode != "open-loop" and not self.Bload.any():
            raise ConfigError("closed-loop modes need actuated edges B2 and B4")

        self.has_ctrl = mode != "open-loop"
        self.has_obs = mode == "controlled-observer"
        self.sl_w = slice(0, n)
        self.sl_p = slice(n, 2 * n)
        self.sl_xc = slice(2 * n, 2 * n + 4) if self.has_ctrl else slice(2 * n, 2 * n)
        o = self.sl_xc.stop
        self.sl_wh = slice(o, o + n) if self.has_obs else slice(o, o)
        self.sl_ph = slice(o + n, o + 2 * n) if self.has_obs else slice(o, o)
        self.nx = o + (2 * n if self.has_obs else 0)
        if self.has_obs:
            self.meas = measurement_node(grid)
        self.A, self.b, self.Bu = self._assemble()

    # ---- assembly
    def _plate_blocks(self):
        rho = self.params.plate.rho_A
        F = sp.diags(self.free)
        Minv = sp.diags(self.free / self.weights)
        r = self.params.damping
        App = -(r / rho) * F
        return F / rho, -(Minv @ self.S), App, Minv

    def _assemble(self):
        n, nx = self.n, self.nx
        rho = self.params.plate.rho_A
        Fw, Kw, App, Minv = self._plate_blocks()
        blocks = [[None] * 5 for _ in range(5)]
        # block indices: 0 w, 1 p, 2 xc, 3 w_hat, 4 p_hat
        blocks[0][1] = Fw
        blocks[1][0] = Kw
        blocks[1][1] = App
        b = np.zeros(nx)
        MB = Minv @ self.Bload  # (n, 2)
        Bu = None
        if not self.has_ctrl:
            Bu = np.zeros((nx, 2))
            Bu[self.sl_p] = MB
        else:
            c = self.ctrl
            GM = c.G.T @ c.M
            Y = np.array([[c.c1, 0.0, GM[0, 0], GM[0, 1]],
                          [0.0, c.c2, GM[1, 0], GM[1, 1]]])
            yoff = np.array([-c.c1 * c.xc1_d - c.us1, -c.c2 * c.xc2_d - c.us2])
            blocks[1][2] = sp.csr_matrix(-MB @ Y)
            b[self.sl_p] = -MB @ yoff
            Bt = sp.csr_matrix(self.Bload.T / rho)  # u_c = Bt @ p
            xc_u = sp.vstack([Bt, sp.csr_matrix(c.G) @ Bt])
            Axc = np.zeros((4, 4))
            Axc[2:, 2:] = c.JR @ c.M
            blocks[2][2] = sp.csr_matrix(Axc)
            if self.has_obs:
                blocks[2][4] = xc_u
                blocks[3][4] = Fw
                blocks[3][3] = None
                blocks[4][3] = Kw
                blocks[4][4] = App
                blocks[4][2] = sp.csr_matrix(-MB @ Y)
                b[self.sl_ph] = -MB @ yoff
                # injection: Minv s (k (w - w_hat) + K (p - p_hat) / rho) per edge
                op = self.obs
                s = sensor_weights(self.grid, op)
                Iw = sp.csr_matrix((n, n))
                Ip = sp.csr_matrix((n, n))
                for j, k, K in ((0, op.k1, op.Kd11), (self.grid.N2 - 1, op.k2, op.Kd22)):
                    sv = np.zeros(self.grid.shape)
                    sv[:, j] = s
                    sv = sp.csr_matrix(sv.ravel()[:, None])
                    Iw = Iw + k * (sv @ sv.T)
                    Ip = Ip + (K / rho) * (sv @ sv.T)
                Iw = Minv @ Iw
                Ip = Minv @ Ip
                blocks[4][0] = Iw
                blocks[4][3] = Kw - Iw
                blocks[4][1] = Ip
                blocks[4][4] = App - Ip
            else:
                blocks[2][1] = xc_u
        used = [0, 1] + ([2] if self.has_ctrl else []) + ([3, 4] if self.has_obs else [])
        B = [[blocks[i][j] for j in used] for i in used]
        sizes = {0: n, 1: n, 2: 4, 3: n, 4: n}
        for i in used:  # keep bmat happy about empty block rows
            if all(B[used.index(i)][k] is None for k in range(len(used))):
                B[used.index(i)][used.index(i)] = sp.csr_matrix((sizes[i], sizes[i]))
        A = sp.bmat(B, format="csc")
        return A, b, Bu

    # ---- state packing
    def pack(self, cs: CoupledState) -> np.ndarray:
        x = np.zeros(self.nx)
        x[self.sl_w] = cs.plant.w.ravel()
        x[self.sl_p] = cs.plant.p.ravel()
        if self.has_ctrl:
            x[self.sl_xc] = np.zeros(4) if cs.xc is None else cs.xc
        if self.has_obs:
            o = cs.observer or ObserverState.initial(self.grid, self.obs, self.bc)
            x[self.sl_wh] = o.w_hat.ravel()
            x[self.sl_ph] = o.p_hat.ravel()
        return x

    def unpack(self, x: np.ndarray) -> CoupledState:
        sh = self.grid.shape
        plant = PlantState(x[self.sl_w].reshape(sh).copy(), x[self.sl_p].reshape(sh).copy())
        xc = x[self.sl_xc].copy() if self.has_ctrl else None
        obs = (ObserverState(x[self.sl_wh].reshape(sh).copy(), x[self.sl_ph].reshape(sh).copy())
               if self.has_obs else None)
        return CoupledState(plant, xc, obs)

    def initial_state(self) -> np.ndarray:
        """Plant at rest, ``xc = 0`` and the observer at ``-d z1^2``."""
        return self.pack(CoupledState(PlantState.zeros(self.grid), np.zeros(4)))

    # ---- modular right-hand side (independent of A)
    def modular_rhs(self, x: np.ndarray, u_open=(0.0, 0.0)) -> np.ndarray:
        """``x'`` evaluated through the per-module functions."""
        cs = self.unpack(x)
        pl, grid = self.params.plate, self.grid
        out = np.zeros(self.nx)
        if self.has_ctrl:
            u = -controller_outputs(cs.xc, self.ctrl)
            src = cs.observer.p_hat if self.has_obs else cs.plant.p
            uc = interconnect(src, self.lam, self.lam, self.edge_w, pl.rho_A)
            out[self.sl_xc] = controller_rhs(cs.xc, uc, self.ctrl)
        else:
            u = np.asarray(u_open, dtype=float)
        applied = self._applied(u)
        wd, pd = plant_rhs(cs.plant, grid, pl, applied, self.bc, self.params.damping)
        out[self.sl_w] = wd.ravel()
        out[self.sl_p] = pd.ravel()
        if self.has_obs:
            m = measure(cs.plant, grid, self.obs, pl)
            khat = correction_terms(m, cs.observer, grid, self.obs, pl)
            wh, ph = observer_rhs(cs.observer, u, khat, *self._lams(), grid, pl, self.obs,
                                  self.bc, self.params.damping)
            out[self.sl_wh] = wh.ravel()
            out[self.sl_ph] = ph.ravel()
        return out

    def _lams(self):
        l2 = self.lam if self.bc["B2"] is EdgeKind.ACTUATED else 0 * self.lam
        l4 = self.lam if self.bc["B4"] is EdgeKind.ACTUATED else 0 * self.lam
        return l2, l4

    def _applied(self, u):
        l2, l4 = self._lams()
        return {"B2": l2 * u[0], "B4": l4 * u[1]}

    # ---- audit quantities
    def plate_energy(self, w: np.ndarray, p: np.ndarray) -> float:
        return float(0.5 * p @ (self.weights * p) / self.params.plate.rho_A
                     + 0.5 * w @ (self.S @ w))

    def energies(self, x: np.ndarray) -> dict:
        w, p = x[self.sl_w], x[self.sl_p]
        H = self.plate_energy(w, p)
        Hc = hc_value(x[self.sl_xc], self.ctrl) if self.has_ctrl else 0.0
        out = {"H": H, "H_c": Hc, "H_cl": H + Hc, "H_err": 0.0, "H_err_d": 0.0}
        if self.has_obs:
            wt = w - x[self.sl_wh]
            pt = p - x[self.sl_ph]
            Ht = self.plate_energy(wt, pt)
            s = sensor_weights(self.grid, self.obs)
            e = wt.reshape(self.grid.shape)
            e1, e2 = s @ e[:, 0], s @ e[:, -1]
            out["H_err"] = Ht
            out["H_err_d"] = Ht + 0.5 * self.obs.k1 * e1**2 + 0.5 * self.obs.k2 * e2**2
        return out

    def casimirs(self, x: np.ndarray) -> np.ndarray:
        """``C^l = xc^l - int Lambda_l w`` on the actuated edges."""
        if not self.has_ctrl:
            return np.zeros(2)
        return x[self.sl_xc][:2] - self.Bload.T @ x[self.sl_w]

    def port_power(self, x: np.ndarray) -> float:
        cs = self.unpack(x)
        return port_power(cs.plant, self.grid, self.params.plate)

    def dissipated_power(self, x: np.ndarray) -> float:
        v = x[self.sl_p] / self.params.plate.rho_A
        return float(self.params.damping * (self.weights * self.free) @ (v * v))

    def probes(self, x: np.ndarray) -> dict:
        g = self.grid
        w = x[self.sl_w].reshape(g.shape)
        m = 3 * (g.N1 - 1) // 4
        jc = (g.N2 - 1) // 2
        out = {"w_meas1": w[m, 0], "w_meas2": w[m, -1], "w_probe": w[-1, jc],
               "w_hat_probe": np.nan}
        if self.has_obs:
            out["w_hat_probe"] = x[self.sl_wh].reshape(g.shape)[-1, jc]
        return out

    def equilibrium(self, kappa=(0.0, 0.0)) -> np.ndarray:
        """Closed-loop rest state with Casimir values ``kappa``.

        Solves ``(S + sum_l c_l b_l b_l') w = sum_l b_l (c_l (xd_l - kappa_l) + us_l)``
        and sets ``p = 0``, ``xc12 = int Lambda w + kappa``, ``xc34 = 0``.
        """
        if not self.has_ctrl:
            return np.zeros(self.nx)
        c = self.ctrl
        cvec = np.array([c.c1, c.c2])
        xd = np.array([c.xc1_d, c.xc2_d])
        us = np.array([c.us1, c.us2])
        kap = np.asarray(kappa, dtype=float)
        B = self.Bload
        K = (self.S + sp.csr_matrix(B * cvec) @ sp.csr_matrix(B.T)).tocsc()
        rhs = B @ (cvec * (xd - kap) + us)
        free = ~self.fixed
        w = np.zeros(self.n)
        w[free] = spla.spsolve(K[free][:, free].tocsc(), rhs[free])
        x = np.zeros(self.nx)
        x[self.sl_w] = w
        x[self.sl_xc.start:self.sl_xc.start + 2] = B.T @ w + kap
        if self.has_obs:
            x[self.sl_wh] = w
        return x


def assemble(params: SystemParams, mode: str = "controlled") -> CoupledSystem:
    """Build the coupled linear system ``x' = A x + b`` for ``mode``."""
    return CoupledSystem(params, mode)


# --------------------------------------------------------------------------
# integrator

class MidpointStepper:
    """Implicit midpoint rule with a one-time sparse LU factorisation."""

    def __init__(self, A: sp.spmatrix, dt: float, solver_tol: float = 1e-12):
        I = sp.identity(A.shape[0], format="csc")
        try:
            self.lu = spla.splu((I - 0.5 * dt * A).tocsc())
        except RuntimeError as exc:
            raise ConfigError(f"singular step operator: {exc}") from None
        self.M = (I - 0.5 * dt * A).tocsr()
        self.P = (I + 0.5 * dt * A).tocsr()
        self.dt = dt
        rng = np.random.default_rng(0)
        r = rng.standard_normal(A.shape[0])
        y = self.lu.solve(r)
        res = np.linalg.norm(self.M @ y - r) / np.linalg.norm(r)
        if not np.isfinite(res) or res > max(solver_tol, 1e-10):
            raise ConfigError(f"step operator ill-conditioned (residual {res:.3e})")

    def step(self, x: np.ndarray, forcing: np.ndarray | float = 0.0) -> np.ndarray:
        """Advance ``x' = A x + forcing`` by one step (forcing at the midpoint)."""
        return self.lu.solve(self.P @ x + self.dt * forcing)


def step_midpoint(x: np.ndarray, dt: float, stepper: MidpointStepper, b=0.0) -> np.ndarray:
    """Solve ``(I - dt/2 A) x+ = (I + dt/2 A) x + dt b``."""
    if stepper.dt != dt:
        raise ValueError("stepper was factorised for a different dt")
    return stepper.step(x, b)


# --------------------------------------------------------------------------
# run and audit

AUDIT_COLUMNS = ("t", "H", "H_c", "H_cl", "H_err", "H_err_d", "xc1", "xc2", "C1", "C2", "port_power",
                 "dissipation", "residual", "w_meas1", "w_meas2", "w_probe", "w_hat_probe")


@dataclass
class EnergyAudit:
    """Recorded audit columns (arrays of equal length)."""

    data: dict

    def __getitem__(self, key) -> np.ndarray:
        return self.data[key]

    def __len__(self):
        return len(self.data["t"])

    def rows(self):
        return np.column_stack([self.data[c] for c in AUDIT_COLUMNS])


@dataclass
class RunResult:
    audit: EnergyAudit
    snapshots: dict
    edge_t: np.ndarray
    edge_profiles: np.ndarray
    final: np.ndarray
    system: CoupledSystem


def run(system: CoupledSystem, config: SimConfig, x0: np.ndarray | None = None,
        voltage: Callable[[float], tuple] | None = None,
        stepper: MidpointStepper | None = None) -> RunResult:
    """Integrate from ``x0`` (default: :meth:`CoupledSystem.initial_state`) to ``T``.

    ``voltage(t)`` gives the open-loop inputs; it is sampled at step midpoints.

    Raises
    ------
    DivergenceError
        A non-finite state appears; carries the step index.
    """
    if config.mode != system.mode:
        raise ConfigError(f"config mode {config.mode} does not match system mode {system.mode}")
    dt = config.dt
    x = system.initial_state() if x0 is None else np.array(x0, dtype=float)
    st = stepper or MidpointStepper(system.A, dt, config.solver_tol)
    nsteps = config.n_steps
    cols = {c: [] for c in AUDIT_COLUMNS}
    snaps = {}
    edge_t, edge = [], []

    def scalars(xx):
        return system.energies(xx)["H"], system.port_power(xx), system.dissipated_power(xx)

    def record(k, xx, prev):
        t = k * dt
        e = system.energies(xx)
        C = system.casimirs(xx)
        xc = xx[system.sl_xc] if system.has_ctrl else np.zeros(4)
        row = dict(t=t, **e, xc1=xc[0], xc2=xc[1], C1=C[0], C2=C[1], port_power=system.port_power(xx),
                   dissipation=system.dissipated_power(xx), residual=np.nan, **system.probes(xx))
        for c in AUDIT_COLUMNS:
            cols[c].append(row[c])
        edge_t.append(t)
        edge.append(xx[system.sl_w].reshape(system.grid.shape)[:, 0].copy())
        return (scalars(prev) if prev is not None else None), (row["H"], row["port_power"],
                                                                row["dissipation"])

    def forcing(k):
        f = system.b
        if voltage is not None:
            if system.Bu is None:
                raise ConfigError("voltage input is only available in open-loop mode")
            f = f + system.Bu @ np.asarray(voltage((k + 0.5) * dt), dtype=float)
        return f

    pending = None
    pending = record(0, x, None)
    snaps[0.0] = x[system.sl_w].reshape(system.grid.shape).copy()
    for k in range(1, nsteps + 1):
        prev = x
        x = st.step(x, forcing(k - 1))
        if not np.all(np.isfinite(x)):
            raise DivergenceError(k)
        if pending is not None and pending[0] is not None:
            (H0, P0, R0), (H1, P1, R1) = pending
            H2, P2, R2 = scalars(x)
            res = (H2 - H0) / (2 * dt) - ((P0 - R0) + 2 * (P1 - R1) + (P2 - R2)) / 4
            cols["residual"][-1] = res
        pending = None
        if k % config.record_every == 0 or k == nsteps:
            pending = record(k, x, prev)
        if k % config.snapshot_every == 0 or k == nsteps:
            snaps[round(k * dt, 12)] = x[system.sl_w].reshape(system.grid.shape).copy()
    audit = EnergyAudit({c: np.asarray(v, dtype=float) for c, v in cols.items()})
    return RunResult(audit, snaps, np.asarray(edge_t), np.asarray(edge), x, system)


def casimir_drift(audit: EnergyAudit) -> np.ndarray:
    """Per-channel ``max_t |C(t) - C(0)|``."""
    return np.array([np.max(np.abs(audit["C1"] - audit["C1"][0])),
                     np.max(np.abs(audit["C2"] - audit["C2"][0]))])


def edge_error(system: CoupledSystem, x: np.ndarray) -> float:
    """RMS over ``B2`` of ``w - w^d`` relative to the RMS of ``w^d``."""
    w = x[system.sl_w].reshape(system.grid.shape)[:, 0]
    return float(np.sqrt(np.mean((w - system.wd) ** 2)) / np.sqrt(np.mean(system.wd**2)))


def fit_actuator_amplitude(params: SystemParams) -> float:
    """Amplitude ``Psi`` whose static response to ``u = u_s`` best fits ``w^d`` on ``B2``.

    The response is linear in ``Psi``, so the least-squares fit is closed form.
    """
    unit = dataclasses.replace(params, actuator=dataclasses.replace(params.actuator, Psi=1.0))
    sysm = CoupledSystem(unit, "open-loop")
    us = np.array([params.controller.us1, params.controller.us2])
    free = ~sysm.fixed
    g = np.zeros(sysm.n)
    g[free] = spla.spsolve(sysm.S[free][:, free].tocsc(), (sysm.Bload @ us)[free])
    gb = g.reshape(sysm.grid.shape)[:, 0]
    return float(gb @ sysm.wd / (gb @ gb))
