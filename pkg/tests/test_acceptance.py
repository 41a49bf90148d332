"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import dataclasses
import time

import numpy as np
import pytest

from conftest import profile_error_at, report
from phplate.actuation import ActuatorParams
from phplate.grid import SIMPLY_SUPPORTED_BC, Grid, biharmonic
from phplate.observer import ObserverParams, observer_rhs, ObserverState
from phplate.plate import PlantState, plant_rhs
from phplate.simulate import (MidpointStepper, SimConfig, SystemParams, assemble,
                              casimir_drift, run)

DEFAULT = SystemParams()


def test_criterion_1_stencil_oracle():
    g = Grid(41, 41)
    Z1, Z2 = g.mesh()
    t0 = time.perf_counter()
    e1 = np.nanmax(np.abs(biharmonic(Z1**4, g) / 24 - 1))
    e2 = np.nanmax(np.abs(biharmonic(Z1**2 * Z2**2, g) / 8 - 1))
    elapsed = time.perf_counter() - t0
    err = max(e1, e2)
    ok = err <= 1e-9 and elapsed < 1.0
    report(1, ok, f"max rel error {err:.2e} (<= 1e-9), {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_2_simply_supported_mode_frequency():
    s = assemble(dataclasses.replace(DEFAULT, bc=SIMPLY_SUPPORTED_BC), "open-loop")
    Z1, Z2 = s.grid.mesh()
    x = np.zeros(s.nx)
    x[s.sl_w] = (np.sin(np.pi * Z1) * np.sin(np.pi * Z2)).ravel() * s.free
    dt, n = 1e-3, 2000
    centre = (s.grid.N1 // 2) * s.grid.N2 + s.grid.N2 // 2
    st = MidpointStepper(s.A, dt)
    t0 = time.perf_counter()
    wc = [x[centre]]
    for _ in range(n):
        x = st.step(x)
        wc.append(x[centre])
    elapsed = time.perf_counter() - t0
    wc = np.array(wc)
    k = np.nonzero(np.sign(wc[:-1]) != np.sign(wc[1:]))[0]
    tz = dt * (k + wc[k] / (wc[k] - wc[k + 1]))
    omega = np.pi / np.mean(np.diff(tz))
    exact = 2 * np.pi**2
    rel = abs(omega / exact - 1)
    ok = rel <= 0.02 and elapsed < 30
    report(2, ok, f"omega {omega:.4f} vs {exact:.4f}, rel {rel:.2e} (<= 2e-2), {elapsed:.1f} s")
    assert ok


def test_criterion_3_open_loop_conservation():
    s = assemble(DEFAULT, "open-loop")
    Z1, Z2 = s.grid.mesh()
    x = np.zeros(s.nx)
    x[s.sl_p] = (np.sin(np.pi * Z1) * np.cos(np.pi * Z2)).ravel() * s.free
    t0 = time.perf_counter()
    r = run(s, SimConfig(T=5.0, mode="open-loop", record_every=100, solver_tol=1e-12), x0=x)
    elapsed = time.perf_counter() - t0
    H = r.audit["H"]
    drift = abs(H[-1] - H[0]) / H[0]
    ok = drift <= 1e-8 and elapsed < 120
    report(3, ok, f"|H(5)-H(0)|/H(0) = {drift:.2e} (<= 1e-8), {elapsed:.1f} s")
    assert ok


def _residual(N, sigma):
    p = dataclasses.replace(DEFAULT, N1=N, N2=N, actuator=ActuatorParams(Psi=1.0, sigma=sigma))
    s = assemble(p, "open-loop")
    r = run(s, SimConfig(T=2.0, mode="open-loop", record_every=1),
            voltage=lambda t: (np.sin(2 * np.pi * t), 0.0))
    return np.nanmax(np.abs(r.audit["residual"]))


def test_criterion_4_power_balance_refinement():
    t0 = time.perf_counter()
    ratio = _residual(21, 2.0) / _residual(41, 2.0)
    elapsed = time.perf_counter() - t0
    info = _residual(21, 10.0) / _residual(41, 10.0)
    ok = 3.0 <= ratio <= 5.0 and elapsed < 300
    report(4, ok, f"residual ratio 21->41 {ratio:.2f} (in [3, 5]) with sigma 2, {elapsed:.1f} s; "
                  f"sigma 10 ratio {info:.2f} (info)")
    assert ok


def test_criterion_5_closed_loop_dissipativity(controlled_run):
    H = controlled_run.audit["H_cl"]
    rise = np.max(np.diff(H))
    eps = 10 * SimConfig().solver_tol * H[0]
    ok = rise <= eps
    report(5, ok, f"max H_cl increase {rise:.2e} (<= {eps:.2e}) over T = 40")
    assert ok


def test_criterion_6_casimir_invariance(controlled_run):
    a = controlled_run.audit
    drift = casimir_drift(a)
    lim = 1e-3 * np.array([np.max(np.abs(a["xc1"])), np.max(np.abs(a["xc2"]))])
    ok = bool(np.all(drift <= lim))
    report(6, ok, f"drift {drift[0]:.2e}, {drift[1]:.2e} (<= {lim[0]:.2e}, {lim[1]:.2e})")
    assert ok


def test_criterion_7_equilibrium_stabilization(controlled_run):
    e40 = profile_error_at(controlled_run, 40.0)
    e10 = profile_error_at(controlled_run, 10.0)
    ok1, ok2 = e40 <= 0.25, e40 <= 0.5 * e10
    report(7, ok1 and ok2, f"(i) rel RMS edge error at T=40 {e40:.3f} (<= 0.25); "
                           f"(ii) {e40:.3f} vs 0.5 x {e10:.3f} = {0.5 * e10:.3f}")
    assert ok1, f"edge error {e40:.3f} > 0.25"
    assert ok2, f"edge error {e40:.3f} > half of T=10 value {e10:.3f}"


def test_criterion_8_observer_convergence(observer_run, controlled_run):
    a = observer_run.audit
    Hd = a["H_err_d"]
    rise = np.max(np.diff(Hd))
    eps = 10 * SimConfig().solver_tol * Hd[0]
    k10 = int(np.argmin(np.abs(a["t"] - 10.0)))
    decay = Hd[k10] / Hd[0]
    gap = abs(a["w_probe"][-1] - a["w_hat_probe"][-1])
    gap_lim = 0.05 * abs(observer_run.system.wd[-1])
    eo, ec = profile_error_at(observer_run, 40.0), profile_error_at(controlled_run, 40.0)
    parts = [rise <= eps, decay <= 0.01, gap <= gap_lim, eo <= 1.5 * ec]
    report(8, all(parts),
           f"monotone {rise:.2e} (<= {eps:.2e}); H_d(10)/H_d(0) {decay:.2e} (<= 1e-2); "
           f"probe gap {gap:.2e} (<= {gap_lim:.2e}); profile error {eo:.3f} "
           f"(<= 1.5 x {ec:.3f})")
    assert parts[0], "error energy increased"
    assert parts[1], f"error energy ratio {decay:.2e}"
    assert parts[2], f"probe gap {gap:.2e} > {gap_lim:.2e}"
    assert parts[3], f"profile error {eo:.3f} > {1.5 * ec:.3f}"


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f([a + 0.5 * dt * b for a, b in zip(y, k1)])
    k3 = f([a + 0.5 * dt * b for a, b in zip(y, k2)])
    k4 = f([a + dt * b for a, b in zip(y, k3)])
    return [a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]


def test_criterion_9_oracle_equivalence():
    rng = np.random.default_rng(9)
    worst = 0.0
    for mode in ("open-loop", "controlled", "controlled-observer"):
        s = assemble(DEFAULT, mode)
        for _ in range(100 // 3 + 1):
            x = rng.standard_normal(s.nx)
            m = s.modular_rhs(x)
            worst = max(worst, np.max(np.abs(s.A @ x + s.b - m)) / np.max(np.abs(m)))

    # plate copy with zero correction against the plant, same inputs and init
    s = assemble(DEFAULT, "open-loop")
    g, P, lam = s.grid, DEFAULT.plate, s.lam
    Z1, Z2 = g.mesh()
    w0 = 0.01 * Z1**2 * (1 + Z2) * s.free.reshape(g.shape)
    p0 = np.zeros(g.shape)
    obs_p = ObserverParams()
    dt, t = 1e-4, 0.0

    def u(t):
        return np.sin(7 * t), np.cos(3 * t)

    def plant(y):
        uu = u(t)
        return list(plant_rhs(PlantState(*y), g, P, {"B2": lam * uu[0], "B4": lam * uu[1]}))

    def copy(y):
        return list(observer_rhs(ObserverState(*y), u(t), (0.0, 0.0), lam, lam, g, P, obs_p))

    yp, yo = [w0.copy(), p0.copy()], [w0.copy(), p0.copy()]
    for _ in range(200):
        yp, yo = _rk4(plant, yp, dt), _rk4(copy, yo, dt)
        t += dt
    bitwise = all(np.array_equal(a, b) for a, b in zip(yp, yo)) and np.abs(yp[0]).max() > 0
    ok = worst <= 1e-12 and bitwise
    report(9, ok, f"assembled vs modular {worst:.2e} (<= 1e-12); zero-gain copy bitwise "
                  f"{'equal' if bitwise else 'different'}")
    assert ok


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
