import dataclasses

import numpy as np
import pytest

from phplate.errors import ConfigError, DivergenceError
from phplate.grid import SIMPLY_SUPPORTED_BC
from phplate.simulate import (MidpointStepper, SimConfig, SystemParams, assemble, casimir_drift,
                              run, step_midpoint)

SMALL = SystemParams(N1=13, N2=13)


def test_simconfig_validation():
    for kw in (dict(dt=-1.0), dict(T=-1.0), dict(mode="closed"), dict(solver_tol=0.0),
               dict(record_every=0), dict(T=1e-4, dt=1e-3)):
        with pytest.raises(ConfigError):
            SimConfig(**kw)


def test_zero_state_open_loop():
    s = assemble(SMALL, "open-loop")
    assert not (s.A @ np.zeros(s.nx) + s.b).any()


@pytest.mark.parametrize("mode", ["open-loop", "controlled", "controlled-observer"])
def test_assembled_matches_modular(mode):
    s = assemble(SMALL, mode)
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.standard_normal(s.nx)
        m = s.modular_rhs(x)
        np.testing.assert_allclose(s.A @ x + s.b, m, rtol=0, atol=1e-12 * np.abs(m).max())


def test_open_loop_input_matrix():
    s = assemble(SMALL, "open-loop")
    x = np.random.default_rng(3).standard_normal(s.nx)
    u = np.array([0.4, -0.9])
    m = s.modular_rhs(x, u)
    np.testing.assert_allclose(s.A @ x + s.Bu @ u, m, atol=1e-12 * np.abs(m).max())


def test_equilibrium_is_fixed_point():
    s = assemble(SystemParams(N1=21, N2=21), "controlled")
    x = s.equilibrium()
    scale = np.abs(s.b).max()
    assert np.abs(s.A @ x + s.b).max() < 1e-9 * scale
    st = MidpointStepper(s.A, 1e-3)
    y = step_midpoint(x, 1e-3, st, s.b)
    np.testing.assert_allclose(y, x, atol=1e-9 * np.abs(x).max())


def test_free_vibration_energy_drift_per_step():
    s = assemble(SMALL, "open-loop")
    Z1, Z2 = s.grid.mesh()
    x = np.zeros(s.nx)
    x[s.sl_p] = (Z1 * np.cos(Z2)).ravel() * s.free
    st = MidpointStepper(s.A, 1e-3)
    H0 = s.energies(x)["H"]
    for _ in range(50):
        y = st.step(x)
        assert abs(s.energies(y)["H"] - s.energies(x)["H"]) <= 1e-10 * H0
        x = y


def test_second_order_in_time():
    s = assemble(SMALL, "open-loop")
    Z1, Z2 = s.grid.mesh()
    x0 = np.zeros(s.nx)
    x0[s.sl_p] = (np.sin(np.pi * Z1) * Z2).ravel() * s.free
    T = 0.1

    def final(dt):
        return run(s, SimConfig(dt=dt, T=T, mode="open-loop", record_every=10**6), x0=x0).final

    ref = final(2.5e-4 / 8)
    e1 = np.abs(final(2.5e-4) - ref).max()
    e2 = np.abs(final(1.25e-4) - ref).max()
    assert 3.5 < e1 / e2 < 4.6


def test_zero_horizon_gives_initial_audit_only():
    s = assemble(SMALL, "open-loop")
    r = run(s, SimConfig(T=0.0, mode="open-loop"))
    assert len(r.audit) == 1
    assert r.audit["H"][0] == 0.0


def test_open_loop_at_rest_stays_at_rest():
    s = assemble(SMALL, "open-loop")
    r = run(s, SimConfig(T=0.05, mode="open-loop"))
    assert not r.final.any()
    assert not r.audit["H"].any()


def test_divergence_reports_step():
    s = assemble(SMALL, "open-loop")
    x = np.zeros(s.nx)
    x[s.sl_p][20] = np.nan
    with pytest.raises(DivergenceError) as exc:
        run(s, SimConfig(T=0.01, mode="open-loop"), x0=x)
    assert exc.value.step == 1


def test_mode_mismatch_rejected():
    s = assemble(SMALL, "open-loop")
    with pytest.raises(ConfigError):
        run(s, SimConfig(T=0.01, mode="controlled"))


def test_deterministic():
    p = SystemParams(N1=13, N2=13)
    s = assemble(p, "controlled-observer")
    cfg = SimConfig(T=0.2, mode="controlled-observer")
    a, b = run(s, cfg).audit.rows(), run(assemble(p, "controlled-observer"), cfg).audit.rows()
    np.testing.assert_array_equal(np.nan_to_num(a, nan=7.0), np.nan_to_num(b, nan=7.0))


def test_observer_started_on_plant_reproduces_controlled_mode():
    p = SystemParams(N1=13, N2=13)
    sc = assemble(p, "controlled")
    so = assemble(p, "controlled-observer")
    Z1, _ = sc.grid.mesh()
    x = sc.initial_state()
    x[sc.sl_w] = (0.01 * Z1**2).ravel() * sc.free
    xo = np.zeros(so.nx)
    xo[:sc.nx] = x
    xo[so.sl_wh] = x[sc.sl_w]
    rc = run(sc, SimConfig(T=0.5, mode="controlled"), x0=x)
    ro = run(so, SimConfig(T=0.5, mode="controlled-observer"), x0=xo)
    np.testing.assert_allclose(ro.final[:sc.nx], rc.final, atol=1e-12)
    np.testing.assert_allclose(ro.final[so.sl_wh], ro.final[so.sl_w], atol=1e-12)
    assert np.max(ro.audit["H_err_d"]) < 1e-20


def test_casimir_drift_of_zero_trajectory():
    s = assemble(SMALL, "controlled")
    r = run(s, SimConfig(T=0.0, mode="controlled"))
    np.testing.assert_array_equal(casimir_drift(r.audit), 0.0)


def test_residual_recorded_between_samples():
    s = assemble(dataclasses.replace(SMALL, bc=SIMPLY_SUPPORTED_BC), "open-loop")
    Z1, Z2 = s.grid.mesh()
    x = np.zeros(s.nx)
    x[s.sl_w] = (np.sin(np.pi * Z1) * np.sin(np.pi * Z2)).ravel() * s.free
    r = run(s, SimConfig(T=0.1, mode="open-loop", record_every=5), x0=x)
    res = r.audit["residual"]
    assert np.isnan(res[0]) and np.isnan(res[-1])
    assert np.all(np.isfinite(res[1:-1]))


def test_observer_mode_casimir_drift_exceeds_controlled(controlled_run, observer_run):
    dc = casimir_drift(controlled_run.audit)
    do = casimir_drift(observer_run.audit)
    assert (do > dc).all()
    # after the error energy has decayed by 99%, the drift grows more slowly
    a = observer_run.audit
    k = np.argmax(a["H_err_d"] <= 0.01 * a["H_err_d"][0])
    t = a["t"]
    early = np.max(np.abs(a["C1"][:k] - a["C1"][0])) / t[k]
    late = np.max(np.abs(a["C1"][k:] - a["C1"][k])) / (t[-1] - t[k])
    assert late < early
