import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from phplate.actuation import (ActuatorParams, EquilibriumParams, controller_setpoints,
                               desired_profile, lambda_integral, lambda_profile, window)
from phplate.errors import ConfigError
from phplate.grid import Grid
from phplate.simulate import SystemParams, fit_actuator_amplitude

UNIT = ActuatorParams(Psi=1.0, sigma=10.0)
EQ = EquilibriumParams()


def test_lambda_quarter_point():
    expected = 400 * np.tanh(2.5) / np.cosh(2.5) ** 2
    assert lambda_profile(0.25, UNIT) == pytest.approx(expected, rel=1e-14)
    assert lambda_profile(0.25, UNIT) == pytest.approx(10.49, abs=5e-3)


@settings(max_examples=50)
@given(st.floats(0, 0.25))
def test_lambda_symmetric_about_quarter(d):
    assert lambda_profile(0.25 + d, UNIT) == pytest.approx(lambda_profile(0.25 - d, UNIT),
                                                            rel=1e-9, abs=1e-9)


def test_lambda_edge_integral():
    z = np.linspace(0, 1, 10001)
    oracle = simpson(lambda_profile(z, UNIT), x=z)
    assert lambda_integral(UNIT) == pytest.approx(oracle, rel=1e-9)
    assert lambda_integral(UNIT) == pytest.approx(10.0, rel=1e-7)


def test_lambda_is_curvature_of_window():
    errs = []
    for n in (401, 801):
        z = np.linspace(0, 1, n)
        h = z[1]
        fd = -UNIT.Psi * (window(z[:-2], UNIT) - 2 * window(z[1:-1], UNIT)
                          + window(z[2:], UNIT)) / h**2
        errs.append(np.max(np.abs(fd - lambda_profile(z[1:-1], UNIT))))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_desired_profile_values():
    assert desired_profile(0.0, EQ) == 0.0
    assert desired_profile(0.5, EQ) == pytest.approx(0.0342, abs=1e-12)
    assert desired_profile(1.0, EQ) == pytest.approx(0.09995, abs=1e-12)


def test_desired_profile_continuity_and_slopes():
    e = 1e-7
    assert abs(desired_profile(0.5 - e, EQ) - desired_profile(0.5, EQ)) < 1e-7
    left = (desired_profile(0.5 - e, EQ) - desired_profile(0.5 - 2 * e, EQ)) / e
    right = (desired_profile(0.5 + 2 * e, EQ) - desired_profile(0.5 + e, EQ)) / e
    assert left == pytest.approx(EQ.a, rel=1e-5)
    assert right == pytest.approx(EQ.b, rel=1e-5)


def test_setpoints_trivial():
    g = Grid(41, 41)
    lam = lambda_profile(g.z1, UNIT)
    wd = desired_profile(g.z1, EQ)
    wts = g.edge_weights("B2")
    assert controller_setpoints(lam, lam, 0 * wd, wts) == (0.0, 0.0)
    assert controller_setpoints(0 * lam, 0 * lam, wd, wts) == (0.0, 0.0)


def test_setpoints_against_simpson_oracle():
    z = np.linspace(0, 1, 10001)
    oracle = simpson(lambda_profile(z, UNIT) * desired_profile(z, EQ), x=z)
    g = Grid(41, 41)
    lam = lambda_profile(g.z1, UNIT)
    x1, x2 = controller_setpoints(lam, lam, desired_profile(g.z1, EQ), g.edge_weights("B2"))
    assert x1 == x2
    assert x1 == pytest.approx(oracle, rel=1e-2)


@settings(max_examples=20)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_setpoints_linear_in_target(alpha, beta):
    g = Grid(21, 21)
    lam = lambda_profile(g.z1, UNIT)
    wts = g.edge_weights("B2")
    f, h = desired_profile(g.z1, EQ), np.sin(g.z1)
    lhs = controller_setpoints(lam, lam, alpha * f + beta * h, wts)[0]
    rhs = (alpha * controller_setpoints(lam, lam, f, wts)[0]
           + beta * controller_setpoints(lam, lam, h, wts)[0])
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_parameter_validation():
    with pytest.raises(ConfigError):
        ActuatorParams(sigma=0.0)
    with pytest.raises(ConfigError):
        EquilibriumParams(a=-1.0)


def test_default_amplitude_matches_static_fit():
    psi = fit_actuator_amplitude(SystemParams())
    assert psi == pytest.approx(ActuatorParams().Psi, rel=0.02)
