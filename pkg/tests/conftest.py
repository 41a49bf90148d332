import numpy as np
import pytest

from phplate.simulate import SimConfig, SystemParams, assemble, run


@pytest.fixture(scope="session")
def controlled_run():
    """Default 41x41 closed loop integrated to T = 40."""
    s = assemble(SystemParams(), "controlled")
    return run(s, SimConfig(T=40.0, mode="controlled"))


@pytest.fixture(scope="session")
def observer_run():
    """Default 41x41 closed loop with observer integrated to T = 40."""
    s = assemble(SystemParams(), "controlled-observer")
    return run(s, SimConfig(T=40.0, mode="controlled-observer"))


def profile_error_at(result, t):
    """Relative RMS edge error at the recorded time closest to ``t``."""
    k = int(np.argmin(np.abs(result.edge_t - t)))
    wd = result.system.wd
    return float(np.sqrt(np.mean((result.edge_profiles[k] - wd) ** 2)) / np.sqrt(np.mean(wd**2)))


ACCEPTANCE_LINES = []


def report(n, ok, detail):
    """Record and print a one-line acceptance verdict."""
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
