"""Command-line front end: ``simulate``, ``verify`` and ``profile``."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .actuation import desired_profile, lambda_profile
from .config import RunConfig, parse_config
from .errors import ConfigError, DivergenceError
from .grid import Grid, biharmonic
from .simulate import MODES, SimConfig, assemble, casimir_drift, run

FMT = "%.17g"


def _write_csv(path: Path, header: list[str], rows) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    np.savetxt(path, rows, fmt=FMT, delimiter=",", header=",".join(header), comments="")


def _time_label(t: float) -> str:
    return format(t, ".10g")


def write_outputs(result, out: Path) -> None:
    """Write the audit, Casimir, edge-profile, observer and snapshot CSVs."""
    out.mkdir(parents=True, exist_ok=True)
    a = result.audit
    energy_cols = ["t", "H", "H_c", "H_cl", "H_err", "H_err_d", "port_power", "dissipation",
                   "residual"]
    _write_csv(out / "energies.csv", energy_cols, np.column_stack([a[c] for c in energy_cols]))
    C = np.column_stack([a["t"], a["xc1"], a["xc2"], a["C1"], a["C2"],
                         np.abs(a["C1"] - a["C1"][0]), np.abs(a["C2"] - a["C2"][0])])
    _write_csv(out / "casimir.csv", ["t", "xc1", "xc2", "C1", "C2", "C1_drift", "C2_drift"], C)
    z = result.system.z1
    _write_csv(out / "boundary_profile.csv", ["t"] + [f"w@{FMT % v}" for v in z],
               np.column_stack([result.edge_t, result.edge_profiles]))
    _write_csv(out / "observer_compare.csv",
               ["t", "w_probe", "w_hat_probe", "w_meas1", "w_meas2"],
               np.column_stack([a["t"], a["w_probe"], a["w_hat_probe"], a["w_meas1"],
                                a["w_meas2"]]))
    snap = out / "snapshots"
    snap.mkdir(exist_ok=True)
    for t, w in sorted(result.snapshots.items()):
        np.savetxt(snap / f"w_{_time_label(t)}.csv", w, fmt=FMT, delimiter=",")


def cmd_simulate(cfg: RunConfig, mode: str | None = None, out: str | None = None) -> int:
    mode = mode or cfg.sim.mode
    sim = dataclasses.replace(cfg.sim, mode=mode)
    out_dir = Path(out or cfg.out_dir)
    system = assemble(cfg.system, mode)
    try:
        result = run(system, sim)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        write_outputs(result, out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return 3
    if mode != "open-loop":
        drift = casimir_drift(result.audit)
        a = result.audit
        xc = np.max(np.abs(np.column_stack([a["xc1"], a["xc2"]])), axis=0)
        print(f"casimir drift {drift[0]:.3e} {drift[1]:.3e} (max |xc| {xc[0]:.3e} {xc[1]:.3e})")
    print(f"wrote {out_dir}")
    return 0


def cmd_profile(cfg: RunConfig, out: str | None = None) -> int:
    p = cfg.system
    z = Grid.for_plate(p.plate, p.N1, p.N2).z1
    rows = np.column_stack([z, lambda_profile(z, p.actuator, p.plate.L1),
                            desired_profile(z, p.equilibrium, p.plate.L1)])
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        _write_csv(Path(out) / "profile.csv", ["z1", "Lambda", "w_d"], rows)
    else:
        print("z1,Lambda,w_d")
        for r in rows:
            print(",".join(FMT % v for v in r))
    return 0


# --------------------------------------------------------------------------
# verification suite

def _check_stencil(cfg):
    g = Grid.for_plate(cfg.system.plate, cfg.system.N1, cfg.system.N2)
    Z1, Z2 = g.mesh()
    e1 = np.nanmax(np.abs(biharmonic(Z1**4, g) / 24 - 1))
    e2 = np.nanmax(np.abs(biharmonic(Z1**2 * Z2**2, g) / 8 - 1))
    return "stencil oracle", max(e1, e2), 1e-9


def _check_equivalence(cfg):
    rng = np.random.default_rng(1)
    worst = 0.0
    for mode in MODES:
        s = assemble(cfg.system, mode)
        for _ in range(10):
            x = rng.standard_normal(s.nx)
            m = s.modular_rhs(x)
            worst = max(worst, np.max(np.abs(s.A @ x + s.b - m)) / np.max(np.abs(m)))
    return "assembled operator = modular rhs", worst, 1e-12


def _check_conservation(cfg):
    s = assemble(cfg.system, "open-loop")
    g = s.grid
    Z1, Z2 = g.mesh()
    x = np.zeros(s.nx)
    x[s.sl_p] = (np.sin(np.pi * Z1) * np.cos(np.pi * Z2)).ravel() * s.free
    r = run(s, SimConfig(dt=cfg.sim.dt, T=1.0, mode="open-loop", record_every=100,
                         solver_tol=cfg.sim.solver_tol), x0=x)
    H = r.audit["H"]
    return "open-loop energy conservation", abs(H[-1] - H[0]) / H[0], 1e-8


def _check_power_balance(cfg):
    res = []
    for N in (21, 41):
        p = dataclasses.replace(cfg.system, N1=N, N2=N,
                                actuator=dataclasses.replace(cfg.system.actuator, sigma=2.0))
        s = assemble(p, "open-loop")
        r = run(s, SimConfig(dt=cfg.sim.dt, T=1.0, mode="open-loop", record_every=1),
                voltage=lambda t: (np.sin(2 * np.pi * t), 0.0))
        res.append(np.nanmax(np.abs(r.audit["residual"])))
    ratio = res[0] / res[1]
    return "power-balance refinement ratio", ratio, (3.0, 5.0)


def _short(cfg, mode, T=5.0):
    s = assemble(cfg.system, mode)
    return s, run(s, dataclasses.replace(cfg.sim, T=min(T, cfg.sim.T), mode=mode))


def _check_closed_loop(cfg):
    s, r = _short(cfg, "controlled")
    H = r.audit["H_cl"]
    eps = 10 * cfg.sim.solver_tol * H[0]
    return "closed-loop energy monotone (max increase - eps)", np.max(np.diff(H)) - eps, 0.0


def _check_casimir(cfg):
    s, r = _short(cfg, "controlled")
    drift = casimir_drift(r.audit)
    xc = np.max(np.abs(np.column_stack([r.audit["xc1"], r.audit["xc2"]])), axis=0)
    return "casimir drift / tolerance", np.max(drift / (cfg.tol_casimir * xc)), 1.0


def _check_observer(cfg):
    s, r = _short(cfg, "controlled-observer")
    H = r.audit["H_err_d"]
    eps = 10 * cfg.sim.solver_tol * H[0]
    return "observer error energy monotone (max increase - eps)", np.max(np.diff(H)) - eps, 0.0


CHECKS = (_check_stencil, _check_equivalence, _check_conservation, _check_power_balance,
          _check_closed_loop, _check_casimir, _check_observer)


def _passed(value, allowed) -> bool:
    if isinstance(allowed, tuple):
        return allowed[0] <= value <= allowed[1]
    return value <= allowed


def cmd_verify(cfg: RunConfig) -> int:
    threads = int(os.environ.get("PHPLATE_THREADS", "0") or 0) or min(4, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda f: f(cfg), CHECKS))
    ok = True
    for name, value, allowed in results:
        good = _passed(value, allowed)
        ok &= good
        lim = f"[{allowed[0]}, {allowed[1]}]" if isinstance(allowed, tuple) else f"<= {allowed:g}"
        print(f"{'PASS' if good else 'FAIL'}  {name}: {value:.3e} (allowed {lim})")
    return 0 if ok else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="phplate", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run a simulation and write CSV outputs")
    s.add_argument("--config", required=True)
    s.add_argument("--mode", choices=MODES)
    s.add_argument("--out")
    v = sub.add_parser("verify", help="run the property suite")
    v.add_argument("--config", required=True)
    p = sub.add_parser("profile", help="dump actuator and target profiles")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(Path(args.config).read_text())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "simulate":
        return cmd_simulate(cfg, args.mode, args.out)
    if args.command == "verify":
        return cmd_verify(cfg)
    return cmd_profile(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
