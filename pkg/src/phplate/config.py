"""Flat ``key = value`` run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from .actuation import ActuatorParams, EquilibriumParams
from .controller import ControllerParams
from .errors import ConfigError
from .grid import BoundaryConditions, PlateParams
from .observer import ObserverParams
from .simulate import MODES, SimConfig, SystemParams

# key -> (type, default, section)
KEYS = {
    "rho_A": (float, 1.0, "plate"), "D_E": (float, 1.0, "plate"), "nu": (float, 0.2, "plate"),
    "L1": (float, 1.0, "plate"), "L2": (float, 1.0, "plate"),
    "N1": (int, 41, "grid"), "N2": (int, 41, "grid"),
    "bc_B1": (str, "clamped", "bc"), "bc_B2": (str, "actuated", "bc"),
    "bc_B3": (str, "free", "bc"), "bc_B4": (str, "actuated", "bc"),
    "damping": (float, 0.0, "system"),
    "Psi": (float, 0.07, "actuator"), "sigma": (float, 10.0, "actuator"),
    "a": (float, 0.1368, "equilibrium"), "b": (float, 0.1315, "equilibrium"),
    "c1": (float, 5.0, "controller"), "c2": (float, 5.0, "controller"),
    "Jc34": (float, 1.0, "controller"), "Rc33": (float, 15.0, "controller"),
    "Rc34": (float, 1.0, "controller"), "Rc44": (float, 15.0, "controller"),
    "G31": (float, 1.0, "controller"), "G32": (float, 0.0, "controller"),
    "G41": (float, 0.0, "controller"), "G42": (float, 1.0, "controller"),
    "Mc33": (float, 25.0, "controller"), "Mc34": (float, 5.0, "controller"),
    "Mc44": (float, 25.0, "controller"),
    "us1": (float, -1.0, "controller"), "us2": (float, -1.0, "controller"),
    "k1": (float, 2000.0, "observer"), "k2": (float, 2000.0, "observer"),
    "Kd11": (float, 2000.0, "observer"), "Kd22": (float, 2000.0, "observer"),
    "d": (float, 0.05, "observer"), "injection": (str, "node", "observer"),
    "dt": (float, 1e-3, "sim"), "T": (float, 40.0, "sim"), "mode": (str, "controlled", "sim"),
    "record_every": (int, 10, "sim"), "solver_tol": (float, 1e-12, "sim"),
    "snapshot_every": (int, 1000, "sim"),
    "tol_casimir": (float, 1e-3, "run"), "out_dir": (str, "out", "run"),
}


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams = field(default_factory=SystemParams)
    sim: SimConfig = field(default_factory=SimConfig)
    tol_casimir: float = 1e-3
    out_dir: str = "out"
    values: tuple = ()

    def value(self, key):
        return dict(self.values)[key]


def _convert(key, raw, lineno):
    typ = KEYS[key][0]
    try:
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} = {raw!r} is not a valid {typ.__name__}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    Unknown or repeated keys are rejected; missing keys take their defaults.
    Errors name the line, key, value and allowed range.
    """
    vals = {k: v[1] for k, v in KEYS.items()}
    where = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in where:
            raise ConfigError(f"line {lineno}: {key} already set on line {where[key]}")
        vals[key] = _convert(key, raw, lineno)
        where[key] = lineno
    return build_config(vals, where)


def build_config(vals: dict, where: dict | None = None) -> RunConfig:
    where = where or {}

    def section(name):
        return {k: vals[k] for k, v in KEYS.items() if v[2] == name}

    def fail(exc, keys):
        lines = sorted(where[k] for k in keys if k in where)
        prefix = f"line {lines[0]}: " if lines else ""
        raise ConfigError(prefix + str(exc)) from None

    def make(cls, name, rename=None):
        kw = section(name)
        if rename:
            kw = {rename.get(k, k): v for k, v in kw.items()}
        try:
            return cls(**kw)
        except ConfigError as exc:
            fail(exc, section(name))

    plate = make(PlateParams, "plate")
    N1, N2 = vals["N1"], vals["N2"]
    for key, n in (("N1", N1), ("N2", N2)):
        if n < 9:
            fail(ConfigError(f"{key} = {n} outside allowed range [9, inf)"), [key])
    if (N1 - 1) % 4:
        fail(ConfigError(f"N1 = {N1} outside allowed set N1 = 1 (mod 4): "
                         "no grid node at the measurement point 3 L1/4"), ["N1"])
    if N2 % 2 == 0:
        fail(ConfigError(f"N2 = {N2} outside allowed set N2 odd: "
                         "no grid node at the probe point L2/2"), ["N2"])
    try:
        bc = BoundaryConditions.from_pairs((k[3:], v) for k, v in section("bc").items())
    except ConfigError as exc:
        fail(exc, section("bc"))
    ctrl = make(ControllerParams, "controller")
    obs = make(ObserverParams, "observer")
    act = make(ActuatorParams, "actuator")
    eq = make(EquilibriumParams, "equilibrium")
    if vals["mode"] not in MODES:
        fail(ConfigError(f"mode = {vals['mode']} outside allowed set {{{', '.join(MODES)}}}"),
             ["mode"])
    sim = make(SimConfig, "sim")
    try:
        system = SystemParams(plate=plate, N1=N1, N2=N2, actuator=act, equilibrium=eq,
                              controller=ctrl, observer=obs, bc=bc, damping=vals["damping"])
    except ConfigError as exc:
        fail(exc, ["damping"])
    if not vals["tol_casimir"] > 0:
        fail(ConfigError(f"tol_casimir = {vals['tol_casimir']} outside allowed range (0, inf)"),
             ["tol_casimir"])
    return RunConfig(system, sim, vals["tol_casimir"], vals["out_dir"],
                     tuple(sorted(vals.items())))
