"""JSON run configuration: parsing, defaults, validation and echo.

Errors carry the dotted path of the offending field. The effective
configuration (defaults filled, h snapped) serializes with ``to_dict`` and
parses back to an equal object.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

from .geometry import StripSpec, snap_h
from .potential import FAMILIES, Potential, make_potential


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class PotentialConfig:
    family: str = "scalar_quartic"
    a_minus: Optional[list] = None
    a_plus: Optional[list] = None
    r0: float = 0.5
    M: float = 2.0

    def build(self) -> Potential:
        params = {"r0": self.r0, "M": self.M}
        if self.family != "scalar_quartic":
            params.update(a_minus=tuple(self.a_minus), a_plus=tuple(self.a_plus))
        return make_potential(self.family, **params)


@dataclass
class StripConfig:
    kind: str = "flat"
    L: float = 1.0
    R: Optional[float] = None
    lower: float = 0.0
    upper: float = 1.0
    amplitude: float = 0.0
    phase: float = 0.0
    table_s: Optional[list] = None
    table_lower: Optional[list] = None
    table_upper: Optional[list] = None

    def build(self) -> StripSpec:
        return StripSpec(L=self.L, R=self.R, kind=self.kind, lower=self.lower,
                         upper=self.upper, amplitude=self.amplitude,
                         phase=self.phase, table_s=self.table_s,
                         table_lower=self.table_lower, table_upper=self.table_upper)


@dataclass
class GridConfig:
    h: float = 1 / 32
    T: Optional[float] = None


@dataclass
class ConstraintConfig:
    N: int = 2


@dataclass
class OptsConfig:
    tol: float = 1e-6
    max_iter: int = 100000
    seed: int = 0


@dataclass
class OdeConfig:
    T: float = 8.0
    h: float = 1 / 128
    tol: float = 1e-7


@dataclass
class PhiConfig:
    f_mode: str = "linear"          # linear | envelope
    c2: Optional[float] = 1.0       # linear mode only; None derives c^2 from W
    t: float = 1.0
    h: float = 1 / 32
    j_max: int = 4


@dataclass
class CutoffConfig:
    trials: int = 200
    identity_trials: int = 50
    h: float = 1 / 16
    r: float = 0.2
    seed: int = 0
    max_principle_trials: int = 0


@dataclass
class DecayConfig:
    side: str = "both"              # plus | minus | both
    lo: Optional[float] = None
    hi: Optional[float] = None


@dataclass
class RunConfig:
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    strip: StripConfig = field(default_factory=StripConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    constraint: ConstraintConfig = field(default_factory=ConstraintConfig)
    opts: OptsConfig = field(default_factory=OptsConfig)
    ode: OdeConfig = field(default_factory=OdeConfig)
    phi: PhiConfig = field(default_factory=PhiConfig)
    cutoff: CutoffConfig = field(default_factory=CutoffConfig)
    decay: DecayConfig = field(default_factory=DecayConfig)
    output_dir: Optional[str] = None
    workers: int = 1
    warnings: list = field(default_factory=list, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("warnings")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


_SECTIONS = {
    "potential": PotentialConfig, "strip": StripConfig, "grid": GridConfig,
    "constraint": ConstraintConfig, "opts": OptsConfig, "ode": OdeConfig,
    "phi": PhiConfig, "cutoff": CutoffConfig, "decay": DecayConfig,
}
_DEFAULT_MINIMA = {"product_well": ([-1.0, 0.0], [1.0, 0.0]),
                   "degenerate_well": ([-1.0, 0.0], [1.0, 0.0])}


def _number(value, path, *, positive=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if integer:
        if int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if positive and value <= 0:
        raise ConfigError(path, f"must be positive, got {value!r}")
    return value


def _choice(value, path, options):
    if not isinstance(value, str) or value not in options:
        raise ConfigError(path, f"expected one of {'|'.join(options)}, got {value!r}")
    return value


def _vector(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a nonempty list of numbers")
    return [_number(v, f"{path}[{k}]") for k, v in enumerate(value)]


def _section(name: str, raw) -> Any:
    cls = _SECTIONS[name]
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected an object")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", f"unknown field; expected one of {sorted(known)}")
    return cls(**raw)


def _check_potential(p: PotentialConfig) -> PotentialConfig:
    _choice(p.family, "potential.family", sorted(FAMILIES))
    p.r0 = _number(p.r0, "potential.r0", positive=True)
    p.M = _number(p.M, "potential.M", positive=True)
    if p.family == "scalar_quartic":
        for key in ("a_minus", "a_plus"):
            v = getattr(p, key)
            if v is not None and _vector(v, f"potential.{key}") != (
                    [-1.0] if key == "a_minus" else [1.0]):
                raise ConfigError(f"potential.{key}",
                                  "scalar_quartic has fixed minima -1 and +1")
        p.a_minus, p.a_plus = [-1.0], [1.0]
    else:
        dm, dp = _DEFAULT_MINIMA[p.family]
        p.a_minus = dm if p.a_minus is None else _vector(p.a_minus, "potential.a_minus")
        p.a_plus = dp if p.a_plus is None else _vector(p.a_plus, "potential.a_plus")
        if len(p.a_minus) != len(p.a_plus):
            raise ConfigError("potential.a_plus", "a_minus and a_plus differ in dimension")
        if p.a_minus == p.a_plus:
            raise ConfigError("potential.a_plus", "minima must be distinct")
    return p


def _check_strip(s: StripConfig, warnings: list) -> StripConfig:
    _choice(s.kind, "strip.kind", ("flat", "sinusoidal", "table"))
    s.L = _number(s.L, "strip.L", positive=True)
    for key in ("lower", "upper", "amplitude", "phase"):
        setattr(s, key, _number(getattr(s, key), f"strip.{key}"))
    if s.kind == "table":
        for key in ("table_s", "table_lower", "table_upper"):
            setattr(s, key, _vector(getattr(s, key), f"strip.{key}"))
        if not len(s.table_s) == len(s.table_lower) == len(s.table_upper):
            raise ConfigError("strip.table_s", "table columns differ in length")
    else:
        s.table_s = s.table_lower = s.table_upper = None
    if s.R is None:
        if s.kind == "table":
            bound = max(map(abs, s.table_lower + s.table_upper))
        else:
            bound = max(abs(s.lower), abs(s.upper) + abs(s.amplitude))
        s.R = float(max(1.0, bound))
    s.R = _number(s.R, "strip.R", positive=True)
    report = s.build().check()
    if report["min_width"] <= 0:
        raise ConfigError("strip", f"g_+ <= g_- somewhere (min width {report['min_width']:.4g})")
    if report["sup_abs_boundary"] > s.R + 1e-12:
        raise ConfigError("strip.R", f"boundary reaches |y| = {report['sup_abs_boundary']:.4g} > R")
    if report["periodicity_defect"] > 1e-9:
        raise ConfigError("strip", "boundary functions are not L-periodic")
    return s


def _snap(h, L, path, warnings) -> float:
    h = _number(h, path, positive=True)
    hs, changed = snap_h(L, h)
    if changed:
        warnings.append(f"{path}: h = {h!r} does not divide L = {L!r}; snapped to {hs!r}")
    return hs


def parse_config_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a JSON object")
    raw = dict(raw)
    pot = raw.get("potential")
    if isinstance(pot, str):
        raw["potential"] = {"family": pot}
    known = set(_SECTIONS) | {"output_dir", "workers"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, f"unknown field; expected one of {sorted(known)}")
    warnings: list = []
    cfg = RunConfig(**{k: _section(k, raw.get(k)) for k in _SECTIONS},
                    output_dir=raw.get("output_dir"),
                    workers=_number(raw.get("workers", 1), "workers", positive=True,
                                    integer=True),
                    warnings=warnings)
    if cfg.output_dir is not None and not isinstance(cfg.output_dir, str):
        raise ConfigError("output_dir", "expected a string")

    _check_potential(cfg.potential)
    _check_strip(cfg.strip, warnings)
    L = cfg.strip.L

    c = cfg.constraint
    c.N = _number(c.N, "constraint.N", positive=True, integer=True)
    g = cfg.grid
    g.h = _snap(g.h, L, "grid.h", warnings)
    g.T = (c.N + 6) * L if g.T is None else _number(g.T, "grid.T", positive=True)
    ratio = g.T / L
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigError("grid.T", f"T = {g.T} must be an integer multiple of L = {L}")
    if c.N * L + 4 * L > g.T + 1e-12:
        raise ConfigError("constraint.N",
                          f"rule NL+4L ≤ T violated: N={c.N}, L={L}, T={g.T}")

    o = cfg.opts
    o.tol = _number(o.tol, "opts.tol", positive=True)
    o.max_iter = _number(o.max_iter, "opts.max_iter", positive=True, integer=True)
    o.seed = _number(o.seed, "opts.seed", integer=True)

    od = cfg.ode
    od.T = _number(od.T, "ode.T", positive=True)
    od.tol = _number(od.tol, "ode.tol", positive=True)
    od.h = _snap(od.h, od.T / 4, "ode.h", warnings)

    ph = cfg.phi
    _choice(ph.f_mode, "phi.f_mode", ("linear", "envelope"))
    ph.c2 = _number(ph.c2, "phi.c2", allow_none=True)
    if ph.c2 is not None and ph.c2 < 0:
        raise ConfigError("phi.c2", "must be nonnegative")
    if ph.f_mode == "envelope":
        ph.c2 = None
    ph.t = _number(ph.t, "phi.t")
    if ph.t < 0:
        raise ConfigError("phi.t", "must be nonnegative")
    if ph.c2 is None and ph.t > cfg.potential.r0 ** 2 + 1e-15:
        raise ConfigError("phi.t", f"t = {ph.t} exceeds r0^2 = {cfg.potential.r0 ** 2}")
    ph.h = _snap(ph.h, L, "phi.h", warnings)
    ph.j_max = _number(ph.j_max, "phi.j_max", integer=True)
    if ph.j_max < 0:
        raise ConfigError("phi.j_max", "must be nonnegative")

    cu = cfg.cutoff
    cu.trials = _number(cu.trials, "cutoff.trials", integer=True)
    cu.identity_trials = _number(cu.identity_trials, "cutoff.identity_trials", integer=True)
    cu.max_principle_trials = _number(cu.max_principle_trials,
                                      "cutoff.max_principle_trials", integer=True)
    cu.seed = _number(cu.seed, "cutoff.seed", integer=True)
    cu.r = _number(cu.r, "cutoff.r", positive=True)
    cu.h = _snap(cu.h, 1.0, "cutoff.h", warnings)
    if 2 * cu.r > cfg.potential.r0 + 1e-15:
        raise ConfigError("cutoff.r", f"rule 2r ≤ r0 violated: r={cu.r}, r0={cfg.potential.r0}")

    d = cfg.decay
    _choice(d.side, "decay.side", ("plus", "minus", "both"))
    d.lo = _number(d.lo, "decay.lo", positive=True, allow_none=True)
    d.hi = _number(d.hi, "decay.hi", positive=True, allow_none=True)
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse and validate JSON text; raises ConfigError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    return parse_config_dict(raw)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
