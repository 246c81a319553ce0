"""Strictly validated experiment configurations built from YAML mappings."""

from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .kernels import (ConstantKernel, DilateKernel, ExpKernel, IndicatorKernel, Kernel,
                      MovingAverageKernel, OUKernel, SeparableKernel, TranslateKernel)
from .levy import JumpMeasure, LevyDensity, LevyTriplet, MultiTriplet, RepresentationFn
from .trig import TrigPolynomial


def _check_keys(raw, allowed, where: str) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return raw


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return float(v)


def _coerce(value, tp, where: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], where)
    if tp is float:
        return _num(value, where)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if origin is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return [_coerce(v, args[0], f"{where}[{i}]") for i, v in enumerate(value)]
    if tp is dict or origin is dict:
        return _check_keys(value, value.keys() if isinstance(value, dict) else (), where)
    return value


def from_mapping(cls, raw, where: str):
    """Build dataclass ``cls`` from ``raw``, rejecting unknown keys and wrong types."""
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    raw = _check_keys(raw, names, where)
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in raw:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(f"{where}: missing required key '{f.name}'")
            continue
        kwargs[f.name] = _coerce(raw[f.name], hints[f.name], f"{where}.{f.name}")
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# building blocks


def build_trig(raw, where: str = "mu") -> TrigPolynomial:
    raw = _check_keys(raw, ("c0", "terms"), where)
    c0 = _num(raw.get("c0", 0.0), f"{where}.c0")
    terms = []
    for i, t in enumerate(raw.get("terms", []) or []):
        if not isinstance(t, (list, tuple)) or len(t) not in (2, 3):
            raise ConfigError(f"{where}.terms[{i}]: expected [amplitude, frequency, phase?]")
        vals = [_num(v, f"{where}.terms[{i}]") for v in t]
        terms.append((vals[0], vals[1], vals[2] if len(vals) == 3 else 0.0))
    try:
        return TrigPolynomial(c0, tuple(terms))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_triplet(raw, where: str = "triplet") -> LevyTriplet:
    raw = _check_keys(raw, ("a", "gamma", "atoms", "density"), where)
    a = _num(raw.get("a", 0.0), f"{where}.a")
    gamma = _num(raw.get("gamma", 0.0), f"{where}.gamma")
    atoms = []
    for i, at in enumerate(raw.get("atoms", []) or []):
        if not isinstance(at, (list, tuple)) or len(at) != 2:
            raise ConfigError(f"{where}.atoms[{i}]: expected [location, mass]")
        atoms.append((_num(at[0], f"{where}.atoms[{i}]"), _num(at[1], f"{where}.atoms[{i}]")))
    dens = None
    if raw.get("density") is not None:
        d = _check_keys(raw["density"], ("x", "pos", "neg"), f"{where}.density")
        try:
            dens = LevyDensity(tuple(_coerce(d.get("x"), list[float], f"{where}.density.x")),
                               tuple(_coerce(d.get("pos"), list[float], f"{where}.density.pos")),
                               tuple(_coerce(d.get("neg"), list[float], f"{where}.density.neg")))
        except ValueError as exc:
            raise ConfigError(f"{where}.density: {exc}") from exc
    if a < 0:
        raise ConfigError(f"{where}.a must be non-negative")
    try:
        return LevyTriplet(a, gamma, JumpMeasure(tuple(atoms), dens))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_KERNEL_KEYS = {
    "indicator": ("a", "b", "height"),
    "exp": ("rate", "start", "height"),
    "constant": ("value",),
    "ou": ("mu",),
    "separable": ("u", "base"),
    "translate": ("u", "base"),
    "dilate": ("u", "base"),
    "moving_average": ("h", "u"),
}


def build_kernel(raw, where: str = "kernel") -> Kernel:
    if not isinstance(raw, dict) or "family" not in raw:
        raise ConfigError(f"{where}: expected a mapping with a 'family' key")
    fam = raw["family"]
    if fam not in _KERNEL_KEYS:
        raise ConfigError(f"{where}.family: unknown family {fam!r}; choose from {sorted(_KERNEL_KEYS)}")
    p = _check_keys({k: v for k, v in raw.items() if k != "family"}, _KERNEL_KEYS[fam], where)
    try:
        if fam == "indicator":
            return IndicatorKernel(*(_num(p.get(k, d), f"{where}.{k}")
                                     for k, d in (("a", 0.0), ("b", 1.0), ("height", 1.0))))
        if fam == "exp":
            return ExpKernel(*(_num(p.get(k, d), f"{where}.{k}")
                               for k, d in (("rate", 1.0), ("start", 0.0), ("height", 1.0))))
        if fam == "constant":
            return ConstantKernel(_num(p.get("value", 1.0), f"{where}.value"))
        if fam == "ou":
            return OUKernel(build_trig(p.get("mu"), f"{where}.mu"))
        if fam == "moving_average":
            u = build_trig(p["u"], f"{where}.u") if p.get("u") is not None else None
            return MovingAverageKernel(build_kernel(p.get("h"), f"{where}.h"), u)
        cls = {"separable": SeparableKernel, "translate": TranslateKernel, "dilate": DilateKernel}[fam]
        return cls(build_trig(p.get("u"), f"{where}.u"), build_kernel(p.get("base"), f"{where}.base"))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_multi_triplet(raw, where: str = "triplet") -> MultiTriplet:
    raw = _check_keys(raw, ("A", "gamma_c", "atoms", "c"), where)
    try:
        A = np.asarray(raw.get("A"), dtype=float)
        g = np.asarray(raw.get("gamma_c"), dtype=float)
        atoms = tuple((np.asarray(x, dtype=float), _num(m, f"{where}.atoms"))
                      for x, m in (raw.get("atoms") or []))
        c = _check_keys(raw.get("c"), ("r1", "r2"), f"{where}.c")
        rep = RepresentationFn(_num(c.get("r1", 1.0), f"{where}.c.r1"),
                               _num(c.get("r2", 2.0), f"{where}.c.r2"))
        return MultiTriplet(A, g, atoms, rep)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# ---------------------------------------------------------------------------
# per-command blocks


@dataclass
class ExponentConfig:
    triplet: dict
    z: list[float]
    kernel: dict | None = None
    t_offsets: list[float] = field(default_factory=lambda: [0.0])


@dataclass
class DomainConfig:
    triplet: dict
    kernel: dict
    t: float = 0.0
    sup_over_t: bool = False
    n_t: int = 64


@dataclass
class MetricConfig:
    metric: str
    mu: str
    nu: str | None = None
    K_max: int = 40
    per_axis: int = 64
    p: float = 1.0


@dataclass
class BoundConfig:
    kind: str
    case_id: str = "case0"
    f: dict | None = None
    g: dict | None = None
    triplet: dict | None = None
    z: list[float] = field(default_factory=lambda: [1.0])
    R: float = 2.0
    t_f: float = 0.0
    t_g: float = 0.0
    sigma2: float | None = None
    l2_dist2: float | None = None
    n_paths: int = 10_000
    dt: float = 0.01
    variant: str = "I_R"


@dataclass
class SimulateOUConfig:
    mu: dict
    triplet: dict
    t0: float = 0.0
    t1: float = 10.0
    dt: float = 0.01
    n_paths: int = 1
    tol: float = 1e-6


@dataclass
class CertifyConfig:
    mu: dict
    triplet: dict
    eps_list: list[float]
    window: list[float] = field(default_factory=lambda: [0.0, 200.0])
    tau_step: float | None = None
    offsets: list[float] = field(default_factory=lambda: [0.0])
    k: float = 3.0
    n_t: int = 4096
    K: int = 10
    z_per_axis: int = 64


@dataclass
class CLTConfig:
    h: dict
    triplet: dict
    m: float
    T_list: list[float]
    n_reps: int = 2000
    u: dict | None = None


@dataclass
class TransformConfig:
    triplet: dict


COMMANDS = {
    "exponent": ExponentConfig,
    "domain-check": DomainConfig,
    "metric": MetricConfig,
    "bound": BoundConfig,
    "simulate-ou": SimulateOUConfig,
    "certify-ap": CertifyConfig,
    "clt": CLTConfig,
    "triplet-transform": TransformConfig,
}


@dataclass
class ExperimentConfig:
    command: str
    params: object
    seed: int = 0
    threads: int = 1
    out_dir: str = "out"
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def load_config(path, command: str) -> ExperimentConfig:
    """Parse a YAML file of the form {seed?, threads?, out_dir?, <command params>}."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return parse_config(raw or {}, command, path.parent)


def parse_config(raw, command: str, base_dir=Path(".")) -> ExperimentConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = dict(raw)
    if "command" in raw and raw.pop("command") != command:
        raise ConfigError("config is for a different command")
    top = {k: raw.pop(k) for k in ("seed", "threads", "out_dir") if k in raw}
    params = from_mapping(COMMANDS[command], raw, command)
    cfg = ExperimentConfig(command, params, base_dir=Path(base_dir), raw={**raw, **top})
    if "seed" in top:
        cfg.seed = _coerce(top["seed"], int, "seed")
    if "threads" in top:
        cfg.threads = _coerce(top["threads"], int, "threads")
    if "out_dir" in top:
        cfg.out_dir = _coerce(top["out_dir"], str, "out_dir")
    if cfg.seed < 0 or cfg.threads < 1:
        raise ConfigError("seed must be >= 0 and threads >= 1")
    return cfg
