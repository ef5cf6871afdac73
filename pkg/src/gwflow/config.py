"""Experiment configuration: strict parsing, validation and normalization.

Configs are YAML key/value documents with nested sections.  Unknown keys are
rejected (never ignored) with their full paths; range violations name the
offending field.  serialize(parse(text)) is idempotent after the first
normalization pass.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field

import yaml

KINDS = ("simulate", "hydro", "equilibrium", "pde", "lis-bound", "axioms")


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


_COMMON = {"kind", "seed", "out_dir", "threads"}
_SCHEMA = {
    "simulate": _COMMON | {"torus", "rho", "T", "snapshots"},
    "hydro": _COMMON | {"torus", "profile", "n_list", "T", "R", "seeds",
                        "sample_grid"},
    "equilibrium": _COMMON | {"torus", "rho", "t_burn", "T", "replicas",
                              "r_list", "kernel"},
    "pde": _COMMON | {"profile", "T", "grid", "cfl"},
    "lis-bound": _COMMON | {"area", "k_max", "replicas"},
    "axioms": _COMMON | {"torus", "T", "trials", "rho"},
}
_PROFILE_KEYS = {"affine", "affine_sinusoid", "wedge"}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 1
    out_dir: str = "out"
    threads: int = 1
    torus: tuple | None = None
    rho: tuple | None = None
    T: float | None = None
    t_burn: float | None = None
    replicas: int | None = None
    n_list: list | None = None
    R: float | None = None
    r_list: list | None = None
    seeds: list | None = None
    sample_grid: tuple | None = None
    snapshots: int | None = None
    profile: dict | None = None
    grid: tuple | None = None
    cfl: float | None = None
    kernel: dict | None = None
    area: float | None = None
    k_max: int | None = None
    extras: dict = dc_field(default_factory=dict)


_DEFAULTS = {
    "simulate": {"torus": (20, 20), "rho": (0.0, -0.5), "T": 10.0, "snapshots": 8},
    "hydro": {"torus": (2, 2), "n_list": [10, 20, 40], "T": 1.0, "R": 1.0,
              "seeds": [1, 2], "sample_grid": (33, 33, 9),
              "profile": {"affine": {"rho1": 0.0, "rho2": -0.5}}},
    "equilibrium": {"torus": (50, 50), "rho": (0.0, -0.5), "t_burn": 100.0,
                    "T": 40.0, "replicas": 100, "r_list": [4, 8, 16, 32]},
    "pde": {"T": 0.5, "grid": (64, 64, 4.0, 4.0), "cfl": 0.4,
            "profile": {"affine": {"rho1": 0.0, "rho2": -0.5}}},
    "lis-bound": {"area": 1.0, "k_max": 15, "replicas": 100000},
    "axioms": {"torus": (16, 16), "T": 4.0, "trials": 20, "rho": (0.25, -0.5)},
}


def parse_config(text: str) -> ExperimentConfig:
    """Validated config with documented defaults, or ConfigError listing paths."""
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])

    errors = []
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError([f"kind: must be one of {KINDS}, got {kind!r}"])
    allowed = _SCHEMA[kind]
    for key in raw:
        if key not in allowed:
            errors.append(f"{key}: unknown key for kind={kind}")

    merged = dict(_DEFAULTS[kind])
    merged.update({k: v for k, v in raw.items() if k != "kind"})
    cfg = ExperimentConfig(kind=kind)
    for k, v in merged.items():
        setattr(cfg, k, _normalize(k, v))

    errors += _validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def _normalize(key, v):
    if key in ("torus", "sample_grid", "grid", "rho") and isinstance(v, (list, tuple)):
        return tuple(v)
    if key in ("n_list", "seeds", "r_list") and isinstance(v, (list, tuple)):
        return list(v)
    return v


def _validate(cfg: ExperimentConfig):
    errors = []
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        errors.append("seed: must be a nonnegative integer")
    if cfg.threads is not None and (not isinstance(cfg.threads, int) or cfg.threads < 1):
        errors.append("threads: must be a positive integer")
    if cfg.rho is not None:
        if len(cfg.rho) != 2:
            errors.append("rho: needs two components")
        elif not (-1.0 <= cfg.rho[1] <= 0.0):
            errors.append(f"rho.rho2: must lie in [-1, 0], got {cfg.rho[1]}")
    if cfg.torus is not None:
        if len(cfg.torus) != 2 or any(int(v) <= 0 for v in cfg.torus):
            errors.append("torus: needs two positive integers (M, N)")
    if cfg.T is not None and cfg.T < 0:
        errors.append("T: must be nonnegative")
    if cfg.t_burn is not None and cfg.t_burn < 0:
        errors.append("t_burn: must be nonnegative")
    if cfg.replicas is not None and cfg.replicas < 1:
        errors.append("replicas: must be >= 1")
    if cfg.n_list is not None:
        if sorted(cfg.n_list) != list(cfg.n_list):
            errors.append("n_list: must be ascending")
        if any(n < 1 for n in cfg.n_list):
            errors.append("n_list: entries must be positive")
    if cfg.kind == "hydro" and cfg.torus and cfg.T is not None and cfg.R is not None:
        if cfg.torus[0] < cfg.R + cfg.T:
            errors.append("torus.M: must be >= R + T (speed-one light cone)")
    if cfg.profile is not None:
        keys = set(cfg.profile)
        if not keys or not keys <= _PROFILE_KEYS:
            errors.append(f"profile: expected one of {sorted(_PROFILE_KEYS)}")
    if cfg.cfl is not None and not (0.0 < cfg.cfl < 1.0):
        errors.append("cfl: must lie in (0, 1)")
    if cfg.k_max is not None and cfg.k_max < 1:
        errors.append("k_max: must be a positive integer")
    if cfg.area is not None and cfg.area < 0:
        errors.append("area: must be nonnegative")
    return errors


def serialize(cfg: ExperimentConfig) -> str:
    """Normalized YAML; stable key order so reserialization is idempotent."""
    out = {"kind": cfg.kind}
    for key in sorted(_SCHEMA[cfg.kind]):
        if key == "kind":
            continue
        v = getattr(cfg, key.replace("-", "_"), None)
        if v is not None:
            if isinstance(v, tuple):
                v = list(v)
            out[key] = v
    return yaml.safe_dump(out, sort_keys=True)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()


def build_profile(spec: dict):
    """Profile object from the config's profile section."""
    from .profiles import AffineProfile, AffineSinusoidProfile, PiecewiseLinearProfile

    if "affine" in spec:
        a = spec["affine"]
        return AffineProfile(a.get("rho1", 0.0), a.get("rho2", 0.0),
                             a.get("offset", 0.0))
    if "affine_sinusoid" in spec:
        a = spec["affine_sinusoid"]
        return AffineSinusoidProfile(a.get("rho1", 0.0), a.get("rho2", 0.0),
                                     a["amplitude"], a["wave_x"],
                                     a.get("wave_y", 0.0), a.get("phase", 0.0),
                                     a.get("offset", 0.0))
    if "wedge" in spec:
        a = spec["wedge"] or {}
        s1 = a.get("slope1", -0.25)
        s2 = a.get("slope2", -0.5)
        return PiecewiseLinearProfile(
            (AffineProfile(0.0, s1), AffineProfile(0.0, s2)), "max")
    raise ConfigError([f"profile: unsupported spec {sorted(spec)}"])
