"""Scenario configuration: dataclasses plus JSON round-trip.

The on-disk format is nested JSON.  Parsing is strict: unknown keys, missing
blocks and out-of-range values raise ``ConfigError`` naming the offending
field, and a parsed config echoes back to JSON that parses to an equal
config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ADVECTION_MODES = ("mean-field", "pairwise")
ESTIMATOR_INITS = ("equilibrium", "warm", "self")
MODES = ("centralized", "decentralized")
REALIZATIONS = ("laplacian-of-integral", "integral-of-laplacian")
TARGET_KINDS = ("bimodal-von-mises", "monomodal-von-mises", "tracking-von-mises")
TOPOLOGY_KINDS = ("knn", "proximity", "complete")


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = "knn"
    k: int = 10
    eps: float = float(np.pi / 4)


@dataclass(frozen=True)
class TargetConfig:
    kind: str = "bimodal-von-mises"
    mu1: float = float(-np.pi / 2)
    mu2: float = float(np.pi / 2)
    kappa: float = 2.0


@dataclass(frozen=True)
class EstimatorConfig:
    alpha: float = 1.0
    sigma_p: float = 5.0
    sigma_i: float = 5.0
    init: str = "equilibrium"
    integral_realization: str = "integral-of-laplacian"


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 50
    mode: str = "decentralized"
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    target: TargetConfig = field(default_factory=TargetConfig)
    k_p: float = 1.0
    rho_floor: float | None = None  # None -> 1e-3 * n / (2 pi)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    h: float = 0.7
    interaction_length: float = float(np.pi / 4)
    grid_m: int = 256
    dt: float = 1e-3
    t_final: float = 5.0
    record_every: int = 25
    snapshot_every: int | None = None  # None -> initial and final only
    advection: str = "mean-field"
    include_boundary_term: bool = False
    centralized_estimator: bool = False
    pin_estimates: bool = False
    sweep_ks: tuple[int, ...] = (5, 10, 20)
    seed: int = 0  # reserved; the dynamics are deterministic

    def resolved_rho_floor(self) -> float:
        if self.rho_floor is not None:
            return self.rho_floor
        return 1e-3 * self.n / (2.0 * np.pi)

    def validate(self) -> "ScenarioConfig":
        def bad(name, msg):
            raise ConfigError(f"{name}: {msg}")

        if self.n < 1:
            bad("n", "must be a positive agent count")
        if self.mode not in MODES:
            bad("mode", f"must be one of {MODES}")
        if self.topology.kind not in TOPOLOGY_KINDS:
            bad("topology.kind", f"must be one of {TOPOLOGY_KINDS}")
        if self.topology.kind == "knn" and not 1 <= self.topology.k <= self.n - 1:
            bad("topology.k", f"must be in [1, {self.n - 1}]")
        if self.topology.kind == "proximity" and not self.topology.eps > 0:
            bad("topology.eps", "must be positive")
        if self.target.kind not in TARGET_KINDS:
            bad("target.kind", f"must be one of {TARGET_KINDS}")
        if not self.target.kappa > 0:
            bad("target.kappa", "must be positive")
        if not self.k_p > 0:
            bad("k_p", "must be positive")
        if self.rho_floor is not None and self.rho_floor < 0:
            bad("rho_floor", "must be nonnegative")
        for name in ("alpha", "sigma_p", "sigma_i"):
            if not getattr(self.estimator, name) > 0:
                bad(f"estimator.{name}", "must be positive")
        if self.estimator.init not in ESTIMATOR_INITS:
            bad("estimator.init", f"must be one of {ESTIMATOR_INITS}")
        if self.estimator.integral_realization not in REALIZATIONS:
            bad("estimator.integral_realization", f"must be one of {REALIZATIONS}")
        if not self.h > 0:
            bad("h", "must be positive")
        if not self.interaction_length > 0:
            bad("interaction_length", "must be positive")
        if self.grid_m < 4 or self.grid_m % 2:
            bad("grid_m", "must be an even integer >= 4")
        if not self.dt > 0:
            bad("dt", "must be positive")
        if self.t_final < 0:
            bad("t_final", "must be nonnegative")
        if self.record_every < 1:
            bad("record_every", "must be a positive stride")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            bad("snapshot_every", "must be a positive stride or omitted")
        if self.advection not in ADVECTION_MODES:
            bad("advection", f"must be one of {ADVECTION_MODES}")
        for k in self.sweep_ks:
            if not 1 <= k <= self.n - 1:
                bad("sweep_ks", f"every k must be in [1, {self.n - 1}]")
        return self


_BLOCK_TYPES = {"topology": TopologyConfig, "target": TargetConfig,
                "estimator": EstimatorConfig}


def _build_block(name: str, cls, raw: dict):
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object")
    fields = cls.__dataclass_fields__
    unknown = set(raw) - set(fields)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown key")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def config_from_dict(raw: dict, required: tuple[str, ...] = ("target",)) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    for name in required:
        if name not in raw:
            raise ConfigError(f"{name}: required block missing")
    fields = ScenarioConfig.__dataclass_fields__
    unknown = set(raw) - set(fields)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    kwargs = {}
    for name, value in raw.items():
        if name in _BLOCK_TYPES:
            kwargs[name] = _build_block(name, _BLOCK_TYPES[name], value)
        elif name == "sweep_ks":
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        cfg = ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for name in ScenarioConfig.__dataclass_fields__:
        value = getattr(cfg, name)
        if name in _BLOCK_TYPES:
            out[name] = {k: getattr(value, k) for k in type(value).__dataclass_fields__}
        elif name == "sweep_ks":
            out[name] = list(value)
        else:
            out[name] = value
    return out


def load_config(path, required: tuple[str, ...] = ("target",)) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw, required=required)


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
