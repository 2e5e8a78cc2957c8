"""Experiment configuration: one JSON document plus dotted CLI overrides."""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from ..baselines import WfConfig
from ..errors import InvalidArgumentError
from ..gauss_newton import SolverConfig
from ..spectral import PowerConfig

__all__ = ["ConfigError", "NoiseSpec", "ExperimentConfig", "COMMAND_DEFAULTS", "build_config",
           "apply_override", "config_hash"]


class ConfigError(InvalidArgumentError):
    pass


@dataclass
class NoiseSpec:
    kind: str = "none"      # none | gaussian | poisson
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "poisson"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ConfigError("noise.sigma must be non-negative")


@dataclass
class ExperimentConfig:
    n: int | None = None            # None: 128 for gaussian, 256 for cdp
    ensemble: str = "gaussian"      # gaussian | cdp
    ratio: float = 5.0              # m / n for the gaussian ensemble
    masks: int = 6                  # L for the cdp ensemble
    signal_norm: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    trials: int = 1
    seed: int = 0
    out: str = "results"
    workers: int = 1
    record_timing: bool = True
    algorithms: list = field(default_factory=lambda: ["gn", "wf"])
    solver: SolverConfig = field(default_factory=SolverConfig)
    wf: WfConfig = field(default_factory=WfConfig)
    success_threshold: float = 1e-5
    ensembles: list = field(default_factory=lambda: ["gaussian", "cdp"])
    ratios: list = field(default_factory=lambda: [2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0])
    mask_counts: list = field(default_factory=lambda: [2, 3, 4, 5, 6])
    cdp_n: int = 256
    snr_grid: list = field(default_factory=lambda: [20.0, 30.0, 40.0, 50.0, 60.0])
    poisson_norms: list = field(default_factory=lambda: [1.0, 4.0])
    k_max: int = 8
    loo_raw: bool = True
    c1_max: float = 10.0
    c2_max: float = 10.0
    lower_bound: float = 1.8
    upper_bound: float = 5.0
    image: str | None = None

    def __post_init__(self):
        if self.ensemble not in ("gaussian", "cdp"):
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be positive")
        if self.ratio <= 0 or self.masks < 1:
            raise ConfigError("ratio and masks must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.success_threshold <= 0:
            raise ConfigError("success_threshold must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        unknown = set(self.algorithms) - {"gn", "wf"}
        if unknown:
            raise ConfigError(f"unknown algorithms {sorted(unknown)}")

    @property
    def signal_length(self):
        if self.n is not None:
            return self.n
        return 256 if self.ensemble == "cdp" else 128

    def to_dict(self):
        return dataclasses.asdict(self)


COMMAND_DEFAULTS = {
    "convergence": {},
    "success-rate": {"trials": 100},
    "noise-sweep": {"trials": 20, "noise": {"kind": "gaussian"}},
    "loo": {"n": 32, "ratio": 8.0, "solver": {"inner_mode": "to_convergence"}},
    "bounds": {"n": 8, "ratio": 256.0, "trials": 100},
    "image": {"ensemble": "cdp", "masks": 8, "success_threshold": 1e-8, "solver": {"inner_max_iters": 5, "max_outer": 100}},
}

_NESTED = {"noise": NoiseSpec, "solver": SolverConfig, "wf": WfConfig}


def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict) and not isinstance(value, dict):
            raise ConfigError(f"config field {where!r} must be an object")
        if isinstance(base[key], dict):
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def _parse_value(text):
    try:
        return json.loads(text)
    except (json.JSONDecodeError, TypeError):
        return text


def apply_override(doc: dict, dotted: str, value) -> dict:
    """Set ``doc[a][b][c] = value`` for ``dotted = "a.b.c"``; strings are parsed as JSON when possible."""
    keys = dotted.split(".")
    update = _parse_value(value) if isinstance(value, str) else value
    for key in reversed(keys):
        update = {key: update}
    return _merge(doc, update)


def _from_dict(doc):
    try:
        kwargs = dict(doc)
        for key, cls in _NESTED.items():
            sub = dict(kwargs[key])
            if "power" in sub:
                sub["power"] = PowerConfig(**sub["power"])
            kwargs[key] = cls(**sub)
        return ExperimentConfig(**kwargs)
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def build_config(command="convergence", file_doc=None, overrides=(), seed=None, out=None):
    """Resolve defaults, command defaults, a JSON document, overrides and flags, in that order."""
    if command not in COMMAND_DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    doc = ExperimentConfig().to_dict()
    _merge(doc, copy.deepcopy(COMMAND_DEFAULTS[command]))
    if file_doc:
        _merge(doc, file_doc)
    for dotted, value in overrides:
        apply_override(doc, dotted, value)
    if seed is not None:
        doc["seed"] = int(seed)
    if out is not None:
        doc["out"] = str(out)
    return _from_dict(doc)


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of every field that can influence numeric output."""
    doc = cfg.to_dict()
    for key in ("out", "workers"):
        doc.pop(key)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
