"""Run configuration: one YAML file, strict schema, dotted-path overrides.

Every knob the pipeline exposes lives here with its default.  Loading
rejects unknown keys outright instead of silently ignoring typos, and a
resolved config has a stable fingerprint (sha256 of its canonical JSON)
that every output artifact records.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace

import yaml

from .errors import ConfigError
from .net import TrainConfig
from .objective import ObjectiveParams
from .optimizer import DescentParams


@dataclass(frozen=True)
class WorldConfig:
    count: int = 250
    test_count: int = 50  # of `count`, how many worlds go to the test split
    shape: tuple = (64, 64)
    voxel_size: float = 1.0 / 64.0
    frequency: float = 4.0
    threshold: float = 0.4
    filter_samples: int = 1000
    filter_min_feasible: int = 200


@dataclass(frozen=True)
class ObjectiveConfig:
    lam: float = 0.01
    eps: float = 0.03125
    self_weight: float = 1.0
    include_self: bool = True

    def params(self, n_sub=None) -> ObjectiveParams:
        return ObjectiveParams(lam=self.lam, eps=self.eps, n_sub=n_sub,
                               include_self=self.include_self,
                               self_weight=self.self_weight)


@dataclass(frozen=True)
class DescentConfig:
    alpha: float = 0.005
    max_iters: int = 120
    converge_tol: float = 1e-5
    n_sub: int | None = None

    def params(self, **overrides) -> DescentParams:
        base = DescentParams(alpha=self.alpha, max_iters=self.max_iters,
                             converge_tol=self.converge_tol, n_sub=self.n_sub)
        return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class LabelConfig:
    n_starts: int = 100
    stop_after_feasible: int | None = 4
    descent: DescentConfig = field(default_factory=lambda: DescentConfig(
        max_iters=150, n_sub=6))


@dataclass(frozen=True)
class DataConfig:
    n_train: int = 2200
    n_test: int = 250
    temporal_augment: bool = True
    rotations: tuple = (1, 2, 3)
    candidates_per_round: int = 16


@dataclass(frozen=True)
class BpsConfig:
    count: int = 256


@dataclass(frozen=True)
class NetConfig:
    blocks: tuple = ((512, 256), (256, 128), (128, 64))
    activation: str = "tanh"
    init_seed: int = 0


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 150
    optimizer: str = "adam"
    shuffle_seed: int = 0
    lr_final_fraction: float = 1.0

    def params(self, epochs=None) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate,
                           batch_size=self.batch_size,
                           epochs=self.epochs if epochs is None else epochs,
                           optimizer=self.optimizer,
                           shuffle_seed=self.shuffle_seed,
                           lr_final_fraction=self.lr_final_fraction)


@dataclass(frozen=True)
class RoundsConfig:
    clean_rounds: int = 3
    boost_beta: float = 3.0
    use_boost: bool = True
    extend_budget: int = 100
    extend_scan_cap: int = 1200
    retrain_epochs: int = 150


@dataclass(frozen=True)
class BenchConfig:
    n_starts: int = 100
    max_iters: int = 50


@dataclass(frozen=True)
class Config:
    seed: int = 0
    robot: str = "sphere2"
    n_t: int = 20
    world: WorldConfig = field(default_factory=WorldConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    descent: DescentConfig = field(default_factory=DescentConfig)
    label: LabelConfig = field(default_factory=LabelConfig)
    data: DataConfig = field(default_factory=DataConfig)
    bps: BpsConfig = field(default_factory=BpsConfig)
    net: NetConfig = field(default_factory=NetConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    rounds: RoundsConfig = field(default_factory=RoundsConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)


def _coerce(value, target, path):
    """Best-effort scalar/sequence coercion with clear errors."""
    if value is None:
        return None
    if isinstance(target, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{path}: expected a boolean, got {value!r}")
    if isinstance(target, int) and not isinstance(target, bool):
        if isinstance(value, int):
            return value
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if isinstance(target, float):
        if isinstance(value, (int, float)):
            return float(value)
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if isinstance(target, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    if isinstance(target, tuple):
        if isinstance(value, (list, tuple)):
            return tuple(tuple(v) if isinstance(v, (list, tuple)) else v for v in value)
        raise ConfigError(f"{path}: expected a list, got {value!r}")
    return value


def _from_dict(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {data!r}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {sorted(unknown)}")
    kwargs = {}
    template = cls()
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        current = getattr(template, name)
        if is_dataclass(current):
            kwargs[name] = _from_dict(type(current), value, sub)
        else:
            kwargs[name] = _coerce(value, current, sub)
    return cls(**kwargs)


def load_config(path: str | None = None, overrides: list[str] | None = None) -> Config:
    """Config from an optional YAML file plus `a.b.c=value` override strings."""
    data: dict = {}
    if path is not None:
        with open(path, "r") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config file must be a mapping")
        data = loaded
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key.path=value")
        key, _, raw = item.partition("=")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r}: {exc}") from exc
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} conflicts with file value")
        node[parts[-1]] = value
    return _from_dict(Config, data, "")


def fingerprint(config: Config) -> str:
    blob = json.dumps(asdict(config), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
