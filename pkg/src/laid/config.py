"""Run configuration: flat ``key = value`` files with CLI overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .attacks import AttackKind
from .errors import ConfigError, ParameterError
from .selection import EfficiencyWeights

ALL_ATTACKS = tuple(k.value for k in AttackKind)


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "runs/default"
    # pre-built spatial caches; when unset, a synthetic dataset is generated
    train_cache: str | None = None
    val_cache: str | None = None
    test_cache: str | None = None
    synth_per_class: int = 2000
    synth_val_per_class: int = 500
    synth_test_per_class: int = 500
    image_size: int = 64
    attacks: tuple[str, ...] = ALL_ATTACKS
    epochs: int = 100
    batch: int = 32
    lr: float = 1e-4
    lambdas: tuple[float, float, float] = (0.5, 0.25, 0.25)
    fusion_clean: bool = False
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self) -> "RunConfig":
        if not 1 <= self.epochs <= 100:
            raise ConfigError(f"epochs must be in [1, 100], got {self.epochs}")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.lr < 0:
            raise ConfigError("lr must be non-negative")
        if self.image_size < 8 or self.image_size % 2:
            raise ConfigError("image_size must be an even number >= 8")
        try:
            EfficiencyWeights(*self.lambdas)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        for kind in self.attacks:
            if kind not in ALL_ATTACKS:
                raise ConfigError(f"unknown attack {kind!r}; choose from {ALL_ATTACKS}")
        given = [self.train_cache, self.val_cache, self.test_cache]
        if any(given) and not all(given):
            raise ConfigError("train_cache, val_cache and test_cache must be given together")
        for path in filter(None, given):
            if not Path(path).is_file():
                raise ConfigError(f"dataset path {path} does not exist")
        if not any(given) and min(self.synth_per_class, self.synth_val_per_class,
                                  self.synth_test_per_class) < 1:
            raise ConfigError("synthetic split sizes must be positive")
        return self

    def update(self, values: dict) -> "RunConfig":
        """Apply string or typed overrides; ``None`` values are skipped."""
        known = {f.name: f for f in fields(self)}
        for key, raw in values.items():
            if raw is None:
                continue
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lambdas"
            if key not in known or key == "extra":
                raise ConfigError(f"unknown config key {key!r}")
            setattr(self, key, _coerce(key, raw))
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(raw, list) else raw
    raw = raw.strip()
    try:
        if key in ("seed", "synth_per_class", "synth_val_per_class", "synth_test_per_class",
                   "image_size", "epochs", "batch"):
            return int(raw, 0)
        if key == "lr":
            return float(raw)
        if key == "lambdas":
            vals = tuple(float(v) for v in raw.split(","))
            if len(vals) != 3:
                raise ValueError("expected three weights")
            return vals
        if key == "attacks":
            return tuple(a.strip() for a in raw.split(",") if a.strip())
        if key == "fusion_clean":
            return raw.lower() in ("1", "true", "yes", "on")
        if key in ("train_cache", "val_cache", "test_cache"):
            return raw or None
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return raw


def load_config(path) -> RunConfig:
    """Read a flat ``key = value`` file (``#`` comments allowed)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig().update(dict(parser["run"]))
