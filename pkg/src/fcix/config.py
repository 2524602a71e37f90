"""Run configuration: flat ``key = value`` files with command-line overrides.

Keys are dotted (``decomposition.tol = 1e-10``). Precedence is
command-line flag > config file > built-in default. Every value is checked
against the preconditions of the stage that consumes it when the config is
built, so a bad value fails before any computation starts.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, get_type_hints

from .errors import ConfigError


@dataclass(frozen=True)
class DecompositionOptions:
    tol: float = 1e-10
    max_iters: int = 500
    seed: int = 0

    def validate(self):
        _check(self.tol > 0, "decomposition.tol must be > 0")
        _check(self.max_iters >= 1, "decomposition.max_iters must be >= 1")


@dataclass(frozen=True)
class SegmentationOptions:
    k_star: int = 3
    gamma: str = "auto"
    min_size: int = 2

    def validate(self):
        _check(self.k_star >= 1, "segmentation.k_star must be >= 1")
        _check(self.min_size >= 1, "segmentation.min_size must be >= 1")
        if self.gamma != "auto":
            try:
                g = float(self.gamma)
            except ValueError:
                raise ConfigError("segmentation.gamma must be 'auto' or a positive number") from None
            _check(g > 0, "segmentation.gamma must be > 0")

    @property
    def gamma_value(self) -> float | None:
        return None if self.gamma == "auto" else float(self.gamma)


@dataclass(frozen=True)
class EntropyOptions:
    m: int = 2
    r_frac: float = 0.2
    bins: int = 3
    order: int = 1
    n_shuffles: int = 99
    seed: int = 0
    log_base: float = 2.718281828459045

    def validate(self):
        _check(self.m >= 1, "entropy.m must be >= 1")
        _check(self.r_frac > 0, "entropy.r_frac must be > 0")
        _check(self.bins >= 2, "entropy.bins must be >= 2")
        _check(self.order >= 1, "entropy.order must be >= 1")
        _check(self.n_shuffles == 0 or self.n_shuffles >= 99, "entropy.n_shuffles must be 0 or >= 99")
        _check(self.log_base > 1, "entropy.log_base must be > 1")


@dataclass(frozen=True)
class WhittleOptions:
    exponent: float = 0.65

    def validate(self):
        _check(0 < self.exponent < 1, "whittle.exponent must be in (0, 1)")


@dataclass(frozen=True)
class VarOptions:
    p: int = 1
    horizon: int = 20

    def validate(self):
        _check(self.p >= 1, "var.p must be >= 1")
        _check(self.horizon >= 1, "var.horizon must be >= 1")


@dataclass(frozen=True)
class DynamicsOptions:
    params: str = "computed"
    alpha: float = 0.005
    beta: float = 0.022
    gamma: float = 0.678
    delta: float = 1.671
    theta: float = 0.160

    def validate(self):
        _check(self.params in ("computed", "explicit"), "dynamics.params must be 'computed' or 'explicit'")


@dataclass(frozen=True)
class EquilibriumOptions:
    beta: str = "1.0,-1.199"
    rho: float = 0.598

    def validate(self):
        _check(len(self.beta_vector) == 2, "equilibrium.beta must hold two comma-separated numbers")

    @property
    def beta_vector(self) -> list[float]:
        try:
            return [float(v) for v in self.beta.split(",")]
        except ValueError:
            raise ConfigError("equilibrium.beta must hold comma-separated numbers") from None


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    output: str = "fcix-out"
    delimiter: str = ","
    drop_incomplete: bool = False
    lag: int = 1
    aggregation: str = "monthly"
    acf_max_lag: int = 40
    xcf_max_lag: int = 20
    decomposition: DecompositionOptions = field(default_factory=DecompositionOptions)
    segmentation: SegmentationOptions = field(default_factory=SegmentationOptions)
    entropy: EntropyOptions = field(default_factory=EntropyOptions)
    whittle: WhittleOptions = field(default_factory=WhittleOptions)
    var: VarOptions = field(default_factory=VarOptions)
    dynamics: DynamicsOptions = field(default_factory=DynamicsOptions)
    equilibrium: EquilibriumOptions = field(default_factory=EquilibriumOptions)

    def validate(self):
        _check(self.lag >= 1, "lag must be >= 1")
        _check(self.aggregation in ("daily", "monthly", "quarterly"),
               "aggregation must be daily, monthly or quarterly")
        _check(len(self.delimiter) == 1, "delimiter must be a single character")
        _check(self.acf_max_lag >= 1 and self.xcf_max_lag >= 1, "acf/xcf max lags must be >= 1")
        for f in dataclasses.fields(self):
            section = getattr(self, f.name)
            if dataclasses.is_dataclass(section):
                section.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check(ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(message)


def _coerce(raw: Any, target: type, key: str):
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if target is bool:
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if target is int:
            return int(raw)
        if target is float:
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {raw!r} as {target.__name__}") from None


def _field_type(owner: type, name: str) -> type:
    # annotations are strings under postponed evaluation; resolve them
    t = get_type_hints(owner).get(name)
    return t if t in (int, float, bool) else str


def build_config(values: Mapping[str, Any]) -> RunConfig:
    """Build a validated config from dotted keys; unknown keys are rejected."""
    top: dict[str, Any] = {}
    sections: dict[str, dict[str, Any]] = {}
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    for key, raw in values.items():
        head, _, rest = key.partition(".")
        f = fields.get(head)
        if f is None:
            raise ConfigError(f"unknown config key {key!r}")
        if rest:
            section_type = f.default_factory  # type: ignore[misc]
            if section_type is dataclasses.MISSING:
                raise ConfigError(f"{head} is not a section")
            sub = {g.name: g for g in dataclasses.fields(section_type)}
            if rest not in sub:
                raise ConfigError(f"unknown config key {key!r}")
            sections.setdefault(head, {})[rest] = _coerce(raw, _field_type(section_type, rest), key)
        else:
            if f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
                raise ConfigError(f"{key} is a section; set {key}.<option>")
            top[head] = _coerce(raw, _field_type(RunConfig, head), key)
    for head, opts in sections.items():
        top[head] = fields[head].default_factory(**opts)  # type: ignore[misc]
    return RunConfig(**top).validate()


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case
    try:
        parser.read_string("[run]\n" + path.read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["run"])


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    values: dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(values)
