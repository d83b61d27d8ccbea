"""Experiment configuration: nested dataclasses, JSON round-trip and
``key.sub=value`` overrides. Unknown keys are rejected."""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .device import Hfo2Params, IdealRramParams
from .neuron import LifParams
from .signals import AlphaParams, HpfParams, ReadBurstParams


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class StdpParams:
    a_plus: float = 9.0
    a_minus: float = 15.0
    tau_plus: float = 10e-3
    tau_minus: float = 20e-3
    p: float = 1.7
    g_max: float = 700.0

    def __post_init__(self):
        if self.tau_plus <= 0 or self.tau_minus <= 0:
            raise ValueError("STDP time constants must be positive")
        if self.p < 0:
            raise ValueError("p must be non-negative")
        if self.g_max <= 0:
            raise ValueError("g_max must be positive")


@dataclass(frozen=True)
class WriteConfig:
    """Write-pulse generators. Tails decay ``tail_scale`` times slower than the
    STDP windows they implement (the pump integrates overdrive to the power ~1.5)."""

    amplitude: float = 0.5
    t_w: float = 2e-3
    tail_scale: float = 1.5
    smooth_onset: bool = True
    t_offset: float = 2.5e-3

    def __post_init__(self):
        if self.amplitude <= 0 or self.t_w <= 0 or self.tail_scale <= 0:
            raise ValueError("write amplitude, t_w and tail_scale must be positive")
        if self.t_offset < 0:
            raise ValueError("t_offset must be non-negative")


@dataclass(frozen=True)
class CircuitConfig:
    dt: float = 1e-5
    skip_periods: int = 0
    tail_periods: int = 3
    kappa: float | None = None
    calibrate_gains: bool = True
    calibration_lag: float = 10e-3

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.skip_periods < 0 or self.tail_periods < 0:
            raise ValueError("skip_periods and tail_periods must be non-negative")


@dataclass(frozen=True)
class ReferenceConfig:
    dt: float = 1e-4

    def __post_init__(self):
        if not 0 < self.dt <= 1e-4:
            raise ValueError("reference dt must be in (0, 0.1 ms]")


@dataclass(frozen=True)
class EncoderParams:
    fields: int = 4
    sigma: float = 0.2
    i_max: float = 4e-9

    def __post_init__(self):
        if self.fields < 1:
            raise ValueError("fields must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.i_max < 0:
            raise ValueError("i_max must be non-negative")

    @property
    def centers(self) -> tuple[float, ...]:
        m = self.fields
        return tuple((2 * i - 1) / (2 * m) for i in range(1, m + 1))


@dataclass(frozen=True)
class TrainingConfig:
    presentation: float = 0.1
    train_per_class: int = 15
    teacher_on: float = 3.0
    teacher_off: float = -3.0
    init_lo: float = 0.1
    init_hi: float = 0.3
    dataset: str | None = None

    def __post_init__(self):
        if self.presentation <= 0:
            raise ValueError("presentation must be positive")
        if self.train_per_class < 1:
            raise ValueError("train_per_class must be >= 1")
        if not 0 <= self.init_lo <= self.init_hi <= 1:
            raise ValueError("need 0 <= init_lo <= init_hi <= 1")


@dataclass(frozen=True)
class ValidationConfig:
    n_events: int = 200
    isi_min: float = 5e-3
    isi_max: float = 50e-3
    g_init: float = 0.5
    delta_ts: tuple[float, ...] = (-40e-3, -20e-3, -10e-3, -5e-3, -2e-3, 2e-3, 5e-3, 10e-3, 20e-3, 40e-3)
    max_read_error: float = 0.03
    max_stdp_mae: float = 0.05

    def __post_init__(self):
        if self.n_events < 1:
            raise ValueError("n_events must be positive")
        if not 0 < self.isi_min <= self.isi_max:
            raise ValueError("need 0 < isi_min <= isi_max")
        if not 0 <= self.g_init <= 1:
            raise ValueError("g_init is a fraction of G_max")


@dataclass(frozen=True)
class QuadraticConfig:
    v_ref: float = 0.3
    amplitudes: tuple[float, ...] = (0.01, 0.1, 0.3)
    epochs: int = 45
    hist_bin: float = 0.05

    def __post_init__(self):
        if self.v_ref <= 0:
            raise ValueError("v_ref must be positive")
        if not self.amplitudes:
            raise ValueError("amplitudes must not be empty")
        if any(a <= 0 for a in self.amplitudes):
            raise ValueError("amplitudes must be positive")


@dataclass(frozen=True)
class BodeConfig:
    f_min: float = 10.0
    f_max: float = 1e6
    n_points: int = 61
    dt: float | None = None

    def __post_init__(self):
        if not 0 < self.f_min < self.f_max:
            raise ValueError("need 0 < f_min < f_max")


def _hfo2_default() -> Hfo2Params:
    h = Hfo2Params()
    return dataclasses.replace(h, area_scale=700.0 / h.g_of(h.vc_max), p_sat=1.7)


@dataclass(frozen=True)
class ExperimentConfig:
    engine: str = "reference"
    device: str = "ideal"
    seed: int = 1
    epochs: int | None = None  # None: 20 for ideal devices, 45 otherwise
    out: str = "out"
    fast: bool = False
    alpha: AlphaParams = AlphaParams()
    lif_input: LifParams = LifParams(tau_ref=5e-3)
    lif_output: LifParams = LifParams(tau_ref=0.0)
    stdp: StdpParams = StdpParams()
    write: WriteConfig = WriteConfig()
    read: ReadBurstParams = ReadBurstParams()
    hpf: HpfParams = HpfParams()
    ideal: IdealRramParams = IdealRramParams(p_sat=1.7)
    hfo2: Hfo2Params = field(default_factory=_hfo2_default)
    quadratic: QuadraticConfig = QuadraticConfig()
    circuit: CircuitConfig = CircuitConfig()
    reference: ReferenceConfig = ReferenceConfig()
    encoder: EncoderParams = EncoderParams()
    training: TrainingConfig = TrainingConfig()
    validation: ValidationConfig = ValidationConfig()
    bode: BodeConfig = BodeConfig()

    def __post_init__(self):
        if self.engine not in ("reference", "circuit"):
            raise ValueError(f"engine must be 'reference' or 'circuit', got {self.engine!r}")
        if self.device not in ("ideal", "hfo2", "quadratic"):
            raise ValueError(f"unknown device {self.device!r}")
        if self.epochs is not None and self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        v_w = min(self.ideal.v_tp, -self.ideal.v_tn)
        if max(self.quadratic.amplitudes) >= v_w:
            raise ValueError(f"quadratic.amplitudes must stay below the write threshold {v_w} V")
        if self.circuit.dt > self.read.period / 10:
            raise ValueError("circuit.dt must resolve the read sinusoid (dt <= period/10)")

    @property
    def n_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return 20 if self.device == "ideal" else 45

    def to_dict(self) -> dict:
        return _to_plain(self)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=False)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _build(cls, data, "")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
        return cls.from_dict(data)

    def with_overrides(self, pairs: list[str] | dict[str, Any]) -> "ExperimentConfig":
        data = self.to_dict()
        items = pairs.items() if isinstance(pairs, dict) else (_split(p) for p in pairs)
        for key, value in items:
            _assign(data, key, value)
        return ExperimentConfig.from_dict(data)


def _split(pair: str) -> tuple[str, Any]:
    if "=" not in pair:
        raise ConfigError(f"override {pair!r} is not of the form key=value")
    key, raw = pair.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _assign(data: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for depth, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key {'.'.join(parts[: depth + 1])!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {key!r}")
    node[parts[-1]] = value


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(x) for x in obj]
    return obj


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"config key {prefix.rstrip('.') or '<root>'!r} must be an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config key {prefix + sorted(unknown)[0]!r}")
    kwargs = {}
    for name, value in data.items():
        kwargs[name] = _coerce(hints[name], value, prefix + name)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid value under {prefix.rstrip('.') or '<root>'!r}: {exc}") from exc


def _coerce(tp, value, key: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, key + ".")
    if origin is typing.Union or str(origin) == "types.UnionType":
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, key)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"config key {key!r} must be a list")
        return tuple(_coerce(args[0], v, key) for v in value)
    if tp is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"config key {key!r} must be true or false")
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"config key {key!r} must be an integer")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} must be a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"config key {key!r} must be a string")
        return value
    return value
