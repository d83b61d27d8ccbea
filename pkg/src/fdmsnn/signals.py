"""Analog waveforms and the FDM read path: alpha kernel, write pulse, read burst,
high-pass filter cascade and envelope detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class AlphaParams:
    tau1: float = 2e-3
    tau2: float = 10e-3
    v0: float = 10e-12

    def __post_init__(self):
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("alpha time constants must be positive")
        if self.tau1 == self.tau2:
            raise ValueError("alpha time constants must differ")

    @property
    def t_peak(self) -> float:
        return math.log(self.tau2 / self.tau1) / (1.0 / self.tau1 - 1.0 / self.tau2)


@dataclass(frozen=True)
class WritePulseParams:
    """Spike-triggered write waveform.

    ``smooth_onset`` replaces the first quarter period with a raised-cosine blend
    from the value the generator held when it was (re)triggered. With a fresh
    start that value is 0 and the onset becomes ``amplitude*sin^2``, which is
    C1-continuous and keeps the write spectrum out of the read band.
    """

    amplitude: float = 0.5
    t_w: float = 2e-3
    tau_tail: float = 15e-3
    smooth_onset: bool = True

    def __post_init__(self):
        if self.amplitude <= 0 or self.t_w <= 0 or self.tau_tail <= 0:
            raise ValueError("write pulse amplitude, T_w and tau_tail must be positive")


@dataclass(frozen=True)
class ReadBurstParams:
    amplitude: float = 0.1
    period: float = 1e-4
    duration: float = 2.5e-3
    global_phase: bool = True

    def __post_init__(self):
        if self.amplitude <= 0 or self.period <= 0:
            raise ValueError("read amplitude and period must be positive")
        if self.duration < self.period:
            raise ValueError("read duration must cover at least one period")

    def check_device(self, v_tp: float, v_tn: float) -> None:
        if not (self.amplitude < abs(v_tp) and self.amplitude < abs(v_tn)):
            raise ValueError(
                f"read amplitude {self.amplitude} V must stay below the device thresholds"
            )


@dataclass(frozen=True)
class HpfParams:
    omega_3db: float = 2 * math.pi * 1e4
    order: int = 8
    bypass: bool = False

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("filter order must be >= 1")
        if self.omega_3db <= 0:
            raise ValueError("filter cutoff must be positive")

    @property
    def omega_stage(self) -> float:
        return self.omega_3db * math.sqrt(2.0 ** (1.0 / self.order) - 1.0)


def alpha_response(t, p: AlphaParams = AlphaParams()):
    t = np.asarray(t, dtype=float)
    ts = np.maximum(t, 0.0)
    out = p.v0 * np.abs(np.exp(-ts / p.tau1) - np.exp(-ts / p.tau2))
    out = np.where(t < 0, 0.0, out)
    return out if out.ndim else float(out)


def write_pulse(t, p: WritePulseParams = WritePulseParams(), v_start: float = 0.0):
    """Write pulse at time ``t`` after its (re)start.

    ``v_start`` is the generator output at the restart instant; it only matters
    with ``smooth_onset``.
    """
    t = np.asarray(t, dtype=float)
    a, tw = p.amplitude, p.t_w
    w = 2 * math.pi / tw
    ts = np.maximum(t, 0.0)
    body = a * np.sin(w * ts)
    tail = -a * np.exp(-np.maximum(ts - 0.75 * tw, 0.0) / p.tau_tail)
    out = np.where(ts < 0.75 * tw, body, tail)
    if p.smooth_onset:
        c = np.cos(w * ts)
        s = np.sin(w * ts)
        out = np.where(ts < 0.25 * tw, v_start * c * c + a * s * s, out)
    out = np.where(t < 0, 0.0, out)
    return out if out.ndim else float(out)


def read_burst(t, t_spike: float, p: ReadBurstParams = ReadBurstParams()):
    t = np.asarray(t, dtype=float)
    phase_t = t if p.global_phase else t - t_spike
    gate = (t >= t_spike) & (t < t_spike + p.duration)
    out = np.where(gate, p.amplitude * np.sin(2 * math.pi * phase_t / p.period), 0.0)
    return out if out.ndim else float(out)


def hpf_magnitude(omega, p: HpfParams = HpfParams()):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    if p.bypass:
        out = np.ones_like(omega)
    else:
        ws = p.omega_stage
        out = (omega / np.sqrt(omega**2 + ws**2)) ** p.order
    return out if out.ndim else float(out)


def hpf_coefficients(p: HpfParams, dt: float) -> tuple[float, float]:
    """Ramp-invariant discretisation of one first-order section ``s/(s + w)``.

    Returns ``(a, c)`` for ``y[n] = a*y[n-1] + c*(x[n] - x[n-1])``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    wd = p.omega_stage * dt
    a = math.exp(-wd)
    return a, (1.0 - a) / wd


@dataclass
class HpfState:
    x_prev: np.ndarray
    y: np.ndarray

    @classmethod
    def zeros(cls, order: int) -> "HpfState":
        return cls(np.zeros(order), np.zeros(order))


def hpf_step(state: HpfState, x: float, dt: float, p: HpfParams = HpfParams()):
    """Advance the cascade by one sample. Returns ``(state, y)``; ``state`` is
    updated in place."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if p.bypass:
        return state, float(x)
    a, c = hpf_coefficients(p, dt)
    v = float(x)
    for k in range(p.order):
        yk = a * state.y[k] + c * (v - state.x_prev[k])
        state.x_prev[k] = v
        state.y[k] = yk
        v = yk
    return state, v


def hpf_filter(x, dt: float, p: HpfParams = HpfParams()) -> np.ndarray:
    """Filter a whole sampled record from rest (vectorised ``hpf_step``)."""
    from scipy.signal import lfilter

    x = np.asarray(x, dtype=float)
    if p.bypass:
        return x.copy()
    a, c = hpf_coefficients(p, dt)
    y = x
    for _ in range(p.order):
        y = lfilter([c, -c], [1.0, -a], y)
    return y


@dataclass
class SignalTrace:
    t0: float
    dt: float
    values: np.ndarray
    unit: str = "V"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * len(self.values)

    def to_csv(self, path: str | Path, decimate: int = 1) -> None:
        data = np.column_stack([self.times, self.values])[:: max(1, decimate)]
        np.savetxt(path, data, delimiter=",", header="time_s,value", comments="", fmt="%.9g")


def envelope_extract(trace: SignalTrace, window: tuple[float, float]) -> float:
    t0, t1 = window
    t = trace.times
    sel = (t >= t0) & (t < t1)
    if not np.any(sel):
        raise ValueError(f"empty envelope window [{t0}, {t1})")
    return float(np.max(np.abs(trace.values[sel])))
