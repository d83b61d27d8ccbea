"""Leaky integrate-and-fire neuron with threshold reset and refractory clamp."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LifParams:
    c: float = 300e-12
    g: float = 30e-9
    v_t: float = 0.09
    v_r: float = 0.0
    tau_ref: float = 0.0

    def __post_init__(self):
        if self.c <= 0 or self.g <= 0:
            raise ValueError("C and G must be positive")
        if self.v_t <= self.v_r:
            raise ValueError("V_T must exceed V_R")
        if self.tau_ref < 0:
            raise ValueError("tau_ref must be non-negative")

    @property
    def tau_m(self) -> float:
        return self.c / self.g

    @property
    def i_threshold(self) -> float:
        """Smallest constant current that eventually reaches V_T."""
        return self.g * (self.v_t - self.v_r)

    def period(self, i_in: float) -> float:
        """Closed-form inter-spike interval under constant current (inf if silent)."""
        v_inf = i_in / self.g
        if v_inf <= self.v_t:
            return math.inf
        return self.tau_m * math.log((v_inf - self.v_r) / (v_inf - self.v_t)) + self.tau_ref


INPUT_LIF = LifParams(tau_ref=5e-3)
OUTPUT_LIF = LifParams(tau_ref=0.0)


@dataclass
class NeuronState:
    v: float = 0.0
    refractory_until: float = -math.inf


def lif_step(state: NeuronState, i_in: float, dt: float, p: LifParams, t_now: float):
    """Advance one neuron by ``dt``. Returns a new ``(state, spiked)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_now < state.refractory_until:
        return NeuronState(p.v_r, state.refractory_until), False
    decay = math.exp(-dt * p.g / p.c)
    v = state.v * decay + (i_in / p.g) * (1.0 - decay)
    # a state already sitting on threshold fires regardless of this step's input
    if v >= p.v_t or state.v >= p.v_t:
        return NeuronState(p.v_r, t_now + p.tau_ref), True
    return NeuronState(v, state.refractory_until), False
