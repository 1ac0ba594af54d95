"""Leaky integrate-and-fire neuron with spike-frequency adaptation.

The membrane relaxes toward rest with an exact exponential factor per step
(not an Euler approximation), synaptic impulses are voltage jumps applied
at step boundaries, and each spike increments a slow adaptation variable
``c`` that feeds back as a hyperpolarizing current ``g_c * c``:

    v <- v_rest + (v - v_rest) * exp(-dt/tau_m)
         - g_c * c * tau_m * (1 - exp(-dt/tau_m))
         + summed impulse
    c <- c * exp(-dt/tau_c)          (+ alpha_c on spike)

On threshold crossing the membrane resets and holds at ``v_reset`` for an
absolute refractory period, discarding impulses.

``advance_neuron`` is the scalar reference; the engine advances whole
arrays with the same precomputed constants and operation order, so the two
paths agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

# Pseudo source id for the aggregated external drive; sorts before every
# real neuron id so external impulses always enter the sum first.
EXTERNAL_SOURCE = -1


@dataclass(frozen=True)
class NeuronParams:
    """Membrane, adaptation, and synaptic-impulse parameters.

    Times in ms, potentials in mV.  The impulse sizes and external rate are
    calibration values: with the connectivity defaults they put the network
    in a fluctuation-driven regime a few Hz above silence (the inhibitory
    weight keeps the net recurrent coupling negative, preventing runaway).
    """

    tau_m: float = 20.0        # membrane time constant
    v_rest: float = 0.0        # resting potential
    theta: float = 20.0        # firing threshold
    v_reset: float = 10.0      # post-spike reset potential
    tau_arp: float = 2.0       # absolute refractory period
    tau_c: float = 300.0       # adaptation decay time constant
    alpha_c: float = 1.0       # adaptation increment per spike
    g_c: float = 0.01          # adaptation current, mV/ms per unit c
    j_exc: float = 0.2         # recurrent excitatory impulse
    j_inh: float = -1.4        # recurrent inhibitory impulse
    j_ext: float = 0.7         # external impulse
    nu_ext_hz: float = 3.0     # rate per external synapse

    def __post_init__(self):
        if self.tau_m <= 0 or self.tau_c <= 0 or self.tau_arp <= 0:
            raise ValueError("time constants must be positive")
        if not self.theta > self.v_rest:
            raise ValueError("theta must exceed v_rest")
        if not (self.j_inh <= 0.0 <= self.j_exc):
            raise ValueError("j_inh must be <= 0 and j_exc >= 0")
        if self.nu_ext_hz < 0:
            raise ValueError("nu_ext_hz must be >= 0")


@dataclass(frozen=True)
class NeuronState:
    v: float
    c: float = 0.0
    refractory_steps_left: int = 0


@dataclass(frozen=True)
class StepConstants:
    """Per-(params, dt) constants shared by the scalar and vector paths.

    Both paths must multiply/add in the same order; sharing the constants
    (rather than recomputing exponentials element-wise) is what makes them
    bit-identical.
    """

    decay_m: float
    k_adapt: float       # g_c * tau_m * (1 - decay_m)
    decay_c: float
    refractory_steps: int


@lru_cache(maxsize=64)
def step_constants(params: NeuronParams, dt: float) -> StepConstants:
    if dt <= 0:
        raise ValueError("dt must be positive")
    decay_m = math.exp(-dt / params.tau_m)
    return StepConstants(
        decay_m=decay_m,
        k_adapt=params.g_c * params.tau_m * (1.0 - decay_m),
        decay_c=math.exp(-dt / params.tau_c),
        refractory_steps=round(params.tau_arp / dt),
    )


def advance_neuron(
    state: NeuronState,
    summed_impulse: float,
    params: NeuronParams,
    dt: float,
) -> tuple[NeuronState, bool]:
    """Advance one neuron by one step; returns (new state, spiked).

    Refractory steps hold the membrane at v_reset and discard impulses.
    Deterministic: identical inputs give bit-identical outputs.
    """
    k = step_constants(params, dt)
    if state.refractory_steps_left > 0:
        return (
            NeuronState(
                v=params.v_reset,
                c=state.c,
                refractory_steps_left=state.refractory_steps_left - 1,
            ),
            False,
        )
    v = ((params.v_rest + (state.v - params.v_rest) * k.decay_m) - k.k_adapt * state.c) + summed_impulse
    c = state.c * k.decay_c
    if v >= params.theta:
        return (
            NeuronState(v=params.v_reset, c=c + params.alpha_c, refractory_steps_left=k.refractory_steps),
            True,
        )
    return (NeuronState(v=v, c=c, refractory_steps_left=0), False)


def summed_impulse(deliveries) -> float:
    """Left-to-right sum of (source id, weight) deliveries.

    Callers must pass deliveries sorted ascending by source id; the
    aggregated external drive uses the pseudo id ``EXTERNAL_SOURCE`` (-1),
    which precedes every real id, and carries weight
    ``arrival_count * j_ext`` as a single summand.  The fixed order makes
    the sum bit-identical for identical delivery multisets no matter how
    they arrived.
    """
    total = 0.0
    last = None
    for source, weight in deliveries:
        assert last is None or source >= last, "deliveries not sorted by source id"
        last = source
        total += weight
    return total
