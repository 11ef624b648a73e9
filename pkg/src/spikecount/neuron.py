"""Non-leaky integrate-and-fire neurons and the spike-count transfer function.

Two forward views of the same neuron are provided. The time-stepped view
integrates per-step input current into a membrane potential, emits a spike
whenever the potential reaches threshold, and resets by subtracting the
threshold. The aggregate view maps the total input current over the whole
simulation window directly to a spike count via `transfer`. For non-negative
per-step currents the two agree exactly; `transfer_grad` is the surrogate
derivative that makes the aggregate view trainable by backpropagation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError


@dataclass(frozen=True)
class NeuronConfig:
    """Firing threshold and simulation window.

    threshold: membrane potential a neuron must reach to spike (> 0).
    sim_time:  simulation window length in ms.
    dt:        step length in ms; sim_time must be an integer multiple of dt.
    """

    threshold: float = 1.0
    sim_time: float = 20.0
    dt: float = 1.0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValidationError(f"threshold must be positive, got {self.threshold}")
        if self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.sim_time <= 0:
            raise ValidationError(f"sim_time must be positive, got {self.sim_time}")
        ratio = self.sim_time / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValidationError(
                f"sim_time must be an integer multiple of dt, got {self.sim_time}/{self.dt}")

    @property
    def steps(self):
        """Number of simulation steps; also the maximum spike count (one per step)."""
        return int(round(self.sim_time / self.dt))


@dataclass
class NeuronState:
    """Per-neuron simulation state: potential, last step's spikes, running count."""

    v: np.ndarray
    spiked: np.ndarray
    count: np.ndarray


def init_state(b):
    """Fresh state with the membrane potential set to the learnable initial value b."""
    b = np.asarray(b, dtype=np.float64)
    return NeuronState(v=b.copy(), spiked=np.zeros_like(b), count=np.zeros_like(b))


def step(state, z_t, cfg):
    """Advance one time step given per-neuron input current z_t.

    The previous step's spikes are subtracted at threshold strength (reset by
    subtraction), the new current is integrated, and a spike is emitted where
    the potential reaches threshold (>= comparison).
    """
    v = state.v + z_t - cfg.threshold * state.spiked
    spikes = (v >= cfg.threshold).astype(np.float64)
    return NeuronState(v=v, spiked=spikes, count=state.count + spikes)


def simulate_counts(current_seq, b, cfg):
    """Run the full window over a (steps, ...) current sequence; return spike counts."""
    current_seq = np.asarray(current_seq, dtype=np.float64)
    if current_seq.shape[0] != cfg.steps:
        raise DimensionError(
            f"current sequence has {current_seq.shape[0]} rows, config expects {cfg.steps}")
    state = init_state(np.broadcast_to(np.asarray(b, dtype=np.float64),
                                       current_seq.shape[1:]))
    for t in range(cfg.steps):
        state = step(state, current_seq[t], cfg)
    return state.count


def transfer(z, cfg):
    """Spike count produced by total input current z over the simulation window.

    Integer-valued: floor(z/threshold) gated to zero for non-positive z and
    capped at cfg.steps, since a neuron can spike at most once per step.
    """
    z = np.asarray(z, dtype=np.float64)
    counts = np.where(z > 0, np.floor(z / cfg.threshold), 0.0)
    return np.minimum(counts, float(cfg.steps))


def relaxed_transfer(z, cfg):
    """Continuous stand-in for `transfer`: z/threshold where z > 0, else 0.

    Shares `transfer_grad` as its exact derivative almost everywhere, which is
    what makes end-to-end finite-difference checks of the backward pass possible.
    """
    z = np.asarray(z, dtype=np.float64)
    return np.where(z > 0, z / cfg.threshold, 0.0)


def transfer_grad(z, cfg):
    """Surrogate derivative of `transfer`: 1/threshold where z > 0, else 0."""
    z = np.asarray(z, dtype=np.float64)
    return np.where(z > 0, 1.0 / cfg.threshold, 0.0)


def count_spikes(train):
    """Sum a spike train over its time axis, one total per neuron."""
    spikes = getattr(train, "spikes", train)
    return np.asarray(spikes, dtype=np.float64).sum(axis=0)
