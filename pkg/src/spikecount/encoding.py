"""Input encoding: feature scaling and conversion to spike trains or counts.

Two input paths feed the network: a stochastic Bernoulli-per-step spike train
whose firing probability equals the normalized feature value (value 1.0
saturates at one spike per step), or a deterministic count equal to the value
scaled by the maximum count.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SpikeTrain:
    """Binary spike occupancy, time-major: spikes[t, ...] is step t."""

    spikes: np.ndarray

    @property
    def steps(self):
        return self.spikes.shape[0]


def normalize_features(raw, per_feature_min, per_feature_max):
    """Scale features into [0,1] using per-feature extrema from the training split.

    Values beyond the extrema clamp to the boundary; a degenerate feature
    (max == min) maps to 0.
    """
    raw = np.asarray(raw, dtype=np.float64)
    lo = np.asarray(per_feature_min, dtype=np.float64)
    span = np.asarray(per_feature_max, dtype=np.float64) - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (raw - lo) / safe, 0.0)
    return np.clip(out, 0.0, 1.0)


def _check_unit_range(values, op):
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise DomainError(f"{op} expects values in [0,1], got range "
                          f"[{values.min()}, {values.max()}]")


def poisson_encode(values, cfg, seed):
    """Draw a spike train with per-step firing probability equal to each value.

    values: array in [0,1]. seed: int or tuple of non-negative ints. The
    expected spike count is value * cfg.steps; equal seeds give identical trains.
    """
    values = np.asarray(values, dtype=np.float64)
    _check_unit_range(values, "poisson_encode")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    draws = rng.random((cfg.steps,) + values.shape)
    return SpikeTrain(spikes=(draws < values).astype(np.uint8))


def intensity_to_counts(values, cfg):
    """Deterministic input counts: value scaled by the maximum count (not rounded)."""
    values = np.asarray(values, dtype=np.float64)
    _check_unit_range(values, "intensity_to_counts")
    return values * float(cfg.steps)
