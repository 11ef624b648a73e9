"""Cross-entropy loss on output spike counts and the Adam optimizer."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def softmax(a):
    """Stable softmax along the last axis (counts can reach the spike cap)."""
    a = np.asarray(a, dtype=np.float64)
    shifted = a - a.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(y_index, n_classes):
    """One-hot row for a class index."""
    if not 0 <= y_index < n_classes:
        raise DomainError(f"label {y_index} out of range [0, {n_classes})")
    out = np.zeros(n_classes)
    out[y_index] = 1.0
    return out


def cross_entropy(a_out, y_index):
    """Loss for one sample: log-sum-exp of the counts minus the true-class count."""
    a = np.asarray(a_out, dtype=np.float64)
    if not 0 <= y_index < a.shape[-1]:
        raise DomainError(f"label {y_index} out of range [0, {a.shape[-1]})")
    m = a.max()
    return float(m + np.log(np.exp(a - m).sum()) - a[y_index])


def mean_cross_entropy(a_out, y_indices):
    """Batch-mean loss for (N, classes) counts and (N,) integer labels."""
    a = np.asarray(a_out, dtype=np.float64)
    y = np.asarray(y_indices)
    if y.size and (y.min() < 0 or y.max() >= a.shape[1]):
        raise DomainError(f"labels outside [0, {a.shape[1]})")
    m = a.max(axis=1)
    lse = m + np.log(np.exp(a - m[:, None]).sum(axis=1))
    return float((lse - a[np.arange(len(y)), y]).mean())


def loss_grad(a_out, y_onehot):
    """Derivative of cross-entropy w.r.t. the counts: softmax(a) - y."""
    return softmax(a_out) - np.asarray(y_onehot, dtype=np.float64)


@dataclass
class AdamState:
    """First/second moment estimates mirroring the parameter structure."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def init_adam(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Zeroed optimizer state for a ParamSet."""
    zeros = lambda lp: None if lp is None else (np.zeros_like(lp.w), np.zeros_like(lp.b))
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps,
                     m=[zeros(lp) for lp in params.layers],
                     v=[zeros(lp) for lp in params.layers])


def adam_step(params, grads, state):
    """One bias-corrected Adam update, applied in place. Returns (params, state)."""
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for i, lp in params.parameterized():
        gp = grads.layers[i]
        for attr, k in (("w", 0), ("b", 1)):
            g = getattr(gp, attr)
            m, v = state.m[i][k], state.v[i][k]
            m[...] = state.beta1 * m + (1.0 - state.beta1) * g
            v[...] = state.beta2 * v + (1.0 - state.beta2) * (g * g)
            getattr(lp, attr)[...] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state
