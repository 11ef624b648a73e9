"""Layer graph, aggregate forward pass, and the spike-count backward rules.

A network is a linear chain: input -> {dense | conv | avgpool}* ending in a
dense output layer. Dense and conv layers compute an aggregated input current
z = threshold * (weights . counts) + bias and emit counts a = transfer(z);
average pooling passes fractional means through untouched. The backward pass
propagates error signals through the same chain using the surrogate
derivative of the transfer function.

Architectures are written in compact text form: "4-20-3" is a 4-input MLP
with one hidden layer of 20 units and 3 outputs; "28x28-12c5-2a-64c5-2a-10"
is an image network where NcK is a convolution with N output channels and
KxK kernels and Na is NxN average pooling.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import neuron, tensor
from .errors import ConsistencyError, DimensionError, DomainError, ValidationError
from .optim import loss_grad
from .seeding import STREAM_INIT, derived_rng

INPUT, DENSE, CONV, AVGPOOL = "input", "dense", "conv", "avgpool"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the chain; unused fields stay at their zero values."""

    kind: str
    units: int = 0        # dense
    channels: int = 0     # conv output channels
    kernel: int = 0       # conv kernel size
    pool: int = 0         # avgpool window size
    shape: tuple = ()     # input layer only


def input_layer(shape):
    return LayerSpec(kind=INPUT, shape=tuple(int(s) for s in shape))


def dense(units):
    return LayerSpec(kind=DENSE, units=int(units))


def conv(channels, kernel):
    return LayerSpec(kind=CONV, channels=int(channels), kernel=int(kernel))


def avgpool(size=2):
    return LayerSpec(kind=AVGPOOL, pool=int(size))


def parse_structure(text):
    """Parse a compact architecture string into a list of LayerSpec."""
    tokens = text.strip().split("-")
    if len(tokens) < 2:
        raise ValidationError(f"structure needs at least input and output: {text!r}")
    layers = []
    first = tokens[0]
    if "x" in first:
        dims = tuple(int(d) for d in first.split("x"))
        if len(dims) == 2:
            dims = (1,) + dims  # single-channel image
        layers.append(input_layer(dims))
    else:
        layers.append(input_layer((int(first),)))
    for tok in tokens[1:]:
        m = re.fullmatch(r"(\d+)c(\d+)", tok)
        if m:
            layers.append(conv(int(m.group(1)), int(m.group(2))))
            continue
        m = re.fullmatch(r"(\d+)a", tok)
        if m:
            layers.append(avgpool(int(m.group(1))))
            continue
        if tok.isdigit():
            layers.append(dense(int(tok)))
            continue
        raise ValidationError(f"unrecognized layer token {tok!r} in {text!r}")
    return layers


@dataclass(frozen=True)
class NetworkSpec:
    """Validated layer chain with the output shape of every layer."""

    layers: tuple
    shapes: tuple
    structure: str

    @property
    def input_shape(self):
        return self.shapes[0]

    @property
    def output_units(self):
        return self.shapes[-1][0]


def build_network(spec):
    """Validate a structure string or LayerSpec list; compute per-layer shapes."""
    if isinstance(spec, str):
        structure = spec.strip()
        layers = parse_structure(structure)
    else:
        layers = list(spec)
        structure = describe_structure(layers)
    if not layers or layers[0].kind != INPUT:
        raise ValidationError("first layer must be the input layer")
    if any(l.kind == INPUT for l in layers[1:]):
        raise ValidationError("only the first layer may be the input layer")
    if layers[-1].kind != DENSE:
        raise ValidationError("last layer must be dense (the classifier output)")

    shapes = [layers[0].shape]
    for l in layers[1:]:
        prev = shapes[-1]
        if l.kind == DENSE:
            shapes.append((l.units,))
        elif l.kind == CONV:
            if len(prev) != 3:
                raise DimensionError(f"conv layer needs (C,H,W) input, got {prev}")
            c, h, w = prev
            if l.kernel > h or l.kernel > w:
                raise DimensionError(f"kernel {l.kernel} larger than input {h}x{w}")
            shapes.append((l.channels, h - l.kernel + 1, w - l.kernel + 1))
        elif l.kind == AVGPOOL:
            if len(prev) != 3:
                raise DimensionError(f"avgpool layer needs (C,H,W) input, got {prev}")
            c, h, w = prev
            if h % l.pool or w % l.pool:
                raise DimensionError(f"avgpool {l.pool} needs divisible extents, got {h}x{w}")
            shapes.append((c, h // l.pool, w // l.pool))
        else:
            raise ValidationError(f"unknown layer kind {l.kind!r}")
    return NetworkSpec(layers=tuple(layers), shapes=tuple(shapes), structure=structure)


def describe_structure(layers):
    """Inverse of parse_structure for display and checkpointing."""
    parts = []
    for l in layers:
        if l.kind == INPUT:
            parts.append("x".join(str(s) for s in l.shape) if len(l.shape) > 1
                         else str(l.shape[0]))
        elif l.kind == DENSE:
            parts.append(str(l.units))
        elif l.kind == CONV:
            parts.append(f"{l.channels}c{l.kernel}")
        else:
            parts.append(f"{l.pool}a")
    return "-".join(parts)


@dataclass
class LayerParams:
    """Weights and bias of one parameterized layer; bias is the initial potential."""

    w: np.ndarray
    b: np.ndarray


@dataclass
class ParamSet:
    """Per-layer parameters aligned with NetworkSpec.layers (None where unparameterized).

    The same container carries gradients and optimizer moments, which share
    this structure exactly.
    """

    layers: list

    def parameterized(self):
        """Yield (layer_index, LayerParams) for every dense/conv layer."""
        for i, lp in enumerate(self.layers):
            if lp is not None:
                yield i, lp


def zeros_like_params(params):
    return ParamSet(layers=[None if lp is None else
                            LayerParams(w=np.zeros_like(lp.w), b=np.zeros_like(lp.b))
                            for lp in params.layers])


def init_params(net, scheme="gaussian", sigma=0.05, seed=0):
    """Draw initial parameters.

    gaussian: weights ~ N(0, sigma^2), biases 0.
    uniform_fanin: weights and biases ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
    Deterministic for a given seed; layers consume the stream in order.
    """
    if scheme not in ("gaussian", "uniform_fanin"):
        raise ValidationError(f"unknown init scheme {scheme!r}")
    rng = derived_rng(seed, STREAM_INIT)
    layers = []
    for i, l in enumerate(net.layers):
        if l.kind == DENSE:
            fan_in = int(np.prod(net.shapes[i - 1]))
            wshape, bshape = (l.units, fan_in), (l.units,)
        elif l.kind == CONV:
            cin = net.shapes[i - 1][0]
            fan_in = cin * l.kernel * l.kernel
            wshape, bshape = (l.channels, cin, l.kernel, l.kernel), (l.channels,)
        else:
            layers.append(None)
            continue
        if scheme == "gaussian":
            w = rng.normal(0.0, sigma, size=wshape)
            b = np.zeros(bshape)
        else:
            bound = 1.0 / math.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=wshape)
            b = rng.uniform(-bound, bound, size=bshape)
        layers.append(LayerParams(w=w, b=b))
    return ParamSet(layers=layers)


def forward_dense(a_prev, w, b, cfg, relaxed=False):
    """z = threshold * (w . counts) + b; a = transfer(z). Accepts (in,) or (N,in)."""
    a2 = np.asarray(a_prev, dtype=np.float64)
    single = a2.ndim == 1
    if single:
        a2 = a2[None]
    z = cfg.threshold * tensor.matmul(a2, w.T) + b
    a = (neuron.relaxed_transfer if relaxed else neuron.transfer)(z, cfg)
    return (z[0], a[0]) if single else (z, a)


def forward_conv(a_prev, kernels, b, cfg, relaxed=False):
    """Convolutional current: z = threshold * conv(counts) + per-channel bias."""
    z = cfg.threshold * tensor.conv2d_valid(a_prev, kernels) + b[:, None, None]
    a = (neuron.relaxed_transfer if relaxed else neuron.transfer)(z, cfg)
    return z, a


def forward_pool(a_prev, size=2):
    """Average pooling; fractional outputs flow to the next layer unquantized."""
    return tensor.avgpool2d(a_prev, size)


@dataclass
class ForwardTrace:
    """Per-layer currents and counts kept for the backward pass (batch-major)."""

    net: NetworkSpec
    zs: list
    acts: list
    batched: bool

    @property
    def outputs(self):
        """Output-layer spike counts in the caller's shape."""
        out = self.acts[-1]
        return out if self.batched else out[0]


def forward_network(input_counts, params, net, cfg, relaxed=False):
    """Run the chain on input counts shaped like net.input_shape, batched or not."""
    x = np.asarray(input_counts, dtype=np.float64)
    in_shape = net.input_shape
    if x.shape == in_shape:
        batched = False
        x = x[None]
    elif x.ndim == len(in_shape) + 1 and x.shape[1:] == in_shape:
        batched = True
    else:
        raise DimensionError(f"input shape {x.shape} does not match {in_shape}")

    zs, acts = [None], [x]
    a = x
    for i, l in enumerate(net.layers[1:], start=1):
        lp = params.layers[i]
        if l.kind == DENSE:
            flat = a.reshape(a.shape[0], -1)
            z, a = forward_dense(flat, lp.w, lp.b, cfg, relaxed)
        elif l.kind == CONV:
            z, a = forward_conv(a, lp.w, lp.b, cfg, relaxed)
        else:
            z, a = None, forward_pool(a, l.pool)
        zs.append(z)
        acts.append(a)
    return ForwardTrace(net=net, zs=zs, acts=acts, batched=batched)


def backward_output(trace, y_onehot, cfg):
    """Output-layer error: (softmax(counts) - y) * surrogate derivative of z."""
    a_out, z_out = trace.acts[-1], trace.zs[-1]
    y = np.asarray(y_onehot, dtype=np.float64)
    if y.ndim == 1:
        y = np.broadcast_to(y, a_out.shape)
    if y.shape != a_out.shape:
        raise DimensionError(f"labels shape {y.shape} != outputs shape {a_out.shape}")
    return loss_grad(a_out, y) * neuron.transfer_grad(z_out, cfg)


def backward_hidden(delta_next, w_next, z_this, cfg):
    """Hidden-layer error: back-projected error gated by z > 0.

    The threshold factor from the next layer's current and the 1/threshold of
    the surrogate derivative cancel algebraically, so neither appears here.
    """
    d = np.asarray(delta_next, dtype=np.float64)
    single = d.ndim == 1
    if single:
        d = d[None]
    z = np.asarray(z_this, dtype=np.float64)
    out = tensor.matmul(d, w_next) * (z > 0)
    return out[0] if single else out


def backward_network(trace, params, y_onehot, cfg, output_gate=True,
                     clamp_grad=False):
    """Gradients of the mean cross-entropy loss for every parameterized layer.

    Weight gradients are error * (threshold * presynaptic counts); bias
    gradients are the error itself. Gradients are averaged over the batch.

    output_gate=False drops the z > 0 gate from the output layer's error
    (hidden layers stay gated). The gated form is the exact surrogate
    derivative, but it zeroes the loss signal for any sample whose output
    currents are all non-positive; once a sample reaches that state no
    gradient can ever pull it back, and small networks routinely freeze
    there. The free readout keeps the softmax error flowing, like reading
    the output layer's aggregated current as plain logits.

    clamp_grad=True also closes each hidden gate where the current exceeds
    threshold * steps. The spike count is capped there, so the true slope is
    zero; the uncapped surrogate keeps pushing weights upward, which at short
    simulation windows drives the whole hidden layer into the cap and
    collapses the representation.
    """
    net = trace.net
    if len(trace.acts) != len(net.layers) or len(params.layers) != len(net.layers):
        raise ConsistencyError("trace and parameters disagree with the network spec")
    for i, lp in params.parameterized():
        z = trace.zs[i]
        want = net.shapes[i]
        if z is None or z.shape[1:] != want:
            raise ConsistencyError(f"trace layer {i} shape mismatch against spec {want}")

    n = trace.acts[0].shape[0]
    cap = cfg.threshold * cfg.steps
    grads = [None] * len(net.layers)
    flow = None  # d loss / d counts of the layer below, threshold factors cancelled
    for i in range(len(net.layers) - 1, 0, -1):
        l = net.layers[i]
        if l.kind == AVGPOOL:
            flow = tensor.avgpool2d_grad(flow, l.pool)
            continue
        lp = params.layers[i]
        if i == len(net.layers) - 1:
            if output_gate:
                delta = backward_output(trace, y_onehot, cfg)
            else:
                y = np.asarray(y_onehot, dtype=np.float64)
                delta = loss_grad(trace.acts[-1], y) / cfg.threshold
        else:
            gate = trace.zs[i] > 0
            if clamp_grad:
                gate = gate & (trace.zs[i] < cap)
            delta = flow * gate
        a_prev = trace.acts[i - 1]
        if l.kind == DENSE:
            flat = a_prev.reshape(n, -1)
            gw = cfg.threshold * tensor.matmul(delta.T, flat) / n
            gb = delta.mean(axis=0)
            flow = tensor.matmul(delta, lp.w).reshape(a_prev.shape)
        else:  # conv
            gx, gk = tensor.conv2d_grads(a_prev, lp.w, delta)
            gw = cfg.threshold * gk / n
            gb = delta.sum(axis=(2, 3)).mean(axis=0)
            flow = gx
        grads[i] = LayerParams(w=gw, b=gb)
    return ParamSet(layers=grads)


def simulate_network(step_inputs, params, net, cfg):
    """Time-stepped forward pass with explicit membrane dynamics per layer.

    step_inputs: (steps, N, *input_shape) per-step input occupancy; binary for
    spike trains, fractional for constant-rate intensity drive. Biases enter
    as initial membrane potentials. Returns output-layer spike counts (N, units).
    """
    step_inputs = np.asarray(step_inputs, dtype=np.float64)
    if step_inputs.shape[0] != cfg.steps:
        raise DimensionError(
            f"step inputs have {step_inputs.shape[0]} rows, config expects {cfg.steps}")
    if step_inputs.shape[2:] != net.input_shape:
        raise DimensionError(
            f"step input shape {step_inputs.shape[2:]} != {net.input_shape}")
    n = step_inputs.shape[1]

    states = {}
    for i, lp in params.parameterized():
        full = np.broadcast_to(lp.b if net.layers[i].kind == DENSE
                               else lp.b[:, None, None], (n,) + net.shapes[i])
        states[i] = neuron.init_state(full)

    for t in range(cfg.steps):
        x = step_inputs[t]
        for i, l in enumerate(net.layers[1:], start=1):
            if l.kind == AVGPOOL:
                x = tensor.avgpool2d(x, l.pool)
                continue
            lp = params.layers[i]
            if l.kind == DENSE:
                cur = cfg.threshold * tensor.matmul(x.reshape(n, -1), lp.w.T)
            else:
                cur = cfg.threshold * tensor.conv2d_valid(x, lp.w)
            states[i] = neuron.step(states[i], cur, cfg)
            x = states[i].spiked
    return states[len(net.layers) - 1].count
