"""Training and evaluation loops over encoded spike inputs.

Each sample's spike train is drawn from a generator seeded by
(run seed, stream, epoch, sample index), so trains are resampled every epoch
yet whole runs replay bit-identically. Evaluation uses its own stream, making
reported accuracies independent of how many epochs were trained.
"""

from dataclasses import dataclass

import numpy as np

from . import network, neuron, optim
from .data import batches
from .encoding import intensity_to_counts, normalize_features, poisson_encode
from .errors import TrainingDiverged, ValidationError
from .seeding import STREAM_EVAL_ENCODE, STREAM_TRAIN_ENCODE

INPUT_MODES = ("poisson", "intensity")


@dataclass
class Model:
    """Everything needed to map raw feature rows to output spike counts."""

    net: network.NetworkSpec
    params: network.ParamSet
    neuron_cfg: neuron.NeuronConfig
    input_mode: str
    feature_min: np.ndarray
    feature_max: np.ndarray

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise ValidationError(f"input_mode must be one of {INPUT_MODES}")
        if int(np.prod(self.net.input_shape)) != self.feature_min.shape[0]:
            raise ValidationError(
                f"network input {self.net.input_shape} incompatible with "
                f"{self.feature_min.shape[0]} features")


def new_model(structure, neuron_cfg, train_features, input_mode="poisson",
              init="gaussian", sigma=0.05, init_bias=0.0, seed=0):
    """Build a model, drawing init weights and normalization stats from the train split.

    init_bias shifts every initial membrane potential by a constant. Starting
    the potentials a few threshold units up keeps early currents positive, so
    the z > 0 gates pass gradient from the first step instead of waiting for
    lucky spikes; training then pulls the biases wherever they belong.
    """
    net = network.build_network(structure)
    params = network.init_params(net, scheme=init, sigma=sigma, seed=seed)
    if init_bias:
        for _, lp in params.parameterized():
            lp.b += init_bias
    return Model(net=net, params=params, neuron_cfg=neuron_cfg,
                 input_mode=input_mode,
                 feature_min=train_features.min(axis=0),
                 feature_max=train_features.max(axis=0))


def identity_norm(n_features):
    """No-op normalization stats for data already in [0,1] (image intensities)."""
    return np.zeros(n_features), np.ones(n_features)


def encode_inputs(model, raw_features, cfg, seed, epoch, sample_indices, stream):
    """Normalize raw rows and produce input spike counts shaped for the network."""
    values = normalize_features(raw_features, model.feature_min, model.feature_max)
    if model.input_mode == "intensity":
        counts = intensity_to_counts(values, cfg)
    else:
        counts = np.empty_like(values)
        for row, idx in enumerate(sample_indices):
            train = poisson_encode(values[row], cfg, (seed, stream, epoch, int(idx)))
            counts[row] = neuron.count_spikes(train)
    return counts.reshape((len(values),) + model.net.input_shape)


def encode_step_inputs(model, raw_features, cfg, seed, sample_indices, encoding):
    """Per-step input occupancy for simulation-mode evaluation.

    "sampled" replays the exact spike trains the aggregate path counts;
    "expected" drives a constant fractional rate whose total matches the
    expected count.
    """
    values = normalize_features(raw_features, model.feature_min, model.feature_max)
    shape = (cfg.steps, len(values)) + model.net.input_shape
    if encoding == "expected":
        per_step = np.broadcast_to(values.reshape((1, len(values)) +
                                                  model.net.input_shape), shape)
        return np.ascontiguousarray(per_step)
    out = np.empty(shape)
    for row, idx in enumerate(sample_indices):
        train = poisson_encode(values[row], cfg, (seed, STREAM_EVAL_ENCODE, 0, int(idx)))
        out[:, row] = train.spikes.reshape((cfg.steps,) + model.net.input_shape)
    return out


def train_epoch(model, dataset, opt, batch_size, seed, epoch, output_gate=False):
    """One pass over the training set; returns (mean loss, running accuracy).

    Accuracy is measured on the predictions made while training, i.e. each
    batch is scored with the weights it was forwarded through. output_gate
    chooses between the strictly gated output error and the free readout
    (see backward_network); the free readout is the default because the
    gated form strands samples in zero-gradient states.
    """
    if len(dataset) == 0:
        raise ValidationError("training set is empty")
    size = batch_size if batch_size >= 1 else len(dataset)
    cfg = model.neuron_cfg
    loss_sum, hits = 0.0, 0
    for batch_idx in batches(len(dataset), size, seed, epoch):
        x = encode_inputs(model, dataset.features[batch_idx], cfg, seed, epoch,
                          batch_idx, STREAM_TRAIN_ENCODE)
        y = dataset.labels[batch_idx]
        trace = network.forward_network(x, model.params, model.net, cfg)
        out = trace.outputs
        loss = optim.mean_cross_entropy(out, y)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        loss_sum += loss * len(batch_idx)
        hits += int((out.argmax(axis=1) == y).sum())
        y_onehot = np.zeros_like(out)
        y_onehot[np.arange(len(y)), y] = 1.0
        grads = network.backward_network(trace, model.params, y_onehot, cfg,
                                         output_gate=output_gate, clamp_grad=True)
        optim.adam_step(model.params, grads, opt)
    return loss_sum / len(dataset), hits / len(dataset)


def _eval_counts(model, raw_features, cfg, seed, idx, encoding):
    values = normalize_features(raw_features, model.feature_min, model.feature_max)
    if encoding == "expected":
        counts = intensity_to_counts(values, cfg)
    else:
        counts = np.empty_like(values)
        for row, i in enumerate(idx):
            train = poisson_encode(values[row], cfg,
                                   (seed, STREAM_EVAL_ENCODE, 0, int(i)))
            counts[row] = neuron.count_spikes(train)
    return counts.reshape((len(values),) + model.net.input_shape)


def evaluate(model, dataset, seed=0, mode="aggregate", cfg=None,
             encoding="expected", chunk=512):
    """Accuracy and per-class confusion counts under argmax prediction.

    Ties resolve to the lowest class index. mode selects the aggregate
    transfer forward or the explicit time-stepped simulation; cfg overrides
    the model's neuron config (e.g. to shorten the simulation window).
    encoding picks the input read: "expected" feeds each sample's expected
    count (deterministic, the number reported for experiments), "sampled"
    draws one fixed-seed spike train per sample.
    """
    if mode not in ("aggregate", "simulate"):
        raise ValidationError(f"unknown eval mode {mode!r}")
    if encoding not in ("expected", "sampled"):
        raise ValidationError(f"unknown eval encoding {encoding!r}")
    cfg = cfg or model.neuron_cfg
    k = model.net.output_units
    confusion = np.zeros((k, k), dtype=np.int64)
    for start in range(0, len(dataset), chunk):
        idx = np.arange(start, min(start + chunk, len(dataset)))
        if mode == "aggregate":
            x = _eval_counts(model, dataset.features[idx], cfg, seed, idx, encoding)
            out = network.forward_network(x, model.params, model.net, cfg).outputs
        else:
            steps = encode_step_inputs(model, dataset.features[idx], cfg, seed,
                                       idx, encoding)
            out = network.simulate_network(steps, model.params, model.net, cfg)
        pred = out.argmax(axis=1)
        for p, t in zip(pred, dataset.labels[idx]):
            confusion[t, p] += 1
    accuracy = float(np.trace(confusion)) / max(len(dataset), 1)
    return accuracy, confusion
