"""Spike-count trained spiking neural networks.

Rate-coded inputs drive networks of non-leaky integrate-and-fire neurons;
training backpropagates through each neuron's spike count with a gated
1/threshold surrogate derivative.
"""

from . import checkpoint, cli, config, data, encoding, network, neuron, optim, tensor, train
from .encoding import SpikeTrain, intensity_to_counts, normalize_features, poisson_encode
from .network import (ForwardTrace, LayerParams, NetworkSpec, ParamSet,
                      backward_network, build_network, forward_network,
                      init_params, simulate_network)
from .neuron import NeuronConfig, NeuronState, count_spikes, simulate_counts, transfer
from .optim import AdamState, adam_step, cross_entropy, init_adam, loss_grad
from .train import Model, evaluate, new_model, train_epoch

__version__ = "0.1.0"
