"""Self-describing binary checkpoints.

Layout (little endian): 8 magic bytes "SNNCKPT1", u32 format version, then a
sequence of sections, each a 4-byte ASCII tag, u64 payload length, payload.
Tensors are stored as u32 ndim, u32 dims..., float64 data. The file ends with
a "CRCS" section carrying the CRC-32 of every preceding byte.

Sections: SPEC structure text + input mode, NCFG neuron config, PRMS weight
and bias tensors in layer order, NORM normalization stats, PROV training
provenance (seed, epochs completed, dataset config echo).
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import network
from .errors import CorruptionError, FormatError, ValidationError
from .neuron import NeuronConfig
from .train import Model

MAGIC = b"SNNCKPT1"
VERSION = 1


@dataclass
class Provenance:
    """How the checkpointed model was trained.

    seed is the repeat's own seed (weights, shuffling, encoding); split_seed
    is the run-level seed all repeats shared when partitioning the data.
    """

    seed: int
    epochs: int
    dataset_echo: str = ""   # resolved [dataset] section, key = value lines
    split_seed: int = 0


def _pack_tensor(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    head = struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


class _Reader:
    def __init__(self, blob, path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.blob):
            raise CorruptionError(f"{self.path}: truncated (wanted {n} bytes "
                                  f"at offset {self.pos})")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def tensor(self):
        ndim = struct.unpack("<I", self.take(4))[0]
        shape = struct.unpack(f"<{ndim}I", self.take(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(self.take(8 * count), dtype="<f8")
        return data.reshape(shape).copy()


def save_checkpoint(path, model, provenance):
    """Write model + provenance; the round trip is bit-exact."""
    sections = []

    def add(tag, payload):
        sections.append(tag + struct.pack("<Q", len(payload)) + payload)

    add(b"SPEC", f"{model.net.structure}\n{model.input_mode}".encode())
    c = model.neuron_cfg
    add(b"NCFG", struct.pack("<3d", c.threshold, c.sim_time, c.dt))
    prm = b"".join(_pack_tensor(t) for _, lp in model.params.parameterized()
                   for t in (lp.w, lp.b))
    add(b"PRMS", prm)
    add(b"NORM", _pack_tensor(model.feature_min) + _pack_tensor(model.feature_max))
    add(b"PROV", struct.pack("<QQQ", provenance.seed, provenance.epochs,
                             provenance.split_seed)
        + provenance.dataset_echo.encode())

    body = MAGIC + struct.pack("<I", VERSION) + b"".join(sections)
    crc = struct.pack("<I", zlib.crc32(body))
    with open(path, "wb") as f:
        f.write(body + b"CRCS" + struct.pack("<Q", 4) + crc)


def load_checkpoint(path):
    """Read a checkpoint; returns (Model, Provenance)."""
    with open(path, "rb") as f:
        blob = f.read()
    r = _Reader(blob, path)
    if r.take(8) != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic)")
    version = struct.unpack("<I", r.take(4))[0]
    if version != VERSION:
        raise FormatError(f"{path}: format version {version}, expected {VERSION}")

    payloads = {}
    while r.pos < len(blob):
        tag = r.take(4)
        length = struct.unpack("<Q", r.take(8))[0]
        start = r.pos
        payloads[tag] = r.take(length)
        if tag == b"CRCS":
            stored = struct.unpack("<I", payloads[tag])[0]
            if zlib.crc32(blob[:start - 12]) != stored:
                raise CorruptionError(f"{path}: checksum mismatch")
    for tag in (b"SPEC", b"NCFG", b"PRMS", b"NORM", b"PROV", b"CRCS"):
        if tag not in payloads:
            raise CorruptionError(f"{path}: missing section {tag.decode()}")

    structure, input_mode = payloads[b"SPEC"].decode().split("\n")
    net = network.build_network(structure)
    threshold, sim_time, dt = struct.unpack("<3d", payloads[b"NCFG"])
    cfg = NeuronConfig(threshold=threshold, sim_time=sim_time, dt=dt)

    pr = _Reader(payloads[b"PRMS"], path)
    layers = []
    for l in net.layers:
        if l.kind in (network.DENSE, network.CONV):
            w = pr.tensor()
            b = pr.tensor()
            layers.append(network.LayerParams(w=w, b=b))
        else:
            layers.append(None)
    if pr.pos != len(pr.blob):
        raise CorruptionError(f"{path}: trailing bytes in parameter section")
    params = network.ParamSet(layers=layers)
    for i, lp in params.parameterized():
        spec_l, prev = net.layers[i], net.shapes[i - 1]
        want = ((spec_l.units, int(np.prod(prev))) if spec_l.kind == network.DENSE
                else (spec_l.channels, prev[0], spec_l.kernel, spec_l.kernel))
        if lp.w.shape != want:
            raise ValidationError(f"{path}: layer {i} weights {lp.w.shape}, "
                                  f"structure implies {want}")

    nr = _Reader(payloads[b"NORM"], path)
    fmin = nr.tensor()
    fmax = nr.tensor()

    seed, epochs, split_seed = struct.unpack("<QQQ", payloads[b"PROV"][:24])
    echo = payloads[b"PROV"][24:].decode()

    model = Model(net=net, params=params, neuron_cfg=cfg, input_mode=input_mode,
                  feature_min=fmin, feature_max=fmax)
    return model, Provenance(seed=int(seed), epochs=int(epochs), dataset_echo=echo,
                             split_seed=int(split_seed))
