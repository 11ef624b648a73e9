"""Run configuration: a flat-sectioned key = value text format.

Grammar: `[section]` headers, `key = value` lines, `#` comments, blank lines
ignored. Unknown sections or keys are errors, not warnings, so a typo cannot
silently fall back to a default. Relative paths resolve against the config
file's directory.
"""

import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError, ValidationError
from .network import build_network
from .neuron import NeuronConfig


@dataclass
class DatasetConfig:
    name: str = ""
    kind: str = "csv"               # csv | mnist
    path: str = ""                  # csv file
    schema: str = ""                # declared column roles (see data.SCHEMAS)
    n_train: int = 0                # csv: training rows for the stratified split
    train_images: str = ""          # mnist IDX files
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    train_subset: int = 0           # optional cap on training rows (0 = all)


@dataclass
class ModelConfig:
    structure: str = ""
    threshold: float = 1.0
    sim_time: float = 20.0
    dt: float = 1.0
    input_mode: str = "poisson"     # poisson | intensity
    init: str = "gaussian"          # gaussian | uniform_fanin
    init_sigma: float = 0.05
    init_bias: float = 0.0          # constant warm start for initial potentials


@dataclass
class OptimConfig:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 0             # 0 = full batch
    epochs: int = 500
    readout: str = "free"           # free | gated output-layer error (see backward_network)


@dataclass
class RunSection:
    seed: int = 1
    repeats: int = 1
    out_dir: str = "runs/out"
    eval_mode: str = "aggregate"    # aggregate | simulate


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    run: RunSection = field(default_factory=RunSection)

    def neuron_cfg(self):
        return NeuronConfig(threshold=self.model.threshold,
                            sim_time=self.model.sim_time, dt=self.model.dt)


_PATH_KEYS = {"path", "train_images", "train_labels", "test_images",
              "test_labels", "out_dir"}


def _coerce(section, key, value, target_type):
    try:
        if target_type is int:
            return int(value)
        if target_type is float:
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {value!r} "
                          f"as {target_type.__name__}") from exc


def parse_config(path):
    """Read, type-check and validate a RunConfig from a config file."""
    cfg = RunConfig()
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    base = os.path.dirname(os.path.abspath(path))

    current = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("[") and text.endswith("]"):
                name = text[1:-1].strip()
                if name not in sections:
                    raise ConfigError(f"{path}:{lineno}: unknown section [{name}]")
                current = name
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            if current is None:
                raise ConfigError(f"{path}:{lineno}: key outside any [section]")
            key, value = (part.strip() for part in text.split("=", 1))
            target = sections[current]
            known = {f.name: f.type for f in fields(target)}
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r} "
                                  f"in [{current}]")
            typ = type(getattr(target, key))
            parsed = _coerce(current, key, value, typ)
            if key in _PATH_KEYS and parsed and not os.path.isabs(parsed):
                parsed = os.path.normpath(os.path.join(base, parsed))
            setattr(target, key, parsed)

    validate_config(cfg)
    return cfg


def validate_config(cfg):
    """Cross-field invariants; raises ValidationError with the failing rule."""
    cfg.neuron_cfg()  # checks threshold, dt, and that sim_time/dt is integral
    if not cfg.model.structure:
        raise ValidationError("model.structure is required")
    build_network(cfg.model.structure)  # checks the layer chain composes
    if cfg.model.input_mode not in ("poisson", "intensity"):
        raise ValidationError(f"bad input_mode {cfg.model.input_mode!r}")
    if cfg.model.init not in ("gaussian", "uniform_fanin"):
        raise ValidationError(f"bad init {cfg.model.init!r}")
    if cfg.optim.readout not in ("free", "gated"):
        raise ValidationError(f"bad readout {cfg.optim.readout!r}")
    if cfg.run.repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {cfg.run.repeats}")
    if cfg.run.seed < 0:
        raise ValidationError(f"seed must be non-negative, got {cfg.run.seed}")
    if cfg.run.eval_mode not in ("aggregate", "simulate"):
        raise ValidationError(f"bad eval_mode {cfg.run.eval_mode!r}")
    if cfg.optim.epochs < 1:
        raise ValidationError(f"epochs must be >= 1, got {cfg.optim.epochs}")
    if cfg.optim.batch_size < 0:
        raise ValidationError(f"batch_size must be >= 0, got {cfg.optim.batch_size}")
    if cfg.dataset.kind not in ("csv", "mnist"):
        raise ValidationError(f"bad dataset kind {cfg.dataset.kind!r}")
    if cfg.dataset.kind == "csv":
        if not cfg.dataset.path or not cfg.dataset.schema:
            raise ValidationError("csv dataset needs path and schema")
        if cfg.dataset.n_train < 1:
            raise ValidationError("csv dataset needs n_train >= 1")
    else:
        missing = [k for k in ("train_images", "train_labels",
                               "test_images", "test_labels")
                   if not getattr(cfg.dataset, k)]
        if missing:
            raise ValidationError(f"mnist dataset needs {', '.join(missing)}")


def dump_config(cfg):
    """Render a RunConfig back to config-file text (all values resolved)."""
    lines = []
    for f in fields(cfg):
        section = getattr(cfg, f.name)
        lines.append(f"[{f.name}]")
        for sf in fields(section):
            lines.append(f"{sf.name} = {getattr(section, sf.name)}")
        lines.append("")
    return "\n".join(lines)
