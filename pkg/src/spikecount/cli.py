"""Command-line front end: train from a config, evaluate and inspect checkpoints."""

import argparse
import os
import sys
import time
from dataclasses import fields

import numpy as np

from .checkpoint import Provenance, load_checkpoint, save_checkpoint
from .config import DatasetConfig, dump_config, parse_config
from .data import load_csv, load_mnist_idx, split
from .errors import SpikeCountError, TrainingDiverged, ValidationError
from .neuron import NeuronConfig
from .optim import init_adam
from .train import evaluate, identity_norm, new_model, train_epoch

METRICS_HEADER = "epoch,loss,train_acc,test_acc,seconds"


def load_datasets(ds, split_seed):
    """Materialize (train, test) splits from a DatasetConfig."""
    if ds.kind == "csv":
        full = load_csv(ds.path, ds.schema, name=ds.name or ds.schema)
        train_set, test_set = split(full, ds.n_train, split_seed)
    else:
        train_set = load_mnist_idx(ds.train_images, ds.train_labels,
                                   name=ds.name or "mnist")
        test_set = load_mnist_idx(ds.test_images, ds.test_labels,
                                  name=ds.name or "mnist")
    if ds.train_subset and ds.train_subset < len(train_set):
        train_set, _ = split(train_set, ds.train_subset, split_seed)
    return train_set, test_set


def dump_dataset_section(ds):
    """Resolved [dataset] section text, embedded in checkpoints for re-evaluation."""
    lines = ["[dataset]"]
    lines += [f"{f.name} = {getattr(ds, f.name)}" for f in fields(ds)]
    return "\n".join(lines)


def parse_dataset_echo(text):
    ds = DatasetConfig()
    types = {f.name: type(getattr(ds, f.name)) for f in fields(ds)}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("["):
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        setattr(ds, key, types[key](value))
    return ds


def _fmt(x):
    """Shortest round-trip float text, so metrics files are bit-stable."""
    return repr(float(x))


def cmd_train(cfg):
    print(dump_config(cfg))
    train_set, test_set = load_datasets(cfg.dataset, cfg.run.seed)
    print(f"dataset {train_set.name}: {len(train_set)} train / {len(test_set)} test, "
          f"{train_set.n_features} features, {train_set.n_classes} classes")

    os.makedirs(cfg.run.out_dir, exist_ok=True)
    ncfg = cfg.neuron_cfg()
    echo = dump_dataset_section(cfg.dataset)
    log_every = max(1, cfg.optim.epochs // 20)
    finals = []
    for r in range(cfg.run.repeats):
        seed_r = cfg.run.seed + r
        model = new_model(cfg.model.structure, ncfg, train_set.features,
                          input_mode=cfg.model.input_mode, init=cfg.model.init,
                          sigma=cfg.model.init_sigma,
                          init_bias=cfg.model.init_bias, seed=seed_r)
        if cfg.dataset.kind == "mnist":
            model.feature_min, model.feature_max = identity_norm(train_set.n_features)
        if int(np.prod(model.net.input_shape)) != train_set.n_features:
            raise ValidationError(f"structure {cfg.model.structure} expects "
                                  f"{int(np.prod(model.net.input_shape))} inputs, "
                                  f"dataset has {train_set.n_features}")
        opt = init_adam(model.params, cfg.optim.lr, cfg.optim.beta1,
                        cfg.optim.beta2, cfg.optim.eps)
        rows = []
        gate = cfg.optim.readout == "gated"
        for epoch in range(1, cfg.optim.epochs + 1):
            t0 = time.perf_counter()
            loss, train_acc = train_epoch(model, train_set, opt,
                                          cfg.optim.batch_size, seed_r, epoch,
                                          output_gate=gate)
            test_acc, _ = evaluate(model, test_set, seed=seed_r,
                                   mode=cfg.run.eval_mode)
            seconds = time.perf_counter() - t0
            rows.append(f"{epoch},{_fmt(loss)},{_fmt(train_acc)},"
                        f"{_fmt(test_acc)},{seconds:.3f}")
            if epoch % log_every == 0 or epoch == cfg.optim.epochs:
                print(f"seed {seed_r} epoch {epoch}/{cfg.optim.epochs} "
                      f"loss {loss:.4f} train {train_acc:.4f} test {test_acc:.4f} "
                      f"({seconds:.1f}s)")

        metrics_path = os.path.join(cfg.run.out_dir, f"metrics_seed{seed_r}.csv")
        with open(metrics_path, "w", encoding="utf-8") as f:
            f.write(METRICS_HEADER + "\n" + "\n".join(rows) + "\n")
        ckpt_path = os.path.join(cfg.run.out_dir, f"model_seed{seed_r}.ckpt")
        save_checkpoint(ckpt_path, model,
                        Provenance(seed=seed_r, epochs=cfg.optim.epochs,
                                   dataset_echo=echo, split_seed=cfg.run.seed))
        finals.append((seed_r, loss, train_acc, test_acc))
        print(f"seed {seed_r}: wrote {metrics_path} and {ckpt_path}")

    summary_path = os.path.join(cfg.run.out_dir, "summary.csv")
    with open(summary_path, "w", encoding="utf-8") as f:
        f.write("seed,loss,train_acc,test_acc\n")
        for seed_r, loss, tr, te in finals:
            f.write(f"{seed_r},{_fmt(loss)},{_fmt(tr)},{_fmt(te)}\n")
        for stat, fn in (("mean", np.mean), ("std", np.std)):
            f.write(f"{stat},{_fmt(fn([x[1] for x in finals]))},"
                    f"{_fmt(fn([x[2] for x in finals]))},"
                    f"{_fmt(fn([x[3] for x in finals]))}\n")
    tes = [x[3] for x in finals]
    print(f"summary over {len(finals)} repeat(s): "
          f"test acc mean {np.mean(tes):.4f} std {np.std(tes):.4f} -> {summary_path}")
    return 0


def cmd_eval(args):
    model, prov = load_checkpoint(args.checkpoint)
    if args.config:
        ds = parse_config(args.config).dataset
    else:
        if not prov.dataset_echo:
            raise ValidationError("checkpoint has no dataset echo; pass --config")
        ds = parse_dataset_echo(prov.dataset_echo)
    train_set, test_set = load_datasets(ds, prov.split_seed)
    dataset = train_set if args.split == "train" else test_set
    if int(np.prod(model.net.input_shape)) != dataset.n_features:
        raise ValidationError(f"checkpoint expects "
                              f"{int(np.prod(model.net.input_shape))} inputs, "
                              f"dataset has {dataset.n_features}")

    cfg = model.neuron_cfg
    if args.T is not None:
        cfg = NeuronConfig(threshold=cfg.threshold, sim_time=float(args.T), dt=cfg.dt)
    seed = prov.seed if args.seed is None else args.seed
    acc, confusion = evaluate(model, dataset, seed=seed, mode=args.mode, cfg=cfg,
                              encoding=args.encoding)
    print(f"{dataset.name} {args.split} split, mode={args.mode}, "
          f"encoding={args.encoding}, T={cfg.sim_time:g}, dt={cfg.dt:g}: "
          f"accuracy {acc:.4f}")
    print("confusion (rows = true class, cols = predicted):")
    for i, row in enumerate(confusion):
        print(f"  {i}: " + " ".join(f"{v:6d}" for v in row))
    return 0


def cmd_inspect(args):
    model, prov = load_checkpoint(args.checkpoint)
    c = model.neuron_cfg
    print(f"structure    {model.net.structure}")
    print(f"neuron       threshold={c.threshold:g} T={c.sim_time:g}ms dt={c.dt:g}ms "
          f"(steps={c.steps})")
    print(f"input mode   {model.input_mode}")
    total = 0
    for i, lp in model.params.parameterized():
        kind = model.net.layers[i].kind
        n = lp.w.size + lp.b.size
        total += n
        print(f"layer {i:2d}     {kind:7s} w{lp.w.shape} b{lp.b.shape} "
              f"({n} params, |w| mean {np.abs(lp.w).mean():.4f})")
    print(f"parameters   {total}")
    print(f"normalize    min[0]={model.feature_min[0]:g} max[0]={model.feature_max[0]:g} "
          f"({model.feature_min.size} features)")
    print(f"provenance   seed={prov.seed} epochs={prov.epochs} "
          f"split_seed={prov.split_seed}")
    if prov.dataset_echo:
        print(prov.dataset_echo)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="spikecount",
                                description="Spike-count trained SNN experiments")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train per a run config")
    t.add_argument("config")
    t.add_argument("--seed", type=int, default=None, help="override run.seed")
    t.add_argument("--out-dir", default=None, help="override run.out_dir")

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("--T", type=float, default=None,
                   help="override simulation window (ms)")
    e.add_argument("--mode", choices=["aggregate", "simulate"], default="aggregate")
    e.add_argument("--encoding", choices=["expected", "sampled"], default="expected")
    e.add_argument("--split", choices=["train", "test"], default="test")
    e.add_argument("--config", default=None,
                   help="config whose [dataset] section replaces the recorded one")
    e.add_argument("--seed", type=int, default=None, help="encoding seed")

    i = sub.add_parser("inspect", help="describe a checkpoint")
    i.add_argument("checkpoint")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg = parse_config(args.config)
            if args.seed is not None:
                cfg.run.seed = args.seed
            if args.out_dir is not None:
                cfg.run.out_dir = args.out_dir
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(args)
        return cmd_inspect(args)
    except TrainingDiverged as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3
    except (SpikeCountError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
