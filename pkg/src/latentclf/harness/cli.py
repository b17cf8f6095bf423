"""Command-line interface for training, evaluation, sweeps, and generation.

Subcommands mirror the experiment protocol: ``train``/``eval`` for single
models, ``sweep`` for the data-efficiency grid, ``structures`` /
``em-vs-direct`` / ``rules`` for the paired comparisons, ``generate`` for
controlled sampling, ``params`` for parameter counts, and ``synth`` for
the bundled synthetic dataset generator.  Settings come from a JSON config
file (mirroring RunSpec field names) and/or flags; flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace

from .. import corpus, inference, models, training
from ..checkpoint import load_checkpoint, save_checkpoint
from ..generation import MARGINAL, SampleSpec, sample_many
from ..models import ModelConfig, count_params, fit_label_prior, init_params
from ..training import TrainSpec
from . import runner
from .metrics import append_metrics
from .synth import gen_synthetic


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring RunSpec fields")
    p.add_argument("--dataset", help="dataset directory or synthetic:<params>")
    p.add_argument("--seed", type=int, help="single seed (overrides seeds list)")
    p.add_argument("--seeds", type=int, nargs="+", help="seed list")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--workers", type=int, help="parallel legs (default 1)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=models.FAMILIES, default=None)
    p.add_argument("--structure", choices=models.STRUCTURES, default=None)
    p.add_argument("--d-word", type=int, default=None)
    p.add_argument("--d-hidden", type=int, default=None)
    p.add_argument("--d1", type=int, default=None)
    p.add_argument("--d2", type=int, default=None)
    p.add_argument("--num-latent", type=int, default=None)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=(training.DIRECT, training.EM), default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)


def _model_spec_from_args(args) -> dict:
    spec = {}
    for flag, key in (("family", "family"), ("structure", "structure"),
                      ("d_word", "d_word"), ("d_hidden", "d_hidden"),
                      ("d1", "d1"), ("d2", "d2"), ("num_latent", "num_latent")):
        value = getattr(args, flag, None)
        if value is not None:
            spec[key] = value
    return spec


def _train_overrides(args) -> dict:
    out = {}
    for flag, key in (("method", "method"), ("lr", "lr"), ("batch_size", "batch_size"),
                      ("max_epochs", "max_epochs"), ("patience", "patience")):
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = value
    return out


def build_run_spec(args, default_models=()) -> runner.RunSpec:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = {}
    if args.dataset:
        data["dataset"] = args.dataset
    if "dataset" not in data:
        raise SystemExit("a dataset is required (--dataset or config file)")
    if getattr(args, "out_dir", None):
        data["out_dir"] = args.out_dir
    if getattr(args, "workers", None):
        data["workers"] = args.workers
    if getattr(args, "seed", None) is not None:
        data["seeds"] = [args.seed]
    elif getattr(args, "seeds", None):
        data["seeds"] = args.seeds
    if getattr(args, "n_per_class", None):
        data["grid"] = args.n_per_class
    model_flags = _model_spec_from_args(args)
    if model_flags or not data.get("models"):
        base = dict(data.get("models", [{}])[0]) if data.get("models") else {}
        base.update(model_flags)
        if default_models and not base:
            data["models"] = list(default_models)
        else:
            base.setdefault("family", "latent")
            data["models"] = [base]
    train_kw = dict(data.get("train", {}))
    train_kw.update(_train_overrides(args))
    data["train"] = train_kw

    data["models"] = tuple(dict(m) for m in data["models"])
    for key in ("grid", "rules", "seeds"):
        if key in data:
            data[key] = tuple(data[key])
    data["train"] = TrainSpec(**train_kw)
    data.setdefault("out_dir", "runs")
    return runner.RunSpec(**data)


def cmd_train(args) -> int:
    spec = build_run_spec(args)
    n = args.n_per_class[0] if args.n_per_class else spec.grid[0]
    for seed in spec.seeds:
        rows = runner.run_leg(spec, dict(spec.models[0]), n, seed)
        os.makedirs(spec.out_dir, exist_ok=True)
        for row in rows:
            append_metrics(os.path.join(spec.out_dir, "metrics.csv"), row)
            print(f"seed {row.seed}: dev {row.dev_acc:.4f} test {row.test_acc:.4f} "
                  f"(best epoch {row.epoch_best}, {row.param_count} params)")
    return 0


def cmd_eval(args) -> int:
    params, vocab = load_checkpoint(args.checkpoint)
    records = corpus.load_csv(args.data)
    docs = [corpus.encode(text, vocab, max_tokens=args.max_tokens, label=label)
            for label, text in records]
    rule = args.rule or inference.default_rule(params)
    acc = inference.evaluate_accuracy(docs, params, rule)
    print(f"accuracy {acc:.4f} on {len(docs)} docs under rule {rule}")
    return 0


def cmd_sweep(args) -> int:
    spec = build_run_spec(args)
    rows = runner.run_sweep(spec)
    ok = sum(1 for r in rows if not r.note)
    print(f"{len(rows)} rows ({ok} clean) -> {os.path.join(spec.out_dir, 'metrics.csv')}")
    return 0


def cmd_structures(args) -> int:
    spec = build_run_spec(args)
    runner.compare_structures(spec)
    return 0


def cmd_em_vs_direct(args) -> int:
    spec = build_run_spec(args)
    runner.compare_em_direct(spec)
    return 0


def cmd_rules(args) -> int:
    spec = build_run_spec(args)
    runner.compare_rules(spec)
    return 0


def cmd_generate(args) -> int:
    params, vocab = load_checkpoint(args.checkpoint)
    latent = args.latent
    if latent not in (None, MARGINAL):
        latent = int(latent)
    spec = SampleSpec(label=args.label, latent=latent, temperature=args.temperature,
                      max_len=args.max_len, seed=args.seed or 0)
    for text, _ in sample_many(spec, params, vocab, args.num):
        shown = latent if latent is not None else MARGINAL
        print(f"y={args.label}\tc={shown}\t{text}")
    return 0


def cmd_params(args) -> int:
    model_spec = _model_spec_from_args(args)
    model_spec.setdefault("family", "latent")
    config = runner.complete_config(model_spec, args.num_labels, args.vocab_size)
    print(count_params(config))
    return 0


def cmd_synth(args) -> int:
    sidecar = gen_synthetic(
        args.out_dir or "synthetic", num_labels=args.labels, num_latent=args.latents,
        vocab_size=args.vocab, n_train=args.train, n_test=args.test, seed=args.seed or 0)
    print(json.dumps({k: sidecar[k] for k in
                      ("bayes_accuracy", "bayes_accuracy_mode", "chance_accuracy")}))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latentclf",
        description="Latent-variable generative text classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model configuration")
    _add_common(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--n-per-class", type=int, nargs="+", default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a CSV file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="CSV file to score")
    p.add_argument("--rule", choices=inference.RULES, default=None)
    p.add_argument("--max-tokens", type=int, default=80)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="data-efficiency sweep over the size grid")
    _add_common(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--n-per-class", type=int, nargs="+", default=None,
                   help="override the grid")
    p.set_defaults(fn=cmd_sweep)

    for name, fn in (("structures", cmd_structures), ("em-vs-direct", cmd_em_vs_direct),
                     ("rules", cmd_rules)):
        p = sub.add_parser(name, help=f"{name} comparison")
        _add_common(p)
        _add_model_flags(p)
        _add_train_flags(p)
        p.add_argument("--n-per-class", type=int, nargs="+", default=None)
        p.set_defaults(fn=fn)

    p = sub.add_parser("generate", help="sample text from a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--label", type=int, required=True)
    p.add_argument("--latent", default=None, help="latent index or 'marginal'")
    p.add_argument("--temperature", type=float, default=0.6)
    p.add_argument("--max-len", type=int, default=82)
    p.add_argument("--num", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("params", help="closed-form parameter count for a config")
    _add_model_flags(p)
    p.add_argument("--num-labels", type=int, required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("synth", help="generate the bundled synthetic dataset")
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--labels", type=int, default=4)
    p.add_argument("--latents", type=int, default=3)
    p.add_argument("--vocab", type=int, default=200)
    p.add_argument("--train", type=int, default=4000)
    p.add_argument("--test", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
