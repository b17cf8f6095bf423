"""Experiment orchestration: single legs, sweeps, and paired comparisons.

A *leg* is one trained model: (dataset, model spec, training size, seed,
method).  Sweeps iterate legs over a grid, persist one metrics row per
leg, and may resume: each completed leg writes a JSON marker named by the
hash of its full specification, and reruns skip legs whose marker exists.
Independent legs can run in a process pool; metric rows are assembled and
written in deterministic leg order by the parent process regardless of
completion order.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .. import corpus, inference, models, training
from ..checkpoint import load_checkpoint, save_checkpoint
from ..models import ModelConfig, count_params, fit_label_prior, init_params
from ..training import TrainSpec
from .metrics import MetricsRow, write_metrics
from .svgplot import line_plot
from .synth import gen_synthetic

_SYNTH_KEYS = {
    "labels": "num_labels", "latents": "num_latent", "vocab": "vocab_size",
    "train": "n_train", "test": "n_test", "seed": "seed",
    "label_strength": "label_strength", "latent_strength": "latent_strength",
    "interaction_strength": "interaction_strength", "bigram_strength": "bigram_strength",
    "min_len": "min_len", "max_len": "max_len",
}


@dataclass(frozen=True)
class RunSpec:
    """One experiment: dataset, model variants, training recipe, and grid."""

    dataset: str
    models: tuple[dict, ...]
    train: TrainSpec = field(default_factory=TrainSpec)
    grid: tuple = (5, 20, 100, 1000)
    rules: tuple = ()
    seeds: tuple = (0, 1, 2)
    out_dir: str = "runs"
    dev_size: int = 5000
    min_count: int = 2
    max_tokens: int = 80
    workers: int = 1
    save_checkpoints: bool = True

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        sizes = [n for n in self.grid if n is not None]
        if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
            raise ValueError(f"grid values must be strictly increasing, got {self.grid}")


def spec_from_json(path, **overrides) -> RunSpec:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    data.update({k: v for k, v in overrides.items() if v is not None})
    train_kw = data.pop("train", {})
    data["train"] = TrainSpec(**train_kw)
    data["models"] = tuple(data.get("models", ()))
    for key in ("grid", "rules", "seeds"):
        if key in data:
            data[key] = tuple(data[key])
    return RunSpec(**data)


def parse_synthetic(dataset: str) -> dict:
    """'synthetic:k=v,...' -> gen_synthetic keyword arguments."""
    kwargs = {}
    body = dataset.split(":", 1)[1] if ":" in dataset else ""
    for item in filter(None, body.split(",")):
        key, _, value = item.partition("=")
        if key not in _SYNTH_KEYS:
            raise ValueError(f"unknown synthetic dataset key {key!r}")
        target = _SYNTH_KEYS[key]
        kwargs[target] = float(value) if "strength" in target else int(value)
    return kwargs


def materialize_dataset(dataset: str, out_dir: str) -> str:
    """Return a directory containing train.csv/test.csv, generating if synthetic."""
    if not dataset.startswith("synthetic:") and dataset != "synthetic":
        return dataset
    kwargs = parse_synthetic(dataset)
    tag = hashlib.sha256(json.dumps(kwargs, sort_keys=True).encode()).hexdigest()[:12]
    target = os.path.join(out_dir, "_synth", tag)
    if not os.path.exists(os.path.join(target, "meta.json")):
        gen_synthetic(target, **kwargs)
    return target


def load_records(data_dir: str) -> tuple[list, list]:
    train = corpus.load_csv(os.path.join(data_dir, "train.csv"))
    test_path = os.path.join(data_dir, "test.csv")
    test = corpus.load_csv(test_path) if os.path.exists(test_path) else []
    return train, test


def complete_config(model_spec: dict, num_labels: int, vocab_size: int) -> ModelConfig:
    spec = {k: v for k, v in model_spec.items() if k != "name"}
    allowed = {f.name for f in fields(ModelConfig)}
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown model spec keys {sorted(unknown)}")
    spec.setdefault("num_labels", num_labels)
    spec.setdefault("vocab_size", vocab_size)
    return ModelConfig(**spec)


def series_name(model_spec: dict) -> str:
    if "name" in model_spec:
        return model_spec["name"]
    family = model_spec.get("family", "latent")
    if family == "latent":
        return f"latent/{model_spec.get('structure', 'auxiliary')}"
    return family


def leg_hash(spec: RunSpec, model_spec: dict, n_per_class, seed: int, method: str) -> str:
    payload = {
        "dataset": spec.dataset,
        "model": dict(sorted(model_spec.items())),
        "n_per_class": n_per_class,
        "seed": seed,
        "method": method,
        "train": asdict(replace(spec.train, seed=0, method=training.DIRECT)),
        "prep": [spec.dev_size, spec.min_count, spec.max_tokens],
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def best_epoch_index(reports) -> int:
    best = 0
    for i, rep in enumerate(reports):
        if rep.dev_accuracy > reports[best].dev_accuracy:
            best = i
    return best


def run_leg(spec: RunSpec, model_spec: dict, n_per_class, seed: int,
            method: str | None = None) -> list[MetricsRow]:
    """Train one leg and evaluate it; one row per requested prediction rule."""
    started = time.perf_counter()
    method = method or spec.train.method
    data_dir = materialize_dataset(spec.dataset, spec.out_dir)
    train_recs, test_recs = load_records(data_dir)
    split, vocab = corpus.prepare_dataset(
        train_recs, test_recs, n_per_class=n_per_class, seed=seed,
        dev_size=spec.dev_size, min_count=spec.min_count, max_tokens=spec.max_tokens)

    config = complete_config(model_spec, split.num_labels, len(vocab))
    params = init_params(config, seed=seed)
    if config.family != "discriminative":
        fit_label_prior(params, split.train)

    train_spec = replace(spec.train, seed=seed, method=method)
    best, reports = training.train(params, split, train_spec)

    if spec.save_checkpoints:
        ckpt_dir = os.path.join(spec.out_dir, "checkpoints")
        os.makedirs(ckpt_dir, exist_ok=True)
        save_checkpoint(os.path.join(
            ckpt_dir, leg_hash(spec, model_spec, n_per_class, seed, method) + ".ckpt"),
            best, vocab)

    rules = spec.rules or (inference.default_rule(best),)
    wall = time.perf_counter() - started
    if reports:
        idx = best_epoch_index(reports)
        epoch_best, train_nll, note = reports[idx].epoch, reports[idx].train_objective, ""
    else:
        epoch_best, train_nll, note = -1, 0.0, "no epochs"
    rows = []
    for rule in rules:
        rows.append(MetricsRow(
            dataset=spec.dataset,
            family=config.family,
            structure=config.structure if config.is_latent else "",
            n_per_class=n_per_class,
            seed=seed,
            method=method,
            rule=rule,
            epoch_best=epoch_best,
            dev_acc=inference.evaluate_accuracy(split.dev, best, rule),
            test_acc=(inference.evaluate_accuracy(split.test, best, rule)
                      if split.test else 0.0),
            train_nll=train_nll,
            wall_seconds=wall,
            param_count=count_params(config),
            note=note,
        ))
    return rows


def _leg_worker(args) -> list[MetricsRow]:
    return run_leg(*args)


def _iter_legs(spec: RunSpec, model_specs, grid, methods=("",)):
    for model_spec in model_specs:
        for n in grid:
            for seed in spec.seeds:
                for method in methods:
                    yield model_spec, n, seed, (method or spec.train.method)


def run_legs(spec: RunSpec, legs) -> list[MetricsRow]:
    """Run (or resume) a list of legs, returning rows in leg order."""
    legs = list(legs)
    os.makedirs(os.path.join(spec.out_dir, "legs"), exist_ok=True)
    markers = [os.path.join(spec.out_dir, "legs",
                            leg_hash(spec, m, n, s, meth) + ".json")
               for m, n, s, meth in legs]
    pending = [(i, legs[i]) for i, marker in enumerate(markers)
               if not os.path.exists(marker)]
    results: dict[int, list[MetricsRow]] = {}

    def finish(i, rows):
        with open(markers[i], "w", encoding="utf-8") as fh:
            json.dump([asdict(r) for r in rows], fh)
        results[i] = rows

    if spec.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = {i: pool.submit(_leg_worker, (spec, m, n, s, meth))
                       for i, (m, n, s, meth) in pending}
            for i, fut in futures.items():
                try:
                    finish(i, fut.result())
                except Exception as exc:  # noqa: BLE001 - keep remaining legs running
                    results[i] = [_error_row(spec, *legs[i], exc)]
    else:
        for i, (m, n, s, meth) in pending:
            try:
                finish(i, run_leg(spec, m, n, s, meth))
            except Exception as exc:  # noqa: BLE001
                results[i] = [_error_row(spec, m, n, s, meth, exc)]

    out: list[MetricsRow] = []
    for i, marker in enumerate(markers):
        if i in results:
            out.extend(results[i])
        else:
            with open(marker, encoding="utf-8") as fh:
                out.extend(MetricsRow(**d) for d in json.load(fh))
    return out


def _error_row(spec: RunSpec, model_spec: dict, n, seed: int, method: str,
               exc: Exception) -> MetricsRow:
    family = model_spec.get("family", "latent")
    return MetricsRow(
        dataset=spec.dataset, family=family,
        structure=model_spec.get("structure", "") if family == "latent" else "",
        n_per_class=n, seed=seed, method=method, rule="", epoch_best=-1,
        dev_acc=0.0, test_acc=0.0, train_nll=0.0, wall_seconds=0.0, param_count=0,
        note=f"error: {exc}")


def run_sweep(spec: RunSpec) -> list[MetricsRow]:
    """Data-efficiency sweep: every (model, size, seed) leg, CSV, and plot."""
    os.makedirs(spec.out_dir, exist_ok=True)
    all_rows: list[MetricsRow] = []
    series: dict[str, list[tuple[float, float]]] = {}
    for model_spec in spec.models:
        rows = run_legs(spec, _iter_legs(spec, (model_spec,), spec.grid))
        all_rows.extend(rows)
        pts = []
        for n in spec.grid:
            if n is None:
                continue  # full-pool legs have no x position on the size axis
            accs = [r.dev_acc for r in rows if r.n_per_class == n and not r.note]
            if accs:
                pts.append((float(n), float(np.mean(accs))))
        if pts:
            series[series_name(model_spec)] = pts
    write_metrics(os.path.join(spec.out_dir, "metrics.csv"), all_rows)
    if series:
        line_plot(os.path.join(spec.out_dir, "accuracy_vs_size.svg"), series,
                  title="Dev accuracy vs training size",
                  xlabel="training instances per class", ylabel="dev accuracy",
                  log_x=True, y_range=(0.0, 1.0))
    return all_rows


def compare_structures(spec: RunSpec) -> list[MetricsRow]:
    """All four latent structures on one training size; prints the edge effect."""
    base = dict(spec.models[0])
    if base.get("family") != "latent":
        raise models.ConfigError("structure comparison needs a latent model spec")
    variants = [dict(base, structure=s, name=f"latent/{s}") for s in models.STRUCTURES]
    n = spec.grid[0]
    rows = run_legs(spec, _iter_legs(spec, variants, (n,)))
    write_metrics(os.path.join(spec.out_dir, "structures.csv"), rows)

    def mean_acc(structure):
        accs = [r.dev_acc for r in rows if r.structure == structure and not r.note]
        return float(np.mean(accs)) if accs else float("nan")

    print(f"{'structure':<14} {'mean dev acc':>12}")
    for s in models.STRUCTURES:
        print(f"{s:<14} {mean_acc(s):>12.4f}")
    delta = mean_acc("hierarchical") - mean_acc("middle")
    print(f"delta(hierarchical - middle) = {delta:+.4f}")
    return rows


def compare_em_direct(spec: RunSpec) -> list[MetricsRow]:
    """Paired direct/EM runs per seed on one training size."""
    base = dict(spec.models[0])
    if base.get("family") != "latent":
        raise models.ConfigError("EM comparison needs a latent model spec")
    n = spec.grid[0]
    rows = run_legs(spec, _iter_legs(spec, (base,), (n,),
                                     methods=(training.DIRECT, training.EM)))
    write_metrics(os.path.join(spec.out_dir, "em_vs_direct.csv"), rows)
    print(f"{'method':<8} {'seed':>4} {'dev acc':>9} {'best epoch':>11}")
    for row in rows:
        print(f"{row.method:<8} {row.seed:>4} {row.dev_acc:>9.4f} {row.epoch_best:>11}")
    return rows


def compare_rules(spec: RunSpec) -> dict:
    """Rule accuracies plus pairwise agreement on shared trained checkpoints."""
    base = dict(spec.models[0])
    if base.get("family") != "latent":
        raise models.ConfigError("rule comparison needs a latent model spec")
    rules = tuple(spec.rules) or inference.LATENT_RULES
    n = spec.grid[0]
    rule_spec = replace(spec, rules=rules)
    rows = run_legs(rule_spec, _iter_legs(spec, (base,), (n,)))
    write_metrics(os.path.join(spec.out_dir, "rules.csv"), rows)

    data_dir = materialize_dataset(spec.dataset, spec.out_dir)
    train_recs, test_recs = load_records(data_dir)
    agreement = np.zeros((len(rules), len(rules)))
    total_docs = 0
    for seed in spec.seeds:
        split, vocab = corpus.prepare_dataset(
            train_recs, test_recs, n_per_class=n, seed=seed,
            dev_size=spec.dev_size, min_count=spec.min_count,
            max_tokens=spec.max_tokens)
        ckpt = os.path.join(spec.out_dir, "checkpoints",
                            leg_hash(rule_spec, base, n, seed, spec.train.method) + ".ckpt")
        params, _ = load_checkpoint(ckpt)
        preds = np.array([[inference.predict(doc, params, rule)[0] for rule in rules]
                          for doc in split.dev])
        total_docs += preds.shape[0]
        for i in range(len(rules)):
            for j in range(len(rules)):
                agreement[i, j] += np.sum(preds[:, i] == preds[:, j])
    agreement /= total_docs

    print("pairwise label agreement on dev:")
    header = " ".join(f"{r[:12]:>14}" for r in rules)
    print(f"{'':<14}{header}")
    for i, rule in enumerate(rules):
        cells = " ".join(f"{agreement[i, j]:>14.4f}" for j in range(len(rules)))
        print(f"{rule[:14]:<14}{cells}")
    return {"rows": rows, "rules": rules, "agreement": agreement}
