"""Gradient-based training: direct marginal-likelihood ascent and mini-batch EM.

Both trainers minimize a mean per-example negative log objective with Adam
after global-norm gradient clipping, evaluate development accuracy after
every epoch, and early-stop on patience.  The EM variant alternates an
exact E-step (posteriors over the latent value, parameters frozen) with a
gradient M-step on the posterior-weighted complete-data log likelihood;
with a single latent value its parameter trajectory coincides exactly with
direct training under the same seed.

Minibatch gradients for distinct examples are independent and could be
accumulated by parallel workers; this implementation keeps a single
deterministic accumulation order, and all optimizer mutation happens
between evaluation phases on the calling thread.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import engine as E
from . import models
from .engine import Tape, Tensor
from .inference import default_rule, evaluate_accuracy
from .models import Params

DIRECT = "direct"
EM = "em"


@dataclass(frozen=True)
class TrainSpec:
    method: str = DIRECT
    lr: float = 0.001
    batch_size: int = 32
    max_epochs: int = 150
    patience: int = 5
    seed: int = 0
    clip_norm: float = 5.0
    m_steps: int = 1  # inner gradient steps per EM minibatch
    eval_rule: str | None = None

    def __post_init__(self):
        if self.method not in (DIRECT, EM):
            raise ValueError(f"unknown training method {self.method!r}")
        if self.lr <= 0 or self.patience < 1 or self.batch_size < 1 or self.m_steps < 1:
            raise ValueError("need lr > 0, patience >= 1, batch_size >= 1, m_steps >= 1")


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    train_objective: float  # mean negative log objective, nats per example
    dev_accuracy: float
    wall_seconds: float


class DivergenceError(RuntimeError):
    """The training objective became non-finite."""


def example_loss(doc, params: Params) -> Tensor:
    """Per-example negative log objective for the config's family."""
    family = params.config.family
    if family == "latent":
        comps = models.log_joint_components(doc, doc.label, params)
        return E.scale(E.log_sum_exp(E.stack_rows(comps)), -1.0)
    if family == "generative":
        return E.scale(models.generative_log_joint(doc, doc.label, params), -1.0)
    return E.scale(E.element(models.disc_forward(doc, params), doc.label), -1.0)


def e_step(params: Params, batch) -> np.ndarray:
    """Exact posteriors p(c | x, y) per example, parameters frozen; [B, C]."""
    if params.config.family != "latent":
        raise models.ConfigError("e_step needs a latent-family model")
    out = np.empty((len(batch), params.config.num_latent))
    for i, doc in enumerate(batch):
        res = models.log_marginal(doc, doc.label, params)
        out[i] = np.exp(np.asarray(res.components) - res.log_marginal)
    return out


def m_step(params: Params, batch, posteriors: np.ndarray, state: E.AdamState,
           clip_norm: float = 5.0, m_steps: int = 1) -> float:
    """Ascent step(s) on the posterior-weighted complete-data log likelihood.

    Posteriors stay fixed across the inner steps.  Returns the mean
    negative weighted objective of the last pass, in nats per example.
    """
    scale = 1.0 / len(batch)
    mean_neg = 0.0
    for _ in range(m_steps):
        E.zero_grads(params.tensors)
        total = 0.0
        for doc, weights in zip(batch, posteriors):
            with Tape() as tape:
                comps = models.log_joint_components(doc, doc.label, params)
                obj = E.scale(comps[0], float(weights[0]))
                for c in range(1, len(comps)):
                    obj = obj + E.scale(comps[c], float(weights[c]))
                loss = E.scale(obj, -scale)
            tape.backward(loss)
            total += -obj.item()
        if not np.isfinite(total):
            return float("nan")  # caller aborts without touching the params
        E.clip_grads(params.tensors, clip_norm)
        E.adam_step(params.tensors, state)
        mean_neg = total * scale
    return mean_neg


def _direct_batch_update(params: Params, batch, state: E.AdamState, spec: TrainSpec) -> float:
    scale = 1.0 / len(batch)
    E.zero_grads(params.tensors)
    total = 0.0
    for doc in batch:
        with Tape() as tape:
            loss = example_loss(doc, params)
            scaled = E.scale(loss, scale)
        tape.backward(scaled)
        total += loss.item()
    if not np.isfinite(total):
        return float("nan")  # caller aborts without touching the params
    E.clip_grads(params.tensors, spec.clip_norm)
    E.adam_step(params.tensors, state)
    return total * scale


def _em_batch_update(params: Params, batch, state: E.AdamState, spec: TrainSpec) -> float:
    posteriors = e_step(params, batch)
    return m_step(params, batch, posteriors, state, clip_norm=spec.clip_norm,
                  m_steps=spec.m_steps)


def _shuffle(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch, 0x0E9]).permutation(n)


def _train_loop(params: Params, split, spec: TrainSpec, batch_update,
                on_epoch=None) -> tuple[Params, list[EpochReport]]:
    train = list(split.train)
    if not train:
        raise ValueError("training split is empty")
    state = E.AdamState(params.tensors, lr=spec.lr)
    rule = spec.eval_rule or default_rule(params)
    best_params = params.clone()
    best_acc = -1.0
    epochs_since_best = 0
    reports: list[EpochReport] = []
    for epoch in range(spec.max_epochs):
        start = time.perf_counter()
        order = _shuffle(len(train), spec.seed, epoch)
        total = 0.0
        diverged = False
        for lo in range(0, len(order), spec.batch_size):
            batch = [train[i] for i in order[lo:lo + spec.batch_size]]
            batch_obj = batch_update(params, batch, state, spec)
            if not np.isfinite(batch_obj):
                diverged = True
                break
            total += batch_obj * len(batch)
        if diverged:
            break  # keep reports up to the last finite epoch
        dev_acc = evaluate_accuracy(split.dev, params, rule)
        report = EpochReport(
            epoch=epoch,
            train_objective=total / len(train),
            dev_accuracy=dev_acc,
            wall_seconds=time.perf_counter() - start,
        )
        reports.append(report)
        if on_epoch is not None:
            on_epoch(report)
        if dev_acc > best_acc:  # ties keep the earlier epoch
            best_acc = dev_acc
            best_params = params.clone()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= spec.patience:
                break
    if spec.max_epochs == 0:
        return params, reports
    return best_params, reports


def train_direct(params: Params, split, spec: TrainSpec,
                 on_epoch=None) -> tuple[Params, list[EpochReport]]:
    """Minimize the mean negative log objective by direct gradient descent."""
    return _train_loop(params, split, spec, _direct_batch_update, on_epoch=on_epoch)


def train_em(params: Params, split, spec: TrainSpec,
             on_epoch=None) -> tuple[Params, list[EpochReport]]:
    """Mini-batch EM: per batch, an exact E-step then gradient M-step(s)."""
    if params.config.family != "latent":
        raise models.ConfigError("train_em needs a latent-family model")
    return _train_loop(params, split, spec, _em_batch_update, on_epoch=on_epoch)


def train(params: Params, split, spec: TrainSpec, on_epoch=None):
    """Dispatch on spec.method."""
    fn = train_em if spec.method == EM else train_direct
    return fn(params, split, spec, on_epoch=on_epoch)


@dataclass
class _SplitView:
    train: tuple
    dev: tuple
    test: tuple = ()
    num_labels: int = 0
    label_counts: tuple = field(default_factory=tuple)


def split_view(train, dev, test=()) -> _SplitView:
    """Lightweight stand-in for DatasetSplit when only docs are at hand."""
    return _SplitView(train=tuple(train), dev=tuple(dev), test=tuple(test))
