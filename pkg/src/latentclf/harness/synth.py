"""Synthetic dataset generator with a known ground-truth process.

Documents are sampled from a latent-mixture process that mirrors the
auxiliary graphical structure: a uniform label y, a latent value c from a
fixed non-uniform prior, and tokens from a per-(y, c) unigram distribution
tilted by a shared bigram factor.  Because the true process is known, the
Bayes-optimal classifier is computable: exactly (by enumerating every
token sequence) on tiny configurations, or by scoring the held-out sample
otherwise.  The generator writes train/test CSVs in the same quoted format
as the real datasets plus a JSON sidecar holding the process parameters
and the Bayes/chance reference accuracies.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

START_CONTEXT = -1  # bigram row for the first token
ENUMERATION_LIMIT = 300_000  # max sequences for exact Bayes evaluation


@dataclass(frozen=True)
class SyntheticSpec:
    num_labels: int = 4
    num_latent: int = 3
    vocab_size: int = 200
    n_train: int = 4000
    n_test: int = 1000
    seed: int = 0
    label_strength: float = 3.0
    label_fraction: float = 0.08  # fraction of the vocabulary that are label signature words
    latent_strength: float = 3.5
    latent_fraction: float = 0.12  # fraction that are latent-mode signature words
    interaction_strength: float = 0.0
    interaction_fraction: float = 0.15  # fraction affected per (y, c) when enabled
    noise_strength: float = 0.3
    bigram_strength: float = 0.4
    min_len: int = 8
    max_len: int = 14

    def __post_init__(self):
        if min(self.num_labels, self.num_latent, self.vocab_size) < 1:
            raise ValueError("num_labels, num_latent, and vocab_size must be >= 1")
        if not (1 <= self.min_len <= self.max_len):
            raise ValueError("need 1 <= min_len <= max_len")


class TrueProcess:
    """The generating distributions, reconstructible from the sidecar.

    Unigram logits for a (label, latent) pair combine an additive label
    part, an additive latent part, and a label-latent interaction part;
    the interaction makes which words carry label evidence depend on the
    latent value, so classifying well requires inferring the latent value
    at the document level rather than averaging it out.
    """

    def __init__(self, spec: SyntheticSpec):
        rng = np.random.default_rng([spec.seed, 0x517])
        self.spec = spec

        def sparse(shape, fraction, strength):
            mask = rng.random(shape) < fraction
            return strength * mask * rng.standard_normal(shape)

        # heavy-tailed signature words: sparse large logits make the softmax
        # normalizer couple the label and latent factors, so the evidential
        # weight of a label word depends on the active mode
        self.label_logits = (sparse((spec.num_labels, spec.vocab_size),
                                    spec.label_fraction, spec.label_strength)
                             + spec.noise_strength * rng.standard_normal(
                                 (spec.num_labels, spec.vocab_size)))
        self.latent_logits = sparse((spec.num_latent, spec.vocab_size),
                                    spec.latent_fraction, spec.latent_strength)
        self.interaction_logits = sparse(
            (spec.num_labels, spec.num_latent, spec.vocab_size),
            spec.interaction_fraction, spec.interaction_strength)
        # last bigram row is the start-of-document context
        self.bigram_logits = spec.bigram_strength * rng.standard_normal(
            (spec.vocab_size + 1, spec.vocab_size))
        weights = np.arange(1, spec.num_latent + 1, dtype=np.float64)
        self.latent_prior = weights / weights.sum()

    def token_log_dist(self, y: int, c: int, prev: int) -> np.ndarray:
        logits = (self.label_logits[y] + self.latent_logits[c]
                  + self.interaction_logits[y, c] + self.bigram_logits[prev])
        m = logits.max()
        s = logits - m
        return s - np.log(np.exp(s).sum())

    def doc_log_likelihood(self, tokens, y: int, c: int) -> float:
        total = 0.0
        prev = START_CONTEXT
        for w in tokens:
            total += self.token_log_dist(y, c, prev)[w]
            prev = w
        return total

    def label_posterior(self, tokens) -> np.ndarray:
        """p(y | tokens); the label prior is uniform and the length factor cancels."""
        spec = self.spec
        scores = np.empty(spec.num_labels)
        log_prior = np.log(self.latent_prior)
        for y in range(spec.num_labels):
            comps = np.array([self.doc_log_likelihood(tokens, y, c) + log_prior[c]
                              for c in range(spec.num_latent)])
            m = comps.max()
            scores[y] = m + np.log(np.exp(comps - m).sum())
        m = scores.max()
        post = np.exp(scores - m)
        return post / post.sum()

    def sample_doc(self, rng: np.random.Generator) -> tuple[int, int, list[int]]:
        spec = self.spec
        y = int(rng.integers(spec.num_labels))
        c = int(rng.choice(spec.num_latent, p=self.latent_prior))
        length = int(rng.integers(spec.min_len, spec.max_len + 1))
        tokens = []
        prev = START_CONTEXT
        for _ in range(length):
            dist = np.exp(self.token_log_dist(y, c, prev))
            w = int(rng.choice(spec.vocab_size, p=dist / dist.sum()))
            tokens.append(w)
            prev = w
        return y, c, tokens

    def exact_bayes_accuracy(self) -> float | None:
        """Enumerated P(argmax-posterior label is correct), or None if too large.

        Lengths are uniform on [min_len, max_len]; the per-length terms are
        P(correct | L) = sum_x p(x | L) * max_y p(y | x).
        """
        spec = self.spec
        total_seqs = sum(spec.vocab_size ** L
                         for L in range(spec.min_len, spec.max_len + 1))
        if total_seqs > ENUMERATION_LIMIT:
            return None
        log_prior = np.log(self.latent_prior)
        p_len = 1.0 / (spec.max_len - spec.min_len + 1)
        correct = 0.0
        for length in range(spec.min_len, spec.max_len + 1):
            for tokens in itertools.product(range(spec.vocab_size), repeat=length):
                # joint over (y, c) for this sequence
                joints = np.empty((spec.num_labels, spec.num_latent))
                for y in range(spec.num_labels):
                    for c in range(spec.num_latent):
                        joints[y, c] = (self.doc_log_likelihood(tokens, y, c)
                                        + log_prior[c] - np.log(spec.num_labels))
                m = joints.max()
                mass = np.exp(joints - m)
                per_label = mass.sum(axis=1)
                p_x = np.exp(m) * per_label.sum()
                correct += p_len * p_x * (per_label.max() / per_label.sum())
        return float(correct)

    def monte_carlo_bayes_accuracy(self, docs) -> float:
        hits = sum(1 for y, _, tokens in docs
                   if int(np.argmax(self.label_posterior(tokens))) == y)
        return hits / len(docs) if docs else float("nan")


def _write_csv(path, docs) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_ALL)
        for y, _, tokens in docs:
            writer.writerow([y + 1, " ".join(f"w{w:03d}" for w in tokens)])


def gen_synthetic(out_dir, num_labels: int = 4, num_latent: int = 3,
                  vocab_size: int = 200, n_train: int = 4000, n_test: int = 1000,
                  seed: int = 0, **process_kw) -> dict:
    """Write train.csv, test.csv, and meta.json under out_dir; returns the sidecar."""
    spec = SyntheticSpec(num_labels=num_labels, num_latent=num_latent,
                         vocab_size=vocab_size, n_train=n_train, n_test=n_test,
                         seed=seed, **process_kw)
    process = TrueProcess(spec)
    rng = np.random.default_rng([spec.seed, 0xD0C5])
    train_docs = [process.sample_doc(rng) for _ in range(spec.n_train)]
    test_docs = [process.sample_doc(rng) for _ in range(spec.n_test)]

    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "train.csv"), train_docs)
    _write_csv(os.path.join(out_dir, "test.csv"), test_docs)

    exact = process.exact_bayes_accuracy()
    if exact is not None:
        bayes, mode = exact, "exact"
    else:
        scored = test_docs if test_docs else train_docs
        bayes, mode = process.monte_carlo_bayes_accuracy(scored), "monte_carlo"
    sidecar = {
        "spec": asdict(spec),
        "bayes_accuracy": bayes,
        "bayes_accuracy_mode": mode,
        "chance_accuracy": 1.0 / spec.num_labels,
        "latent_prior": process.latent_prior.tolist(),
        "label_logits": process.label_logits.tolist(),
        "latent_logits": process.latent_logits.tolist(),
        "interaction_logits": process.interaction_logits.tolist(),
        "bigram_logits": process.bigram_logits.tolist(),
        "train_latent_counts": np.bincount([c for _, c, _ in train_docs],
                                           minlength=spec.num_latent).tolist(),
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh)
    return sidecar


def load_sidecar(out_dir) -> dict:
    with open(os.path.join(out_dir, "meta.json"), encoding="utf-8") as fh:
        return json.load(fh)
