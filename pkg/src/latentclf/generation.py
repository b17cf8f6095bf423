"""Temperature-controlled ancestral sampling from trained generative models.

Sampling fixes the label (and, for latent models, either a chosen latent
value or one drawn from the model's own latent distribution), then walks
the conditional language model token by token: logits are divided by the
temperature, renormalized, and sampled.  The start marker and the unknown
token are masked out of the sampling support.  Temperatures at or below
``GREEDY_EPS`` switch to exact argmax decoding.

Each sample owns a PRNG stream derived from (seed, sample index), so
independent samples are reproducible in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine as E
from .corpus import BOS_ID, EOS_ID, UNK_ID, Vocabulary
from .engine import Tensor
from .models import (
    ConfigError,
    Params,
    latent_given_label_logp,
    latent_prior_logp,
)

GREEDY_EPS = 1e-6
MARGINAL = "marginal"


@dataclass(frozen=True)
class SampleSpec:
    label: int
    latent: int | str | None = None  # an index, "marginal", or None (non-latent models)
    temperature: float = 0.6
    max_len: int = 82
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.max_len < 2:
            raise ConfigError(f"max_len must be >= 2, got {self.max_len}")


def temperature_probs(logits: np.ndarray, temperature: float,
                      masked_ids: tuple[int, ...] = ()) -> np.ndarray:
    """Probabilities proportional to exp(logit / temperature), masked ids at 0."""
    scaled = np.asarray(logits, dtype=np.float64) / temperature
    scaled = scaled - scaled.max()
    probs = np.exp(scaled)
    for i in masked_ids:
        probs[i] = 0.0
    return probs / probs.sum()


def _draw(rng: np.random.Generator, logits: np.ndarray, temperature: float,
          masked_ids: tuple[int, ...]) -> int:
    if temperature <= GREEDY_EPS:
        masked = logits.copy()
        for i in masked_ids:
            masked[i] = -np.inf
        return int(np.argmax(masked))
    probs = temperature_probs(logits, temperature, masked_ids)
    return int(rng.choice(probs.shape[0], p=probs))


def _draw_latent(rng: np.random.Generator, params: Params, y: int) -> int:
    cfg = params.config
    if cfg.structure in ("auxiliary", "joint"):
        logp = latent_prior_logp(params).data
    else:
        logp = latent_given_label_logp(params, y).data
    return int(rng.choice(logp.shape[0], p=np.exp(logp) / np.exp(logp).sum()))


def _resolve_conditions(spec: SampleSpec, params: Params,
                        rng: np.random.Generator) -> tuple[int | None, int | None]:
    cfg = params.config
    if cfg.family == "discriminative":
        raise ConfigError("sampling needs a generative or latent model")
    if not (0 <= spec.label < cfg.num_labels):
        raise ConfigError(f"label {spec.label} out of range [0, {cfg.num_labels})")
    if not cfg.is_latent:
        if spec.latent not in (None, MARGINAL):
            raise ConfigError("latent value given for a non-latent model")
        return (spec.label if cfg.text_conditioned_on_label else None), None
    if spec.latent is None or spec.latent == MARGINAL:
        c = _draw_latent(rng, params, spec.label)
    else:
        c = int(spec.latent)
        if not (0 <= c < cfg.num_latent):
            raise ConfigError(f"latent value {c} out of range [0, {cfg.num_latent})")
    y = spec.label if cfg.text_conditioned_on_label else None
    return y, c


def sample(spec: SampleSpec, params: Params, vocab: Vocabulary,
           index: int = 0) -> tuple[str, list[int]]:
    """One sampled document: (detokenized text, raw ids including markers).

    The id sequence starts with BOS and either ends with EOS or has length
    exactly ``spec.max_len``.
    """
    rng = np.random.default_rng([spec.seed, index, 0x5ED])
    y, c = _resolve_conditions(spec, params, rng)
    cfg = params.config

    shift = np.zeros(cfg.vocab_size)
    if y is not None:
        shift += params["label_emb"].data[y] @ params["out_label"].data
    if c is not None:
        shift += params["latent_emb"].data[c] @ params["out_latent"].data

    d_h = cfg.d_hidden
    h = Tensor(np.zeros(d_h))
    cell = Tensor(np.zeros(d_h))
    ids = [BOS_ID]
    while len(ids) < spec.max_len:
        x = Tensor(params["word_emb"].data[ids[-1]])
        h, cell = E.lstm_cell(x, h, cell, params["lstm_wx"], params["lstm_wh"],
                              params["lstm_b"])
        logits = h.data @ params["out_hidden"].data + params["out_bias"].data + shift
        tok = _draw(rng, logits, spec.temperature, masked_ids=(BOS_ID, UNK_ID))
        ids.append(tok)
        if tok == EOS_ID:
            break
    text = " ".join(vocab.id_to_token[i] for i in ids[1:] if i != EOS_ID)
    return text, ids


def sample_many(spec: SampleSpec, params: Params, vocab: Vocabulary,
                n: int) -> list[tuple[str, list[int]]]:
    """n independent samples, one PRNG stream per sample index."""
    return [sample(spec, params, vocab, index=i) for i in range(n)]
