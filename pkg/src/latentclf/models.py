"""Classifier families as log-probability computations over the tensor engine.

Five families are covered: a discriminative LSTM classifier, a standard
generative classifier p(x|y)p(y), and discrete-latent generative
classifiers in four graphical configurations that differ in which directed
edges connect the label y, the latent value c, and the text x:

* ``auxiliary``:     p(x | c, y) * p(c)     * p(y)
* ``joint``:         p(x | c)    * p(y | c) * p(c)
* ``middle``:        p(x | c)    * p(c | y) * p(y)
* ``hierarchical``:  p(x | c, y) * p(c | y) * p(y)

The text factor is an LSTM conditional language model: the next-token
logits are the output-embedding scores of the LSTM state plus per-label
and per-latent shift vectors (equivalently, the softmax input is the
concatenation [h_t; v_y; v_c] against a block-structured output matrix).
The hidden states therefore do not depend on (y, c), and one LSTM pass per
document is shared across every label/latent combination.

The label prior p(y) is an empirical distribution fixed at estimation
time; it never receives gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import engine as E
from .corpus import EncodedDocument
from .engine import Tensor

FAMILIES = ("discriminative", "generative", "latent")
STRUCTURES = ("auxiliary", "joint", "middle", "hierarchical")


class ConfigError(ValueError):
    """Model configuration is inconsistent with the requested operation."""


@dataclass(frozen=True)
class ModelConfig:
    family: str
    num_labels: int
    vocab_size: int
    structure: str = "auxiliary"
    d_word: int = 100
    d_hidden: int = 100
    d1: int = 100  # label embedding size
    d2: int = 10  # latent embedding size
    num_latent: int = 10
    init_scale: float = 0.1
    forget_bias: float = 1.0
    smooth_label_prior: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.structure not in STRUCTURES:
            raise ConfigError(f"unknown structure {self.structure!r}")
        if self.num_labels < 1 or self.vocab_size < 1:
            raise ConfigError("num_labels and vocab_size must be positive")
        if self.family == "latent" and self.num_latent < 1:
            raise ConfigError(f"latent family needs num_latent >= 1, got {self.num_latent}")

    @property
    def is_latent(self) -> bool:
        return self.family == "latent"

    @property
    def text_conditioned_on_label(self) -> bool:
        """Whether the conditional LM has a direct y -> x edge."""
        if self.family == "generative":
            return True
        return self.is_latent and self.structure in ("auxiliary", "hierarchical")

    @property
    def text_conditioned_on_latent(self) -> bool:
        return self.is_latent

    @property
    def d_softmax_in(self) -> int:
        d = self.d_hidden
        if self.text_conditioned_on_label:
            d += self.d1
        if self.text_conditioned_on_latent:
            d += self.d2
        return d


@dataclass
class Params:
    """All learnable tensors for one model, plus the fixed label prior."""

    config: ModelConfig
    tensors: dict[str, Tensor]
    label_prior: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.label_prior is None:
            self.label_prior = np.full(self.config.num_labels, 1.0 / self.config.num_labels)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def clone(self) -> "Params":
        fresh = {name: E.parameter(t.data.copy()) for name, t in self.tensors.items()}
        return Params(config=self.config, tensors=fresh, label_prior=self.label_prior.copy())

    def num_scalars(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def log_label_prior(self, y: int) -> float:
        return float(np.log(self.label_prior[y]))


def init_params(config: ModelConfig, seed: int = 0) -> Params:
    """Allocate and initialize every learnable array for the config.

    Weights are uniform in [-init_scale, init_scale] from a seeded
    generator; the LSTM forget-gate bias starts at ``forget_bias``.
    """
    rng = np.random.default_rng([seed, 0x1417])
    s = config.init_scale

    def u(*shape):
        return E.parameter(rng.uniform(-s, s, size=shape))

    t: dict[str, Tensor] = {}
    t["word_emb"] = u(config.vocab_size, config.d_word)
    wx, wh, b = E.init_lstm_params(config.d_word, config.d_hidden, rng,
                                   init_scale=s, forget_bias=config.forget_bias)
    t["lstm_wx"], t["lstm_wh"], t["lstm_b"] = wx, wh, b

    if config.family == "discriminative":
        t["cls_w"] = u(config.d_hidden, config.num_labels)
        t["cls_b"] = u(config.num_labels)
        return Params(config=config, tensors=t)

    t["out_hidden"] = u(config.d_hidden, config.vocab_size)
    t["out_bias"] = u(config.vocab_size)
    if config.text_conditioned_on_label:
        t["label_emb"] = u(config.num_labels, config.d1)
        t["out_label"] = u(config.d1, config.vocab_size)
    if config.is_latent:
        t["latent_emb"] = u(config.num_latent, config.d2)
        t["out_latent"] = u(config.d2, config.vocab_size)
        if config.structure in ("auxiliary", "joint"):
            t["latent_prior_w"] = u(config.num_latent, config.d2)
            t["latent_prior_b"] = u(config.num_latent)
        if config.structure in ("middle", "hierarchical"):
            if "label_emb" not in t:
                t["label_emb"] = u(config.num_labels, config.d1)
            t["latent_from_label_w"] = u(config.d1, config.num_latent)
            t["latent_from_label_b"] = u(config.num_latent)
        if config.structure == "joint":
            t["label_from_latent_w"] = u(config.d2, config.num_labels)
            t["label_from_latent_b"] = u(config.num_labels)
    return Params(config=config, tensors=t)


def fit_label_prior(params: Params, docs) -> None:
    """Maximum-likelihood label prior from training docs; optional add-one smoothing."""
    counts = np.zeros(params.config.num_labels)
    for doc in docs:
        counts[doc.label] += 1
    if params.config.smooth_label_prior:
        counts += 1.0
    if counts.sum() == 0 or (counts == 0).any():
        raise ConfigError(
            "label prior needs every label present; enable smooth_label_prior for sparse data"
        )
    params.label_prior = counts / counts.sum()


# ---------------------------------------------------------------------------
# prior heads


def latent_prior_logp(params: Params) -> Tensor:
    """log p(c) over all latent values; logits are w_c . v_c + b_c."""
    logits = E.sum_rows(E.mul(params["latent_prior_w"], params["latent_emb"]))
    return E.log_softmax(logits + params["latent_prior_b"])


def latent_given_label_logp(params: Params, y: int) -> Tensor:
    """log p(c | y) over all latent values (middle/hierarchical head)."""
    v_y = E.row(params["label_emb"], y)
    return E.log_softmax(E.affine(v_y, params["latent_from_label_w"],
                                  params["latent_from_label_b"]))


def label_given_latent_logp(params: Params, c: int) -> Tensor:
    """log p(y | c) over all labels (joint head)."""
    v_c = E.row(params["latent_emb"], c)
    return E.log_softmax(E.affine(v_c, params["label_from_latent_w"],
                                  params["label_from_latent_b"]))


# ---------------------------------------------------------------------------
# conditional language model scoring


def _doc_ids(doc) -> tuple[int, ...]:
    return doc.ids if isinstance(doc, EncodedDocument) else tuple(doc)


class DocScorer:
    """Teacher-forced scoring for one document, sharing a single LSTM pass.

    Valid only within the tape context (or no-tape context) in which it was
    constructed.  Prediction steps run for t = 1..T-1 of the encoded ids:
    the start marker is input-only and the end marker is a predicted
    target.
    """

    def __init__(self, doc, params: Params):
        ids = _doc_ids(doc)
        if len(ids) < 2:
            raise ValueError(f"document must contain at least [BOS, EOS], got {len(ids)} ids")
        self.params = params
        self.targets = np.asarray(ids[1:], dtype=np.intp)
        inputs = np.asarray(ids[:-1], dtype=np.intp)
        x = E.rows(params["word_emb"], inputs)
        h_seq = E.run_lstm(x, params["lstm_wx"], params["lstm_wh"], params["lstm_b"])
        self.base = E.affine(h_seq, params["out_hidden"], params["out_bias"])
        self._shifts: dict[tuple[str, int], Tensor] = {}

    def _shift(self, kind: str, idx: int) -> Tensor:
        key = (kind, idx)
        if key not in self._shifts:
            emb, proj = (("label_emb", "out_label") if kind == "label"
                         else ("latent_emb", "out_latent"))
            self._shifts[key] = E.matmul(E.row(self.params[emb], idx), self.params[proj])
        return self._shifts[key]

    def lm_log_prob(self, y: int | None = None, c: int | None = None) -> Tensor:
        """Scalar log p(x | conditions) per the config's conditioning edges."""
        cfg = self.params.config
        shift: Tensor | None = None
        if cfg.text_conditioned_on_label:
            if y is None:
                raise ConfigError("this model conditions text on the label; y is required")
            shift = self._shift("label", y)
        if cfg.text_conditioned_on_latent:
            if c is None:
                raise ConfigError("this model conditions text on the latent value; c is required")
            shift = self._shift("latent", c) if shift is None else shift + self._shift("latent", c)
        logits = self.base if shift is None else E.add_row(self.base, shift)
        logp = E.log_softmax(logits)
        return E.sum_all(E.pick(logp, self.targets))

    def step_log_probs(self, y: int | None = None, c: int | None = None) -> np.ndarray:
        """[T-1, vocab] matrix of per-step next-token log distributions."""
        cfg = self.params.config
        shift = np.zeros(cfg.vocab_size)
        if cfg.text_conditioned_on_label and y is not None:
            shift = shift + self._shift("label", y).data
        if cfg.text_conditioned_on_latent and c is not None:
            shift = shift + self._shift("latent", c).data
        logits = self.base.data + shift
        m = logits.max(axis=1, keepdims=True)
        shifted = logits - m
        return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def conditional_lm_log_prob(doc, params: Params, y: int | None = None,
                            c: int | None = None) -> Tensor:
    """log p(x | conditions) for one encoded document."""
    return DocScorer(doc, params).lm_log_prob(y=y, c=c)


# ---------------------------------------------------------------------------
# joint scores and marginals


def _check_latent_args(params: Params, y: int, c: int) -> None:
    cfg = params.config
    if not cfg.is_latent:
        raise ConfigError(f"latent log joint needs family 'latent', got {cfg.family!r}")
    if not (0 <= y < cfg.num_labels):
        raise ConfigError(f"label {y} out of range [0, {cfg.num_labels})")
    if not (0 <= c < cfg.num_latent):
        raise ConfigError(f"latent value {c} out of range [0, {cfg.num_latent})")


def _joint_terms(scorer: DocScorer, y: int, c: int,
                 prior_cache: dict) -> tuple[Tensor, Tensor]:
    """(x/y part, c-generation part) of the log joint for one (y, c).

    The sum of the two tensors is the full log joint.  The c-generation
    part is the structure's term that generates c: p(c) for auxiliary and
    joint, p(c | y) for middle and hierarchical.  The remainder holds the
    text factor plus the label term.
    """
    params = scorer.params
    structure = params.config.structure
    if structure == "auxiliary":
        rest = scorer.lm_log_prob(y=y, c=c) + Tensor(params.log_label_prior(y))
        key = ("prior",)
        if key not in prior_cache:
            prior_cache[key] = latent_prior_logp(params)
        c_term = E.element(prior_cache[key], c)
    elif structure == "joint":
        key = ("label_head", c)
        if key not in prior_cache:
            prior_cache[key] = label_given_latent_logp(params, c)
        rest = scorer.lm_log_prob(c=c) + E.element(prior_cache[key], y)
        key = ("prior",)
        if key not in prior_cache:
            prior_cache[key] = latent_prior_logp(params)
        c_term = E.element(prior_cache[key], c)
    elif structure == "middle":
        rest = scorer.lm_log_prob(c=c) + Tensor(params.log_label_prior(y))
        key = ("latent_head", y)
        if key not in prior_cache:
            prior_cache[key] = latent_given_label_logp(params, y)
        c_term = E.element(prior_cache[key], c)
    else:  # hierarchical
        rest = scorer.lm_log_prob(y=y, c=c) + Tensor(params.log_label_prior(y))
        key = ("latent_head", y)
        if key not in prior_cache:
            prior_cache[key] = latent_given_label_logp(params, y)
        c_term = E.element(prior_cache[key], c)
    return rest, c_term


def latent_log_joint(doc, y: int, c: int, params: Params) -> Tensor:
    """Scalar log p(x, y, c) under the config's structure."""
    _check_latent_args(params, y, c)
    scorer = DocScorer(doc, params)
    rest, c_term = _joint_terms(scorer, y, c, {})
    return rest + c_term


@dataclass(frozen=True)
class LogJointResult:
    """Per-latent-value log joints and their log-sum-exp marginal."""

    components: tuple[float, ...]
    log_marginal: float

    def __post_init__(self):
        hi = max(self.components)
        n = len(self.components)
        if not (hi - 1e-9 <= self.log_marginal <= hi + math.log(n) + 1e-9):
            raise ValueError("log marginal outside its log-sum-exp bounds")


def log_joint_components(doc, y: int, params: Params,
                         scorer: DocScorer | None = None) -> list[Tensor]:
    """All per-latent log joints [l_0 .. l_{C-1}] for a document and label."""
    _check_latent_args(params, y, 0)
    if scorer is None:
        scorer = DocScorer(doc, params)
    cache: dict = {}
    return [E.add(*_joint_terms(scorer, y, c, cache))
            for c in range(params.config.num_latent)]


def log_marginal(doc, y: int, params: Params) -> LogJointResult:
    """log sum_c p(x, y, c); for the generative family, the single log joint."""
    cfg = params.config
    if cfg.family == "generative":
        score = generative_log_joint(doc, y, params).item()
        return LogJointResult(components=(score,), log_marginal=score)
    comps = log_joint_components(doc, y, params)
    values = tuple(c.item() for c in comps)
    lse = E.log_sum_exp(Tensor(np.array(values))).item()
    return LogJointResult(components=values, log_marginal=lse)


def generative_log_joint(doc, y: int, params: Params) -> Tensor:
    """Scalar log p(x, y) = log p(x | y) + log p(y) for the generative family."""
    if params.config.family != "generative":
        raise ConfigError(f"generative log joint needs family 'generative', got {params.config.family!r}")
    return conditional_lm_log_prob(doc, params, y=y) + Tensor(params.log_label_prior(y))


def disc_forward(doc, params: Params) -> Tensor:
    """Log label distribution from mean-pooled LSTM states over all tokens."""
    if params.config.family != "discriminative":
        raise ConfigError(f"disc_forward needs family 'discriminative', got {params.config.family!r}")
    ids = np.asarray(_doc_ids(doc), dtype=np.intp)
    x = E.rows(params["word_emb"], ids)
    h_seq = E.run_lstm(x, params["lstm_wx"], params["lstm_wh"], params["lstm_b"])
    pooled = E.mean_rows(h_seq)
    return E.log_softmax(E.affine(pooled, params["cls_w"], params["cls_b"]))


def joint_score_table(doc, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Inference-mode [num_labels, num_latent] tables of log joints.

    Returns (full log joints L, c-generation terms R) with L[y, c] =
    log p(x, y, c) and R[y, c] the structure's c-generation term, so that
    L - R is the posterior-reweighting base.  Must be called with no tape
    active (read-only scoring).
    """
    cfg = params.config
    scorer = DocScorer(doc, params)
    cache: dict = {}
    L = np.empty((cfg.num_labels, cfg.num_latent))
    R = np.empty_like(L)
    for y in range(cfg.num_labels):
        for c in range(cfg.num_latent):
            rest, c_term = _joint_terms(scorer, y, c, cache)
            R[y, c] = c_term.item()
            L[y, c] = rest.item() + R[y, c]
    return L, R


# ---------------------------------------------------------------------------
# parameter counting


def count_params(config: ModelConfig) -> int:
    """Closed-form count of learnable scalars (the fixed label prior excluded)."""
    d_h = config.d_hidden
    n = config.vocab_size * config.d_word
    n += config.d_word * 4 * d_h + d_h * 4 * d_h + 4 * d_h
    if config.family == "discriminative":
        return n + d_h * config.num_labels + config.num_labels
    n += config.vocab_size * config.d_softmax_in + config.vocab_size
    has_label_emb = config.text_conditioned_on_label or (
        config.is_latent and config.structure in ("middle", "hierarchical"))
    if has_label_emb:
        n += config.num_labels * config.d1
    if config.is_latent:
        n += config.num_latent * config.d2
        if config.structure in ("auxiliary", "joint"):
            n += config.num_latent * config.d2 + config.num_latent
        if config.structure in ("middle", "hierarchical"):
            n += config.d1 * config.num_latent + config.num_latent
        if config.structure == "joint":
            n += config.d2 * config.num_labels + config.num_labels
    return n


def pc_configs(base: ModelConfig, gen_d1: int = 110, lat_d1: int = 100,
               lat_num_latent: int = 10, lat_d2: int = 10) -> tuple[ModelConfig, ModelConfig]:
    """Parameter-comparison pair: generative vs latent with equal softmax width."""
    gen = replace(base, family="generative", d1=gen_d1)
    lat = replace(base, family="latent", structure="auxiliary", d1=lat_d1,
                  num_latent=lat_num_latent, d2=lat_d2)
    if gen.d_softmax_in != lat.d_softmax_in:
        raise ConfigError(
            f"PC configs must share output width, got {gen.d_softmax_in} vs {lat.d_softmax_in}")
    return gen, lat
