"""Label prediction rules and accuracy evaluation.

Latent models support three rules: marginalizing the latent value under
the learned prior (the default), marginalizing under the per-label
posterior, and maximizing over the latent value.  The baseline families
each have their single argmax rule.  All scoring runs in log space and
ties break toward the lowest label index.
"""

from __future__ import annotations

import numpy as np

from .models import ConfigError, Params, DocScorer, disc_forward, joint_score_table

MARGINALIZE_PRIOR = "marginalize_prior"
MARGINALIZE_POSTERIOR = "marginalize_posterior"
MAX_LATENT = "max_latent"
DISCRIMINATIVE_ARGMAX = "discriminative_argmax"
GENERATIVE_ARGMAX = "generative_argmax"

LATENT_RULES = (MARGINALIZE_PRIOR, MARGINALIZE_POSTERIOR, MAX_LATENT)
RULES = LATENT_RULES + (DISCRIMINATIVE_ARGMAX, GENERATIVE_ARGMAX)


def default_rule(params: Params) -> str:
    return {
        "discriminative": DISCRIMINATIVE_ARGMAX,
        "generative": GENERATIVE_ARGMAX,
        "latent": MARGINALIZE_PRIOR,
    }[params.config.family]


def _check_rule(params: Params, rule: str) -> None:
    family = params.config.family
    if rule not in RULES:
        raise ConfigError(f"unknown prediction rule {rule!r}")
    wanted = {"discriminative": (DISCRIMINATIVE_ARGMAX,),
              "generative": (GENERATIVE_ARGMAX,),
              "latent": LATENT_RULES}[family]
    if rule not in wanted:
        raise ConfigError(f"rule {rule!r} is not valid for family {family!r}")


def _log_softmax_rows(m: np.ndarray) -> np.ndarray:
    shifted = m - m.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def label_scores(doc, params: Params, rule: str) -> np.ndarray:
    """Per-label log scores under the given rule (read-only, no tape)."""
    _check_rule(params, rule)
    cfg = params.config
    if rule == DISCRIMINATIVE_ARGMAX:
        return disc_forward(doc, params).data.copy()
    if rule == GENERATIVE_ARGMAX:
        scorer = DocScorer(doc, params)
        prior = np.log(params.label_prior)
        return np.array([scorer.lm_log_prob(y=y).item() + prior[y]
                         for y in range(cfg.num_labels)])

    joints, c_terms = joint_score_table(doc, params)
    if rule == MARGINALIZE_PRIOR:
        m = joints.max(axis=1)
        return m + np.log(np.exp(joints - m[:, None]).sum(axis=1))
    if rule == MAX_LATENT:
        return joints.max(axis=1)
    # marginalize under the posterior: replace the c-generation term of each
    # log joint with log p(c | x, y) and re-marginalize
    log_post = _log_softmax_rows(joints)
    reweighted = (joints - c_terms) + log_post
    m = reweighted.max(axis=1)
    return m + np.log(np.exp(reweighted - m[:, None]).sum(axis=1))


def predict(doc, params: Params, rule: str | None = None) -> tuple[int, np.ndarray]:
    """(label, per-label scores); argmax ties go to the lowest index."""
    if rule is None:
        rule = default_rule(params)
    scores = label_scores(doc, params, rule)
    return int(np.argmax(scores)), scores


def evaluate_accuracy(docs, params: Params, rule: str | None = None) -> float:
    """Exact-match accuracy over a split; deterministic and order-independent."""
    docs = list(docs)
    if not docs:
        raise ValueError("cannot evaluate accuracy on an empty split")
    correct = sum(1 for doc in docs if predict(doc, params, rule)[0] == doc.label)
    return correct / len(docs)
