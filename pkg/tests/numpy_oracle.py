"""Independent plain-numpy re-derivation of the model probabilities.

Deliberately avoids the tensor engine: forward passes are recomputed from
the raw parameter arrays with numpy only, so these functions can serve as
oracles for the engine-based code paths.
"""

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _log_softmax(v):
    m = v.max()
    s = v - m
    return s - np.log(np.exp(s).sum())


def lstm_states(input_ids, params):
    """Hidden state after each input token, pure numpy; [len(ids), d_h]."""
    emb = params["word_emb"].data
    wx, wh, b = params["lstm_wx"].data, params["lstm_wh"].data, params["lstm_b"].data
    d_h = wh.shape[0]
    h = np.zeros(d_h)
    c = np.zeros(d_h)
    states = []
    for tok in input_ids:
        z = emb[tok] @ wx + h @ wh + b
        i = _sigmoid(z[:d_h])
        f = _sigmoid(z[d_h:2 * d_h])
        g = np.tanh(z[2 * d_h:3 * d_h])
        o = _sigmoid(z[3 * d_h:])
        c = f * c + i * g
        h = o * np.tanh(c)
        states.append(h.copy())
    return np.stack(states)


def step_log_dists(input_ids, params, y=None, c=None):
    """Per-step next-token log distributions after each of input_ids."""
    cfg = params.config
    states = lstm_states(input_ids, params)
    logits = states @ params["out_hidden"].data + params["out_bias"].data
    if cfg.text_conditioned_on_label and y is not None:
        logits = logits + params["label_emb"].data[y] @ params["out_label"].data
    if cfg.text_conditioned_on_latent and c is not None:
        logits = logits + params["latent_emb"].data[c] @ params["out_latent"].data
    return np.stack([_log_softmax(row) for row in logits])


def lm_log_prob(ids, params, y=None, c=None):
    """Teacher-forced log p(x | conditions) over an encoded id sequence."""
    dists = step_log_dists(ids[:-1], params, y=y, c=c)
    return float(sum(dists[t, ids[t + 1]] for t in range(len(ids) - 1)))


def latent_prior_log(params):
    logits = (params["latent_prior_w"].data * params["latent_emb"].data).sum(axis=1)
    return _log_softmax(logits + params["latent_prior_b"].data)


def latent_given_label_log(params, y):
    v = params["label_emb"].data[y]
    return _log_softmax(v @ params["latent_from_label_w"].data + params["latent_from_label_b"].data)


def label_given_latent_log(params, c):
    v = params["latent_emb"].data[c]
    return _log_softmax(v @ params["label_from_latent_w"].data + params["label_from_latent_b"].data)


def log_joint(ids, y, c, params):
    """log p(x, y, c) composed per the config's structure, numpy only."""
    structure = params.config.structure
    if structure == "auxiliary":
        return (lm_log_prob(ids, params, y=y, c=c) + latent_prior_log(params)[c]
                + np.log(params.label_prior[y]))
    if structure == "joint":
        return (lm_log_prob(ids, params, c=c) + label_given_latent_log(params, c)[y]
                + latent_prior_log(params)[c])
    if structure == "middle":
        return (lm_log_prob(ids, params, c=c) + latent_given_label_log(params, y)[c]
                + np.log(params.label_prior[y]))
    if structure == "hierarchical":
        return (lm_log_prob(ids, params, y=y, c=c) + latent_given_label_log(params, y)[c]
                + np.log(params.label_prior[y]))
    raise ValueError(structure)


def enumerate_prefix_event_mass(params, max_content_len=2):
    """Total probability over (prefix event, y, c), which must equal 1.

    Events partition the sample space by the first tokens after BOS:
    termination before ``max_content_len`` content tokens contributes its
    EOS factor, while maximal-length prefixes contribute no terminal
    factor (they stand for every continuation).  Summing over the full
    softmax support — including reserved ids — telescopes to exactly 1
    by the chain rule.
    """
    from latentclf.corpus import BOS_ID, EOS_ID

    cfg = params.config
    vocab = range(cfg.vocab_size)
    total = 0.0
    for y in range(cfg.num_labels):
        for c in range(cfg.num_latent):
            if cfg.structure == "auxiliary":
                prior = latent_prior_log(params)[c] + np.log(params.label_prior[y])
            elif cfg.structure == "joint":
                prior = label_given_latent_log(params, c)[y] + latent_prior_log(params)[c]
            elif cfg.structure == "middle":
                prior = latent_given_label_log(params, y)[c] + np.log(params.label_prior[y])
            else:
                prior = latent_given_label_log(params, y)[c] + np.log(params.label_prior[y])
            kwargs = {}
            if cfg.text_conditioned_on_label:
                kwargs["y"] = y
            if cfg.text_conditioned_on_latent:
                kwargs["c"] = c
            lm_mass = _prefix_mass(params, BOS_ID, EOS_ID, vocab, max_content_len, kwargs)
            total += np.exp(prior) * lm_mass
    return total


def _prefix_mass(params, bos, eos, vocab, max_len, cond_kwargs):
    total = 0.0

    def recurse(prefix, logp, depth):
        nonlocal total
        if depth == max_len:
            # maximal prefixes absorb all continuations: no terminal factor
            total += np.exp(logp)
            return
        dist = step_log_dists(prefix, params, **cond_kwargs)[-1]
        total += np.exp(logp + dist[eos])  # terminate here
        for w in vocab:
            if w == eos:
                continue
            recurse(prefix + [w], logp + dist[w], depth + 1)

    recurse([bos], 0.0, 0)
    return total
