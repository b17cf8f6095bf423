"""Model families: exact values, enumeration oracles, and gradient checks."""

import math

import mpmath
import numpy as np
import pytest

import latentclf.engine as E
import numpy_oracle as oracle
from latentclf import models
from latentclf.corpus import BOS_ID, EOS_ID
from latentclf.engine import Tape, Tensor
from latentclf.models import (
    ConfigError,
    LogJointResult,
    ModelConfig,
    Params,
    conditional_lm_log_prob,
    count_params,
    disc_forward,
    generative_log_joint,
    init_params,
    joint_score_table,
    latent_log_joint,
    log_joint_components,
    log_marginal,
    pc_configs,
)

from test_tensor_engine import assert_grads_match


def tiny_config(family="latent", structure="auxiliary", vocab=6, labels=3, latents=3,
                d=4, **kw):
    return ModelConfig(family=family, structure=structure, num_labels=labels,
                       vocab_size=vocab, d_word=d, d_hidden=d, d1=d, d2=d,
                       num_latent=latents, **kw)


def zeroed(params: Params) -> Params:
    for t in params.tensors.values():
        t.data[...] = 0.0
    return params


class TestConditionalLm:
    def test_zero_params_uniform_logits(self):
        # 2 content words plus 3 reserved ids makes a softmax over 5
        cfg = tiny_config(family="generative", vocab=5, labels=2)
        params = zeroed(init_params(cfg, seed=0))
        doc = (BOS_ID, 3, 4, EOS_ID)  # 3 predicted tokens
        got = conditional_lm_log_prob(doc, params, y=0).item()
        assert got == pytest.approx(3 * math.log(1 / 5), abs=1e-12)

    def test_per_step_distributions_normalized(self):
        cfg = tiny_config(family="generative", vocab=7, labels=2)
        params = init_params(cfg, seed=1)
        scorer = models.DocScorer((BOS_ID, 3, 4, 5, EOS_ID), params)
        dists = scorer.step_log_probs(y=1)
        np.testing.assert_allclose(np.exp(dists).sum(axis=1), 1.0, atol=1e-12)

    def test_matches_numpy_chain_rule_enumeration(self):
        """Every length-2 sequence with forced EOS, engine vs raw-numpy chain rule."""
        cfg = tiny_config(family="generative", vocab=6, labels=2)
        params = init_params(cfg, seed=2)
        total = 0.0
        for w1 in range(3, 6):
            for w2 in range(3, 6):
                doc = (BOS_ID, w1, w2, EOS_ID)
                got = conditional_lm_log_prob(doc, params, y=1).item()
                want = oracle.lm_log_prob(doc, params, y=1)
                assert got == pytest.approx(want, abs=1e-10)
                total += math.exp(got)
        # the enumerated event has strictly less than full mass
        assert 0.0 < total < 1.0

    def test_too_short_doc_rejected(self):
        cfg = tiny_config(family="generative")
        params = init_params(cfg, seed=0)
        with pytest.raises(ValueError, match="BOS"):
            conditional_lm_log_prob((BOS_ID,), params, y=0)

    def test_missing_condition_rejected(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=0)
        with pytest.raises(ConfigError):
            conditional_lm_log_prob((BOS_ID, EOS_ID), params, y=0)  # no latent value


class TestLatentLogJoint:
    def test_zero_params_closed_form(self):
        cfg = tiny_config(vocab=6, labels=3, latents=4)
        params = zeroed(init_params(cfg, seed=0))
        doc = (BOS_ID, 3, 5, EOS_ID)
        for c in range(4):
            got = latent_log_joint(doc, 1, c, params).item()
            want = 3 * math.log(1 / 6) + math.log(1 / 4) + math.log(1 / 3)
            assert got == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("structure", models.STRUCTURES)
    def test_matches_numpy_oracle(self, structure):
        cfg = tiny_config(structure=structure, vocab=7, labels=3, latents=3)
        params = init_params(cfg, seed=5)
        doc = (BOS_ID, 4, 6, 3, EOS_ID)
        for y in range(3):
            for c in range(3):
                got = latent_log_joint(doc, y, c, params).item()
                want = oracle.log_joint(doc, y, c, params)
                assert got == pytest.approx(want, abs=1e-10)

    def test_argument_range_checks(self):
        params = init_params(tiny_config(labels=2, latents=2), seed=0)
        with pytest.raises(ConfigError, match="label"):
            latent_log_joint((BOS_ID, EOS_ID), 2, 0, params)
        with pytest.raises(ConfigError, match="latent value"):
            latent_log_joint((BOS_ID, EOS_ID), 0, 5, params)


class TestNormalization:
    @pytest.mark.parametrize("structure", models.STRUCTURES)
    def test_total_mass_is_one(self, structure):
        cfg = tiny_config(structure=structure, vocab=6, labels=3, latents=3, d=3)
        params = init_params(cfg, seed=11)
        total = oracle.enumerate_prefix_event_mass(params, max_content_len=2)
        assert total == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("structure", models.STRUCTURES)
    def test_engine_events_match_oracle_and_sum_to_one(self, structure):
        """Same enumeration through the engine's step distributions."""
        cfg = tiny_config(structure=structure, vocab=5, labels=2, latents=2, d=3)
        params = init_params(cfg, seed=12)
        total = 0.0
        for y in range(cfg.num_labels):
            for c in range(cfg.num_latent):
                if structure == "auxiliary":
                    prior = (models.latent_prior_logp(params).data[c]
                             + params.log_label_prior(y))
                elif structure == "joint":
                    prior = (models.label_given_latent_logp(params, c).data[y]
                             + models.latent_prior_logp(params).data[c])
                else:
                    prior = (models.latent_given_label_logp(params, y).data[c]
                             + params.log_label_prior(y))
                kw = {}
                if cfg.text_conditioned_on_label:
                    kw["y"] = y
                if cfg.text_conditioned_on_latent:
                    kw["c"] = c
                for w1 in range(cfg.vocab_size):
                    probe = models.DocScorer((BOS_ID, w1 if w1 != EOS_ID else 0, 0, 0), params)
                    d1 = probe.step_log_probs(**kw)
                    if w1 == EOS_ID:
                        total += math.exp(prior + d1[0, EOS_ID])
                        continue
                    for w2 in range(cfg.vocab_size):
                        probe2 = models.DocScorer((BOS_ID, w1, w2 if w2 != EOS_ID else 0, 0),
                                                  params)
                        d2 = probe2.step_log_probs(**kw)
                        if w2 == EOS_ID:
                            total += math.exp(prior + d2[0, w1] + d2[1, EOS_ID])
                        else:
                            total += math.exp(prior + d2[0, w1] + d2[1, w2])
        assert total == pytest.approx(1.0, abs=1e-9)


class TestLogMarginal:
    def test_single_latent_equals_component(self):
        cfg = tiny_config(latents=1)
        params = init_params(cfg, seed=3)
        doc = (BOS_ID, 4, EOS_ID)
        res = log_marginal(doc, 1, params)
        assert res.log_marginal == res.components[0]

    def test_equal_components_add_log_k(self):
        cfg = tiny_config(latents=4)
        params = zeroed(init_params(cfg, seed=0))
        doc = (BOS_ID, 3, EOS_ID)
        res = log_marginal(doc, 0, params)
        assert res.log_marginal == pytest.approx(res.components[0] + math.log(4), abs=1e-12)

    def test_matches_extended_precision_summation(self):
        cfg = tiny_config(vocab=8, labels=3, latents=5)
        params = init_params(cfg, seed=7)
        doc = (BOS_ID, 5, 3, 7, EOS_ID)
        for y in range(3):
            res = log_marginal(doc, y, params)
            with mpmath.workdps(60):
                want = float(mpmath.log(mpmath.fsum(mpmath.exp(v) for v in res.components)))
            assert res.log_marginal == pytest.approx(want, abs=1e-10)

    def test_generative_family_single_joint(self):
        cfg = tiny_config(family="generative")
        params = init_params(cfg, seed=4)
        doc = (BOS_ID, 3, EOS_ID)
        res = log_marginal(doc, 2, params)
        assert res.components == (generative_log_joint(doc, 2, params).item(),)

    def test_result_invariant_enforced(self):
        with pytest.raises(ValueError):
            LogJointResult(components=(0.0, 0.0), log_marginal=5.0)


class TestDegeneracy:
    def make_tied_pair(self):
        """Generative params and a single-latent auxiliary model that must agree.

        The latent model's latent embedding and output block are zeroed so
        the extra softmax-input block contributes nothing; with one latent
        value its prior is exactly log 1 = 0.
        """
        gen_cfg = tiny_config(family="generative", vocab=7, labels=3, d=4)
        lat_cfg = tiny_config(family="latent", structure="auxiliary", vocab=7, labels=3,
                              latents=1, d=4)
        gen = init_params(gen_cfg, seed=9)
        lat = init_params(lat_cfg, seed=9)
        for name, t in gen.tensors.items():
            lat.tensors[name].data = t.data.copy()
        lat["latent_emb"].data[...] = 0.0
        lat["out_latent"].data[...] = 0.0
        return gen, lat

    def test_log_joints_coincide(self):
        gen, lat = self.make_tied_pair()
        doc = (BOS_ID, 4, 6, 3, EOS_ID)
        for y in range(3):
            g = generative_log_joint(doc, y, gen).item()
            l = latent_log_joint(doc, y, 0, lat).item()
            assert l == pytest.approx(g, abs=1e-12)

    def test_aux_and_hierarchical_coincide_with_uniform_conditional(self):
        """The two structures differ only in the y -> c edge."""
        aux_cfg = tiny_config(structure="auxiliary", vocab=7, labels=3, latents=3)
        hier_cfg = tiny_config(structure="hierarchical", vocab=7, labels=3, latents=3)
        aux = init_params(aux_cfg, seed=13)
        hier = init_params(hier_cfg, seed=13)
        for name in ("word_emb", "lstm_wx", "lstm_wh", "lstm_b", "out_hidden", "out_bias",
                     "label_emb", "out_label", "latent_emb", "out_latent"):
            hier.tensors[name].data = aux.tensors[name].data.copy()
        # both c-generation terms exactly uniform
        aux["latent_prior_w"].data[...] = 0.0
        aux["latent_prior_b"].data[...] = 0.0
        hier["latent_from_label_w"].data[...] = 0.0
        hier["latent_from_label_b"].data[...] = 0.0
        doc = (BOS_ID, 5, 4, EOS_ID)
        for y in range(3):
            for c in range(3):
                a = latent_log_joint(doc, y, c, aux).item()
                h = latent_log_joint(doc, y, c, hier).item()
                assert a == pytest.approx(h, abs=1e-12)


class TestDiscriminative:
    def test_zero_head_uniform(self):
        cfg = tiny_config(family="discriminative", labels=4)
        params = init_params(cfg, seed=0)
        params["cls_w"].data[...] = 0.0
        params["cls_b"].data[...] = 0.0
        out = disc_forward((BOS_ID, 3, EOS_ID), params).data
        np.testing.assert_allclose(out, math.log(0.25), atol=1e-12)

    def test_normalized(self):
        params = init_params(tiny_config(family="discriminative", labels=5), seed=6)
        out = disc_forward((BOS_ID, 3, 4, EOS_ID), params).data
        assert abs(np.exp(out).sum() - 1.0) <= 1e-12

    def test_pooling_order_invariant(self):
        params = init_params(tiny_config(family="discriminative"), seed=8)
        ids = np.array([BOS_ID, 3, 4, 5, EOS_ID])
        h = oracle.lstm_states(ids, params)
        pooled = h.mean(axis=0)
        rng = np.random.default_rng(0)
        for _ in range(5):
            shuffled = h[rng.permutation(len(h))]
            np.testing.assert_allclose(shuffled.mean(axis=0), pooled, atol=1e-12)


class TestGradients:
    DOC = (BOS_ID, 3, 5, 4, EOS_ID)  # 3 content tokens

    def _check(self, cfg, loss_fn, tol=1e-4):
        params = init_params(cfg, seed=17)
        assert_grads_match(loss_fn(params), params.tensors, tol=tol)

    def test_discriminative_nll(self):
        cfg = tiny_config(family="discriminative", vocab=6, labels=3, d=4)

        def make(params):
            return lambda: E.scale(E.element(disc_forward(self.DOC, params), 1), -1.0)

        self._check(cfg, make)

    def test_generative_log_joint(self):
        cfg = tiny_config(family="generative", vocab=6, labels=3, d=4)

        def make(params):
            return lambda: E.scale(generative_log_joint(self.DOC, 2, params), -1.0)

        self._check(cfg, make)

    @pytest.mark.parametrize("structure", models.STRUCTURES)
    def test_latent_log_marginal(self, structure):
        cfg = tiny_config(structure=structure, vocab=6, labels=3, latents=3, d=4)

        def make(params):
            def f():
                comps = log_joint_components(self.DOC, 1, params)
                return E.scale(E.log_sum_exp(E.stack_rows(comps)), -1.0)

            return f

        self._check(cfg, make)


class TestCountParams:
    ALL_CONFIGS = [
        tiny_config(family="discriminative"),
        tiny_config(family="generative"),
        *(tiny_config(structure=s, latents=k) for s in models.STRUCTURES for k in (1, 3)),
    ]

    @pytest.mark.parametrize("cfg", ALL_CONFIGS, ids=lambda c: f"{c.family}-{c.structure}-{c.num_latent}")
    def test_matches_allocated_scalars(self, cfg):
        assert count_params(cfg) == init_params(cfg, seed=0).num_scalars()

    def test_pc_configs_share_output_width(self):
        base = ModelConfig(family="generative", num_labels=4, vocab_size=1000)
        gen_pc, lat_pc = pc_configs(base)
        assert gen_pc.d_softmax_in == lat_pc.d_softmax_in == 210

    def test_zero_latent_rejected(self):
        with pytest.raises(ConfigError):
            tiny_config(latents=0)

    def test_single_latent_increment_over_generative(self):
        gen = tiny_config(family="generative", vocab=9, labels=3, d=4)
        lat = tiny_config(family="latent", structure="auxiliary", vocab=9, labels=3,
                          latents=1, d=4)
        extra = count_params(lat) - count_params(gen)
        d2 = lat.d2
        # latent embedding + prior head + the widened output block
        assert extra == d2 * 1 + (d2 + 1) + lat.vocab_size * d2


class TestScoreTable:
    def test_matches_pointwise_joints(self):
        cfg = tiny_config(vocab=7, labels=3, latents=4)
        params = init_params(cfg, seed=19)
        doc = (BOS_ID, 6, 4, EOS_ID)
        L, R = joint_score_table(doc, params)
        assert L.shape == (3, 4)
        for y in range(3):
            for c in range(4):
                assert L[y, c] == pytest.approx(latent_log_joint(doc, y, c, params).item(),
                                                abs=1e-12)
        # c-generation terms for the auxiliary structure are label-independent
        np.testing.assert_allclose(R[0], R[1], atol=1e-15)
