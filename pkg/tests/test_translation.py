import numpy as np
import pytest

from dwalign.corpus import SentencePair, build_classes
from dwalign.errors import NumericalError
from dwalign.optim import AdaGradState, adagrad_step
from dwalign.translation import (
    ARRAY_FIELDS,
    class_energy,
    energy,
    grad_weighted_logprob,
    init_params,
    null_dist,
    null_prob,
    translation_dist,
    translation_prob,
)

from oracles import (
    fd_gradient_mismatches,
    random_params,
    random_partition,
    vocab_from_freqs,
)


def zero_params(n_src=3, n_tgt=4, n_classes=2, dim=2, k=0):
    params = init_params(n_src, n_tgt, n_classes, dim, k, seed=0)
    for name in ARRAY_FIELDS:
        getattr(params, name).fill(0.0)
    return params


class TestEnergy:
    def test_zero_parameters_give_zero_energy(self):
        params = zero_params()
        src = np.array([0, 1, 2])
        for f in range(4):
            for i in range(1, 4):
                assert energy(f, i, src, params) == 0.0
                assert class_energy(f % 2, i, src, params) == 0.0

    def test_hand_computed_value(self):
        params = zero_params(dim=2)
        params.src_emb[1] = [1.0, 0.0]
        params.tgt_emb[2] = [1.0, 0.0]
        params.ctx_word[0] = np.eye(2)
        assert energy(2, 1, np.array([1]), params) == pytest.approx(-1.0)

    def test_word_bias_shifts_energy_linearly(self):
        rng = np.random.default_rng(0)
        params = random_params(rng, 3, 4, 2, 3, 1)
        src = np.array([0, 2, 1])
        base = energy(3, 2, src, params)
        params.bias_word[3] += 0.7
        assert energy(3, 2, src, params) == pytest.approx(base - 0.7, abs=1e-12)

    def test_class_energy_hand_computed(self):
        params = zero_params(dim=2)
        params.src_emb[0] = [0.0, 1.0]
        params.cls_emb[1] = [0.0, 2.0]
        params.ctx_cls[0] = np.eye(2)
        assert class_energy(1, 1, np.array([0]), params) == pytest.approx(-2.0)

    def test_null_position_rejected(self):
        params = zero_params()
        with pytest.raises(ValueError):
            energy(0, 0, np.array([1]), params)
        with pytest.raises(ValueError):
            class_energy(0, 0, np.array([1]), params)

    def test_out_of_range_context_contributes_nothing(self):
        # with k=2 and a single-word sentence, only the center transform acts
        rng = np.random.default_rng(1)
        wide = random_params(rng, 3, 4, 2, 3, 2)
        src = np.array([1])
        narrow = init_params(3, 4, 2, 3, 0, seed=0)
        for name in ("src_emb", "tgt_emb", "bias_repr", "bias_word"):
            setattr(narrow, name, getattr(wide, name))
        narrow.ctx_word = wide.ctx_word[2:3]
        for f in range(4):
            assert energy(f, 1, src, wide) == pytest.approx(
                energy(f, 1, src, narrow), abs=1e-12)

    def test_energy_linear_in_transform_entries(self):
        rng = np.random.default_rng(2)
        params = random_params(rng, 3, 4, 2, 3, 0)
        src = np.array([1, 2])
        e0 = energy(1, 2, src, params)
        params.ctx_word[0, 1, 2] += 0.5
        e1 = energy(1, 2, src, params)
        params.ctx_word[0, 1, 2] += 0.5
        e2 = energy(1, 2, src, params)
        assert e2 - e1 == pytest.approx(e1 - e0, abs=1e-10)


class TestTranslationProb:
    def test_zero_params_uniform_over_equal_classes(self):
        params = zero_params(n_tgt=4, n_classes=2)
        classes = build_classes(vocab_from_freqs([1, 1, 1, 1]))
        src = np.array([0])
        for f in range(4):
            assert translation_prob(f, 1, src, params, classes) == pytest.approx(0.25)

    def test_single_class_equals_flat_softmax(self):
        rng = np.random.default_rng(3)
        vf = 5
        params = random_params(rng, 3, vf, 1, 3, 0)
        classes = random_partition(rng, vf, 1)
        src = np.array([1, 0])
        q = params.src_emb[src[0]] @ params.ctx_word[0]
        logits = params.tgt_emb @ (q + params.bias_repr) + params.bias_word
        flat = np.exp(logits - logits.max())
        flat /= flat.sum()
        got = translation_dist(1, src, params, classes)
        np.testing.assert_allclose(got, flat, atol=1e-12)

    def test_sums_to_one_for_arbitrary_parameters(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            vf = int(rng.integers(2, 9))
            n_cls = int(rng.integers(1, min(vf, 4) + 1))
            k = int(rng.choice([0, 1, 3]))
            params = random_params(rng, 4, vf, n_cls, int(rng.integers(1, 5)), k,
                                   scale=2.0)
            classes = random_partition(rng, vf, n_cls)
            I = int(rng.integers(1, 5))
            src = rng.integers(0, 4, size=I).astype(np.int64)
            i = int(rng.integers(1, I + 1))
            total = translation_dist(i, src, params, classes).sum()
            assert total == pytest.approx(1.0, abs=1e-10)


class TestNullProb:
    def test_zero_weights_are_uniform(self):
        params = zero_params(n_tgt=5)
        for f in range(5):
            assert null_prob(f, params) == pytest.approx(0.2)

    def test_hand_softmax(self):
        params = zero_params(n_tgt=2)
        params.null_weights[:] = [np.log(3.0), 0.0]
        np.testing.assert_allclose(null_dist(params), [0.75, 0.25], atol=1e-12)

    def test_sums_to_one(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            params = zero_params(n_tgt=7)
            params.null_weights[:] = rng.normal(0, 3, size=7)
            assert null_dist(params).sum() == pytest.approx(1.0, abs=1e-10)


class TestGradWeightedLogprob:
    def test_softmax_identity_for_concentrated_weights(self):
        # all mass on (j=0, i=1), single class: word-bias gradient is the
        # classic one-hot-minus-probability vector
        rng = np.random.default_rng(6)
        vf = 4
        params = random_params(rng, 3, vf, 1, 2, 0)
        classes = random_partition(rng, vf, 1)
        pair = SentencePair(np.array([1]), np.array([2]))
        gamma = np.array([[0.0, 1.0]])
        grads = grad_weighted_logprob(pair, gamma, params, classes)
        p = translation_dist(1, pair.src, params, classes)
        want = -p
        want[2] += 1.0
        np.testing.assert_allclose(grads.bias_word, want, atol=1e-12)

    def test_null_only_weights_touch_null_block(self):
        rng = np.random.default_rng(7)
        params = random_params(rng, 3, 4, 2, 2, 0)
        classes = random_partition(rng, 4, 2)
        pair = SentencePair(np.array([1, 2]), np.array([0, 3]))
        gamma = np.zeros((2, 3))
        gamma[:, 0] = 1.0
        grads = grad_weighted_logprob(pair, gamma, params, classes)
        for name in ARRAY_FIELDS:
            block = getattr(grads, name)
            if name == "null_weights":
                assert np.abs(block).max() > 0
            else:
                assert np.abs(block).max() == 0.0

    def test_matches_finite_differences(self):
        from dwalign.dwa import sentence_gradient

        rng = np.random.default_rng(8)
        for trial in range(12):
            ve = int(rng.integers(2, 5))
            vf = int(rng.integers(2, 7))
            n_cls = int(rng.integers(1, 4))
            k = int(rng.choice([0, 1, 3]))
            d = int(rng.integers(1, 5))
            params = random_params(rng, ve, vf, n_cls, d, k)
            classes = random_partition(rng, vf, n_cls)
            I = int(rng.integers(1, 4))
            J = int(rng.integers(1, 4))
            pair = SentencePair(rng.integers(0, ve, size=I).astype(np.int64),
                                rng.integers(0, vf, size=J).astype(np.int64))
            gamma = rng.random((J, I + 1))
            gamma /= gamma.sum(axis=1, keepdims=True)
            lam = float(rng.uniform(0.3, 5.0))
            p0 = float(rng.uniform(0.05, 0.5))
            grads, lam_grad = sentence_gradient(pair, gamma, params, lam, p0, classes)
            bad = fd_gradient_mismatches(pair, gamma, params, lam, p0, classes,
                                         grads, lam_grad)
            assert not bad, bad[:5]


class TestAdaGrad:
    def _single(self, value=0.0):
        params = zero_params(n_src=1, n_tgt=1, n_classes=1, dim=1)
        params.bias_word[0] = value
        return params

    def test_first_step_magnitude(self):
        params = self._single()
        grads = params.zeros_like()
        grads.bias_word[0] = 3.0
        state = AdaGradState.init(params, eta=0.1, eps=0.0)
        adagrad_step(params, grads, state)
        assert params.bias_word[0] == pytest.approx(0.1)

    def test_zero_gradient_changes_nothing(self):
        params = self._single(0.4)
        state = AdaGradState.init(params, eta=0.1, eps=0.0)
        adagrad_step(params, params.zeros_like(), state)
        assert params.bias_word[0] == 0.4
        assert state.sq_grads.bias_word[0] == 0.0

    def test_two_unit_steps_shrink(self):
        params = self._single()
        state = AdaGradState.init(params, eta=0.1, eps=0.0)
        grads = params.zeros_like()
        grads.bias_word[0] = 1.0
        adagrad_step(params, grads, state)
        first = params.bias_word[0]
        adagrad_step(params, grads, state)
        second = params.bias_word[0] - first
        assert first == pytest.approx(0.1)
        assert second == pytest.approx(0.1 / np.sqrt(2.0))

    def test_constant_gradient_step_sizes_never_grow(self):
        params = self._single()
        state = AdaGradState.init(params, eta=0.05, eps=1e-8)
        grads = params.zeros_like()
        grads.bias_word[0] = -2.5
        prev = None
        last = params.bias_word[0]
        for _ in range(20):
            adagrad_step(params, grads, state)
            delta = abs(params.bias_word[0] - last)
            last = params.bias_word[0]
            if prev is not None:
                assert delta <= prev + 1e-15
            prev = delta

    def test_accumulator_never_decreases(self):
        rng = np.random.default_rng(9)
        params = random_params(rng, 2, 3, 2, 2, 0)
        state = AdaGradState.init(params)
        prev = {n: getattr(state.sq_grads, n).copy() for n in ARRAY_FIELDS}
        for _ in range(5):
            grads = params.zeros_like()
            for name in ARRAY_FIELDS:
                g = getattr(grads, name)
                g += rng.normal(0, 1, size=g.shape)
            adagrad_step(params, grads, state)
            for name in ARRAY_FIELDS:
                acc = getattr(state.sq_grads, name)
                assert (acc >= prev[name]).all()
                prev[name] = acc.copy()

    def test_nonfinite_gradient_names_block(self):
        params = self._single()
        grads = params.zeros_like()
        grads.cls_emb[0, 0] = np.nan
        state = AdaGradState.init(params)
        with pytest.raises(NumericalError, match="cls_emb"):
            adagrad_step(params, grads, state)


class TestInit:
    def test_seeded_and_deterministic(self):
        a = init_params(5, 6, 3, 4, 1, seed=42)
        b = init_params(5, 6, 3, 4, 1, seed=42)
        for name in ARRAY_FIELDS:
            assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
        c = init_params(5, 6, 3, 4, 1, seed=43)
        assert a.src_emb.tobytes() != c.src_emb.tobytes()

    def test_transforms_start_near_identity(self):
        p = init_params(2, 2, 1, 3, 1, seed=0)
        assert p.ctx_word.shape == (3, 3, 3)
        np.testing.assert_allclose(p.ctx_word[1], 0.1 * np.eye(3))
        np.testing.assert_allclose(p.bias_word, 0.0)

    def test_unigram_bias_option(self):
        logp = np.log(np.array([0.5, 0.3, 0.2]))
        p = init_params(2, 3, 1, 2, 0, seed=0, word_bias_log_freq=logp)
        np.testing.assert_allclose(p.bias_word, logp)
