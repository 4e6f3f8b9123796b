import math

import numpy as np
import pytest

from dwalign.corpus import SentencePair, build_vocab, encode_corpus
from dwalign.errors import DataError
from dwalign.evaluation import corpus_loglik
from dwalign.fa import (
    DEFAULT_LAMBDA,
    DEFAULT_P0,
    ExpectedCounts,
    FaParams,
    alignment_prior,
    e_step,
    init_fa,
    load_fa,
    m_step,
    save_fa,
    sentence_loglik,
    train_fa,
    viterbi_align,
)

from oracles import enumerate_alignments


def random_fa_instance(rng, max_len=3, max_vocab=4):
    ve = int(rng.integers(2, max_vocab + 1))
    vf = int(rng.integers(2, max_vocab + 1))
    null_id = ve - 1
    ttable = rng.dirichlet(np.ones(vf) * rng.uniform(0.3, 3.0), size=ve)
    lam = float(rng.uniform(0.2, 8.0))
    p0 = float(rng.uniform(0.01, 0.5))
    I = int(rng.integers(1, max_len + 1))
    J = int(rng.integers(1, max_len + 1))
    pair = SentencePair(rng.integers(0, ve - 1, size=I).astype(np.int64),
                        rng.integers(0, vf, size=J).astype(np.int64))
    return pair, FaParams(ttable=ttable, lam=lam, p0=p0, null_id=null_id)


class TestAlignmentPrior:
    def test_tiny_tension_is_uniform_over_nonnull(self):
        for i in range(1, 5):
            p = alignment_prior(i, 2, 4, 3, lam=1e-12, p0=0.08)
            assert p == pytest.approx(0.23, abs=1e-9)

    def test_null_position_gets_exactly_p0(self):
        assert alignment_prior(0, 1, 4, 2, lam=3.0, p0=0.08) == 0.08

    def test_diagonal_is_maximal(self):
        # i/I == j/J at i=2, j=1 for I=4, J=2
        vals = [alignment_prior(i, 1, 4, 2, lam=2.5, p0=0.1) for i in range(1, 5)]
        assert np.argmax(vals) == 1

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            I = int(rng.integers(1, 12))
            J = int(rng.integers(1, 12))
            j = int(rng.integers(1, J + 1))
            lam = float(rng.uniform(0.1, 15))
            p0 = float(rng.uniform(0.0, 1.0))
            s = sum(alignment_prior(i, j, I, J, lam, p0) for i in range(I + 1))
            assert s == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range_positions_raise(self):
        with pytest.raises(ValueError):
            alignment_prior(5, 1, 4, 2, 1.0, 0.1)
        with pytest.raises(ValueError):
            alignment_prior(1, 0, 4, 2, 1.0, 0.1)
        with pytest.raises(ValueError):
            alignment_prior(-1, 1, 4, 2, 1.0, 0.1)


class TestSentenceLoglik:
    def test_hand_computed_single_link(self):
        # I=J=1: only source position 1; prior over it is 1-p0
        ttable = np.array([[0.1, 0.9],   # the only real word
                           [0.5, 0.5]])  # the null row
        params = FaParams(ttable=ttable, lam=2.0, p0=0.2, null_id=1)
        pair = SentencePair(np.array([0]), np.array([0]))
        assert sentence_loglik(pair, params) == pytest.approx(math.log(0.18), abs=1e-12)

    def test_uniform_table_factors_out(self):
        vf = 5
        ttable = np.full((3, vf), 1.0 / vf)
        params = FaParams(ttable=ttable, lam=3.7, p0=0.13, null_id=2)
        pair = SentencePair(np.array([0, 1]), np.array([0, 2, 4]))
        assert sentence_loglik(pair, params) == pytest.approx(
            3 * math.log(1.0 / vf), abs=1e-12)

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            pair, params = random_fa_instance(rng)
            want, _ = enumerate_alignments(pair.src, pair.tgt, params.ttable,
                                           params.lam, params.p0, params.null_id)
            assert sentence_loglik(pair, params) == pytest.approx(want, abs=1e-12)


class TestEStep:
    def test_uniform_table_returns_priors(self):
        vf = 4
        ttable = np.full((3, vf), 1.0 / vf)
        params = FaParams(ttable=ttable, lam=2.2, p0=0.1, null_id=2)
        pair = SentencePair(np.array([0, 1]), np.array([1, 3]))
        gamma = e_step(pair, params)
        for j in range(pair.J):
            for i in range(pair.I + 1):
                assert gamma[j, i] == pytest.approx(
                    alignment_prior(i, j + 1, pair.I, pair.J, params.lam, params.p0),
                    abs=1e-12)

    def test_deterministic_translation_pins_posterior(self):
        # only source position 1 can emit target word 0
        ttable = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        params = FaParams(ttable=ttable, lam=1.0, p0=0.0, null_id=2)
        pair = SentencePair(np.array([0, 1]), np.array([0]))
        gamma = e_step(pair, params)
        assert gamma[0, 1] == pytest.approx(1.0)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            pair, params = random_fa_instance(rng, max_len=6)
            gamma = e_step(pair, params)
            np.testing.assert_allclose(gamma.sum(axis=1), 1.0, atol=1e-9)
            assert (gamma >= 0).all()

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            pair, params = random_fa_instance(rng)
            _, want = enumerate_alignments(pair.src, pair.tgt, params.ttable,
                                           params.lam, params.p0, params.null_id)
            np.testing.assert_allclose(e_step(pair, params), want, atol=1e-12)


class TestMStep:
    def _stats(self, counts):
        stats = ExpectedCounts(counts=np.asarray(counts, dtype=np.float64))
        return stats

    def test_row_normalization_without_floor(self):
        stats = self._stats([[3.0, 1.0], [0.0, 0.0]])
        params = FaParams(ttable=np.full((2, 2), 0.5), lam=4.0, p0=0.08, null_id=1)
        new = m_step(stats, params, floor=0.0)
        np.testing.assert_allclose(new.ttable[0], [0.75, 0.25])

    def test_equal_counts_give_uniform_row(self):
        stats = self._stats([[2.0, 2.0, 2.0]])
        params = FaParams(ttable=np.full((1, 3), 1 / 3), lam=4.0, p0=0.08, null_id=0)
        new = m_step(stats, params)
        np.testing.assert_allclose(new.ttable[0], 1 / 3, atol=1e-9)

    def test_unseen_source_keeps_previous_row(self):
        old = np.array([[0.9, 0.1], [0.2, 0.8]])
        stats = self._stats([[1.0, 1.0], [0.0, 0.0]])
        params = FaParams(ttable=old, lam=4.0, p0=0.08, null_id=1)
        new = m_step(stats, params)
        np.testing.assert_allclose(new.ttable[1], [0.2, 0.8])

    def test_tension_stationary_when_expectations_match(self):
        # one j with I=2: expected h equal to the model expectation at lam
        lam = 3.0
        I, J = 2, 1
        from dwalign import _backend as K

        mass = np.array([1.0])
        model_h = K.diag_model_h(lam, I, J, mass)
        stats = ExpectedCounts(counts=np.zeros((2, 2)), expected_h=model_h,
                               nonnull_mass={(I, J): mass})
        params = FaParams(ttable=np.full((2, 2), 0.5), lam=lam, p0=0.08, null_id=1)
        new = m_step(stats, params)
        assert new.lam == pytest.approx(lam, abs=1e-12)

    def test_tension_stays_clamped(self):
        stats = ExpectedCounts(counts=np.zeros((2, 2)), expected_h=1e9,
                               nonnull_mass={(2, 1): np.array([1.0])})
        params = FaParams(ttable=np.full((2, 2), 0.5), lam=4.0, p0=0.08, null_id=1)
        assert m_step(stats, params).lam <= 20.0


class TestTrainFa:
    def test_zero_iterations_returns_initialization(self, dict_pipeline):
        corpus = dict_pipeline.corpus
        params, history = train_fa(corpus, iterations=0, log=None)
        assert history == []
        assert params.lam == DEFAULT_LAMBDA
        assert params.p0 == DEFAULT_P0
        vf = len(corpus.tgt_vocab)
        np.testing.assert_allclose(params.ttable, 1.0 / vf)

    def test_first_sweep_improves_loglik(self, dict_pipeline):
        history = dict_pipeline.fa_history
        assert history[1] >= history[0]

    def test_loglik_nondecreasing_with_tension_steps(self, dict_pipeline):
        history = list(dict_pipeline.fa_history)
        history.append(corpus_loglik(dict_pipeline.corpus, dict_pipeline.fa))
        diffs = np.diff(history)
        assert (diffs >= -1e-6).all(), diffs

    def test_dictionary_recovery(self, dict_pipeline):
        corpus, mapping = dict_pipeline.corpus, dict_pipeline.mapping
        sv, tv = corpus.src_vocab, corpus.tgt_vocab
        for s_tok, t_tok in mapping.items():
            sid = sv.token_to_id[s_tok]
            if sv.freq[sid] < 20:
                continue
            assert int(np.argmax(dict_pipeline.fa.ttable[sid])) == tv.token_to_id[t_tok]

    def test_empty_corpus_rejected(self):
        sv = build_vocab([], min_count=1, source_side=True)
        tv = build_vocab([], min_count=1)
        corpus = encode_corpus([], [], sv, tv)
        with pytest.raises(DataError):
            train_fa(corpus, iterations=1, log=None)

    def test_relabeling_equivariance(self):
        rng = np.random.default_rng(4)
        sents_src = [[f"s{rng.integers(0, 5)}" for _ in range(4)] for _ in range(40)]
        sents_tgt = [[f"t{rng.integers(0, 5)}" for _ in range(4)] for _ in range(40)]
        sv = build_vocab(sents_src, min_count=1, source_side=True)
        tv = build_vocab(sents_tgt, min_count=1)
        corpus = encode_corpus(sents_src, sents_tgt, sv, tv)
        params, _ = train_fa(corpus, iterations=3, log=None)

        perm = rng.permutation(len(tv)).astype(np.int64)
        remapped = [SentencePair(p.src, perm[p.tgt]) for p in corpus.pairs]
        corpus2 = type(corpus)(remapped, sv, tv)
        params2, _ = train_fa(corpus2, iterations=3, log=None)
        np.testing.assert_allclose(params2.ttable[:, perm], params.ttable, atol=1e-12)
        assert params2.lam == pytest.approx(params.lam, abs=1e-12)


class TestViterbi:
    def test_identity_dictionary_pair(self):
        ttable = np.array([[0.98, 0.01, 0.01],
                           [0.01, 0.98, 0.01],
                           [1 / 3, 1 / 3, 1 / 3]])
        params = FaParams(ttable=ttable, lam=4.0, p0=0.05, null_id=2)
        pair = SentencePair(np.array([0, 1]), np.array([0, 1]))
        assert viterbi_align(pair, params) == {(0, 0), (1, 1)}

    def test_all_null_when_p0_is_one(self):
        params = FaParams(ttable=np.full((2, 2), 0.5), lam=4.0, p0=1.0, null_id=1)
        pair = SentencePair(np.array([0]), np.array([0, 1]))
        assert viterbi_align(pair, params) == set()

    def test_matches_bruteforce_argmax(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            pair, params = random_fa_instance(rng, max_len=4)
            links = viterbi_align(pair, params)
            want = set()
            I, J = pair.I, pair.J
            for j in range(1, J + 1):
                scores = [alignment_prior(i, j, I, J, params.lam, params.p0)
                          * params.ttable[params.null_id if i == 0 else pair.src[i - 1],
                                          pair.tgt[j - 1]]
                          for i in range(I + 1)]
                best = int(np.argmax(scores))
                if best > 0:
                    want.add((best - 1, j - 1))
            assert links == want


class TestSerialization:
    def test_roundtrip_bit_exact(self, tmp_path, dict_pipeline):
        corpus = dict_pipeline.corpus
        path = tmp_path / "fa.model"
        save_fa(path, dict_pipeline.fa, corpus.src_vocab, corpus.tgt_vocab)
        params, sv, tv = load_fa(path)
        assert params.ttable.tobytes() == dict_pipeline.fa.ttable.tobytes()
        assert params.lam == dict_pipeline.fa.lam
        assert params.p0 == dict_pipeline.fa.p0
        assert params.null_id == dict_pipeline.fa.null_id
        assert sv.token_to_id == corpus.src_vocab.token_to_id
        assert tv.token_to_id == corpus.tgt_vocab.token_to_id

        path2 = tmp_path / "fa2.model"
        save_fa(path2, params, sv, tv)
        assert path.read_bytes() == path2.read_bytes()

    def test_wrong_kind_rejected(self, tmp_path):
        path = tmp_path / "x.model"
        path.write_text("not a model\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_fa(path)
