"""Log-linear reparametrized IBM-2 aligner with EM training.

The alignment prior over source positions depends on a single diagonal
tension: position i gets weight exp(lam * -|i/I - j/J|) among i=1..I,
scaled to 1-p0, with fixed probability p0 on the null word. Translation
is a per-source-id multinomial table. EM re-estimates the table in closed
form and ascends the tension by gradient steps.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from . import _backend as K
from . import model_io
from .corpus import ParallelCorpus, SentencePair, Vocab
from .errors import DataError

LAMBDA_MIN = 0.1
LAMBDA_MAX = 20.0
DEFAULT_P0 = 0.08
DEFAULT_LAMBDA = 4.0
TTABLE_FLOOR = 1e-9


@dataclass
class FaParams:
    """Tension, null probability, and the (VE, VF) translation table.

    Row ``null_id`` of the table is the null word's distribution; every
    row sums to 1.
    """

    ttable: np.ndarray
    lam: float
    p0: float
    null_id: int


def diag_feature(i: int, j: int, I: int, J: int) -> float:
    return -abs(i / I - j / J)


def alignment_prior(i: int, j: int, I: int, J: int, lam: float, p0: float) -> float:
    """Probability that target position j aligns to source position i (0 = null)."""
    if not (0 <= i <= I):
        raise ValueError(f"source position {i} outside 0..{I}")
    if not (1 <= j <= J):
        raise ValueError(f"target position {j} outside 1..{J}")
    if i == 0:
        return p0
    z = lam * np.array([diag_feature(t, j, I, J) for t in range(1, I + 1)])
    z -= z.max()
    e = np.exp(z)
    return float((1.0 - p0) * e[i - 1] / e.sum())


def sentence_loglik(pair: SentencePair, params: FaParams) -> float:
    """Marginal log-probability of the target side given the source side."""
    return K.fa_loglik(pair.src, pair.tgt, params.ttable, params.lam,
                       params.p0, params.null_id)


def e_step(pair: SentencePair, params: FaParams) -> np.ndarray:
    """Posterior over source positions per target position: (J, I+1), rows sum to 1."""
    return K.fa_posteriors(pair.src, pair.tgt, params.ttable, params.lam,
                           params.p0, params.null_id)


def viterbi_align(pair: SentencePair, params: FaParams) -> set[tuple[int, int]]:
    """Per-target-position argmax links as 0-based (src, tgt) pairs; null emits none."""
    best = K.fa_viterbi_best(pair.src, pair.tgt, params.ttable, params.lam,
                             params.p0, params.null_id)
    return {(int(i) - 1, j) for j, i in enumerate(best) if i > 0}


@dataclass
class ExpectedCounts:
    """E-step sufficient statistics accumulated over a corpus sweep."""

    counts: np.ndarray
    expected_h: float = 0.0
    nonnull_mass: dict = field(default_factory=dict)  # (I, J) -> per-j mass

    @classmethod
    def zeros(cls, n_src: int, n_tgt: int) -> "ExpectedCounts":
        return cls(counts=np.zeros((n_src, n_tgt)))

    def add_pair(self, pair: SentencePair, params: FaParams) -> float:
        buf = np.empty(pair.J)
        ll, eh = K.fa_estep_update(pair.src, pair.tgt, params.ttable,
                                   params.lam, params.p0, params.null_id,
                                   self.counts, buf)
        self.expected_h += eh
        key = (pair.I, pair.J)
        acc = self.nonnull_mass.get(key)
        if acc is None:
            self.nonnull_mass[key] = buf
        else:
            acc += buf
        return ll


def _update_lambda(lam: float, stats: ExpectedCounts, steps: int, step_size: float) -> float:
    total = sum(float(m.sum()) for m in stats.nonnull_mass.values())
    if total <= 0.0:
        return lam
    for _ in range(steps):
        model_h = 0.0
        for (I, J), mass in stats.nonnull_mass.items():
            model_h += K.diag_model_h(lam, I, J, mass)
        lam += step_size * (stats.expected_h - model_h) / total
        lam = min(max(lam, LAMBDA_MIN), LAMBDA_MAX)
    return lam


def m_step(stats: ExpectedCounts, params: FaParams, floor: float = TTABLE_FLOOR,
           lam_steps: int = 8, lam_step_size: float = 0.5) -> FaParams:
    """Re-normalize the translation table and step the diagonal tension.

    Rows with no observed mass keep their previous distribution; the rest
    are re-normalized with an additive floor so no probability is exactly
    zero. The tension ascends the expected log-prior (normalized per
    aligned token) and is clamped to [0.1, 20].
    """
    counts = stats.counts
    totals = counts.sum(axis=1)
    n_tgt = counts.shape[1]
    ttable = params.ttable.copy()
    seen = totals > 0.0
    ttable[seen] = (counts[seen] + floor) / (totals[seen] + n_tgt * floor)[:, None]
    lam = _update_lambda(params.lam, stats, lam_steps, lam_step_size)
    return FaParams(ttable=ttable, lam=lam, p0=params.p0, null_id=params.null_id)


def init_fa(corpus: ParallelCorpus, p0: float = DEFAULT_P0,
            init_lambda: float = DEFAULT_LAMBDA) -> FaParams:
    n_src = len(corpus.src_vocab)
    n_tgt = len(corpus.tgt_vocab)
    ttable = np.full((n_src, n_tgt), 1.0 / n_tgt)
    return FaParams(ttable=ttable, lam=init_lambda, p0=p0,
                    null_id=corpus.src_vocab.null_id)


def train_fa(corpus: ParallelCorpus, iterations: int = 5, p0: float = DEFAULT_P0,
             init_lambda: float = DEFAULT_LAMBDA, floor: float = TTABLE_FLOOR,
             lam_steps: int = 8, lam_step_size: float = 0.5,
             log=sys.stderr) -> tuple[FaParams, list[float]]:
    """Run full EM sweeps; returns the model and the per-sweep log-likelihood.

    The k-th history entry is the corpus log-likelihood under the
    parameters entering sweep k. Fully deterministic.
    """
    if not corpus.pairs:
        raise DataError("cannot train on an empty corpus")
    params = init_fa(corpus, p0=p0, init_lambda=init_lambda)
    history = []
    for it in range(iterations):
        stats = ExpectedCounts.zeros(len(corpus.src_vocab), len(corpus.tgt_vocab))
        ll = 0.0
        for pair in corpus.pairs:
            ll += stats.add_pair(pair, params)
        history.append(ll)
        if log is not None:
            print(f"iter={it} loglik={ll:.6f}", file=log)
        params = m_step(stats, params, floor=floor, lam_steps=lam_steps,
                        lam_step_size=lam_step_size)
    return params, history


def save_fa(path, params: FaParams, src_vocab: Vocab, tgt_vocab: Vocab) -> None:
    meta = {
        "lam": params.lam,
        "p0": params.p0,
        "null_id": params.null_id,
        "src_vocab": model_io.vocab_to_meta(src_vocab),
        "tgt_vocab": model_io.vocab_to_meta(tgt_vocab),
    }
    model_io.save_container(path, "fa", meta, {"ttable": params.ttable})


def load_fa(path) -> tuple[FaParams, Vocab, Vocab]:
    _, meta, arrays = model_io.load_container(path, expect_kind="fa")
    src_vocab = model_io.vocab_from_meta(meta["src_vocab"])
    tgt_vocab = model_io.vocab_from_meta(meta["tgt_vocab"])
    params = FaParams(ttable=arrays["ttable"], lam=float(meta["lam"]),
                      p0=float(meta["p0"]), null_id=int(meta["null_id"]))
    return params, src_vocab, tgt_vocab
