"""Alignment error rate, likelihood reporting, and embedding inspection."""
from __future__ import annotations

import numpy as np

from . import dwa as dwa_mod
from . import fa as fa_mod
from .alignments import GoldAlignment
from .corpus import ClassPartition, ParallelCorpus
from .errors import DataError
from .translation import DwaParams, translation_dist


def _aer_counts(predicted, gold: GoldAlignment):
    if not gold.sure <= gold.possible:
        raise ValueError("sure links must be a subset of possible links")
    a = set(predicted)
    return len(a & gold.sure), len(a & gold.possible), len(a), len(gold.sure)


def aer(predicted, gold: GoldAlignment) -> float:
    """1 - (|A&S| + |A&P|) / (|A| + |S|); 0 when both A and S are empty."""
    a_s, a_p, n_a, n_s = _aer_counts(predicted, gold)
    if n_a + n_s == 0:
        return 0.0
    return 1.0 - (a_s + a_p) / (n_a + n_s)


def corpus_aer(predicted_per_pair, gold_per_pair) -> float:
    """AER from corpus-aggregated counts, not averaged per-sentence scores."""
    if len(predicted_per_pair) != len(gold_per_pair):
        raise DataError(
            f"pair count mismatch: {len(predicted_per_pair)} predictions vs "
            f"{len(gold_per_pair)} gold entries")
    tot = np.zeros(4, dtype=np.int64)
    for pred, gold in zip(predicted_per_pair, gold_per_pair):
        tot += _aer_counts(pred, gold)
    if tot[2] + tot[3] == 0:
        return 0.0
    return 1.0 - (tot[0] + tot[1]) / (tot[2] + tot[3])


def expected_translation_repr(e: int, params: DwaParams,
                              classes: ClassPartition) -> np.ndarray:
    """Probability-weighted mean target embedding for a lone source word.

    The context is the word by itself, so only the center transform
    contributes regardless of the trained window size.
    """
    src = np.array([e], dtype=np.int64)
    p = translation_dist(1, src, params, classes)
    return p @ params.tgt_emb


def nearest_neighbors(query: np.ndarray, embeddings: np.ndarray, words,
                      n: int = 10) -> list[tuple[str, float]]:
    """Top-n rows by cosine similarity; ties broken by id; zero norms score 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if embeddings.shape[0] == 0:
        raise ValueError("embeddings must be non-empty")
    qn = float(np.linalg.norm(query))
    norms = np.linalg.norm(embeddings, axis=1)
    sims = np.zeros(embeddings.shape[0])
    if qn > 0.0:
        ok = norms > 0.0
        sims[ok] = (embeddings[ok] @ query) / (norms[ok] * qn)
    ranked = np.lexsort((np.arange(sims.shape[0]), -sims))
    return [(words[i], float(sims[i])) for i in ranked[:n]]


def corpus_loglik(corpus: ParallelCorpus, model) -> float:
    """Total marginal log-likelihood of a corpus under an FA or DWA model."""
    if isinstance(model, fa_mod.FaParams):
        return sum(fa_mod.sentence_loglik(pair, model) for pair in corpus.pairs)
    if isinstance(model, dwa_mod.DwaModel):
        total = 0.0
        for pair in corpus.pairs:
            total += _dwa_sentence_marginal(pair, model)
        return total
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _dwa_sentence_marginal(pair, model: dwa_mod.DwaModel) -> float:
    from . import _backend as K
    from .translation import null_dist, translation_dist

    I, J = pair.I, pair.J
    probs = np.empty((J, I + 1))
    probs[:, 0] = null_dist(model.params)[pair.tgt]
    for i in range(1, I + 1):
        probs[:, i] = translation_dist(i, pair.src, model.params,
                                       model.classes)[pair.tgt]
    prior = K.prior_matrix(I, J, model.lam, model.p0)
    return float(np.log((prior * probs).sum(axis=1)).sum())
