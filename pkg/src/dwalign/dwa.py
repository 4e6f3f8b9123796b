"""Joint trainer for the distributed aligner.

EM with the E-step frozen: alignment posteriors come from a trained FA
model and never change. The M-step ascends the expected complete-data
log-likelihood, updating the translation parameters with one AdaGrad step
per sentence and the diagonal tension with one normalized gradient step
per epoch. The null probability is inherited from FA and stays fixed.
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass

import numpy as np

from . import _backend as K
from . import fa as fa_mod
from . import model_io
from .corpus import ClassPartition, ParallelCorpus, SentencePair, Vocab, build_classes
from .errors import DataError, NumericalError
from .optim import AdaGradState, adagrad_step
from .translation import ARRAY_FIELDS, DwaParams, init_params

LAM_STEP_SIZE = 0.5


@dataclass
class DwaTrainConfig:
    epochs: int = 40
    dim: int = 100
    half_window: int = 0
    eta: float = 0.05
    eps: float = 1e-8
    seed: int = 1
    shuffle: bool = True
    lambda_init: float | None = None   # None: take the trained FA tension
    p0: float | None = None            # None: take the FA null probability
    word_bias_from_freq: bool = False

    def validate(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        if self.half_window < 0:
            raise ValueError("context half-width must be >= 0")
        if self.eta <= 0 or self.eps < 0:
            raise ValueError("eta must be > 0 and eps >= 0")


@dataclass
class DwaModel:
    """Everything needed to score and decode with the distributed aligner."""

    params: DwaParams
    classes: ClassPartition
    lam: float
    p0: float
    src_vocab: Vocab
    tgt_vocab: Vocab


def frozen_posteriors(pair: SentencePair, fa_params: fa_mod.FaParams) -> np.ndarray:
    """Alignment posteriors under the frozen FA model (never re-estimated)."""
    return fa_mod.e_step(pair, fa_params)


def sentence_gradient(pair: SentencePair, gamma: np.ndarray, params: DwaParams,
                      lam: float, p0: float, classes: ClassPartition,
                      out: DwaParams | None = None) -> tuple[DwaParams, float]:
    """Gradient of the posterior-weighted log-likelihood of one pair.

    Returns the translation-parameter gradients plus the scalar gradient
    for the diagonal tension. ``gamma`` is a (J, I+1) posterior table.
    """
    grads = out if out is not None else params.zeros_like()
    _, _, lam_grad = K.dwa_sentence_grad(
        pair.src, pair.tgt, gamma, lam, p0,
        params.src_emb, params.tgt_emb, params.ctx_word, params.bias_repr,
        params.bias_word, params.cls_emb, params.ctx_cls, params.bias_repr_cls,
        params.bias_cls, params.null_weights, params.half_window,
        classes.class_of, classes.order, classes.pos_in_order, classes.starts,
        grads.src_emb, grads.tgt_emb, grads.ctx_word, grads.bias_repr,
        grads.bias_word, grads.cls_emb, grads.ctx_cls, grads.bias_repr_cls,
        grads.bias_cls, grads.null_weights,
    )
    return grads, float(lam_grad)


def _sentence_q(pair: SentencePair, gamma: np.ndarray, params: DwaParams,
                lam: float, p0: float, classes: ClassPartition) -> float:
    return float(K.dwa_sentence_q(
        pair.src, pair.tgt, gamma, lam, p0,
        params.src_emb, params.tgt_emb, params.ctx_word, params.bias_repr,
        params.bias_word, params.cls_emb, params.ctx_cls, params.bias_repr_cls,
        params.bias_cls, params.null_weights, params.half_window,
        classes.class_of, classes.order, classes.pos_in_order, classes.starts,
    ))


def q_objective(corpus: ParallelCorpus, params: DwaParams, lam: float,
                fa_params: fa_mod.FaParams, classes: ClassPartition) -> float:
    """Expected complete-data log-likelihood under the frozen FA posteriors."""
    total = 0.0
    for pair in corpus.pairs:
        gamma = frozen_posteriors(pair, fa_params)
        total += _sentence_q(pair, gamma, params, lam, fa_params.p0, classes)
    return total


def train_dwa(corpus: ParallelCorpus, fa_params: fa_mod.FaParams,
              config: DwaTrainConfig, log=sys.stderr
              ) -> tuple[DwaModel, list[float]]:
    """Train the distributed aligner; returns the model and per-epoch Q values.

    Deterministic for a fixed seed and config: the per-epoch visit order is
    drawn from one seeded generator, and every kernel is single-threaded.
    """
    config.validate()
    if not corpus.pairs:
        raise DataError("cannot train on an empty corpus")

    classes = build_classes(corpus.tgt_vocab)
    bias_init = None
    if config.word_bias_from_freq:
        freq = corpus.tgt_vocab.freq.astype(np.float64)
        freq = np.maximum(freq, 1.0)
        bias_init = np.log(freq / freq.sum())
    params = init_params(
        n_src=len(corpus.src_vocab), n_tgt=len(corpus.tgt_vocab),
        n_classes=classes.n_classes, dim=config.dim,
        half_window=config.half_window, seed=config.seed,
        word_bias_log_freq=bias_init,
    )
    lam = fa_params.lam if config.lambda_init is None else config.lambda_init
    p0 = fa_params.p0 if config.p0 is None else config.p0
    state = AdaGradState.init(params, eta=config.eta, eps=config.eps)
    rng = np.random.default_rng(config.seed)

    gammas = [frozen_posteriors(pair, fa_params) for pair in corpus.pairs]
    nonnull_total = sum(float(g[:, 1:].sum()) for g in gammas)

    history = []
    n = len(corpus.pairs)
    grads = params.zeros_like()
    for epoch in range(config.epochs):
        t0 = time.monotonic()
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        lam_grad_total = 0.0
        for idx in order:
            grads.zero_()
            _, lam_grad = sentence_gradient(
                corpus.pairs[idx], gammas[idx], params, lam, p0, classes, out=grads)
            try:
                adagrad_step(params, grads, state)
            except NumericalError as err:
                raise NumericalError(f"epoch {epoch} sentence {idx}: {err}") from err
            lam_grad_total += lam_grad
        if nonnull_total > 0.0:
            lam += LAM_STEP_SIZE * lam_grad_total / nonnull_total
            lam = min(max(lam, fa_mod.LAMBDA_MIN), fa_mod.LAMBDA_MAX)

        q = 0.0
        for pair, gamma in zip(corpus.pairs, gammas):
            q += _sentence_q(pair, gamma, params, lam, p0, classes)
        if not np.isfinite(q):
            raise NumericalError(f"epoch {epoch}: objective is not finite")
        history.append(q)
        if log is not None:
            elapsed = int(round((time.monotonic() - t0) * 1000))
            print(f"epoch={epoch} Q={q:.6f} elapsed_ms={elapsed}", file=log)

    model = DwaModel(params=params, classes=classes, lam=lam, p0=p0,
                     src_vocab=corpus.src_vocab, tgt_vocab=corpus.tgt_vocab)
    return model, history


def dwa_viterbi(pair: SentencePair, params: DwaParams, lam: float, p0: float,
                classes: ClassPartition) -> set[tuple[int, int]]:
    """Argmax decoding of prior times translation probability, 0-based links."""
    best = K.dwa_viterbi_best(
        pair.src, pair.tgt, lam, p0,
        params.src_emb, params.tgt_emb, params.ctx_word, params.bias_repr,
        params.bias_word, params.cls_emb, params.ctx_cls, params.bias_repr_cls,
        params.bias_cls, params.null_weights, params.half_window,
        classes.class_of, classes.order, classes.pos_in_order, classes.starts,
    )
    return {(int(i) - 1, j) for j, i in enumerate(best) if i > 0}


def save_dwa(path, model: DwaModel) -> None:
    meta = {
        "lam": model.lam,
        "p0": model.p0,
        "half_window": model.params.half_window,
        "src_vocab": model_io.vocab_to_meta(model.src_vocab),
        "tgt_vocab": model_io.vocab_to_meta(model.tgt_vocab),
    }
    arrays = {name: arr for name, arr in model.params.blocks()}
    arrays.update(
        cls_class_of=model.classes.class_of,
        cls_order=model.classes.order,
        cls_starts=model.classes.starts,
        cls_within=model.classes.within_index,
        cls_pos_in_order=model.classes.pos_in_order,
    )
    model_io.save_container(path, "dwa", meta, arrays)


def load_dwa(path) -> DwaModel:
    _, meta, arrays = model_io.load_container(path, expect_kind="dwa")
    params = DwaParams(half_window=int(meta["half_window"]),
                       **{name: arrays[name] for name in ARRAY_FIELDS})
    classes = ClassPartition(
        class_of=arrays["cls_class_of"],
        order=arrays["cls_order"],
        starts=arrays["cls_starts"],
        within_index=arrays["cls_within"],
        pos_in_order=arrays["cls_pos_in_order"],
    )
    return DwaModel(
        params=params,
        classes=classes,
        lam=float(meta["lam"]),
        p0=float(meta["p0"]),
        src_vocab=model_io.vocab_from_meta(meta["src_vocab"]),
        tgt_vocab=model_io.vocab_from_meta(meta["tgt_vocab"]),
    )
