"""Distributed translation model.

A target word f is scored against source position i through an energy
that is bilinear in the word embeddings: the source words in a window of
half-width k around i are pushed through per-offset d x d transforms,
summed, and dotted with the target embedding, plus representation and
word biases. Lower energy means higher probability. The softmax over f is
factorized as p(class | context) * p(f | class, context), each factor its
own energy model; the null word instead uses one flat weight vector.

This module holds the parameter container and the readable reference
implementations; training uses the compiled kernels in ``_backend``
through the same contracts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend as K
from .corpus import ClassPartition, SentencePair

INIT_EMB_RANGE = 0.08
INIT_CTX_SCALE = 0.1

# parameter blocks that carry gradients / optimizer state, in update order
ARRAY_FIELDS = (
    "src_emb", "tgt_emb", "ctx_word", "bias_repr", "bias_word",
    "cls_emb", "ctx_cls", "bias_repr_cls", "bias_cls", "null_weights",
)


@dataclass
class DwaParams:
    """All trainable arrays of the distributed translation model.

    Shapes, with VE/VF the vocab sizes, C the class count, d the embedding
    dimension and k the context half-width:

      src_emb (VE, d)   tgt_emb (VF, d)    ctx_word (2k+1, d, d)
      bias_repr (d,)    bias_word (VF,)    cls_emb (C, d)
      ctx_cls (2k+1, d, d)  bias_repr_cls (d,)  bias_cls (C,)
      null_weights (VF,)
    """

    src_emb: np.ndarray
    tgt_emb: np.ndarray
    ctx_word: np.ndarray
    bias_repr: np.ndarray
    bias_word: np.ndarray
    cls_emb: np.ndarray
    ctx_cls: np.ndarray
    bias_repr_cls: np.ndarray
    bias_cls: np.ndarray
    null_weights: np.ndarray
    half_window: int

    @property
    def dim(self) -> int:
        return self.src_emb.shape[1]

    def blocks(self):
        return [(name, getattr(self, name)) for name in ARRAY_FIELDS]

    def zeros_like(self) -> "DwaParams":
        kw = {name: np.zeros_like(getattr(self, name)) for name in ARRAY_FIELDS}
        return DwaParams(half_window=self.half_window, **kw)

    def copy(self) -> "DwaParams":
        kw = {name: getattr(self, name).copy() for name in ARRAY_FIELDS}
        return DwaParams(half_window=self.half_window, **kw)

    def zero_(self) -> None:
        for name in ARRAY_FIELDS:
            getattr(self, name).fill(0.0)


def init_params(n_src: int, n_tgt: int, n_classes: int, dim: int,
                half_window: int, seed: int,
                word_bias_log_freq: np.ndarray | None = None) -> DwaParams:
    """Seeded initialization: small uniform embeddings, 0.1*I transforms.

    ``word_bias_log_freq``, when given, seeds the per-word biases with
    target unigram log-probabilities instead of zeros.
    """
    rng = np.random.default_rng(seed)
    n_ctx = 2 * half_window + 1

    def emb(n):
        return rng.uniform(-INIT_EMB_RANGE, INIT_EMB_RANGE, size=(n, dim))

    src_emb = emb(n_src)
    tgt_emb = emb(n_tgt)
    cls_emb = emb(n_classes)
    eye = INIT_CTX_SCALE * np.eye(dim)
    bias_word = np.zeros(n_tgt) if word_bias_log_freq is None \
        else word_bias_log_freq.astype(np.float64).copy()
    return DwaParams(
        src_emb=src_emb,
        tgt_emb=tgt_emb,
        ctx_word=np.tile(eye, (n_ctx, 1, 1)),
        bias_repr=np.zeros(dim),
        bias_word=bias_word,
        cls_emb=cls_emb,
        ctx_cls=np.tile(eye, (n_ctx, 1, 1)),
        bias_repr_cls=np.zeros(dim),
        bias_cls=np.zeros(n_classes),
        null_weights=np.zeros(n_tgt),
        half_window=half_window,
    )


def _context_vector(i: int, src: np.ndarray, mats: np.ndarray, src_emb: np.ndarray,
                    k: int) -> np.ndarray:
    if i < 1 or i > src.shape[0]:
        raise ValueError(f"source position {i} outside 1..{src.shape[0]}; "
                         "position 0 is the null word")
    q = np.zeros(src_emb.shape[1])
    for s in range(-k, k + 1):
        p = i + s
        if 1 <= p <= src.shape[0]:
            q += src_emb[src[p - 1]] @ mats[s + k]
    return q


def energy(f: int, i: int, src: np.ndarray, params: DwaParams) -> float:
    """Translation energy of target word f at source position i (1-based)."""
    q = _context_vector(i, src, params.ctx_word, params.src_emb, params.half_window)
    rf = params.tgt_emb[f]
    return float(-(q @ rf) - params.bias_repr @ rf - params.bias_word[f])


def class_energy(c: int, i: int, src: np.ndarray, params: DwaParams) -> float:
    """Same form as ``energy`` with the class embedding and its own transforms."""
    q = _context_vector(i, src, params.ctx_cls, params.src_emb, params.half_window)
    rc = params.cls_emb[c]
    return float(-(q @ rc) - params.bias_repr_cls @ rc - params.bias_cls[c])


def _log_softmax(x: np.ndarray) -> np.ndarray:
    m = x.max()
    s = x - m
    return s - np.log(np.exp(s).sum())


def translation_logdist(i: int, src: np.ndarray, params: DwaParams,
                        classes: ClassPartition) -> np.ndarray:
    """log p(f | context at source position i) for every target word f."""
    q = _context_vector(i, src, params.ctx_word, params.src_emb, params.half_window)
    qc = _context_vector(i, src, params.ctx_cls, params.src_emb, params.half_window)
    word_logits = params.tgt_emb @ (q + params.bias_repr) + params.bias_word
    cls_logits = params.cls_emb @ (qc + params.bias_repr_cls) + params.bias_cls
    cls_logp = _log_softmax(cls_logits)
    out = np.empty_like(word_logits)
    for c, members in enumerate(classes.members):
        out[members] = cls_logp[c] + _log_softmax(word_logits[members])
    return out


def translation_dist(i, src, params, classes) -> np.ndarray:
    return np.exp(translation_logdist(i, src, params, classes))


def translation_prob(f: int, i: int, src: np.ndarray, params: DwaParams,
                     classes: ClassPartition) -> float:
    """p(class of f | context) * p(f | its class, context)."""
    return float(translation_dist(i, src, params, classes)[f])


def null_dist(params: DwaParams) -> np.ndarray:
    return np.exp(_log_softmax(params.null_weights))


def null_prob(f: int, params: DwaParams) -> float:
    """Context-free softmax over the null weight vector (not class-factorized)."""
    return float(null_dist(params)[f])


def grad_weighted_logprob(pair: SentencePair, weights: np.ndarray,
                          params: DwaParams, classes: ClassPartition,
                          out: DwaParams | None = None) -> DwaParams:
    """Gradient of sum_j sum_i weights[j, i] * log p(f_j | i) over all blocks.

    ``weights`` is a (J, I+1) row-stochastic table; column 0 weights the
    null-word term. The alignment-prior part of the objective has no
    dependence on these parameters and is handled by the trainer.
    """
    grads = out if out is not None else params.zeros_like()
    # tension/null-probability arguments only affect the prior term, which
    # is returned separately and discarded here
    K.dwa_sentence_grad(
        pair.src, pair.tgt, weights, 1.0, 0.5,
        params.src_emb, params.tgt_emb, params.ctx_word, params.bias_repr,
        params.bias_word, params.cls_emb, params.ctx_cls, params.bias_repr_cls,
        params.bias_cls, params.null_weights, params.half_window,
        classes.class_of, classes.order, classes.pos_in_order, classes.starts,
        grads.src_emb, grads.tgt_emb, grads.ctx_word, grads.bias_repr,
        grads.bias_word, grads.cls_emb, grads.ctx_cls, grads.bias_repr_cls,
        grads.bias_cls, grads.null_weights,
    )
    return grads
