"""Pure-numpy kernels for the per-sentence hot paths.

Shared index conventions:
  - ``src``/``tgt`` are int64 id arrays; ``src[p]`` is source position p+1,
    position 0 being the virtual null word (never stored).
  - Posterior and score tables have I+1 columns; column 0 is the null word.
  - ``gamma`` is the (J, I+1) row-stochastic posterior table.

The numba twin in ``nb_impl`` implements the same signatures; this module
is the single-threaded reference the tests compare against.
"""
from __future__ import annotations

import numpy as np


def diag_features(I, J):
    """h[j-1, i-1] = -|i/I - j/J| for i=1..I, j=1..J."""
    ii = np.arange(1, I + 1, dtype=np.float64) / I
    jj = np.arange(1, J + 1, dtype=np.float64) / J
    return -np.abs(ii[None, :] - jj[:, None])


def prior_matrix(I, J, lam, p0):
    """Alignment prior over i=0..I for each target position (rows sum to 1)."""
    z = lam * diag_features(I, J)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    out = np.empty((J, I + 1))
    out[:, 0] = p0
    out[:, 1:] = (1.0 - p0) * e / e.sum(axis=1, keepdims=True)
    return out


def _fa_scores(src, tgt, ttable, lam, p0, null_id):
    I = src.shape[0]
    J = tgt.shape[0]
    rows = np.concatenate(([null_id], src))
    trans = ttable[np.ix_(rows, tgt)].T  # (J, I+1)
    return prior_matrix(I, J, lam, p0) * trans


def fa_posteriors(src, tgt, ttable, lam, p0, null_id):
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    return m / m.sum(axis=1, keepdims=True)


def fa_loglik(src, tgt, ttable, lam, p0, null_id):
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    return float(np.log(m.sum(axis=1)).sum())


def fa_viterbi_best(src, tgt, ttable, lam, p0, null_id):
    """Per target position, the highest-scoring source position (0 = null)."""
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    return np.argmax(m, axis=1).astype(np.int64)


def fa_estep_update(src, tgt, ttable, lam, p0, null_id, counts, nonnull_out):
    """Fused E-step: accumulate expected counts, return (loglik, expected h).

    ``counts`` is the (VE, VF) expected-count buffer, mutated in place.
    ``nonnull_out`` (length J) receives the non-null posterior mass per
    target position, used later for the diagonal-tension update.
    """
    I = src.shape[0]
    J = tgt.shape[0]
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    tot = m.sum(axis=1)
    gamma = m / tot[:, None]
    rows = np.concatenate(([null_id], src))
    for i in range(I + 1):
        np.add.at(counts, (rows[i], tgt), gamma[:, i])
    w = gamma[:, 1:]
    expected_h = float((w * diag_features(I, J)).sum())
    nonnull_out[:] = w.sum(axis=1)
    return float(np.log(tot).sum()), expected_h


def diag_model_h(lam, I, J, mass):
    """Model expectation of the diagonal feature, weighted by per-j mass."""
    h = diag_features(I, J)
    z = lam * h
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)
    return float((mass[:, None] * s * h).sum())


# ---------------------------------------------------------------------------
# distributed translation model
# ---------------------------------------------------------------------------

def _contexts(src, src_emb, mats, k):
    """Stacked context vectors: out[i-1] = sum_s r[src position i+s] @ mats[s+k]."""
    I = src.shape[0]
    rows = src_emb[src]
    out = np.zeros((I, src_emb.shape[1]))
    for s in range(-k, k + 1):
        lo = max(0, -s)
        hi = min(I, I - s)
        if lo >= hi:
            continue
        out[lo:hi] += rows[lo + s:hi + s] @ mats[s + k]
    return out


def _segment_log_softmax(logits_ord, starts, seg_id):
    """Log-softmax within each class block of scan-ordered logit columns."""
    cut = starts[:-1]
    mx = np.maximum.reduceat(logits_ord, cut, axis=1)
    sh = logits_ord - mx[:, seg_id]
    ex = np.exp(sh)
    ssum = np.add.reduceat(ex, cut, axis=1)
    return sh - np.log(ssum)[:, seg_id], ex / ssum[:, seg_id]


def _log_softmax_rows(x):
    mx = x.max(axis=1, keepdims=True)
    sh = x - mx
    ex = np.exp(sh)
    s = ex.sum(axis=1, keepdims=True)
    return sh - np.log(s), ex / s


def _dwa_forward(src, tgt, src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                 cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                 k, class_of, order, starts):
    seg_id = class_of[order]
    ctx_w = _contexts(src, src_emb, ctx_word, k) + bias_repr       # (I, d)
    ctx_c = _contexts(src, src_emb, ctx_cls, k) + bias_repr_cls    # (I, d)
    word_logits = ctx_w @ tgt_emb.T + bias_word                    # (I, VF)
    cls_logits = ctx_c @ cls_emb.T + bias_cls                      # (I, C)
    cls_logp, cls_p = _log_softmax_rows(cls_logits)
    word_logp_ord, word_p_ord = _segment_log_softmax(word_logits[:, order], starts, seg_id)
    nmax = null_weights.max()
    nexp = np.exp(null_weights - nmax)
    null_logp = null_weights - nmax - np.log(nexp.sum())
    return ctx_w, ctx_c, cls_logp, cls_p, word_logp_ord, word_p_ord, null_logp, seg_id


def _prior_logs(I, J, lam, p0):
    h = diag_features(I, J)
    z = lam * h
    zmax = z.max(axis=1, keepdims=True)
    logz = np.log(np.exp(z - zmax).sum(axis=1, keepdims=True)) + zmax
    return h, z - logz  # per-position feature and log softmax over i=1..I


def _prior_q_and_lam_grad(gamma, lam, p0):
    """Expected log alignment-prior plus its tension gradient."""
    J, width = gamma.shape
    I = width - 1
    w = gamma[:, 1:]
    h, logprior = _prior_logs(I, J, lam, p0)
    q = 0.0
    mass0 = float(gamma[:, 0].sum())
    massn = float(w.sum())
    if mass0 > 0.0:
        q += mass0 * np.log(p0)
    if massn > 0.0:
        q += massn * np.log(1.0 - p0)
    q += float((w * logprior).sum())
    sm = np.exp(logprior)
    hbar = (sm * h).sum(axis=1)
    lam_grad = float((w * (h - hbar[:, None])).sum())
    return q, lam_grad


def dwa_sentence_q(src, tgt, gamma, lam, p0,
                   src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                   cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                   k, class_of, order, pos_in_order, starts):
    """Posterior-weighted complete-data log-likelihood of one pair."""
    (_, _, cls_logp, _, word_logp_ord, _, null_logp, _) = _dwa_forward(
        src, tgt, src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
        cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
        k, class_of, order, starts)
    w = gamma[:, 1:]
    logp_ji = cls_logp[:, class_of[tgt]].T + word_logp_ord[:, pos_in_order[tgt]].T
    q = float((w * logp_ji).sum())
    q += float(gamma[:, 0] @ null_logp[tgt])
    q_prior, _ = _prior_q_and_lam_grad(gamma, lam, p0)
    return q + q_prior


def dwa_sentence_grad(src, tgt, gamma, lam, p0,
                      src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                      cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                      k, class_of, order, pos_in_order, starts,
                      g_src_emb, g_tgt_emb, g_ctx_word, g_bias_repr, g_bias_word,
                      g_cls_emb, g_ctx_cls, g_bias_repr_cls, g_bias_cls,
                      g_null_weights):
    """Accumulate the gradient of the posterior-weighted log-likelihood.

    Gradient buffers (``g_*``) are accumulated into, not overwritten.
    Returns (translation term of the objective, prior term, tension grad).
    """
    I = src.shape[0]
    J = tgt.shape[0]
    nv = tgt_emb.shape[0]
    (ctx_w, ctx_c, cls_logp, cls_p, word_logp_ord, word_p_ord,
     null_logp, seg_id) = _dwa_forward(
        src, tgt, src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
        cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
        k, class_of, order, starts)

    w = gamma[:, 1:]                       # (J, I)
    colmass = w.sum(axis=0)                # (I,)
    cof_t = class_of[tgt]
    pos_t = pos_in_order[tgt]

    q = float((w * (cls_logp[:, cof_t].T + word_logp_ord[:, pos_t].T)).sum())

    # posterior mass landing on each class / ordered word column, per position
    n_cls = cls_emb.shape[0]
    cls_mass = np.zeros((n_cls, I))
    np.add.at(cls_mass, cof_t, w)
    cnt_ord = np.zeros((nv, I))
    np.add.at(cnt_ord, pos_t, w)

    g_word_ord = cnt_ord.T - word_p_ord * cls_mass.T[:, seg_id]   # (I, VF)
    g_cls = cls_mass.T - colmass[:, None] * cls_p                 # (I, C)
    g_word = np.zeros_like(g_word_ord)
    g_word[:, order] = g_word_ord

    g_bias_word += g_word.sum(axis=0)
    g_tgt_emb += g_word.T @ ctx_w
    g_bias_cls += g_cls.sum(axis=0)
    g_cls_emb += g_cls.T @ ctx_c

    back_w = g_word @ tgt_emb              # (I, d) gradient into word context
    back_c = g_cls @ cls_emb               # (I, d) gradient into class context
    g_bias_repr += back_w.sum(axis=0)
    g_bias_repr_cls += back_c.sum(axis=0)

    rows = src_emb[src]
    for s in range(-k, k + 1):
        lo = max(0, -s)
        hi = min(I, I - s)
        if lo >= hi:
            continue
        ids = src[lo + s:hi + s]
        g_ctx_word[s + k] += rows[lo + s:hi + s].T @ back_w[lo:hi]
        g_ctx_cls[s + k] += rows[lo + s:hi + s].T @ back_c[lo:hi]
        np.add.at(g_src_emb, ids, back_w[lo:hi] @ ctx_word[s + k].T)
        np.add.at(g_src_emb, ids, back_c[lo:hi] @ ctx_cls[s + k].T)

    g0 = gamma[:, 0]
    q += float(g0 @ null_logp[tgt])
    np.add.at(g_null_weights, tgt, g0)
    g_null_weights -= g0.sum() * np.exp(null_logp)

    q_prior, lam_grad = _prior_q_and_lam_grad(gamma, lam, p0)
    return q, q_prior, lam_grad


def dwa_viterbi_best(src, tgt, lam, p0,
                     src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                     cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                     k, class_of, order, pos_in_order, starts):
    """Per target position, argmax of prior times translation probability."""
    I = src.shape[0]
    J = tgt.shape[0]
    (_, _, cls_logp, _, word_logp_ord, _, null_logp, _) = _dwa_forward(
        src, tgt, src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
        cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
        k, class_of, order, starts)
    _, logprior = _prior_logs(I, J, lam, p0)
    scores = np.empty((J, I + 1))
    with np.errstate(divide="ignore"):
        scores[:, 0] = np.log(p0) + null_logp[tgt]
        scores[:, 1:] = np.log(1.0 - p0) + logprior \
            + cls_logp[:, class_of[tgt]].T + word_logp_ord[:, pos_in_order[tgt]].T
    return np.argmax(scores, axis=1).astype(np.int64)
