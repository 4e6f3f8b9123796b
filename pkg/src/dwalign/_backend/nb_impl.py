"""Numba-compiled kernels, signature-compatible with ``np_impl``.

Compiled lazily on first call and cached on disk, so the first run of a
fresh checkout pays a one-time JIT cost. All kernels are single-threaded
and deterministic.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def diag_features(I, J):
    h = np.empty((J, I))
    for j in range(J):
        tj = (j + 1.0) / J
        for i in range(I):
            h[j, i] = -abs((i + 1.0) / I - tj)
    return h


@njit(cache=True)
def prior_matrix(I, J, lam, p0):
    out = np.empty((J, I + 1))
    for j in range(J):
        tj = (j + 1.0) / J
        mx = -1e300
        for i in range(I):
            z = lam * -abs((i + 1.0) / I - tj)
            out[j, i + 1] = z
            if z > mx:
                mx = z
        s = 0.0
        for i in range(I):
            e = np.exp(out[j, i + 1] - mx)
            out[j, i + 1] = e
            s += e
        scale = (1.0 - p0) / s
        for i in range(I):
            out[j, i + 1] *= scale
        out[j, 0] = p0
    return out


@njit(cache=True)
def _fa_scores(src, tgt, ttable, lam, p0, null_id):
    I = src.shape[0]
    J = tgt.shape[0]
    m = prior_matrix(I, J, lam, p0)
    for j in range(J):
        f = tgt[j]
        m[j, 0] *= ttable[null_id, f]
        for i in range(I):
            m[j, i + 1] *= ttable[src[i], f]
    return m


@njit(cache=True)
def fa_posteriors(src, tgt, ttable, lam, p0, null_id):
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    I1 = m.shape[1]
    for j in range(m.shape[0]):
        s = 0.0
        for i in range(I1):
            s += m[j, i]
        inv = 1.0 / s
        for i in range(I1):
            m[j, i] *= inv
    return m


@njit(cache=True)
def fa_loglik(src, tgt, ttable, lam, p0, null_id):
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    ll = 0.0
    for j in range(m.shape[0]):
        s = 0.0
        for i in range(m.shape[1]):
            s += m[j, i]
        ll += np.log(s)
    return ll


@njit(cache=True)
def fa_viterbi_best(src, tgt, ttable, lam, p0, null_id):
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    J = m.shape[0]
    best = np.empty(J, dtype=np.int64)
    for j in range(J):
        bi = 0
        bv = m[j, 0]
        for i in range(1, m.shape[1]):
            if m[j, i] > bv:
                bv = m[j, i]
                bi = i
        best[j] = bi
    return best


@njit(cache=True)
def fa_estep_update(src, tgt, ttable, lam, p0, null_id, counts, nonnull_out):
    I = src.shape[0]
    J = tgt.shape[0]
    m = _fa_scores(src, tgt, ttable, lam, p0, null_id)
    ll = 0.0
    expected_h = 0.0
    for j in range(J):
        s = 0.0
        for i in range(I + 1):
            s += m[j, i]
        ll += np.log(s)
        inv = 1.0 / s
        f = tgt[j]
        g0 = m[j, 0] * inv
        counts[null_id, f] += g0
        nn = 0.0
        tj = (j + 1.0) / J
        for i in range(I):
            g = m[j, i + 1] * inv
            counts[src[i], f] += g
            nn += g
            expected_h += g * -abs((i + 1.0) / I - tj)
        nonnull_out[j] = nn
    return ll, expected_h


@njit(cache=True)
def diag_model_h(lam, I, J, mass):
    tot = 0.0
    for j in range(J):
        tj = (j + 1.0) / J
        mx = -1e300
        for i in range(I):
            z = lam * -abs((i + 1.0) / I - tj)
            if z > mx:
                mx = z
        s = 0.0
        hs = 0.0
        for i in range(I):
            h = -abs((i + 1.0) / I - tj)
            e = np.exp(lam * h - mx)
            s += e
            hs += e * h
        tot += mass[j] * hs / s
    return tot


# ---------------------------------------------------------------------------
# distributed translation model
# ---------------------------------------------------------------------------

@njit(cache=True)
def _contexts(src, src_emb, mats, k):
    I = src.shape[0]
    d = src_emb.shape[1]
    out = np.zeros((I, d))
    for i in range(I):
        for s in range(-k, k + 1):
            p = i + s
            if p < 0 or p >= I:
                continue
            row = src_emb[src[p]]
            mat = mats[s + k]
            for b in range(d):
                acc = 0.0
                for a in range(d):
                    acc += row[a] * mat[a, b]
                out[i, b] += acc
    return out


@njit(cache=True)
def _log_softmax_vec(x):
    mx = x[0]
    for t in range(1, x.shape[0]):
        if x[t] > mx:
            mx = x[t]
    s = 0.0
    for t in range(x.shape[0]):
        s += np.exp(x[t] - mx)
    lz = np.log(s) + mx
    return x - lz


@njit(cache=True)
def _class_logp(ctx_c_row, cls_emb, bias_cls):
    n_cls = cls_emb.shape[0]
    d = cls_emb.shape[1]
    logits = np.empty(n_cls)
    for c in range(n_cls):
        acc = bias_cls[c]
        for a in range(d):
            acc += cls_emb[c, a] * ctx_c_row[a]
        logits[c] = acc
    return _log_softmax_vec(logits)


@njit(cache=True)
def _word_block_logp(ctx_w_row, tgt_emb, bias_word, order, lo, hi):
    """Log-softmax over one class's members (scan positions lo..hi)."""
    d = tgt_emb.shape[1]
    logits = np.empty(hi - lo)
    for t in range(lo, hi):
        f = order[t]
        acc = bias_word[f]
        for a in range(d):
            acc += tgt_emb[f, a] * ctx_w_row[a]
        logits[t - lo] = acc
    return _log_softmax_vec(logits)


@njit(cache=True)
def _prior_q_and_lam_grad(gamma, lam, p0):
    J = gamma.shape[0]
    I = gamma.shape[1] - 1
    q = 0.0
    lam_grad = 0.0
    mass0 = 0.0
    massn = 0.0
    for j in range(J):
        mass0 += gamma[j, 0]
        tj = (j + 1.0) / J
        mx = -1e300
        for i in range(I):
            z = lam * -abs((i + 1.0) / I - tj)
            if z > mx:
                mx = z
        s = 0.0
        hs = 0.0
        for i in range(I):
            h = -abs((i + 1.0) / I - tj)
            e = np.exp(lam * h - mx)
            s += e
            hs += e * h
        logz = np.log(s) + mx
        hbar = hs / s
        for i in range(I):
            w = gamma[j, i + 1]
            if w == 0.0:
                continue
            h = -abs((i + 1.0) / I - tj)
            massn += w
            q += w * (lam * h - logz)
            lam_grad += w * (h - hbar)
    if mass0 > 0.0:
        q += mass0 * np.log(p0)
    if massn > 0.0:
        q += massn * np.log(1.0 - p0)
    return q, lam_grad


@njit(cache=True)
def dwa_sentence_q(src, tgt, gamma, lam, p0,
                   src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                   cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                   k, class_of, order, pos_in_order, starts):
    I = src.shape[0]
    J = tgt.shape[0]
    d = src_emb.shape[1]
    ctx_w = _contexts(src, src_emb, ctx_word, k)
    ctx_c = _contexts(src, src_emb, ctx_cls, k)
    for i in range(I):
        for a in range(d):
            ctx_w[i, a] += bias_repr[a]
            ctx_c[i, a] += bias_repr_cls[a]
    null_logp = _log_softmax_vec(null_weights)

    q = 0.0
    for i in range(I):
        has_mass = False
        for j in range(J):
            if gamma[j, i + 1] != 0.0:
                has_mass = True
                break
        if not has_mass:
            continue
        cls_logp = _class_logp(ctx_c[i], cls_emb, bias_cls)
        for j in range(J):
            w = gamma[j, i + 1]
            if w == 0.0:
                continue
            f = tgt[j]
            c = class_of[f]
            block = _word_block_logp(ctx_w[i], tgt_emb, bias_word,
                                     order, starts[c], starts[c + 1])
            q += w * (cls_logp[c] + block[pos_in_order[f] - starts[c]])
    for j in range(J):
        w0 = gamma[j, 0]
        if w0 != 0.0:
            q += w0 * null_logp[tgt[j]]
    q_prior, _ = _prior_q_and_lam_grad(gamma, lam, p0)
    return q + q_prior


@njit(cache=True)
def dwa_sentence_grad(src, tgt, gamma, lam, p0,
                      src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                      cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                      k, class_of, order, pos_in_order, starts,
                      g_src_emb, g_tgt_emb, g_ctx_word, g_bias_repr, g_bias_word,
                      g_cls_emb, g_ctx_cls, g_bias_repr_cls, g_bias_cls,
                      g_null_weights):
    I = src.shape[0]
    J = tgt.shape[0]
    d = src_emb.shape[1]
    nv = tgt_emb.shape[0]
    n_cls = cls_emb.shape[0]

    ctx_w = _contexts(src, src_emb, ctx_word, k)
    ctx_c = _contexts(src, src_emb, ctx_cls, k)
    for i in range(I):
        for a in range(d):
            ctx_w[i, a] += bias_repr[a]
            ctx_c[i, a] += bias_repr_cls[a]
    null_logp = _log_softmax_vec(null_weights)

    q = 0.0
    cnt = np.zeros(nv)          # posterior mass per target word at position i
    cls_mass = np.empty(n_cls)
    back_w = np.empty(d)        # gradient flowing into the word context
    back_c = np.empty(d)

    for i in range(I):
        tot = 0.0
        for c in range(n_cls):
            cls_mass[c] = 0.0
        for j in range(J):
            w = gamma[j, i + 1]
            if w == 0.0:
                continue
            tot += w
            f = tgt[j]
            cnt[f] += w
            cls_mass[class_of[f]] += w
        if tot == 0.0:
            continue

        cls_logp = _class_logp(ctx_c[i], cls_emb, bias_cls)
        for a in range(d):
            back_w[a] = 0.0
            back_c[a] = 0.0

        # class-logit gradient: observed class mass minus expected
        for c in range(n_cls):
            g = cls_mass[c] - tot * np.exp(cls_logp[c])
            if g != 0.0:
                g_bias_cls[c] += g
                for a in range(d):
                    g_cls_emb[c, a] += g * ctx_c[i, a]
                    back_c[a] += g * cls_emb[c, a]

        # word-logit gradient inside each class that carries mass here
        for c in range(n_cls):
            cm = cls_mass[c]
            if cm == 0.0:
                continue
            lo = starts[c]
            hi = starts[c + 1]
            block = _word_block_logp(ctx_w[i], tgt_emb, bias_word, order, lo, hi)
            for t in range(lo, hi):
                f = order[t]
                g = cnt[f] - cm * np.exp(block[t - lo])
                if g != 0.0:
                    g_bias_word[f] += g
                    for a in range(d):
                        g_tgt_emb[f, a] += g * ctx_w[i, a]
                        back_w[a] += g * tgt_emb[f, a]
            for j in range(J):
                w = gamma[j, i + 1]
                if w == 0.0:
                    continue
                f = tgt[j]
                if class_of[f] == c:
                    q += w * (cls_logp[c] + block[pos_in_order[f] - lo])

        # push context gradients back through the transforms
        for a in range(d):
            g_bias_repr[a] += back_w[a]
            g_bias_repr_cls[a] += back_c[a]
        for s in range(-k, k + 1):
            p = i + s
            if p < 0 or p >= I:
                continue
            e = src[p]
            row = src_emb[e]
            mw = ctx_word[s + k]
            mc = ctx_cls[s + k]
            for a in range(d):
                ra = row[a]
                acc = 0.0
                for b in range(d):
                    gw = back_w[b]
                    gc = back_c[b]
                    g_ctx_word[s + k, a, b] += ra * gw
                    g_ctx_cls[s + k, a, b] += ra * gc
                    acc += mw[a, b] * gw + mc[a, b] * gc
                g_src_emb[e, a] += acc

        for j in range(J):           # reset the scratch counts
            cnt[tgt[j]] = 0.0

    # null word: flat softmax over the extra weight vector
    tot0 = 0.0
    for j in range(J):
        w0 = gamma[j, 0]
        if w0 != 0.0:
            f = tgt[j]
            q += w0 * null_logp[f]
            g_null_weights[f] += w0
            tot0 += w0
    if tot0 != 0.0:
        for f in range(nv):
            g_null_weights[f] -= tot0 * np.exp(null_logp[f])

    q_prior, lam_grad = _prior_q_and_lam_grad(gamma, lam, p0)
    return q, q_prior, lam_grad


@njit(cache=True)
def dwa_viterbi_best(src, tgt, lam, p0,
                     src_emb, tgt_emb, ctx_word, bias_repr, bias_word,
                     cls_emb, ctx_cls, bias_repr_cls, bias_cls, null_weights,
                     k, class_of, order, pos_in_order, starts):
    I = src.shape[0]
    J = tgt.shape[0]
    d = src_emb.shape[1]
    ctx_w = _contexts(src, src_emb, ctx_word, k)
    ctx_c = _contexts(src, src_emb, ctx_cls, k)
    for i in range(I):
        for a in range(d):
            ctx_w[i, a] += bias_repr[a]
            ctx_c[i, a] += bias_repr_cls[a]
    null_logp = _log_softmax_vec(null_weights)

    scores = np.empty((J, I + 1))
    log_p0 = np.log(p0) if p0 > 0.0 else -np.inf
    log_1p0 = np.log(1.0 - p0) if p0 < 1.0 else -np.inf
    for j in range(J):
        scores[j, 0] = log_p0 + null_logp[tgt[j]]

    for i in range(I):
        cls_logp = _class_logp(ctx_c[i], cls_emb, bias_cls)
        for j in range(J):
            f = tgt[j]
            c = class_of[f]
            block = _word_block_logp(ctx_w[i], tgt_emb, bias_word,
                                     order, starts[c], starts[c + 1])
            scores[j, i + 1] = cls_logp[c] + block[pos_in_order[f] - starts[c]]

    best = np.empty(J, dtype=np.int64)
    for j in range(J):
        tj = (j + 1.0) / J
        mx = -1e300
        for i in range(I):
            z = lam * -abs((i + 1.0) / I - tj)
            if z > mx:
                mx = z
        s = 0.0
        for i in range(I):
            s += np.exp(lam * -abs((i + 1.0) / I - tj) - mx)
        logz = np.log(s) + mx
        bi = 0
        bv = scores[j, 0]
        for i in range(I):
            v = log_1p0 + lam * -abs((i + 1.0) / I - tj) - logz + scores[j, i + 1]
            if v > bv:
                bv = v
                bi = i + 1
        best[j] = bi
    return best
