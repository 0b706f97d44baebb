"""Pure numpy split-search kernels.

Reference twin of ``_kernels.pyx``. Both evaluate every threshold of a
feature from per-bin counts in closed form: a binary split gives every
sample one of two scores (the child P(Y+)), so each pairwise AUC sum
reduces to a handful of count products. The arithmetic is written in the
same order in both files so SCAFF gains agree bit for bit.
"""
from __future__ import annotations

import math

import numpy as np

SCAFF, AUC, KAMIRAN_SUB, KAMIRAN_DIV, FAHT = range(5)
KAMIRAN_DIV_EPS = 1e-6


def _entropy(a: np.ndarray, n: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast(a, n).shape)
    a = np.broadcast_to(a, out.shape).astype(np.float64)
    n = np.broadcast_to(n, out.shape).astype(np.float64)
    ok = (a > 0) & (a < n)
    p = a[ok] / n[ok]
    q = 1.0 - p
    # libm log2, as in the compiled kernel; numpy's SIMD log2 can differ by an ulp
    out[ok] = -(p * _log2(p) + q * _log2(q))
    return out


def _log2(x: np.ndarray) -> np.ndarray:
    return np.fromiter((math.log2(v) for v in x), dtype=np.float64, count=x.size)


def _pair_auc(pL, pR, nL, nR, s_lr, s_rl):
    """Unfolded AUC of a two-valued score vector against a binary target.

    ``pL``/``pR`` are target-positive counts per child, ``nL``/``nR`` child sizes.
    """
    P = pL + pR
    N = (nL + nR) - P
    qL = nL - pL
    qR = nR - pR
    num = pL * qR * s_lr + pR * qL * s_rl + 0.5 * (pL * qL + pR * qR)
    den = P * N
    out = np.full(np.shape(num), 0.5)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def _discrimination(in_pos, in_n, out_pos, out_n):
    out = np.zeros(np.shape(in_n))
    ok = (in_n > 0) & (out_n > 0)
    out[ok] = np.abs(in_pos[ok] / in_n[ok] - out_pos[ok] / out_n[ok])
    return out


def histograms(codes, y, groups, n_bins, joint):
    cnt = np.bincount(codes, minlength=n_bins).astype(np.float64)
    pos = np.bincount(codes[y == 1], minlength=n_bins).astype(np.float64)
    gin = np.zeros((groups.shape[0], n_bins))
    for g in range(groups.shape[0]):
        gin[g] = np.bincount(codes[groups[g] == 1], minlength=n_bins)
    gpos = None
    if joint:
        gpos = np.bincount(codes[(groups[0] == 1) & (y == 1)], minlength=n_bins).astype(np.float64)
    return cnt, pos, gin, gpos


def feature_gains(codes, y, groups, n_bins, kind, theta, min_leaf):
    """Gain of ``left = codes <= t`` for every ``t`` in ``range(n_bins)``.

    Entries that are not candidates (unoccupied ``t``, empty right side,
    or a child below ``min_leaf``) are NaN.
    """
    codes = np.asarray(codes, dtype=np.intp)
    y = np.asarray(y)
    groups = np.asarray(groups)
    joint = kind in (KAMIRAN_SUB, KAMIRAN_DIV, FAHT)
    cnt, pos, gin, gpos = histograms(codes, y, groups, n_bins, joint)
    n = cnt.sum()
    A = pos.sum()
    nL = np.cumsum(cnt)
    aL = np.cumsum(pos)
    nR = n - nL
    aR = A - aL
    valid = (cnt > 0) & (nR > 0) & (nL >= min_leaf) & (nR >= min_leaf)
    gains = np.full(n_bins, np.nan)
    if not valid.any():
        return gains

    if kind in (SCAFF, AUC):
        cmp = aL * nR - aR * nL
        s_lr = np.where(cmp > 0, 1.0, np.where(cmp == 0, 0.5, 0.0))
        s_rl = 1.0 - s_lr
        auc_y = _pair_auc(aL, aR, nL, nR, s_lr, s_rl)
        if kind == AUC:
            child = auc_y
            parent = 0.5
        else:
            auc_s = np.full(n_bins, 0.5)
            for g in range(gin.shape[0]):
                gL = np.cumsum(gin[g])
                gR = gL[-1] - gL
                u = _pair_auc(gL, gR, nL, nR, s_lr, s_rl)
                auc_s = np.maximum(auc_s, np.maximum(u, 1.0 - u))
            child = (1.0 - theta) * auc_y - theta * auc_s
            parent = (1.0 - theta) * 0.5 - theta * 0.5
        gains[valid] = (child - parent)[valid]
        return gains

    wL = nL / n
    wR = nR / n
    ig_y = (_entropy(A, n) - wL * _entropy(aL, nL)) - wR * _entropy(aR, nR)
    if kind in (KAMIRAN_SUB, KAMIRAN_DIV):
        sL = np.cumsum(gin[0])
        S = sL[-1]
        sR = S - sL
        ig_s = (_entropy(S, n) - wL * _entropy(sL, nL)) - wR * _entropy(sR, nR)
        if kind == KAMIRAN_SUB:
            value = ig_y - ig_s
        else:
            value = ig_y / np.maximum(ig_s, KAMIRAN_DIV_EPS)
    elif kind == FAHT:
        sL = np.cumsum(gin[0])
        qL = np.cumsum(gpos)
        S = sL[-1]
        Q = qL[-1]
        sR = S - sL
        qR = Q - qL
        d_parent = _discrimination(np.asarray([Q]), np.asarray([S]), np.asarray([A - Q]), np.asarray([n - S]))[0]
        d_left = _discrimination(qL, sL, aL - qL, nL - sL)
        d_right = _discrimination(qR, sR, aR - qR, nR - sR)
        fg = (d_parent - wL * d_left) - wR * d_right
        value = np.where(fg == 0.0, ig_y, ig_y * fg)
    else:
        raise ValueError(f"unknown criterion kind {kind}")
    gains[valid] = value[valid]
    return gains


def best_split(X, idx, features, n_bins, y, groups, kind, theta, min_leaf):
    """Best ``(feature, threshold, gain)`` over ``features``; feature -1 if none.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    idx = np.asarray(idx, dtype=np.intp)
    y_node = y[idx]
    g_node = groups[:, idx]
    best = (-1, -1, -np.inf)
    for f in features:
        gains = feature_gains(X[idx, f], y_node, g_node, int(n_bins[f]), kind, theta, min_leaf)
        if np.isnan(gains).all():
            continue
        t = int(np.nanargmax(gains))
        if gains[t] > best[2]:
            best = (int(f), t, float(gains[t]))
    return best
