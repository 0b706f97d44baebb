# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split-search kernels; twin of ``_kernels_py``.

Scalar loops over bins replace the numpy cumulative sums. Operation order
matches the fallback so SCAFF gains are bit-identical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log2, fabs, INFINITY, NAN
from libc.stdlib cimport calloc, free

cnp.import_array()

cdef enum:
    SCAFF = 0
    AUC = 1
    KAMIRAN_SUB = 2
    KAMIRAN_DIV = 3
    FAHT = 4

cdef double KAMIRAN_DIV_EPS = 1e-6


cdef inline double _entropy(double a, double n) nogil:
    cdef double p, q
    if a <= 0 or a >= n:
        return 0.0
    p = a / n
    q = 1.0 - p
    return -(p * log2(p) + q * log2(q))


cdef inline double _pair_auc(double pL, double pR, double nL, double nR,
                             double s_lr, double s_rl) nogil:
    cdef double P = pL + pR
    cdef double N = (nL + nR) - P
    cdef double qL = nL - pL
    cdef double qR = nR - pR
    cdef double num = pL * qR * s_lr + pR * qL * s_rl + 0.5 * (pL * qL + pR * qR)
    cdef double den = P * N
    if den > 0:
        return num / den
    return 0.5


cdef inline double _disc(double in_pos, double in_n, double out_pos, double out_n) nogil:
    if in_n > 0 and out_n > 0:
        return fabs(in_pos / in_n - out_pos / out_n)
    return 0.0


cdef struct Work:
    double* cnt
    double* pos
    double* gpos
    double* gin
    double* gtot
    double* gleft
    double* gains


cdef Work* _work_alloc(Py_ssize_t width, Py_ssize_t n_groups) noexcept nogil:
    cdef Work* w = <Work*> calloc(1, sizeof(Work))
    if w == NULL:
        return NULL
    w.cnt = <double*> calloc(4 * width + n_groups * width + 2 * n_groups + 1, sizeof(double))
    if w.cnt == NULL:
        free(w)
        return NULL
    w.pos = w.cnt + width
    w.gpos = w.pos + width
    w.gains = w.gpos + width
    w.gin = w.gains + width
    w.gtot = w.gin + n_groups * width
    w.gleft = w.gtot + n_groups
    return w


cdef void _work_free(Work* w) noexcept nogil:
    if w != NULL:
        free(w.cnt)
        free(w)


cdef void _scan(const int[:] codes, const unsigned char[:] y, const unsigned char[:, :] groups,
                int n_bins, int kind, double theta, int min_leaf, Work* w) noexcept nogil:
    """Fill ``w.gains[t]`` for t in [0, n_bins); NaN marks non-candidates.

    ``codes``, ``y`` and ``groups`` are already restricted to the node.
    """
    cdef Py_ssize_t i, t, g
    cdef Py_ssize_t n_samples = codes.shape[0]
    cdef Py_ssize_t n_groups = groups.shape[0]
    cdef int c
    cdef bint joint = kind == KAMIRAN_SUB or kind == KAMIRAN_DIV or kind == FAHT
    cdef double n = 0, A = 0, nL = 0, aL = 0, nR, aR, cmp, s_lr, s_rl
    cdef double auc_y, auc_s, u, child, parent, wL, wR, ig_y, ig_s, fg
    cdef double S = 0, Q = 0, sL = 0, qL = 0, sR, qR, d_parent, gL, gR
    cdef double* cnt = w.cnt
    cdef double* pos = w.pos
    cdef double* gpos = w.gpos
    cdef double* gin = w.gin
    cdef double* gtot = w.gtot
    cdef double* gleft = w.gleft
    cdef double* gains = w.gains

    for t in range(n_bins):
        cnt[t] = 0
        pos[t] = 0
        gpos[t] = 0
        gains[t] = NAN
    for g in range(n_groups):
        gtot[g] = 0
        gleft[g] = 0
        for t in range(n_bins):
            gin[g * n_bins + t] = 0

    for i in range(n_samples):
        c = codes[i]
        cnt[c] += 1
        if y[i]:
            pos[c] += 1
        for g in range(n_groups):
            if groups[g, i]:
                gin[g * n_bins + c] += 1
        if joint and groups[0, i] and y[i]:
            gpos[c] += 1

    for t in range(n_bins):
        n += cnt[t]
        A += pos[t]
        Q += gpos[t]
    for g in range(n_groups):
        for t in range(n_bins):
            gtot[g] += gin[g * n_bins + t]
    if n_groups > 0:
        S = gtot[0]
    parent = (1.0 - theta) * 0.5 - theta * 0.5

    for t in range(n_bins):
        nL += cnt[t]
        aL += pos[t]
        qL += gpos[t]
        for g in range(n_groups):
            gleft[g] += gin[g * n_bins + t]
        nR = n - nL
        aR = A - aL
        if not (cnt[t] > 0 and nR > 0 and nL >= min_leaf and nR >= min_leaf):
            continue
        if kind == SCAFF or kind == AUC:
            cmp = aL * nR - aR * nL
            if cmp > 0:
                s_lr = 1.0
            elif cmp == 0:
                s_lr = 0.5
            else:
                s_lr = 0.0
            s_rl = 1.0 - s_lr
            auc_y = _pair_auc(aL, aR, nL, nR, s_lr, s_rl)
            if kind == AUC:
                gains[t] = auc_y - 0.5
                continue
            auc_s = 0.5
            for g in range(n_groups):
                gL = gleft[g]
                gR = gtot[g] - gL
                u = _pair_auc(gL, gR, nL, nR, s_lr, s_rl)
                if 1.0 - u > u:
                    u = 1.0 - u
                if u > auc_s:
                    auc_s = u
            child = (1.0 - theta) * auc_y - theta * auc_s
            gains[t] = child - parent
            continue

        wL = nL / n
        wR = nR / n
        ig_y = (_entropy(A, n) - wL * _entropy(aL, nL)) - wR * _entropy(aR, nR)
        sL = gleft[0]
        sR = S - sL
        if kind == FAHT:
            qR = Q - qL
            d_parent = _disc(Q, S, A - Q, n - S)
            fg = (d_parent - wL * _disc(qL, sL, aL - qL, nL - sL)) - wR * _disc(qR, sR, aR - qR, nR - sR)
            if fg == 0.0:
                gains[t] = ig_y
            else:
                gains[t] = ig_y * fg
        else:
            ig_s = (_entropy(S, n) - wL * _entropy(sL, nL)) - wR * _entropy(sR, nR)
            if kind == KAMIRAN_SUB:
                gains[t] = ig_y - ig_s
            else:
                gains[t] = ig_y / (ig_s if ig_s > KAMIRAN_DIV_EPS else KAMIRAN_DIV_EPS)


def feature_gains(codes, y, groups, int n_bins, int kind, double theta, int min_leaf):
    """Gain of ``left = codes <= t`` for every ``t`` (NaN for non-candidates)."""
    cdef const int[:] c = np.ascontiguousarray(codes, dtype=np.int32)
    cdef const unsigned char[:] yy = np.ascontiguousarray(y, dtype=np.uint8)
    cdef const unsigned char[:, :] gg = np.ascontiguousarray(groups, dtype=np.uint8)
    cdef Py_ssize_t t
    if kind < 0 or kind > 4:
        raise ValueError(f"unknown criterion kind {kind}")
    if (kind == KAMIRAN_SUB or kind == KAMIRAN_DIV or kind == FAHT) and gg.shape[0] < 1:
        raise ValueError("baseline criteria need one sensitive group")
    out = np.empty(n_bins, dtype=np.float64)
    cdef double[:] res = out
    cdef Work* w = _work_alloc(max(n_bins, 1), gg.shape[0])
    if w == NULL:
        raise MemoryError()
    with nogil:
        _scan(c, yy, gg, n_bins, kind, theta, min_leaf, w)
        for t in range(n_bins):
            res[t] = w.gains[t]
    _work_free(w)
    return out


def best_split(const int[:, :] X, idx, features, n_bins, const unsigned char[:] y,
               const unsigned char[:, :] groups, int kind, double theta, int min_leaf):
    """Best ``(feature, threshold, gain)`` over ``features``; feature -1 if none.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    cdef const cnp.intp_t[:] rows = np.ascontiguousarray(idx, dtype=np.intp)
    cdef const cnp.intp_t[:] feats = np.ascontiguousarray(features, dtype=np.intp)
    cdef const cnp.intp_t[:] nb = np.ascontiguousarray(n_bins, dtype=np.intp)
    cdef Py_ssize_t k = rows.shape[0], n_groups = groups.shape[0]
    cdef Py_ssize_t i, g, fi, t, f
    if kind < 0 or kind > 4:
        raise ValueError(f"unknown criterion kind {kind}")
    if (kind == KAMIRAN_SUB or kind == KAMIRAN_DIV or kind == FAHT) and n_groups < 1:
        raise ValueError("baseline criteria need one sensitive group")

    cdef Py_ssize_t max_bins = 1
    for fi in range(feats.shape[0]):
        if nb[feats[fi]] > max_bins:
            max_bins = nb[feats[fi]]
    y_arr = np.empty(k, dtype=np.uint8)
    g_arr = np.empty((n_groups, k), dtype=np.uint8)
    c_arr = np.empty(k, dtype=np.int32)
    cdef unsigned char[:] y_node = y_arr
    cdef unsigned char[:, :] g_node = g_arr
    cdef int[:] c_node = c_arr

    cdef Work* w = _work_alloc(max_bins, n_groups)
    if w == NULL:
        raise MemoryError()
    cdef Py_ssize_t best_f = -1, best_t = -1
    cdef double best_gain = -INFINITY
    with nogil:
        for i in range(k):
            y_node[i] = y[rows[i]]
            for g in range(n_groups):
                g_node[g, i] = groups[g, rows[i]]
        for fi in range(feats.shape[0]):
            f = feats[fi]
            for i in range(k):
                c_node[i] = X[rows[i], f]
            _scan(c_node, y_node, g_node, <int> nb[f], kind, theta, min_leaf, w)
            for t in range(nb[f]):
                if w.gains[t] == w.gains[t] and w.gains[t] > best_gain:
                    best_gain = w.gains[t]
                    best_f = f
                    best_t = t
    _work_free(w)
    return int(best_f), int(best_t), float(best_gain)
