"""Numba kernels for histogram-based boosting of depth-1 trees (logistic loss)."""

from __future__ import annotations

import numpy as np
from numba import njit

@njit(cache=True)
def boost(bins, offsets, is_cat, y, base, rounds, lr, reg_lambda, min_child_weight):
    n, n_feat = bins.shape
    total_bins = offsets[n_feat]
    # flat bin index per row; gradient and hessian share a cache line per bin
    idx = np.empty((n, n_feat), np.int32)
    for i in range(n):
        for f in range(n_feat):
            idx[i, f] = offsets[f] + bins[i, f]
    margin = np.full(n, base)
    feat = np.full(rounds, -1, np.int64)
    thr = np.zeros(rounds, np.int64)
    left_val = np.zeros(rounds)
    right_val = np.zeros(rounds)
    GH = np.zeros((total_bins, 2))
    for r in range(rounds):
        GH[:] = 0.0
        g_tot = 0.0
        h_tot = 0.0
        for i in range(n):
            p = 1.0 / (1.0 + np.exp(-margin[i]))
            g = p - y[i]
            h = max(p * (1.0 - p), 1e-12)
            g_tot += g
            h_tot += h
            for f in range(n_feat):
                b = idx[i, f]
                GH[b, 0] += g
                GH[b, 1] += h
        G = GH[:, 0]
        H = GH[:, 1]
        parent = g_tot * g_tot / (h_tot + reg_lambda)
        best_gain = 1e-12
        best_f = -1
        best_t = 0
        best_gl = 0.0
        best_hl = 0.0
        for f in range(n_feat):
            lo = offsets[f]
            hi = offsets[f + 1]
            gl = 0.0
            hl = 0.0
            for b in range(lo, hi):
                if is_cat[f]:
                    gl = G[b]
                    hl = H[b]
                else:
                    if b == hi - 1:
                        break
                    gl += G[b]
                    hl += H[b]
                gr = g_tot - gl
                hr = h_tot - hl
                if hl < min_child_weight or hr < min_child_weight:
                    continue
                gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = b - lo
                    best_gl = gl
                    best_hl = hl
        if best_f < 0:
            break
        vl = -lr * best_gl / (best_hl + reg_lambda)
        vr = -lr * (g_tot - best_gl) / (h_tot - best_hl + reg_lambda)
        feat[r] = best_f
        thr[r] = best_t
        left_val[r] = vl
        right_val[r] = vr
        cat = is_cat[best_f]
        for i in range(n):
            b = bins[i, best_f]
            if (cat and b == best_t) or (not cat and b <= best_t):
                margin[i] += vl
            else:
                margin[i] += vr
    return feat, thr, left_val, right_val


@njit(cache=True)
def predict(bins, is_cat, base, feat, thr, left_val, right_val):
    n = bins.shape[0]
    out = np.full(n, base)
    for r in range(feat.shape[0]):
        f = feat[r]
        if f < 0:
            break
        t = thr[r]
        cat = is_cat[f]
        for i in range(n):
            b = bins[i, f]
            if (cat and b == t) or (not cat and b <= t):
                out[i] += left_val[r]
            else:
                out[i] += right_val[r]
    return out
