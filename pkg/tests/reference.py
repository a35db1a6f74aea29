"""Deliberately naive reference implementations used as independent oracles.

Everything here follows the textbook definitions one segment at a time with
normal-equation least squares: slow, simple, and structurally different
from the vectorized QR path in the package.
"""

import numpy as np


def naive_profile(x):
    x = np.asarray(x, dtype=float)
    return np.cumsum(x - np.mean(x))


def naive_segment_variances(prof, s, order):
    m = len(prof)
    k = m // s
    t = np.linspace(-1.0, 1.0, s)
    design = np.vander(t, order + 1, increasing=True)
    gram = design.T @ design
    out = []
    for v in range(k):  # front segments
        seg = prof[v * s : (v + 1) * s]
        coef = np.linalg.solve(gram, design.T @ seg)
        resid = seg - design @ coef
        out.append(np.mean(resid**2))
    for v in range(1, k + 1):  # back segments, counted from the end
        seg = prof[m - v * s : m - (v - 1) * s]
        coef = np.linalg.solve(gram, design.T @ seg)
        resid = seg - design @ coef
        out.append(np.mean(resid**2))
    return np.array(out)


def naive_fq(variances, q):
    v = np.asarray(variances, dtype=float)
    if q == 0:
        return float(np.exp(np.sum(np.log(v)) / (2 * v.size)))
    return float((np.mean(v ** (q / 2.0))) ** (1.0 / q))


def naive_surface(x, s_grid, q_grid, order):
    prof = naive_profile(x)
    out = np.empty((len(q_grid), len(s_grid)))
    for j, s in enumerate(s_grid):
        v = naive_segment_variances(prof, int(s), order)
        for i, q in enumerate(q_grid):
            out[i, j] = naive_fq(v, float(q))
    return out
