"""Independent oracles used to freeze expected values.

These deliberately avoid the library's own code paths: grid search for
the projection, a linear scan for nearest neighbors, and mpmath for the
t distribution.
"""

import math

import mpmath as mp
import numpy as np


def grid_closest_point(a, b, c, lo=-10.0, hi=10.0):
    """Brute-force minimize ||a - (b + s*(c-b))|| over a refined grid of s.

    Coarse pass over [lo, hi], then successive refinement down to step
    1e-7 around the running optimum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    h = c - b

    def best(ss):
        pts = b[None, :] + ss[:, None] * h[None, :]
        return ss[np.argmin(np.linalg.norm(pts - a[None, :], axis=1))]

    s = best(np.arange(lo, hi + 0.005, 0.005))
    for prev, step in ((0.005, 1e-4), (1e-4, 2e-6), (2e-6, 1e-7)):
        s = best(np.arange(s - 2 * prev, s + 2 * prev + step, step))
    return b + s * h


def brute_knn(points, x, k):
    """Indices of the k nearest rows of ``points`` to ``x``, sorted by
    (distance, row index)."""
    points = np.asarray(points, dtype=float)
    x = np.asarray(x, dtype=float)
    dists = np.linalg.norm(points - x[None, :], axis=1)
    order = sorted(range(len(points)), key=lambda i: (dists[i], i))
    return order[:k]


def welch_oracle(sample_a, sample_b):
    """Textbook Welch t-test at 50-digit precision: (t, dof, two-sided p)."""
    with mp.workdps(50):
        a = [mp.mpf(repr(float(x))) for x in sample_a]
        b = [mp.mpf(repr(float(x))) for x in sample_b]
        na, nb = len(a), len(b)
        ma = mp.fsum(a) / na
        mb = mp.fsum(b) / nb
        va = mp.fsum((x - ma) ** 2 for x in a) / (na - 1)
        vb = mp.fsum((x - mb) ** 2 for x in b) / (nb - 1)
        sea, seb = va / na, vb / nb
        t = (ma - mb) / mp.sqrt(sea + seb)
        dof = (sea + seb) ** 2 / (sea ** 2 / (na - 1) + seb ** 2 / (nb - 1))
        x = dof / (dof + t ** 2)
        p = mp.betainc(dof / 2, mp.mpf(1) / 2, 0, x, regularized=True)
        return float(t), float(dof), float(p)


def random_projection_triple(rng, dim, max_param=8.0):
    """A random (a, b, c) whose line-parameter optimum lies well inside the
    grid search range."""
    while True:
        a = rng.normal(size=dim)
        b = rng.normal(size=dim)
        c = rng.normal(size=dim)
        h = c - b
        g = a - b
        nh = np.linalg.norm(h)
        ng = np.linalg.norm(g)
        if nh < 0.3 or ng < 1e-3:
            continue
        s_opt = float(np.dot(h, g)) / (nh * nh)
        if abs(s_opt) <= max_param:
            return a, b, c
