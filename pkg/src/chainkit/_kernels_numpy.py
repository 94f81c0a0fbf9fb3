"""Pure-numpy implementations of the hot loops.

These are the reference path. ``_kernels_numba`` mirrors every function
with an explicit loop nest; ``kernels`` picks one of the two at import.
"""

from __future__ import annotations

import numpy as np


def triangle_witness(dist, tol):
    """First (i, j, k) in lexicographic order with d[i,k] - d[i,j] - d[j,k] > tol.

    Returns ``(-1, -1, -1, 0.0)`` when the triangle inequality holds.
    """
    n = dist.shape[0]
    for i in range(n):
        # excess[j, k] = d[i, k] - d[i, j] - d[j, k]
        excess = dist[i][None, :] - dist[i][:, None] - dist
        bad = np.argwhere(excess > tol)
        if bad.size:
            j, k = bad[0]
            return int(i), int(j), int(k), float(excess[j, k])
    return -1, -1, -1, 0.0


def ball_profile(dist, w):
    n = dist.shape[0]
    order = np.argsort(dist, axis=1, kind="stable")
    sorted_d = np.take_along_axis(dist, order, axis=1)
    cum_mass = np.cumsum(w[order], axis=1)
    if n:
        # B(x, max_y d(x, y)) is all of T
        cum_mass[:, -1] = 1.0
    return sorted_d, cum_mass


def first_reach(sorted_d, cum_mass, threshold):
    hit = cum_mass >= threshold
    idx = np.argmax(hit, axis=1)
    return sorted_d[np.arange(sorted_d.shape[0]), idx]


def lipschitz_excess(dist, radii):
    """Largest |r_k(s) - r_k(t)| - d(s, t) over all levels and pairs.

    Returns ``(excess, level_index, s, t)``.
    """
    best = (-np.inf, -1, -1, -1)
    for level in range(radii.shape[0]):
        r = radii[level]
        exc = np.abs(r[:, None] - r[None, :]) - dist
        flat = int(np.argmax(exc))
        s, t = divmod(flat, dist.shape[0])
        if exc[s, t] > best[0]:
            best = (float(exc[s, t]), level, s, t)
    return best


def assemble_nu(dist, w, radii, rpow):
    """Unnormalised per-level chaining weights and their total M.

    ``level_nu[l, u, v] = w[u] r_l(u) R^l * w[v] 1[d(u,v) <= r_l(u)] / m(B_l(u))``
    """
    levels, n = radii.shape
    level_nu = np.zeros((levels, n, n))
    total = 0.0
    for level in range(levels):
        mask = dist <= radii[level][:, None]
        masked_w = np.where(mask, w[None, :], 0.0)
        ball = np.cumsum(masked_w, axis=1)[:, -1]
        coef = w * radii[level] * rpow[level]
        level_nu[level] = (coef / ball)[:, None] * masked_w
        for u in range(n):
            total += coef[u]
    return level_nu, total


def power_energy(F, dist, nu, p):
    """Sum over pairs of nu[u, v] (|F[u] - F[v]| / d(u, v))**p, per row of F.

    The diagonal contributes nothing (0/0 = 0).
    """
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    inv_d = np.zeros_like(dist)
    inv_d[off] = 1.0 / dist[off]
    out = np.empty(F.shape[0])
    chunk = 256
    for start in range(0, F.shape[0], chunk):
        block = F[start:start + chunk]
        ratio = np.abs(block[:, :, None] - block[:, None, :]) * inv_d
        if p == 1.0:
            val = ratio
        elif p == 2.0:
            val = ratio * ratio
        else:
            val = ratio ** p
        out[start:start + chunk] = np.einsum("tuv,uv->t", val, nu)
    return out


def row_range(X):
    if X.shape[1] == 0:
        return np.zeros(X.shape[0])
    return X.max(axis=1) - X.min(axis=1)
