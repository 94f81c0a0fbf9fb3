"""numba twins of ``_kernels_numpy``.

Loop order and arithmetic order follow the numpy versions so that the two
backends agree bit for bit on everything except ``power_energy`` (whose
numpy path sums with einsum).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def triangle_witness(dist, tol):
    n = dist.shape[0]
    for i in range(n):
        for j in range(n):
            dij = dist[i, j]
            for k in range(n):
                excess = dist[i, k] - dij - dist[j, k]
                if excess > tol:
                    return i, j, k, excess
    return -1, -1, -1, 0.0


@njit(cache=True)
def ball_profile(dist, w):
    rows, n = dist.shape
    sorted_d = np.empty((rows, n))
    cum_mass = np.empty((rows, n))
    for x in range(rows):
        order = np.argsort(dist[x], kind="mergesort")
        acc = 0.0
        for j in range(n):
            y = order[j]
            sorted_d[x, j] = dist[x, y]
            acc += w[y]
            cum_mass[x, j] = acc
        cum_mass[x, n - 1] = 1.0
    return sorted_d, cum_mass


@njit(cache=True)
def first_reach(sorted_d, cum_mass, threshold):
    n, m = sorted_d.shape
    out = np.empty(n)
    for x in range(n):
        out[x] = sorted_d[x, 0]
        for j in range(m):
            if cum_mass[x, j] >= threshold:
                out[x] = sorted_d[x, j]
                break
    return out


@njit(cache=True)
def lipschitz_excess(dist, radii):
    best = -np.inf
    bl, bs, bt = -1, -1, -1
    levels, n = radii.shape
    for level in range(levels):
        lbest = -np.inf
        ls, lt = -1, -1
        for s in range(n):
            for t in range(n):
                exc = abs(radii[level, s] - radii[level, t]) - dist[s, t]
                if exc > lbest:
                    lbest = exc
                    ls, lt = s, t
        if lbest > best:
            best = lbest
            bl, bs, bt = level, ls, lt
    return best, bl, bs, bt


@njit(cache=True)
def assemble_nu(dist, w, radii, rpow):
    levels, n = radii.shape
    level_nu = np.zeros((levels, n, n))
    total = 0.0
    for level in range(levels):
        for u in range(n):
            r = radii[level, u]
            ball = 0.0
            for v in range(n):
                if dist[u, v] <= r:
                    ball += w[v]
            coef = w[u] * r * rpow[level]
            scale = coef / ball
            for v in range(n):
                if dist[u, v] <= r:
                    level_nu[level, u, v] = scale * w[v]
        for u in range(n):
            total += w[u] * radii[level, u] * rpow[level]
    return level_nu, total


@njit(cache=True)
def power_energy(F, dist, nu, p):
    trials, n = F.shape
    out = np.zeros(trials)
    for t in range(trials):
        acc = 0.0
        for u in range(n):
            fu = F[t, u]
            for v in range(n):
                wt = nu[u, v]
                if u == v or wt == 0.0:
                    continue
                ratio = abs(fu - F[t, v]) / dist[u, v]
                if p == 1.0:
                    acc += wt * ratio
                elif p == 2.0:
                    acc += wt * (ratio * ratio)
                else:
                    acc += wt * ratio ** p
        out[t] = acc
    return out


@njit(cache=True)
def row_range(X):
    trials, n = X.shape
    out = np.zeros(trials)
    if n == 0:
        return out
    for t in range(trials):
        lo = X[t, 0]
        hi = X[t, 0]
        for j in range(1, n):
            v = X[t, j]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
        out[t] = hi - lo
    return out
