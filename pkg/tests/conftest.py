"""Shared fixtures and brute-force oracles.

The oracles here follow the defining formulas literally (Python loops, no
shared code with the package kernels) so they can arbitrate the fast paths.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from chainkit.metric import build_measure, build_metric_space, uniform_measure


@pytest.fixture
def two_point():
    return build_metric_space([[0, 1], [1, 0]]), uniform_measure(2)


@pytest.fixture
def path3():
    space = build_metric_space([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    return space, build_measure([0.25, 0.5, 0.25])


def brute_ball(space, measure, x, eps):
    return sum(measure.w[y] for y in range(space.n) if space.dist[x, y] <= eps)


def sigma_quad(space, measure, fn, x):
    """sigma(x) by adaptive quadrature, breakpoints at every distance."""
    D = float(space.dist.max()) if space.n > 1 else 0.0
    if D == 0:
        return 0.0
    pts = sorted(set(float(d) for d in space.dist[x]))
    total = 0.0
    for lo, hi in zip(pts, pts[1:] + [D]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(lambda e: float(fn.inverse(1.0 / brute_ball(space, measure, x, e))), lo, hi)
        total += val
    return total


def brute_radius(space, measure, fn, R, k, k0, x):
    if k == k0:
        return float(space.dist.max()) if space.n > 1 else 0.0
    thr = 1.0 / float(fn(float(R) ** k))
    return min(float(e) for e in space.dist[x] if brute_ball(space, measure, x, e) >= thr)


def brute_nu(space, measure, radii):
    n = space.n
    nu = np.zeros((n, n))
    M = 0.0
    for k in radii.levels:
        r = radii.at(k)
        for u in range(n):
            M += measure.w[u] * r[u] * radii.R ** k
            ball = brute_ball(space, measure, u, r[u])
            for v in range(n):
                if space.dist[u, v] <= r[u]:
                    nu[u, v] += measure.w[u] * r[u] * radii.R ** k * measure.w[v] / ball
    return nu / M, M


def brute_energy(f, nu, dist, phi):
    total = 0.0
    n = len(f)
    for u in range(n):
        for v in range(n):
            if u != v and nu[u, v] != 0:
                total += nu[u, v] * phi(abs(f[u] - f[v]) / dist[u, v])
    return total


def random_space(rng, n, dim=2):
    pts = rng.uniform(size=(n, dim))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    return build_metric_space(d)


SQRT2 = math.sqrt(2)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_line(request):
    """Call with (criterion, passed, detail); the line is printed and kept for the summary."""
    store = request.config.__dict__.setdefault("_acceptance_lines", [])

    def emit(criterion, passed, detail=""):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        print(line)
        store.append(line)

    return emit
