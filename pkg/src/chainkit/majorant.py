"""Majorizing-measure functionals and the level radii of the chaining.

Everything here is exact up to floating-point rounding: on a finite space
the map eps -> m(B(x, eps)) is a right-continuous step function, so the
integral defining sigma(x) is a finite sum and the minimum defining each
radius is attained at one of the distances d(x, y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .certificates import BoundCertificate
from .errors import DomainError, LevelBelowBase
from .metric import MetricSpace, ProbMeasure, diameter
from .orlicz import OrliczFn, evaluate, inverse

# kmax search gives up after this many levels above k0
MAX_LEVELS = 4096


@dataclass(frozen=True, eq=False)
class MajorantProfile:
    """sigma(x) for every point, with S = max sigma and Sbar = sum w sigma.

    ``jumps`` and ``masses`` hold, per point, the sorted distances d(x, .)
    and the ball mass m(B(x, d)) reached at each of them.
    """

    sigma: np.ndarray
    S: float
    Sbar: float
    jumps: np.ndarray
    masses: np.ndarray

    def to_dict(self) -> dict:
        return {"sigma": self.sigma.tolist(), "S": self.S, "Sbar": self.Sbar}


def _sigma_from_profile(sorted_d, cum_mass, D, fn):
    seg = np.diff(sorted_d, axis=1, append=np.full((sorted_d.shape[0], 1), D))
    # tied distances give zero-length segments, so only the last member of
    # each tie group (which carries the full ball mass) contributes
    integrand = inverse(fn, 1.0 / cum_mass)
    return np.sum(integrand * seg, axis=1)


def sigma_at(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn, x: int) -> float:
    """Integral of phi^{-1}(1/m(B(x, eps))) over eps in [0, D(T)]."""
    sorted_d, cum_mass = kernels.ball_profile(space.dist[x:x + 1], measure.w)
    # ball_profile sorts row x of dist against all weights, which is what we want
    return float(_sigma_from_profile(sorted_d, cum_mass, diameter(space), fn)[0])


def profile(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn) -> MajorantProfile:
    sorted_d, cum_mass = kernels.ball_profile(space.dist, measure.w)
    sigma = _sigma_from_profile(sorted_d, cum_mass, diameter(space), fn)
    sigma.setflags(write=False)
    return MajorantProfile(
        sigma=sigma,
        S=float(sigma.max()),
        Sbar=float(np.dot(measure.w, sigma)),
        jumps=sorted_d,
        masses=cum_mass,
    )


def base_level_k0(fn: OrliczFn, R: float) -> int:
    """The integer k0 with R^k0 <= phi^{-1}(1) < R^(k0+1)."""
    if R < 2:
        raise DomainError(f"R must be >= 2, got {R}")
    v = inverse(fn, 1.0)
    if not v > 0:
        raise DomainError("phi^{-1}(1) must be positive")
    k = math.floor(math.log(v) / math.log(R))
    # log rounding can be off by one at exact powers
    while R ** (k + 1) <= v:
        k += 1
    while R ** k > v:
        k -= 1
    return k


def level_threshold(fn: OrliczFn, R: float, k: int) -> float:
    """Ball mass needed at level k: 1/phi(R^k)."""
    return 1.0 / evaluate(fn, float(R) ** k)


def radius_at(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn, R: float, k: int, x: int) -> float:
    """r_k(x): D(T) at k0, else the least d with m(B(x, d)) >= 1/phi(R^k)."""
    k0 = base_level_k0(fn, R)
    if k < k0:
        raise LevelBelowBase(f"level {k} is below k0 = {k0}")
    if k == k0:
        return diameter(space)
    sorted_d, cum_mass = kernels.ball_profile(space.dist[x:x + 1], measure.w)
    return float(kernels.first_reach(sorted_d, cum_mass, level_threshold(fn, R, k))[0])


@dataclass(frozen=True, eq=False)
class RadiiTable:
    """Radii r_k(x) for k0 <= k <= kmax; row ``k - k0`` of ``r``.

    Levels above kmax have r_k = 0 everywhere and are served by :meth:`at`.
    """

    k0: int
    kmax: int
    R: float
    r: np.ndarray

    @property
    def levels(self) -> range:
        return range(self.k0, self.kmax + 1)

    def at(self, k: int) -> np.ndarray:
        if k < self.k0:
            raise LevelBelowBase(f"level {k} is below k0 = {self.k0}")
        if k > self.kmax:
            return np.zeros(self.r.shape[1])
        return self.r[k - self.k0]

    def rpow(self) -> np.ndarray:
        return np.array([float(self.R) ** k for k in self.levels])

    def to_dict(self) -> dict:
        return {
            "k0": self.k0,
            "kmax": self.kmax,
            "R": self.R,
            "r": {str(k): self.at(k).tolist() for k in self.levels},
        }


def radii_table(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn, R: float) -> RadiiTable:
    """All nonzero levels of the radii, k0 through kmax."""
    k0 = base_level_k0(fn, R)
    sorted_d, cum_mass = kernels.ball_profile(space.dist, measure.w)
    rows = [np.full(space.n, diameter(space))]
    k = k0
    while True:
        k += 1
        if k - k0 > MAX_LEVELS:
            raise DomainError("radii did not vanish; is phi bounded?")
        r = kernels.first_reach(sorted_d, cum_mass, level_threshold(fn, R, k))
        if not np.any(r > 0):
            break
        rows.append(r)
    table = np.vstack(rows)
    # n = 1: D(T) = 0 already at k0
    kmax = k0 + len(rows) - 1
    table.setflags(write=False)
    return RadiiTable(k0=k0, kmax=kmax, R=float(R), r=table)


def radius_sum_check(prof: MajorantProfile, radii: RadiiTable, R: float) -> list[BoundCertificate]:
    """sum_k r_k(x) R^k <= R/(R-1) sigma(x), one certificate per point."""
    lhs = radii.rpow() @ radii.r
    rhs = (R / (R - 1)) * prof.sigma
    return [
        BoundCertificate("radius_sum", float(l), float(r), {"t": t, "R": R})
        for t, (l, r) in enumerate(zip(lhs, rhs))
    ]
