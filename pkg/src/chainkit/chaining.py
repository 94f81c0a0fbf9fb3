"""Averaging operators S_k, the operator lemmas, and the chaining measure nu.

S_k replaces f(x) by the m-average of f over the ball B(x, r_k(x)). On a
finite space it is a row-stochastic matrix. Chains S_m ... S_{k+1} are
applied as repeated matrix-vector products, right to left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .certificates import BoundCertificate, from_vectors
from .errors import DegenerateSpace, DimensionMismatch, InvalidLevels, LevelBelowBase
from .majorant import MajorantProfile, RadiiTable, radii_table
from .metric import MetricSpace, ProbMeasure
from .orlicz import OrliczFn

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AveragingOperator:
    k: int
    P: np.ndarray

    def __call__(self, f: np.ndarray) -> np.ndarray:
        return self.P @ f


def averaging_operator(space: MetricSpace, measure: ProbMeasure, radii: RadiiTable, k: int) -> AveragingOperator:
    if k < radii.k0:
        raise LevelBelowBase(f"level {k} is below k0 = {radii.k0}")
    r = radii.at(k)
    mask = space.dist <= r[:, None]
    masked = np.where(mask, measure.w[None, :], 0.0)
    P = masked / masked.sum(axis=1, keepdims=True)
    P.setflags(write=False)
    return AveragingOperator(k, P)


def compose_chain(ops: Sequence[AveragingOperator], f) -> np.ndarray:
    """Apply ``ops[0] @ ops[1] @ ... @ ops[-1]`` to ``f``."""
    out = np.array(f, dtype=float)
    for op in reversed(ops):
        if op.P.shape[1] != out.shape[0]:
            raise DimensionMismatch(f"operator at level {op.k} is {op.P.shape}, vector has {out.shape[0]} entries")
        out = op.P @ out
    return out


class Chain:
    """Operators S_k for one (space, measure, radii), cached by level."""

    def __init__(self, space: MetricSpace, measure: ProbMeasure, radii: RadiiTable):
        self.space = space
        self.measure = measure
        self.radii = radii
        self._ops: dict[int, AveragingOperator] = {}

    def op(self, k: int) -> AveragingOperator:
        if k not in self._ops:
            self._ops[k] = averaging_operator(self.space, self.measure, self.radii, k)
        return self._ops[k]

    def ops(self, top: int, bottom: int) -> list[AveragingOperator]:
        """[S_top, S_{top-1}, ..., S_bottom]; empty when top < bottom."""
        return [self.op(k) for k in range(top, bottom - 1, -1)]


def _chain(space, measure, radii, chain):
    return chain if chain is not None else Chain(space, measure, radii)


def check_pairwise_radius_bound(space: MetricSpace, measure: ProbMeasure, radii: RadiiTable,
                                i: int, j: int, chain: Chain | None = None) -> BoundCertificate:
    """S_i r_j <= r_i + r_j entrywise."""
    ch = _chain(space, measure, radii, chain)
    lhs = ch.op(i)(radii.at(j))
    rhs = radii.at(i) + radii.at(j)
    return from_vectors("pairwise_radius", lhs, rhs, {"i": i, "j": j})


def check_chain_radius_bound(space: MetricSpace, measure: ProbMeasure, radii: RadiiTable, k: int, mlevel: int,
                    chain: Chain | None = None) -> BoundCertificate:
    """S_m S_{m-1} ... S_{k+1} r_k <= sum_{i=k}^{m} 2^{i-k} r_i entrywise."""
    if not mlevel > k >= radii.k0:
        raise InvalidLevels(f"need m > k >= k0, got m={mlevel}, k={k}, k0={radii.k0}")
    ch = _chain(space, measure, radii, chain)
    lhs = compose_chain(ch.ops(mlevel, k + 1), radii.at(k))
    rhs = np.zeros(space.n)
    for i in range(k, mlevel + 1):
        rhs = rhs + 2.0 ** (i - k) * radii.at(i)
    return from_vectors("chain_radius", lhs, rhs, {"k": k, "m": mlevel})


def check_geometric_sum(radii: RadiiTable, R: float, mlevel: int) -> BoundCertificate:
    """sum_{k=k0}^{m-1} (sum_{i=k}^{m} 2^{i-k} r_i) R^k <= R/(R-2) sum_i r_i R^i, R > 2."""
    if not R > 2:
        raise InvalidLevels("the geometric-sum bound needs R > 2")
    k0 = radii.k0
    lhs = np.zeros(radii.r.shape[1])
    for k in range(k0, mlevel):
        inner = sum(2.0 ** (i - k) * radii.at(i) for i in range(k, mlevel + 1))
        lhs = lhs + inner * float(R) ** k
    full = radii.rpow() @ radii.r
    rhs = (R / (R - 2)) * full
    return from_vectors("geometric_sum", lhs, rhs, {"m": mlevel, "R": R})


def telescoping_residual(space: MetricSpace, measure: ProbMeasure, radii: RadiiTable, f, mlevel: int,
                         chain: Chain | None = None) -> float:
    """max_t |(f(t) - int f dm) - sum_{k=k0}^{m-1} S_m...S_{k+1}(I - S_k) f (t)|.

    Requires m > kmax so that S_m is the identity.
    """
    if mlevel <= radii.kmax:
        raise InvalidLevels(f"telescoping needs m > kmax = {radii.kmax}")
    ch = _chain(space, measure, radii, chain)
    f = np.asarray(f, dtype=float)
    total = np.zeros_like(f)
    for k in range(radii.k0, mlevel):
        diff = f - ch.op(k)(f)
        total = total + compose_chain(ch.ops(mlevel, k + 1), diff)
    centred = f - np.dot(measure.w, f)
    return float(np.max(np.abs(centred - total))) if f.size else 0.0


def check_telescoping(space, measure, radii, f, mlevel, chain=None) -> BoundCertificate:
    res = telescoping_residual(space, measure, radii, f, mlevel, chain)
    return BoundCertificate("telescoping", res, 0.0, {"m": mlevel}, tol=RESIDUAL_TOL)


# ---------------------------------------------------------------------------
# chaining measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChainingMeasure:
    """nu on T x T as a dense n x n array, plus its per-level pieces.

    ``level_nu[l]`` is the (normalised) contribution of level ``k0 + l``;
    the levels sum to ``nu``. ``M`` is the normaliser.
    """

    nu: np.ndarray
    M: float
    level_nu: np.ndarray
    radii: RadiiTable
    fn: OrliczFn
    R: float
    space: MetricSpace
    measure: ProbMeasure

    def pairs(self):
        """Nonzero (u, v, weight) triples in row-major order."""
        u, v = np.nonzero(self.nu)
        return [(int(a), int(b), float(self.nu[a, b])) for a, b in zip(u, v)]

    def level_mass(self) -> np.ndarray:
        return self.level_nu.sum(axis=(1, 2))

    def to_dict(self) -> dict:
        levels = {}
        for idx, k in enumerate(self.radii.levels):
            lu, lv = np.nonzero(self.level_nu[idx])
            levels[str(k)] = {
                "mass": float(self.level_nu[idx].sum()),
                "pairs": [[int(a), int(b), float(self.level_nu[idx, a, b])] for a, b in zip(lu, lv)],
            }
        return {"M": self.M, "R": self.R, "pairs": [list(p) for p in self.pairs()], "levels": levels}


def build_chaining_measure(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn, R: float,
                           radii: RadiiTable | None = None) -> ChainingMeasure:
    """nu(u, v) = (1/M) sum_k w[u] r_k(u) R^k w[v] 1[d(u,v) <= r_k(u)] / m(B_k(u))."""
    if space.n < 2:
        raise DegenerateSpace("the chaining measure needs at least two points (M = 0 otherwise)")
    if radii is None:
        radii = radii_table(space, measure, fn, R)
    level_nu, M = kernels.assemble_nu(space.dist, measure.w, radii.r, radii.rpow())
    level_nu = level_nu / M
    nu = level_nu.sum(axis=0)
    nu.setflags(write=False)
    level_nu.setflags(write=False)
    return ChainingMeasure(nu=nu, M=M, level_nu=level_nu, radii=radii, fn=fn, R=float(R),
                           space=space, measure=measure)


def check_M_bound(cm: ChainingMeasure, prof: MajorantProfile, R: float) -> BoundCertificate:
    """M <= R/(R-1) Sbar."""
    return BoundCertificate("M_bound", cm.M, (R / (R - 1)) * prof.Sbar, {"R": R})


def check_nu_normalised(cm: ChainingMeasure) -> BoundCertificate:
    return BoundCertificate("nu_total", abs(float(cm.nu.sum()) - 1.0), 0.0, {}, tol=RESIDUAL_TOL)


def check_lipschitz_radii(space: MetricSpace, radii: RadiiTable) -> BoundCertificate:
    """|r_k(s) - r_k(t)| <= d(s, t) for every level and pair."""
    exc, level, s, t = kernels.lipschitz_excess(space.dist, radii.r)
    lhs = abs(radii.r[level, s] - radii.r[level, t])
    return BoundCertificate("lipschitz_radii", float(lhs), float(space.dist[s, t]) + 1e-12,
                            {"k": radii.k0 + level, "s": s, "t": t, "excess": exc}, tol=0.0)
