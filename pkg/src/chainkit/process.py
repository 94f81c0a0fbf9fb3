"""Gaussian processes with Orlicz-bounded increments, Monte Carlo suprema,
and certificates for the expected-supremum bounds.

A model is a covariance plus a (pivoted, rank-revealing) square root and a
scale. For phi(x) = x^p the increment condition has a closed form,
E(|X_s - X_t| / d)^p = c_p (scale * dev(s, t) / d(s, t))^p, which fixes the
largest admissible scale exactly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import lapack

from . import kernels
from .certificates import BoundCertificate
from .errors import (
    EmptySubset,
    IncrementConditionUnmet,
    InvalidSpec,
    NotPSD,
    NotYoung,
    PsiConditionUnmet,
)
from .majorant import profile
from .metric import MetricSpace, ProbMeasure, build_measure
from .orlicz import (
    GrowthParams,
    OrliczFn,
    PsiParams,
    check_growth_condition,
    check_psi_condition,
    coefficient,
    constants_AB,
    evaluate,
    identity,
    power,
    power_constants,
)

PIVOT_TOL = 1e-10
BLOCK = 4096
# seed stream for MC increment checks, disjoint from the path blocks
INCREMENT_STREAM = 2**31
# relative guard for the closed-form increment condition at scale lambda*
INCREMENT_RTOL = 1e-12
MODEL_KINDS = ("embed-euclidean", "brownian-path", "custom-cov")


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("CHAINKIT_THREADS", "1") or 1)
    return max(1, int(threads))


@dataclass(frozen=True, eq=False)
class GaussianProcessModel:
    """Centred Gaussian vector X = scale * factor @ z, z standard normal.

    ``factor`` is n x rank with ``factor @ factor.T == cov`` up to the pivot
    tolerance; its rows are a row permutation of a lower-triangular matrix.
    """

    cov: np.ndarray
    factor: np.ndarray
    scale: float = 1.0
    kind: str = "custom-cov"

    @property
    def n(self) -> int:
        return self.cov.shape[0]

    def dev(self) -> np.ndarray:
        """sqrt(E (X_s - X_t)^2) of the unscaled process."""
        d = np.diag(self.cov)
        return np.sqrt(np.maximum(d[:, None] + d[None, :] - 2 * self.cov, 0.0))

    def with_scale(self, scale: float) -> "GaussianProcessModel":
        return replace(self, scale=float(scale))

    def restrict(self, points: Sequence[int]) -> "GaussianProcessModel":
        idx = np.asarray(points, dtype=int)
        return replace(from_covariance(self.cov[np.ix_(idx, idx)], self.kind), scale=self.scale)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "rank": int(self.factor.shape[1])}


def psd_factor(cov: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Pivoted Cholesky square root, truncated at the numerical rank."""
    n = cov.shape[0]
    top = float(np.max(np.diag(cov))) if n else 0.0
    if top <= 0:
        return np.zeros((n, 0))
    c, piv, rank, info = lapack.dpstrf(cov, tol=tol * top, lower=1)
    if info < 0:
        raise NotPSD(f"pivoted Cholesky failed (info={info})")
    L = np.tril(c)[:, :rank]
    out = np.zeros((n, rank))
    out[piv - 1] = L
    return out


def from_covariance(cov, kind: str = "custom-cov") -> GaussianProcessModel:
    cov = np.array(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise NotPSD("covariance must be square")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(cov).max(initial=0)))):
        raise NotPSD("covariance is not symmetric")
    cov = 0.5 * (cov + cov.T)
    if cov.size:
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -PIVOT_TOL * max(1.0, float(eig[-1])):
            raise NotPSD(f"covariance has eigenvalue {eig[0]:.3g} < 0")
    return GaussianProcessModel(cov=cov, factor=psd_factor(cov), kind=kind)


def _mds(dist: np.ndarray) -> np.ndarray:
    # classical scaling; negative eigenvalues (non-Euclidean parts) dropped
    n = dist.shape[0]
    J = np.eye(n) - 1.0 / n
    G = -0.5 * J @ (dist ** 2) @ J
    lam, V = np.linalg.eigh(0.5 * (G + G.T))
    keep = lam > PIVOT_TOL * max(1.0, float(lam.max(initial=0)))
    return V[:, keep] * np.sqrt(lam[keep])


def gaussian_from_metric(space: MetricSpace, kind: str = "embed-euclidean",
                         params: Mapping | None = None) -> GaussianProcessModel:
    """Build an unscaled Gaussian model on the points of ``space``.

    * ``embed-euclidean``: X_t = <g, x_t> for the stored coordinates, or a
      classical-scaling embedding when the space has none.
    * ``brownian-path``: cov = min(pos_s, pos_t); ``positions`` defaults to
      1-D coordinates shifted to start at 0, else 0..n-1.
    * ``custom-cov``: ``params["cov"]``.
    """
    params = dict(params or {})
    if kind == "embed-euclidean":
        pts = params.get("coords")
        if pts is None:
            pts = space.coords if space.coords is not None else _mds(space.dist)
        pts = np.asarray(pts, dtype=float).reshape(space.n, -1)
        return from_covariance(pts @ pts.T, kind)
    if kind == "brownian-path":
        pos = params.get("positions")
        if pos is None:
            if space.coords is not None and space.coords.shape[1] == 1:
                pos = space.coords[:, 0] - space.coords[:, 0].min()
            else:
                pos = np.arange(space.n, dtype=float)
        pos = np.asarray(pos, dtype=float)
        if pos.shape != (space.n,) or np.any(pos < 0):
            raise InvalidSpec("brownian-path positions must be n nonnegative reals")
        return from_covariance(np.minimum(pos[:, None], pos[None, :]), kind)
    if kind == "custom-cov":
        if "cov" not in params:
            raise InvalidSpec("custom-cov needs 'cov'")
        model = from_covariance(params["cov"], kind)
        if model.n != space.n:
            raise InvalidSpec(f"covariance is {model.n} x {model.n}, space has {space.n} points")
        return model
    raise InvalidSpec(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def abs_normal_moment(p: float) -> float:
    """E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)."""
    return 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


def _pair_ratios(model, space):
    dev = model.dev()
    off = ~np.eye(space.n, dtype=bool)
    ratio = np.zeros_like(dev)
    ratio[off] = dev[off] / space.dist[off]
    return ratio


def max_admissible_scale(model: GaussianProcessModel, space: MetricSpace, p: float) -> float:
    """Largest lambda for which lambda * X meets E(|dX|/d)^p <= 1 on every pair."""
    top = float(_pair_ratios(model, space).max(initial=0.0))
    if top == 0:
        return math.inf
    return 1.0 / (abs_normal_moment(p) ** (1 / p) * top)


@dataclass(frozen=True)
class IncrementReport:
    mode: str
    value: float
    stderr: float
    pair: tuple[int, int]
    passed: bool

    def to_dict(self) -> dict:
        return {"mode": self.mode, "value": self.value, "stderr": self.stderr,
                "pair": list(self.pair), "pass": self.passed}


def check_increment_condition(model: GaussianProcessModel, space: MetricSpace, fn: OrliczFn,
                              mode: str = "auto", trials: int = 100_000, seed=0) -> IncrementReport:
    """max over s != t of E phi(|X_s - X_t| / d(s, t)).

    ``analytic-power`` needs phi(x) = x^p. ``monte-carlo`` uses one common
    standard normal sample for all pairs and passes only if every pair's
    mean + 3 stderr stays <= 1.
    """
    if mode == "auto":
        mode = "analytic-power" if fn.kind in ("identity", "power") else "monte-carlo"
    ratio = model.scale * _pair_ratios(model, space)
    if space.n < 2:
        return IncrementReport(mode, 0.0, 0.0, (0, 0), True)
    if mode == "analytic-power":
        if fn.kind not in ("identity", "power"):
            raise InvalidSpec("analytic increment check needs a power function")
        vals = abs_normal_moment(fn.p) * ratio ** fn.p
        s, t = np.unravel_index(int(np.argmax(vals)), vals.shape)
        v = float(vals[s, t])
        return IncrementReport(mode, v, 0.0, (int(s), int(t)), v <= 1.0 + INCREMENT_RTOL)
    if mode != "monte-carlo":
        raise InvalidSpec(f"unknown increment mode {mode!r}")
    iu = np.triu_indices(space.n, 1)
    r = ratio[iu]
    z = np.abs(np.random.default_rng(seed).standard_normal(trials))
    means = np.empty(r.size)
    ses = np.empty(r.size)
    for i, ri in enumerate(r):
        vals = evaluate(fn, ri * z)
        means[i] = vals.mean()
        ses[i] = vals.std(ddof=1) / math.sqrt(trials)
    j = int(np.argmax(means + 3 * ses))
    return IncrementReport(mode, float(means[j]), float(ses[j]), (int(iu[0][j]), int(iu[1][j])),
                           bool(np.all(means + 3 * ses <= 1.0)))


def _block_seed(seed, block):
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [block]


def sample_paths(model: GaussianProcessModel, trials: int, seed=0, threads: int | None = None) -> np.ndarray:
    """``trials`` independent draws of X, shape (trials, n).

    Draws are generated in fixed blocks of 4096, block ``b`` from the stream
    seeded by ``(seed, b)``; output does not depend on ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rank = model.factor.shape[1]
    starts = list(range(0, trials, BLOCK))

    def block(i):
        size = min(BLOCK, trials - starts[i])
        z = np.random.default_rng(_block_seed(seed, i)).standard_normal((size, rank))
        return model.scale * (z @ model.factor.T)

    nthreads = _threads(threads)
    if nthreads == 1 or len(starts) == 1:
        parts = [block(i) for i in range(len(starts))]
    else:
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(block, range(len(starts))))
    if rank == 0:
        return np.zeros((trials, model.n))
    return np.vstack(parts)


@dataclass(frozen=True)
class SupEstimate:
    mean: float
    stderr: float
    trials: int
    p_moment: tuple[float, float, float] | None = None

    def to_dict(self) -> dict:
        out = {"mean": self.mean, "stderr": self.stderr, "trials": self.trials}
        if self.p_moment is not None:
            p, est, se = self.p_moment
            out["p_moment"] = {"p": p, "estimate": est, "stderr": se}
        return out


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def estimate_sup_range(batch: np.ndarray, p: float | None = None) -> SupEstimate:
    """Mean of max_t X - min_t X over the paths, with its standard error.

    With ``p``, also (E range^p)^{1/p}; its stderr comes from the delta method.
    """
    batch = np.atleast_2d(batch)
    if batch.shape[0] < 2:
        raise ValueError("need at least two paths for a standard error")
    ranges = kernels.row_range(batch)
    mean, se = _mean_se(ranges)
    moment = None
    if p is not None:
        mp, sp = _mean_se(ranges ** p)
        est = mp ** (1 / p)
        se_p = sp * (mp ** (1 / p - 1) / p) if mp > 0 else 0.0
        moment = (float(p), float(est), float(se_p))
    return SupEstimate(mean, se, int(batch.shape[0]), moment)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def _require_increment(model, space, fn, seed):
    rep = check_increment_condition(model, space, fn, seed=_block_seed(seed, INCREMENT_STREAM))
    if not rep.passed:
        raise IncrementConditionUnmet(
            f"E phi(|dX|/d) reaches {rep.value:.6g} > 1 at pair {rep.pair}", rep)
    return rep


def _mc_cert(name, values, bound, info, extra=None):
    mean, se = _mean_se(values)
    witness = {"mean": mean, "stderr": se, "trials": len(values), **info}
    if extra:
        witness.update(extra)
    return BoundCertificate(name, mean + 3 * se, float(bound), witness)


def verify_expected_range_32s(space: MetricSpace, measure: ProbMeasure, model: GaussianProcessModel, p: float = 2.0,
                   trials: int = 10_000, seed=0, threads: int | None = None) -> BoundCertificate:
    """E sup |X_s - X_t| <= 32 S for phi(x) = x^p; pass if mean + 3 stderr <= 32 S."""
    fn = power(p)
    inc = _require_increment(model, space, fn, seed)
    S = profile(space, measure, fn).S
    ranges = kernels.row_range(sample_paths(model, trials, seed, threads))
    cert = _mc_cert("expected_range_32s", ranges, 32 * S, {"p": p, "S": S, "increment": inc.to_dict()})
    cert.witness["ratio"] = cert.witness["mean"] / (32 * S) if S > 0 else 0.0
    return cert


def verify_expected_range(space, measure, model, fn: OrliczFn, a: float, b: float, R: float,
                   trials: int = 10_000, seed=0, threads=None) -> BoundCertificate:
    """E sup |X_s - X_t| <= 2 a A S + 2 b B Sbar for a Young phi in G_{a,b}."""
    if not fn.young:
        raise NotYoung(f"{fn.describe()} is not a Young function")
    growth = check_growth_condition(fn, GrowthParams(a, b))
    inc = _require_increment(model, space, fn, seed)
    prof = profile(space, measure, fn)
    A, B = constants_AB(R)
    aA = 0.0 if a == 0 else float(a * A)
    bound = 2 * aA * prof.S + 2 * float(b * B) * prof.Sbar
    ranges = kernels.row_range(sample_paths(model, trials, seed, threads))
    return _mc_cert("expected_range", ranges, bound,
                    {"fn": fn.describe(), "a": a, "b": b, "R": R, "S": prof.S, "Sbar": prof.Sbar,
                     "growth_check": growth.passed, "increment": inc.to_dict()})


def verify_expected_psi_range(space, measure, model, fn: OrliczFn, psi_params: PsiParams, a: float, b: float, R: float,
                   trials: int = 10_000, seed=0, threads=None) -> BoundCertificate:
    """E sup psi(|X_s - X_t| / 2K) <= alpha + beta with K = (aA + bB) S."""
    rep = check_psi_condition(fn, psi_params)
    if not rep.passed:
        raise PsiConditionUnmet(f"psi condition fails at {rep.witness}")
    inc = _require_increment(model, space, fn, seed)
    S = profile(space, measure, fn).S
    K = coefficient(a, b, R) * S
    ranges = kernels.row_range(sample_paths(model, trials, seed, threads))
    # psi increasing: the sup over pairs is psi at the range
    vals = evaluate(psi_params.psi, ranges / (2 * K)) if K > 0 else np.zeros_like(ranges)
    return _mc_cert("expected_psi_range", vals, psi_params.alpha + psi_params.beta,
                    {"fn": fn.describe(), "psi": psi_params.psi.describe(), "alpha": psi_params.alpha,
                     "beta": psi_params.beta, "a": a, "b": b, "R": R, "K": K, "increment": inc.to_dict()})


def verify_range_moment(space, measure, model, p: float, trials: int = 10_000, seed=0,
                      threads=None) -> BoundCertificate:
    """|| sup |X_s - X_t| ||_p <= 2 K_p, estimate + 3 stderr against the bound."""
    fn = power(p)
    inc = _require_increment(model, space, fn, seed)
    pc = power_constants(p)
    S = profile(space, measure, fn).S
    est = estimate_sup_range(sample_paths(model, trials, seed, threads), p=p)
    _, moment, se = est.p_moment
    return BoundCertificate("range_moment", moment + 3 * se, 2 * pc.kcoef * S,
                            {"p": p, "moment": moment, "stderr": se, "trials": trials, "S": S,
                             "kcoef": pc.kcoef, "increment": inc.to_dict()})


# ---------------------------------------------------------------------------
# nets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NetProjection:
    """Nearest-point map T -> F and the pushforward of m onto F.

    ``assign[t]`` is a global point index in ``subset``; ``pushforward[i]``
    is the mass sent to ``subset[i]``.
    """

    subset: np.ndarray
    assign: np.ndarray
    pushforward: np.ndarray
    two_approx_excess: float
    ball_excess: float

    @property
    def two_approx_ok(self) -> bool:
        return self.two_approx_excess <= 0

    @property
    def ball_comparison_ok(self) -> bool:
        return self.ball_excess <= 1e-12


def net_projection(space: MetricSpace, measure: ProbMeasure, subset: Sequence[int]) -> NetProjection:
    F = np.array(sorted(set(int(i) for i in subset)), dtype=int)
    if F.size == 0:
        raise EmptySubset("the net must contain at least one point")
    dF = space.dist[:, F]
    # argmin returns the first minimum, i.e. the lowest index in F
    assign = F[np.argmin(dF, axis=1)]
    push = np.array([measure.w[assign == y].sum() for y in F])

    # d(f(t), x) <= 2 d(t, x) for every t in T and x in F
    lhs = space.dist[np.ix_(assign, F)]
    two = float(np.max(lhs - 2 * dF))

    # m(B(x, eps)) <= mu_F(B_F(x, 2 eps)); the left side only jumps at
    # eps = d(x, y), so checking there covers every eps
    worst = -np.inf
    for i, x in enumerate(F):
        for eps in np.unique(space.dist[x]):
            left = measure.w[space.dist[x] <= eps].sum()
            right = push[space.dist[x, F] <= 2 * eps].sum()
            worst = max(worst, float(left - right))
    return NetProjection(F, assign, push, two, worst)


def verify_net_expected_range(space, measure, model, fn: OrliczFn, a: float, b: float, R: float,
                      subset: Sequence[int], trials: int = 10_000, seed=0, threads=None) -> BoundCertificate:
    """E sup_{s,t in F} |X_s - X_t| <= 4K, K = (aA + bB) S computed on all of T.

    phi need not be Young. The witness records the intermediate step: the
    majorizing functional of the pushforward measure on F is at most 2 S.
    """
    net = net_projection(space, measure, subset)
    sub = space.subspace(net.subset)
    sub_model = model.restrict(net.subset)
    inc = _require_increment(sub_model, sub, fn, seed)
    S = profile(space, measure, fn).S
    K = coefficient(a, b, R) * S
    mu_F = build_measure(net.pushforward / net.pushforward.sum())
    S_F = profile(sub, mu_F, fn).S if sub.n > 1 else 0.0
    ranges = kernels.row_range(sample_paths(sub_model, trials, seed, threads))
    return _mc_cert("net_expected_range", ranges, 4 * K,
                    {"fn": fn.describe(), "a": a, "b": b, "R": R, "S": S, "K": K,
                     "subset": net.subset.tolist(), "increment": inc.to_dict()},
                    {"net_two_approx_ok": net.two_approx_ok, "net_ball_comparison_ok": net.ball_comparison_ok,
                     "net_S": S_F, "net_S_bound_ok": S_F <= 2 * S * (1 + 1e-12)})
