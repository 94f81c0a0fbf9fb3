"""Certificates for the deterministic functional inequalities.

Each ``check_*`` function takes one function ``f`` on the points (a length-n
array) and returns a :class:`BoundCertificate` for its worst point or pair.
The ``*_terms`` helpers do the same work for a batch ``F`` of shape
(trials, n) and are what :func:`random_function_suite` runs.
"""

from __future__ import annotations

import hashlib
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .certificates import BoundCertificate, slack_tolerance
from .chaining import ChainingMeasure, build_chaining_measure
from .errors import DegenerateK, InvalidR, NotYoung, PsiConditionUnmet
from .majorant import MajorantProfile, profile, radii_table
from .metric import MetricSpace, ProbMeasure, diameter
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

GENERATORS = ("uniform-box", "gaussian-iid", "lipschitz-cone")


def _batch(f) -> np.ndarray:
    return np.atleast_2d(np.asarray(f, dtype=float))


def energy(f, cm: ChainingMeasure, space: MetricSpace | None = None, fn: OrliczFn | None = None):
    """Integral of phi(|f(u) - f(v)| / d(u, v)) against nu; 0/0 = 0 on the diagonal.

    ``f`` may be a single function or a (trials, n) batch; ``fn`` defaults
    to the function nu was built with.
    """
    space = cm.space if space is None else space
    fn = cm.fn if fn is None else fn
    F = _batch(f)
    if fn.kind in ("identity", "power"):
        out = kernels.power_energy(F, space.dist, cm.nu, fn.p)
    else:
        off = ~np.eye(space.n, dtype=bool)
        inv_d = np.zeros_like(space.dist)
        inv_d[off] = 1.0 / space.dist[off]
        ratio = np.abs(F[:, :, None] - F[:, None, :]) * inv_d
        out = np.einsum("tuv,uv->t", evaluate(fn, ratio), cm.nu)
    return float(out[0]) if np.ndim(f) == 1 else out


def _AB_terms(a, b, R):
    A, B = constants_AB(R)
    if math.isinf(A):
        if a != 0:
            raise InvalidR("R = 2 makes A infinite; only allowed with a = 0")
        return 0.0, float(b * B)
    return float(a * A), float(b * B)


def _deviation(F, w):
    return np.abs(F - (F @ w)[:, None])


def _range(F):
    return kernels.row_range(F)


# --- batch slacks -----------------------------------------------------------
# each returns (lhs, rhs) arrays of shape (trials,) at the worst point

def _worst(lhs, rhs):
    """Reduce (trials, n) comparisons to the point of least slack per trial."""
    idx = np.argmin(rhs - lhs, axis=1)
    rows = np.arange(lhs.shape[0])
    return lhs[rows, idx], rhs[rows, idx], idx


def pointwise_deviation_terms(F, prof, cm, a, b, R, energies=None):
    F = _batch(F)
    E = energy(F, cm) if energies is None else energies
    aA, bB = _AB_terms(a, b, R)
    lhs = _deviation(F, cm.measure.w)
    rhs = aA * prof.sigma[None, :] + (bB * prof.Sbar * E)[:, None]
    return _worst(lhs, rhs)


def oscillation_terms(F, prof, cm, a, b, R, energies=None):
    F = _batch(F)
    E = energy(F, cm) if energies is None else energies
    aA, bB = _AB_terms(a, b, R)
    return _range(F), 2 * aA * prof.S + 2 * bB * prof.Sbar * E


def oscillation_r4_terms(F, prof, cm, energies=None):
    if not cm.fn.young:
        raise NotYoung(f"{cm.fn.describe()} is not a Young function")
    if cm.R != 4:
        raise InvalidR("the fixed-constant corollary uses nu built with R = 4")
    F = _batch(F)
    E = energy(F, cm) if energies is None else energies
    # the 32 S (2/3 + E/3) form must dominate the a = b = 1, R = 4 general bound
    A, B = constants_AB(4)
    if not (2 * A == Fraction(64, 3) and 2 * B * prof.Sbar <= 32 * prof.S / 3 * (1 + 1e-12)):
        raise AssertionError("corollary constants inconsistent with A(4), B(4)")
    return _range(F), 32 * prof.S * (2 / 3 + E / 3)


def oscillation_identity_terms(F, prof_id, cm_id, energies=None):
    if cm_id.fn.kind != "identity" or cm_id.R != 2:
        raise InvalidR("the identity-phi remark uses nu built with phi(x) = x and R = 2")
    F = _batch(F)
    E = energy(F, cm_id) if energies is None else energies
    return _range(F), 8 * prof_id.Sbar * E


def _K(a, b, R, S):
    K = coefficient(a, b, R) * S
    if not K > 0:
        raise DegenerateK("K = 0 (single-point space); the psi bounds are vacuous")
    return K


def psi_deviation_terms(F, psi_params, prof, cm, a, b, R, energies=None):
    F = _batch(F)
    E = energy(F, cm) if energies is None else energies
    K = _K(a, b, R, prof.S)
    dev = _deviation(F, cm.measure.w).max(axis=1)
    return evaluate(psi_params.psi, dev / K), psi_params.alpha + psi_params.beta * E


def psi_oscillation_terms(F, psi_params, prof, cm, a, b, R, energies=None):
    F = _batch(F)
    E = energy(F, cm) if energies is None else energies
    K = _K(a, b, R, prof.S)
    # psi is increasing, so the sup over pairs sits at the range
    return evaluate(psi_params.psi, _range(F) / (2 * K)), psi_params.alpha + psi_params.beta * E


def power_oscillation_terms(F, prof_p, cm_p, p, energies=None):
    pc = power_constants(p)
    if cm_p.fn.p != float(p) or not math.isclose(cm_p.R, pc.R, rel_tol=1e-12):
        raise InvalidR(f"nu must be built with phi = x^{p} and R = R_p = {pc.R}")
    F = _batch(F)
    E = energy(F, cm_p) if energies is None else energies
    return _range(F) ** p, (2 * pc.kcoef * prof_p.S) ** p * E


# --- single-function certificates ------------------------------------------

def _cert(name, lhs, rhs, witness, f):
    witness = dict(witness)
    witness["f_digest"] = digest(f)
    return BoundCertificate(name, float(lhs[0]), float(rhs[0]), witness)


def digest(f) -> str:
    return hashlib.sha256(np.ascontiguousarray(f, dtype=float).tobytes()).hexdigest()[:16]


def check_pointwise_deviation(f, t, prof: MajorantProfile, cm: ChainingMeasure, a: float, b: float, R: float) -> BoundCertificate:
    """|f(t) - int f dm| <= a A sigma(t) + b B Sbar E_nu(f); ``t=None`` checks every point."""
    F = _batch(f)
    E = energy(F, cm)
    aA, bB = _AB_terms(a, b, R)
    lhs = _deviation(F, cm.measure.w)
    rhs = aA * prof.sigma[None, :] + (bB * prof.Sbar * E)[:, None]
    if t is None:
        l, r, idx = _worst(lhs, rhs)
        t = int(idx[0])
    else:
        l, r = lhs[:, t], rhs[:, t]
    return _cert("pointwise_deviation", l, r, {"t": t, "a": a, "b": b, "R": R}, f)


def check_oscillation(f, prof, cm, a, b, R) -> BoundCertificate:
    l, r = oscillation_terms(f, prof, cm, a, b, R)
    return _cert("oscillation", l, r, {"a": a, "b": b, "R": R}, f)


def check_oscillation_r4(f, prof, cm) -> BoundCertificate:
    l, r = oscillation_r4_terms(f, prof, cm)
    return _cert("oscillation_r4", l, r, {"a": 1, "b": 1, "R": 4}, f)


def check_oscillation_identity(f, prof_id, cm_id) -> BoundCertificate:
    l, r = oscillation_identity_terms(f, prof_id, cm_id)
    return _cert("oscillation_identity", l, r, {"a": 0, "b": 1, "R": 2}, f)


def _psi_ok(cm, psi_params, psi_waived):
    if psi_waived:
        return {"psi_check": "waived"}
    rep = check_psi_condition(cm.fn, psi_params)
    if not rep.passed:
        raise PsiConditionUnmet(
            f"psi condition fails at (x, y) = {rep.witness} by {rep.max_violation:.3g}")
    return {"psi_check": "grid", "psi_max_violation": rep.max_violation}


def check_psi_deviation(f, psi_params: PsiParams, prof, cm, a, b, R, psi_waived: bool = False) -> BoundCertificate:
    info = _psi_ok(cm, psi_params, psi_waived)
    l, r = psi_deviation_terms(f, psi_params, prof, cm, a, b, R)
    info.update(a=a, b=b, R=R, alpha=psi_params.alpha, beta=psi_params.beta, psi=psi_params.psi.describe())
    return _cert("psi_deviation", np.atleast_1d(l), r, info, f)


def check_psi_oscillation(f, psi_params: PsiParams, prof, cm, a, b, R, psi_waived: bool = False) -> BoundCertificate:
    info = _psi_ok(cm, psi_params, psi_waived)
    l, r = psi_oscillation_terms(f, psi_params, prof, cm, a, b, R)
    info.update(a=a, b=b, R=R, alpha=psi_params.alpha, beta=psi_params.beta, psi=psi_params.psi.describe())
    return _cert("psi_oscillation", np.atleast_1d(l), r, info, f)


def check_power_oscillation(f, prof_p, cm_p, p) -> BoundCertificate:
    l, r = power_oscillation_terms(f, prof_p, cm_p, p)
    return _cert("power_oscillation", l, r, {"p": p, "R": cm_p.R}, f)


# ---------------------------------------------------------------------------
# random suite
# ---------------------------------------------------------------------------

def draw_function(space: MetricSpace, generator: str, rng: np.random.Generator) -> np.ndarray:
    """One random function; amplitudes are log-uniform over four decades."""
    n = space.n
    D = diameter(space) or 1.0
    amp = 10.0 ** rng.uniform(-2, 2)
    if generator == "uniform-box":
        return amp * D * rng.uniform(-1, 1, n)
    if generator == "gaussian-iid":
        return amp * D * rng.standard_normal(n)
    if generator == "lipschitz-cone":
        # min over anchors of (g_j + L d(t, a_j)) is exactly L-Lipschitz
        anchors = rng.integers(0, n, size=int(rng.integers(1, n + 1)))
        offsets = rng.uniform(0, amp * D, anchors.size)
        return np.min(offsets[:, None] + amp * space.dist[anchors], axis=0)
    raise ValueError(f"unknown generator {generator!r}; expected one of {GENERATORS}")


def default_psi(fn: OrliczFn) -> PsiParams | None:
    """A (psi, alpha, beta) known to satisfy the psi comparison for ``fn``."""
    if fn.kind in ("identity", "power"):
        return PsiParams(fn, 0.0, 1.0)
    if fn.young:
        # x <= 1 + phi(xy)/phi(y) for convex phi with phi(0) = 0
        return PsiParams(identity(), 1.0, 1.0)
    return None


@dataclass(frozen=True)
class SuiteConfig:
    trials: int = 1000
    generators: tuple[str, ...] = GENERATORS
    seed: int = 0
    R: float = 4.0
    a: float = 1.0
    b: float = 1.0
    psi: PsiParams | None = None
    powers: tuple[float, ...] = (1.5, 2.0, 3.0)
    # stream id keeps fleet members on disjoint random streams
    stream: int = 0


@dataclass
class InequalityStats:
    trials: int = 0
    min_slack: float = math.inf
    violations: int = 0
    worst_witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "min_slack": None if math.isinf(self.min_slack) else self.min_slack,
            "violations": self.violations,
            "worst_witness": self.worst_witness,
        }


@dataclass
class SuiteReport:
    inequalities: dict[str, InequalityStats] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(s.violations for s in self.inequalities.values())

    def to_dict(self) -> dict:
        return {
            "inequalities": {k: self.inequalities[k].to_dict() for k in sorted(self.inequalities)},
            "notes": self.notes,
        }

    def merge(self, other: "SuiteReport", tag: str | None = None) -> None:
        for name, st in other.inequalities.items():
            mine = self.inequalities.setdefault(name, InequalityStats())
            mine.trials += st.trials
            mine.violations += st.violations
            if st.min_slack < mine.min_slack:
                mine.min_slack = st.min_slack
                mine.worst_witness = dict(st.worst_witness, **({"case": tag} if tag else {}))


def _record(report, name, lhs, rhs, extra, gens, seeds, idx=None):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    slack = rhs - lhs
    tol = 1e-9 * np.maximum(1.0, np.abs(rhs))
    st = InequalityStats(trials=int(lhs.size), violations=int(np.sum(slack < -tol)))
    if lhs.size:
        i = int(np.argmin(slack))
        st.min_slack = float(slack[i])
        st.worst_witness = {"trial": i, "generator": gens[i], "seed": seeds[i],
                            "lhs": float(lhs[i]), "rhs": float(rhs[i]), **extra}
        if idx is not None:
            st.worst_witness["t"] = int(idx[i])
    report.inequalities[name] = st


def random_function_suite(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn,
                          config: SuiteConfig = SuiteConfig()) -> SuiteReport:
    """Run every applicable inequality on ``config.trials`` random functions.

    Trial ``i`` uses generator ``generators[i % len(generators)]`` and the
    random stream seeded by ``(seed, stream, i)``, so any subset of trials
    can be replayed on its own.
    """
    report = SuiteReport()
    if config.trials <= 0 or space.n < 2:
        return report
    gens = [config.generators[i % len(config.generators)] for i in range(config.trials)]
    seeds = [[config.seed, config.stream, i] for i in range(config.trials)]
    F = np.vstack([draw_function(space, g, np.random.default_rng(s)) for g, s in zip(gens, seeds)])

    growth = check_growth_condition(fn, GrowthParams(config.a, config.b))
    report.notes["growth_check"] = growth.to_dict()
    a, b, R = config.a, config.b, config.R
    prof = profile(space, measure, fn)
    cm = build_chaining_measure(space, measure, fn, R)
    E = energy(F, cm)
    base = {"a": a, "b": b, "R": R}

    lhs, rhs, idx = pointwise_deviation_terms(F, prof, cm, a, b, R, E)
    _record(report, "pointwise_deviation", lhs, rhs, base, gens, seeds, idx)
    _record(report, "oscillation", *oscillation_terms(F, prof, cm, a, b, R, E), base, gens, seeds)

    if fn.young:
        cm4 = cm if R == 4 else build_chaining_measure(space, measure, fn, 4.0)
        E4 = E if cm4 is cm else energy(F, cm4)
        _record(report, "oscillation_r4", *oscillation_r4_terms(F, prof, cm4, E4), {"R": 4}, gens, seeds)

    psi = config.psi if config.psi is not None else default_psi(fn)
    if psi is not None:
        rep = check_psi_condition(fn, psi)
        report.notes["psi_check"] = rep.to_dict()
        if not rep.passed:
            raise PsiConditionUnmet(f"psi condition fails at {rep.witness}")
        extra = dict(base, psi=psi.psi.describe(), alpha=psi.alpha, beta=psi.beta)
        _record(report, "psi_deviation", *psi_deviation_terms(F, psi, prof, cm, a, b, R, E), extra, gens, seeds)
        _record(report, "psi_oscillation", *psi_oscillation_terms(F, psi, prof, cm, a, b, R, E), extra, gens, seeds)

    ident = identity()
    prof_id = prof if fn.kind == "identity" else profile(space, measure, ident)
    cm_id = cm if (fn.kind == "identity" and R == 2) else build_chaining_measure(space, measure, ident, 2.0)
    _record(report, "oscillation_identity", *oscillation_identity_terms(F, prof_id, cm_id), {"R": 2}, gens, seeds)

    for p in config.powers:
        fp = power(p)
        pc = power_constants(p)
        prof_p = profile(space, measure, fp)
        cm_p = build_chaining_measure(space, measure, fp, pc.R)
        _record(report, f"power_oscillation[p={p:g}]", *power_oscillation_terms(F, prof_p, cm_p, p), {"p": p, "R": pc.R},
                gens, seeds)
    return report
