"""Seeded fleets of test cases and the suite runners that sweep them.

A fleet case fixes a space recipe, an Orlicz function and the constants
(R, a, b). Everything downstream is a pure function of the case and a seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .certificates import BoundCertificate, from_vectors
from .chaining import (
    Chain,
    build_chaining_measure,
    check_geometric_sum,
    check_lipschitz_radii,
    check_M_bound,
    check_nu_normalised,
    check_telescoping,
)
from .majorant import profile, radii_table, radius_sum_check
from .metric import MetricSpace, ProbMeasure, SpaceFamilySpec, generate_space
from .orlicz import OrliczFn, identity, power
from .process import (
    gaussian_from_metric,
    max_admissible_scale,
    verify_net_expected_range,
    verify_range_moment,
    verify_expected_range_32s,
    verify_expected_range,
    verify_expected_psi_range,
)
from .sobolev import SuiteConfig, SuiteReport, default_psi, random_function_suite

FAMILIES = ("path", "grid2d", "ultrametric-tree", "random-euclidean")
FN_CYCLE = ("identity", 1.5, 2.0, 3.0)
R_CYCLE = (3.0, 4.0, 8.0)
TELESCOPING_FUNCTIONS = 4


def fn_from_label(label) -> OrliczFn:
    return identity() if label == "identity" else power(float(label))


@dataclass(frozen=True)
class FleetCase:
    index: int
    spec: SpaceFamilySpec
    fn_label: str | float
    R: float
    a: float
    b: float

    @property
    def fn(self) -> OrliczFn:
        return fn_from_label(self.fn_label)

    def build(self) -> tuple[MetricSpace, ProbMeasure]:
        return generate_space(self.spec)

    @property
    def tag(self) -> str:
        return f"{self.index}:{self.spec.kind}:{self.fn.describe()}:R={self.R:g}"

    def to_dict(self) -> dict:
        return {"index": self.index, "space": self.spec.to_dict(), "fn": self.fn.to_spec(),
                "R": self.R, "a": self.a, "b": self.b}


def _family_params(kind: str, rng: np.random.Generator, max_n: int) -> dict:
    if kind == "path":
        return {"n": int(rng.integers(2, max_n + 1)), "gaps": str(rng.choice(["uniform", "random"])),
                "step": float(rng.uniform(0.5, 2.0))}
    if kind == "grid2d":
        rows = int(rng.integers(1, 7))
        cols = int(rng.integers(2, max(3, max_n // rows + 1)))
        return {"rows": rows, "cols": min(cols, max_n // rows)}
    if kind == "ultrametric-tree":
        branching = int(rng.integers(2, 4))
        depth_cap = int(np.floor(np.log(max_n) / np.log(branching) + 1e-9))
        ratio = float(rng.uniform(1.5, 4.0))
        return {"branching": branching, "depth": int(rng.integers(1, depth_cap + 1)), "ratio": ratio,
                "jitter": float(rng.uniform(0, 0.9 * (1 - 1 / ratio)))}
    return {"n": int(rng.integers(2, max_n + 1)), "dim": int(rng.integers(1, 4)),
            "scale": float(rng.uniform(0.5, 5.0))}


def generate_fleet(count: int = 200, seed: int = 0, max_n: int = 40) -> list[FleetCase]:
    """``count`` cases cycling through families, functions and R values.

    Every other identity case uses R = 2 with (a, b) = (0, 1); the rest use
    (a, b) = (1, 1). Measures alternate between uniform and Dirichlet draws.
    """
    rng = np.random.default_rng([seed, 0xF1EE7])
    cases = []
    for i in range(count):
        kind = FAMILIES[i % len(FAMILIES)]
        params = _family_params(kind, rng, max_n)
        if rng.uniform() < 0.5:
            params.update(measure="dirichlet", concentration=float(rng.uniform(0.5, 3.0)))
        label = FN_CYCLE[(i // len(FAMILIES)) % len(FN_CYCLE)]
        R, a, b = R_CYCLE[i % len(R_CYCLE)], 1.0, 1.0
        if label == "identity" and (i // (len(FAMILIES) * len(FN_CYCLE))) % 2 == 1:
            R, a, b = 2.0, 0.0, 1.0
        spec = SpaceFamilySpec(kind, params, seed=int(rng.integers(2**31)))
        cases.append(FleetCase(i, spec, label, R, a, b))
    return cases


# ---------------------------------------------------------------------------
# exact lemma suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaRow:
    case: int
    lemma: str
    checks: int
    violations: int
    worst: BoundCertificate

    def to_dict(self) -> dict:
        w = self.worst.to_dict()
        return {"case": self.case, "lemma": self.lemma, "checks": self.checks, "violations": self.violations,
                "lhs": w["lhs"], "rhs": w["rhs"], "slack": w["slack"], "pass": self.violations == 0,
                "witness": w["witness"]}


def _row(case_index: int, lemma: str, certs: Iterable[BoundCertificate]) -> LemmaRow:
    certs = list(certs)
    bad = sum(not c.passed for c in certs)
    worst = min(certs, key=lambda c: c.slack)
    return LemmaRow(case_index, lemma, len(certs), bad, worst)


def lemma_suite(space: MetricSpace, measure: ProbMeasure, fn: OrliczFn, R: float,
                seed: int = 0, case_index: int = 0) -> list[LemmaRow]:
    """Every exact chaining lemma on one (space, measure, fn, R).

    Chain-radius checks cover all pairs k0 <= k < m <= kmax + 1, the
    geometric sum every m in (k0, kmax + 1] when R > 2, and telescoping a
    handful of random functions at m = kmax + 1.
    """
    radii = radii_table(space, measure, fn, R)
    prof = profile(space, measure, fn)
    chain = Chain(space, measure, radii)
    k0, top = radii.k0, radii.kmax + 1
    rows = [_row(case_index, "lipschitz_radii", [check_lipschitz_radii(space, radii)]),
            _row(case_index, "radius_sum", radius_sum_check(prof, radii, R))]

    pair = [from_vectors("pairwise_radius", chain.op(i)(radii.at(j)), radii.at(i) + radii.at(j),
                         {"i": i, "j": j})
            for i in range(k0, top + 1) for j in range(k0, top + 1)]
    rows.append(_row(case_index, "pairwise_radius", pair))

    # S_m ... S_{k+1} r_k, built incrementally in m
    chained = []
    for k in range(k0, top):
        vec = radii.at(k)
        rhs = radii.at(k).copy()
        for m in range(k + 1, top + 1):
            vec = chain.op(m)(vec)
            rhs = rhs + 2.0 ** (m - k) * radii.at(m)
            chained.append(from_vectors("chain_radius", vec, rhs, {"k": k, "m": m}))
    rows.append(_row(case_index, "chain_radius", chained))

    if R > 2:
        rows.append(_row(case_index, "geometric_sum",
                         [check_geometric_sum(radii, R, m) for m in range(k0 + 1, top + 1)]))

    rng = np.random.default_rng([seed, case_index, 7])
    scale = space.diameter or 1.0
    tele = [check_telescoping(space, measure, radii, rng.normal(0, scale, space.n), top, chain)
            for _ in range(TELESCOPING_FUNCTIONS)]
    rows.append(_row(case_index, "telescoping", tele))

    if space.n >= 2:
        cm = build_chaining_measure(space, measure, fn, R, radii)
        rows.append(_row(case_index, "nu_total", [check_nu_normalised(cm)]))
        rows.append(_row(case_index, "M_bound", [check_M_bound(cm, prof, R)]))
    return rows


def fleet_lemma_rows(cases: Iterable[FleetCase], seed: int = 0) -> list[LemmaRow]:
    rows = []
    for case in cases:
        space, measure = case.build()
        rows.extend(lemma_suite(space, measure, case.fn, case.R, seed, case.index))
    return rows


# ---------------------------------------------------------------------------
# random-function and process sweeps
# ---------------------------------------------------------------------------

def sobolev_case(case: FleetCase, trials: int = 1000, seed: int = 0) -> SuiteReport:
    space, measure = case.build()
    cfg = SuiteConfig(trials=trials, seed=seed, R=case.R, a=case.a, b=case.b, stream=case.index)
    return random_function_suite(space, measure, case.fn, cfg)


def model_for(space: MetricSpace, kind: str):
    model_kind = "brownian-path" if kind == "path" else "embed-euclidean"
    return gaussian_from_metric(space, model_kind)


def process_case(case: FleetCase, trials: int = 10_000, seed: int = 0, threads: int | None = None,
                 powers=(1.5, 2.0, 3.0)) -> list[BoundCertificate]:
    """Process certificates for one case, each model scaled to its lambda*.

    Seeds are ``(seed, case, j)`` with ``j`` numbering the certificates.
    """
    space, measure = case.build()
    if space.n < 2:
        return []
    base = model_for(space, case.spec.kind)
    fn = case.fn
    p_fn = fn.p
    certs = []

    def scaled(p):
        return base.with_scale(max_admissible_scale(base, space, p))

    certs.append(verify_expected_range_32s(space, measure, scaled(2.0), 2.0, trials,
                                           [seed, case.index, 0], threads))
    certs.append(verify_expected_range(space, measure, scaled(p_fn), fn, case.a, case.b, case.R, trials,
                                       [seed, case.index, 1], threads))
    psi = default_psi(fn)
    certs.append(verify_expected_psi_range(space, measure, scaled(p_fn), fn, psi, case.a, case.b, case.R,
                                           trials, [seed, case.index, 2], threads))
    rng = np.random.default_rng([seed, case.index, 3])
    subset = np.sort(rng.choice(space.n, size=max(1, space.n // 2), replace=False))
    certs.append(verify_net_expected_range(space, measure, scaled(1.0), identity(), 0.0, 1.0, 2.0, subset,
                                           trials, [seed, case.index, 3], threads))
    for j, p in enumerate(powers):
        certs.append(verify_range_moment(space, measure, scaled(p), p, trials, [seed, case.index, 4 + j], threads))
    return certs
