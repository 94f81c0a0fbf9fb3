"""End-to-end acceptance criteria 1-6.

Each test prints one ``criterion N: PASS|FAIL`` line; the lines are repeated
in the pytest terminal summary. Runtimes are asserted against the budgets.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from chainkit.cli import RunConfig, dispatch, render
from chainkit.fleet import FAMILIES, fleet_lemma_rows, generate_fleet, process_case, sobolev_case
from chainkit.metric import build_metric_space, uniform_measure
from chainkit.orlicz import coefficient, constants_AB, power_constants, power_membership_value
from chainkit.process import estimate_sup_range, gaussian_from_metric, sample_paths
from chainkit.sobolev import SuiteReport

pytestmark = pytest.mark.acceptance

FLEET_SIZE = 200
SWEEP = (1.1, 1.5, 2.0, 3.0, 5.0, 10.0)


@pytest.fixture(scope="module")
def fleet():
    return generate_fleet(FLEET_SIZE, seed=0, max_n=40)


def test_fleet_shape(fleet):
    assert len(fleet) == FLEET_SIZE
    assert {c.spec.kind for c in fleet} == set(FAMILIES)
    assert {str(c.fn_label) for c in fleet} == {"identity", "1.5", "2.0", "3.0"}
    assert {c.R for c in fleet} == {2.0, 3.0, 4.0, 8.0}
    assert all((c.a, c.b) == (0.0, 1.0) and c.fn_label == "identity" for c in fleet if c.R == 2)
    assert max(c.build()[0].n for c in fleet) <= 40


def test_criterion_1_constants(acceptance_line):
    A, B = constants_AB(4)
    ok = (A == Fraction(32, 3) and B == Fraction(16, 3) and A + B == 16
          and isinstance(A, Fraction) and isinstance(B, Fraction))
    # oscillation constants at a = b = 1, R = 4: 2aA + 2bB
    cor_coef = 2 * 1 * A + 2 * 1 * B
    ok = ok and cor_coef == 32 and 2 * coefficient(1, 1, 4) == 32.0
    acceptance_line(1, ok, f"A={A} B={B} A+B={A + B} 2(A+B)={cor_coef}")
    assert ok


def test_criterion_2_power_optimum(acceptance_line):
    t0 = time.perf_counter()
    worst_identity = worst_membership = 0.0
    worst_grid_ratio = math.inf
    R = np.concatenate([np.linspace(2 + 1e-6, 6, 4000), np.linspace(6, 20, 1000)])
    A = R ** 3 / ((R - 1) * (R - 2))
    B = R ** 2 / (R - 1)
    for p in SWEEP:
        pc = power_constants(p)
        Ap, Bp = (float(x) for x in constants_AB(pc.R))
        worst_identity = max(worst_identity, abs(pc.a * Ap + pc.b * Bp - pc.kcoef) / pc.kcoef)
        worst_membership = max(worst_membership, abs(power_membership_value(p, pc.a, pc.b) - 1))
        # smallest feasible b for each a sits on the membership boundary
        q = p / (p - 1)
        a = np.geomspace(pc.a * 1e-3, pc.a * 1e3, 3000)
        b = (a * q) ** (-p / q) / p
        vals = a[None, :] * A[:, None] + b[None, :] * B[:, None]
        worst_grid_ratio = min(worst_grid_ratio, float(vals.min()) / pc.kcoef)
    elapsed = time.perf_counter() - t0
    ok = worst_identity <= 1e-9 and worst_membership <= 1e-12 and worst_grid_ratio >= 1 - 1e-6 and elapsed < 10
    acceptance_line(2, ok, f"identity rel err {worst_identity:.2e}, membership err {worst_membership:.2e}, "
                           f"grid min / Kcoef = {worst_grid_ratio:.9f}, {elapsed:.1f}s")
    assert ok


def test_criterion_3_lemma_fleet(fleet, acceptance_line):
    t0 = time.perf_counter()
    rows = fleet_lemma_rows(fleet, seed=0)
    elapsed = time.perf_counter() - t0
    bad = [r.to_dict() for r in rows if r.violations]
    checks = sum(r.checks for r in rows)
    lemmas = {r.lemma for r in rows}
    ok = not bad and elapsed < 120 and lemmas == {
        "lipschitz_radii", "radius_sum", "pairwise_radius", "chain_radius", "geometric_sum",
        "telescoping", "nu_total", "M_bound"}
    acceptance_line(3, ok, f"{len(fleet)} spaces, {len(rows)} rows, {checks} checks, "
                           f"{len(bad)} violations, {elapsed:.1f}s")
    assert ok, bad[:3]


def test_criterion_4_sobolev_fleet(fleet, acceptance_line):
    t0 = time.perf_counter()
    total = SuiteReport()
    for case in fleet:
        total.merge(sobolev_case(case, trials=1000, seed=0), case.tag)
    elapsed = time.perf_counter() - t0
    names = set(total.inequalities)
    expected = {"pointwise_deviation", "oscillation", "oscillation_r4", "psi_deviation", "psi_oscillation", "oscillation_identity",
                "power_oscillation[p=1.5]", "power_oscillation[p=2]", "power_oscillation[p=3]"}
    min_slack = min(s.min_slack for s in total.inequalities.values())
    ok = total.violations == 0 and expected <= names and elapsed < 300
    acceptance_line(4, ok, f"{len(fleet)} spaces x 1000 functions, {total.violations} violations, "
                           f"min slack {min_slack:.3g}, {elapsed:.1f}s")
    assert ok, {k: v.to_dict() for k, v in total.inequalities.items() if v.violations}


def test_criterion_5_process_fleet(fleet, acceptance_line):
    t0 = time.perf_counter()
    certs, failures = 0, []
    for case in fleet:
        for cert in process_case(case, trials=10_000, seed=0):
            certs += 1
            if not cert.passed:
                failures.append((case.tag, cert.to_dict()))
    s = build_metric_space([[0, 1], [1, 0]])
    model = gaussian_from_metric(s, "custom-cov", {"cov": [[0, 0], [0, 1]]})
    est = estimate_sup_range(sample_paths(model, 100_000, seed=0))
    anchor = abs(est.mean - math.sqrt(2 / math.pi)) <= 3 * est.stderr
    elapsed = time.perf_counter() - t0
    ok = not failures and anchor and elapsed < 600
    acceptance_line(5, ok, f"{certs} certificates, {len(failures)} failures; E|Z| anchor {est.mean:.5f} "
                           f"vs {math.sqrt(2 / math.pi):.5f} (3se {3 * est.stderr:.5f}); {elapsed:.1f}s")
    assert ok, failures[:3]


def test_criterion_6_determinism(acceptance_line):
    space = '{"family": {"kind": "random-euclidean", "n": 25, "dim": 2, "seed": 11, "measure": "dirichlet"}}'
    configs = [
        RunConfig("verify-process", space=space, trials=10_000, seed=7),
        RunConfig("verify-sobolev", space=space, trials=300, seed=7),
        RunConfig("lemmas", fleet='{"count": 12, "max_n": 20}', seed=7),
        RunConfig("profile", space=space, orlicz="power:3"),
        RunConfig("chain", space=space, orlicz="identity", R=2.0, a=0.0),
    ]
    mismatched = []
    for cfg in configs:
        for fmt in ("json", "csv"):
            outs = set()
            for threads in (1, 2, 4, 1):
                cfg.threads = threads
                outs.add(render(dispatch(cfg), fmt).encode())
            if len(outs) != 1:
                mismatched.append((cfg.subcommand, fmt))
    ok = not mismatched
    acceptance_line(6, ok, f"{len(configs)} configs x 2 formats x threads (1, 2, 4, 1 again): "
                           f"{len(mismatched)} mismatches")
    assert ok, mismatched
