import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainkit.errors import LevelBelowBase
from chainkit.majorant import (
    base_level_k0,
    profile,
    radii_table,
    radius_at,
    radius_sum_check,
    sigma_at,
)
from chainkit.metric import SpaceFamilySpec, build_measure, build_metric_space, generate_space, uniform_measure
from chainkit.orlicz import identity, piecewise, power

from conftest import brute_radius, sigma_quad

FNS = [identity(), power(1.5), power(2), power(3), piecewise([[0, 0], [0.5, 0.3], [2, 4]])]


def test_sigma_two_point(two_point):
    s, m = two_point
    assert sigma_at(s, m, identity(), 0) == 2
    assert sigma_at(s, m, power(2), 1) == pytest.approx(math.sqrt(2), rel=1e-15)


def test_sigma_three_point_path(path3):
    s, m = path3
    assert sigma_at(s, m, power(2), 1) == pytest.approx(1 + math.sqrt(2), rel=1e-14)
    assert sigma_at(s, m, power(2), 0) == pytest.approx(2 + math.sqrt(4 / 3), rel=1e-14)


def test_profile_examples(two_point, path3):
    single = profile(build_metric_space([[0]]), uniform_measure(1), power(2))
    assert single.sigma.tolist() == [0.0] and single.S == 0 and single.Sbar == 0
    prof = profile(*two_point, power(2))
    assert prof.S == pytest.approx(math.sqrt(2)) and prof.Sbar == pytest.approx(math.sqrt(2))
    prof = profile(*path3, power(2))
    assert prof.S == pytest.approx(3.1547005383792515, rel=1e-14)
    assert prof.Sbar == pytest.approx(0.25 * prof.sigma[0] + 0.5 * prof.sigma[1] + 0.25 * prof.sigma[2])
    assert prof.Sbar == pytest.approx(2.7844570503761732, rel=1e-12)


def test_base_level_examples():
    for R in (2, 3, 4, 8):
        assert base_level_k0(identity(), R) == 0
        assert base_level_k0(power(2.5), R) == 0
    assert base_level_k0(piecewise([[0, 0], [2, 1], [3, 5]]), 2) == 1
    assert base_level_k0(piecewise([[0, 0], [0.3, 1], [1, 5]]), 2) == -2


@pytest.mark.parametrize("x_one", [0.3, 0.5, 1.0, 2.0, 4.0, 7.9, 8.0, 9.0])
@pytest.mark.parametrize("R", [2, 3, 4.5])
def test_base_level_brackets(x_one, R):
    fn = piecewise([[0, 0], [x_one, 1], [x_one + 1, 9]])
    k0 = base_level_k0(fn, R)
    assert R ** k0 <= x_one * (1 + 1e-12) and x_one < R ** (k0 + 1)


def test_radius_examples(two_point, path3):
    s, m = two_point
    assert radius_at(s, m, power(2), 2, 0, 0) == 1
    assert radius_at(s, m, power(2), 2, 1, 0) == 0
    s, m = path3
    assert radius_at(s, m, power(2), 2, 1, 0) == 0
    with pytest.raises(LevelBelowBase):
        radius_at(s, m, power(2), 2, -1, 0)


def test_radii_table_examples(two_point, path3):
    t = radii_table(*two_point, power(2), 2)
    assert (t.k0, t.kmax) == (0, 0) and t.at(0).tolist() == [1, 1] and t.at(1).tolist() == [0, 0]
    t = radii_table(*path3, power(2), 2)
    assert (t.k0, t.kmax) == (0, 0) and t.at(0).tolist() == [2, 2, 2]
    t = radii_table(build_metric_space([[0]]), uniform_measure(1), power(2), 4)
    assert t.kmax == t.k0 and t.at(t.k0).tolist() == [0]
    with pytest.raises(LevelBelowBase):
        t.at(t.k0 - 1)


def test_radius_sum_examples(two_point, path3):
    certs = radius_sum_check(profile(*two_point, power(2)), radii_table(*two_point, power(2), 2), 2)
    assert certs[0].lhs == 1 and certs[0].rhs == pytest.approx(2 * math.sqrt(2)) and certs[0].passed
    prof, t = profile(*path3, power(2)), radii_table(*path3, power(2), 2)
    c = radius_sum_check(prof, t, 2)[1]
    assert c.lhs == 2 and c.rhs == pytest.approx(2 * (1 + math.sqrt(2))) and c.passed
    single = build_metric_space([[0]])
    c = radius_sum_check(profile(single, uniform_measure(1), power(2)),
                         radii_table(single, uniform_measure(1), power(2), 2), 2)[0]
    assert c.lhs == 0 and c.rhs == 0 and c.passed


def _space(kind, n, seed, dirichlet):
    params = {"n": n, "gaps": "random"} if kind == "path" else {"n": n, "dim": 2}
    if dirichlet:
        params["measure"] = "dirichlet"
    return generate_space(SpaceFamilySpec(kind, params, seed))


spaces = st.builds(_space, st.sampled_from(["path", "random-euclidean"]), st.integers(1, 12),
                   st.integers(0, 2**32), st.booleans())


@settings(max_examples=40, deadline=None)
@given(spaces, st.sampled_from(FNS))
def test_sigma_matches_quadrature(sm, fn):
    s, m = sm
    prof = profile(s, m, fn)
    for x in range(s.n):
        assert prof.sigma[x] == pytest.approx(sigma_quad(s, m, fn, x), rel=1e-8, abs=1e-12)
    assert prof.Sbar <= prof.S * (1 + 1e-15)
    assert (prof.S == 0) == (s.n == 1)


@settings(max_examples=40, deadline=None)
@given(spaces, st.sampled_from(FNS), st.sampled_from([2, 3, 4, 8]))
def test_radii_match_definition(sm, fn, R):
    s, m = sm
    t = radii_table(s, m, fn, R)
    for k in range(t.k0, t.kmax + 2):
        for x in range(s.n):
            assert t.at(k)[x] == brute_radius(s, m, fn, R, k, t.k0, x)
    if s.n > 1:
        assert np.any(t.at(t.kmax) > 0)
    # nonincreasing above k0
    assert np.all(np.diff(t.r[1:], axis=0) <= 0)


@settings(max_examples=40, deadline=None)
@given(spaces, st.sampled_from(FNS), st.sampled_from([2, 3, 4, 8]))
def test_radii_are_one_lipschitz(sm, fn, R):
    s, m = sm
    t = radii_table(s, m, fn, R)
    for row in t.r:
        assert np.all(np.abs(row[:, None] - row[None, :]) <= s.dist + 1e-12)


@settings(max_examples=30, deadline=None)
@given(spaces, st.sampled_from(FNS), st.floats(0.01, 100))
def test_scaling_homogeneity(sm, fn, lam):
    s, m = sm
    p1, p2 = profile(s, m, fn), profile(s.scaled(lam), m, fn)
    assert np.allclose(p2.sigma, lam * p1.sigma, rtol=1e-12, atol=0)
    assert p2.S == pytest.approx(lam * p1.S, rel=1e-12) and p2.Sbar == pytest.approx(lam * p1.Sbar, rel=1e-12)
    # radii scale at the same levels: thresholds depend on fn and R only
    t1, t2 = radii_table(s, m, fn, 4), radii_table(s.scaled(lam), m, fn, 4)
    assert (t1.k0, t1.kmax) == (t2.k0, t2.kmax)
    assert np.allclose(t2.r, lam * t1.r, rtol=1e-12, atol=0)


@settings(max_examples=30, deadline=None)
@given(spaces, st.sampled_from(FNS), st.data())
def test_enriching_an_atom_lowers_its_sigma(sm, fn, data):
    # every ball around y gains relative mass when w[y] grows, so sigma(y)
    # cannot increase; the max over all points can (see the ledger)
    s, _ = sm
    if s.n < 2:
        return
    m = uniform_measure(s.n)
    y = data.draw(st.integers(0, s.n - 1))
    extra = data.draw(st.floats(0.01, 5))
    w = m.w.copy()
    w[y] += extra
    m2 = build_measure(w / w.sum())
    assert sigma_at(s, m2, fn, y) <= sigma_at(s, m, fn, y) * (1 + 1e-12)


def test_enriching_an_atom_can_raise_max_sigma():
    # two points, uniform start; moving mass towards point 0 makes point 1 lighter
    s = build_metric_space([[0, 1], [1, 0]])
    before = profile(s, uniform_measure(2), identity()).S
    after = profile(s, build_measure([0.6, 0.4]), identity()).S
    assert before == 2 and after == pytest.approx(2.5)


@settings(max_examples=40, deadline=None)
@given(spaces, st.sampled_from(FNS), st.sampled_from([2, 3, 4, 8]))
def test_radius_sum_bound(sm, fn, R):
    s, m = sm
    assert all(c.passed for c in radius_sum_check(profile(s, m, fn), radii_table(s, m, fn, R), R))
