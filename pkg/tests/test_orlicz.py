import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from chainkit.errors import DomainError, InvalidR, InvalidSpec
from chainkit.orlicz import (
    GrowthParams,
    PsiParams,
    chaining_constant_K,
    check_growth_condition,
    check_psi_condition,
    coefficient,
    constants_AB,
    custom,
    evaluate,
    identity,
    inverse,
    piecewise,
    power,
    power_constants,
    power_membership_criterion,
    power_membership_value,
)

SWEEP = (1.1, 1.5, 2.0, 3.0, 5.0, 10.0)


def test_evaluate_examples():
    assert evaluate(identity(), 3) == 3
    assert evaluate(power(2), 4) == 16
    for fn in (identity(), power(3), piecewise([[0, 0], [1, 2]])):
        assert evaluate(fn, 0) == 0


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        evaluate(power(2), -1)
    with pytest.raises(DomainError):
        inverse(power(2), -1)


def test_inverse_examples():
    assert inverse(power(2), 2) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert inverse(identity(), 1) == 1
    assert inverse(piecewise([[0, 0], [1, 2]]), 1) == pytest.approx(0.5)


def test_power_below_one_rejected():
    with pytest.raises(DomainError):
        power(0.5)


def test_piecewise_validation_and_young_flag():
    assert piecewise([[0, 0], [1, 1], [2, 3]]).young
    assert not piecewise([[0, 0], [1, 2], [2, 3]]).young
    with pytest.raises(InvalidSpec):
        piecewise([[1, 0], [2, 1]])
    with pytest.raises(InvalidSpec):
        piecewise([[0, 0], [1, 1], [1, 2]])


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([identity(), power(1.5), power(2), power(3.7),
                        piecewise([[0, 0], [0.5, 0.2], [2, 3]]),
                        custom(lambda x: np.asarray(x) * (1 + np.asarray(x)), young=True, name="x+x2")]),
       st.floats(1e-6, 1e6))
def test_inverse_round_trip(fn, y):
    assert float(fn(fn.inverse(y))) == pytest.approx(y, rel=1e-10)


def test_custom_bisection_matches_closed_form():
    cube = custom(lambda x: np.asarray(x) ** 3, young=True)
    assert cube.inverse(27.0) == pytest.approx(3.0, rel=1e-12)


def test_growth_condition_examples():
    assert check_growth_condition(identity(), GrowthParams(0, 1)).passed
    assert check_growth_condition(power(2), GrowthParams(1, 1)).passed
    rep = check_growth_condition(power(2), GrowthParams(0, 0.1))
    assert not rep.passed and rep.witness is not None


@pytest.mark.parametrize("fn", [identity(), power(1.5), power(2), power(3), power(10),
                                piecewise([[0, 0], [1, 0.5], [3, 4]])])
def test_young_functions_are_in_G11(fn):
    assert fn.young
    assert check_growth_condition(fn, GrowthParams(1, 1)).passed


def test_psi_condition_examples():
    for p in (1.5, 2, 3):
        assert check_psi_condition(power(p), PsiParams(power(p), 0, 1)).passed
    assert check_psi_condition(power(2), PsiParams(identity(), 1, 1)).passed
    rep = check_psi_condition(identity(), PsiParams(power(2), 0, 1))
    assert not rep.passed


def test_constants_exact():
    assert constants_AB(4) == (Fraction(32, 3), Fraction(16, 3))
    assert sum(constants_AB(4)) == 16
    assert constants_AB(3) == (Fraction(27, 2), Fraction(9, 2))
    A, B = constants_AB(2)
    assert math.isinf(A) and B == 4
    with pytest.raises(InvalidR):
        constants_AB(1.5)


def test_chaining_constant_examples():
    assert chaining_constant_K(1, 1, 4, 1) == 16
    assert chaining_constant_K(0, 1, 2, 1) == 4
    assert chaining_constant_K(1, 1, 4, 0) == 0
    with pytest.raises(InvalidR):
        chaining_constant_K(1, 1, 2, 1)


def test_A_plus_B_minimised_at_four():
    grid = np.linspace(2.01, 30, 3000)
    vals = [coefficient(1, 1, R) for R in grid]
    assert min(vals) >= 16 - 1e-12
    # A + B collapses to 2R^2/(R-2)
    assert np.allclose(vals, 2 * grid ** 2 / (grid - 2), rtol=1e-12)
    assert coefficient(1, 1, 4) == 16


def test_power_constants_p2():
    pc = power_constants(2)
    assert pc.R == pytest.approx(2 + (math.sqrt(5) + 1) / 2, rel=1e-15)
    assert pc.a == pytest.approx(0.5 * 5 ** -0.25, rel=1e-15)
    assert pc.b == pytest.approx(0.5 * 5 ** 0.25, rel=1e-15)
    assert pc.kcoef == pytest.approx(5 ** 1.25, rel=1e-14)


def test_power_constants_p1_limit():
    assert tuple(power_constants(1)) == (2.0, 0.0, 1.0, 4.0)
    # the formulas approach the limit as p -> 1
    pc = power_constants(1 + 1e-7)
    assert pc.R == pytest.approx(2, abs=1e-3) and pc.kcoef == pytest.approx(4, abs=1e-3)


@pytest.mark.parametrize("p", SWEEP)
def test_power_constants_identity_and_membership(p):
    pc = power_constants(p)
    assert pc.a * float(constants_AB(pc.R)[0]) + pc.b * float(constants_AB(pc.R)[1]) == pytest.approx(
        pc.kcoef, rel=1e-9)
    assert power_membership_value(p, pc.a, pc.b) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", SWEEP)
def test_power_constants_minimal(p):
    # on the membership boundary b is determined by a; minimise over a, R
    q = p / (p - 1)

    def best_for(R):
        A, B = (float(x) for x in constants_AB(R))
        f = lambda la: math.exp(la) * A + (math.exp(la) * q) ** (-p / q) / p * B
        return minimize_scalar(f, bounds=(-30, 30), method="bounded", options={"xatol": 1e-12}).fun

    res = minimize_scalar(best_for, bounds=(2 + 1e-9, 20), method="bounded", options={"xatol": 1e-12})
    kc = power_constants(p).kcoef
    assert res.fun >= kc * (1 - 1e-6)
    assert res.fun == pytest.approx(kc, rel=1e-6)


def test_membership_examples():
    assert power_membership_criterion(2, 1, 1)
    assert not power_membership_criterion(2, 0.1, 0.1)
    assert power_membership_value(2, 0.1, 0.1) == pytest.approx(0.2)
    assert power_membership_criterion(1, 0, 1)
    assert not power_membership_criterion(1, 5, 0.5)
    with pytest.raises(DomainError):
        power_constants(0.9)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 8), st.floats(0.01, 3), st.floats(0.01, 3))
def test_membership_matches_growth_grid(p, a, b):
    # the closed-form criterion agrees with the grid check away from the boundary
    v = power_membership_value(p, a, b)
    if abs(v - 1) < 0.05:
        return
    rep = check_growth_condition(power(p), GrowthParams(a, b))
    assert rep.passed == (v >= 1)
