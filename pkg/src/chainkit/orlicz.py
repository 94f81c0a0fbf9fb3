"""Orlicz/Young functions, the growth class G_{a,b}, and the chaining constants.

An :class:`OrliczFn` is an increasing continuous phi on [0, inf) with
phi(0) = 0. It evaluates and inverts elementwise on numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InvalidR, InvalidSpec

INVERSE_RTOL = 1e-12
CONDITION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OrliczFn:
    """An increasing continuous function with phi(0) = 0.

    Use the constructors :func:`identity`, :func:`power`, :func:`piecewise`
    and :func:`custom` rather than instantiating directly.
    """

    kind: str
    young: bool
    p: float | None = None
    knots: np.ndarray | None = None
    _phi: Callable | None = field(default=None, repr=False)
    _inv: Callable | None = field(default=None, repr=False)
    name: str = ""

    def __call__(self, x):
        return evaluate(self, x)

    def inverse(self, y):
        return inverse(self, y)

    def to_spec(self) -> dict:
        if self.kind == "identity":
            return {"kind": "identity"}
        if self.kind == "power":
            return {"kind": "power", "p": self.p}
        if self.kind == "piecewise":
            return {"kind": "piecewise", "knots": self.knots.tolist()}
        return {"kind": "custom", "name": self.name}

    def describe(self) -> str:
        if self.kind == "power":
            return f"power(p={self.p:g})"
        return self.name or self.kind


def identity() -> OrliczFn:
    return OrliczFn("identity", young=True, p=1.0, name="identity")


def power(p: float) -> OrliczFn:
    """phi(x) = x**p, p >= 1 (Young for every such p)."""
    p = float(p)
    if not p >= 1:
        raise DomainError(f"power Orlicz function needs p >= 1, got {p}")
    if p == 1.0:
        return identity()
    return OrliczFn("power", young=True, p=p, name=f"power{p:g}")


def piecewise(knots: Sequence[Sequence[float]]) -> OrliczFn:
    """Piecewise-linear phi through ``knots``, extended with the last slope.

    The first knot must be (0, 0); x and y must both be strictly increasing.
    The Young flag is set when the slopes are nondecreasing.
    """
    k = np.array(knots, dtype=float)
    if k.ndim != 2 or k.shape[1] != 2 or k.shape[0] < 2:
        raise InvalidSpec("piecewise knots must be a list of at least two [x, y] pairs")
    if k[0, 0] != 0 or k[0, 1] != 0:
        raise InvalidSpec("piecewise knots must start at (0, 0)")
    if np.any(np.diff(k[:, 0]) <= 0) or np.any(np.diff(k[:, 1]) <= 0):
        raise InvalidSpec("piecewise knots must be strictly increasing in x and y")
    slopes = np.diff(k[:, 1]) / np.diff(k[:, 0])
    convex = bool(np.all(np.diff(slopes) >= 0))
    k.setflags(write=False)
    return OrliczFn("piecewise", young=convex, knots=k, name="piecewise")


def custom(phi: Callable, inv: Callable | None = None, *, young: bool = False,
           name: str = "custom", grid: np.ndarray | None = None) -> OrliczFn:
    """Wrap a user function; without ``inv`` inversion falls back to bisection.

    phi(0) = 0 and strict increase are checked on ``grid`` (geometric on
    [1e-6, 1e6] by default). phi must be unbounded for the radii to vanish.
    """
    if grid is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 400)])
    vals = np.asarray(phi(grid), dtype=float)
    if vals[0] != 0:
        raise InvalidSpec("custom phi must satisfy phi(0) = 0")
    if np.any(np.diff(vals) <= 0):
        raise InvalidSpec("custom phi is not strictly increasing on the sampling grid")
    return OrliczFn("custom", young=young, _phi=phi, _inv=inv, name=name)


def evaluate(fn: OrliczFn, x):
    """phi(x) for x >= 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("Orlicz functions are defined on [0, inf)")
    if fn.kind == "identity":
        out = arr.copy()
    elif fn.kind == "power":
        out = arr * arr if fn.p == 2.0 else arr ** fn.p
    elif fn.kind == "piecewise":
        out = _pw_eval(fn.knots[:, 0], fn.knots[:, 1], arr)
    else:
        out = np.asarray(fn._phi(arr), dtype=float)
    return float(out) if out.ndim == 0 else out


def inverse(fn: OrliczFn, y):
    """phi^{-1}(y) for y >= 0; closed form where available."""
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0):
        raise DomainError("inverse is defined on [0, inf)")
    if fn.kind == "identity":
        out = arr.copy()
    elif fn.kind == "power":
        out = np.sqrt(arr) if fn.p == 2.0 else arr ** (1.0 / fn.p)
    elif fn.kind == "piecewise":
        out = _pw_eval(fn.knots[:, 1], fn.knots[:, 0], arr)
    elif fn._inv is not None:
        out = np.asarray(fn._inv(arr), dtype=float)
    else:
        out = _bisect_inverse(fn._phi, arr)
    return float(out) if out.ndim == 0 else out


def _pw_eval(xs, ys, t):
    out = np.interp(t, xs, ys)
    slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    beyond = t > xs[-1]
    if np.any(beyond):
        out = np.where(beyond, ys[-1] + slope * (t - xs[-1]), out)
    return out


def _bisect_inverse(phi, y):
    flat = np.atleast_1d(y).astype(float).ravel()
    lo = np.zeros_like(flat)
    hi = np.ones_like(flat)
    # grow the bracket until phi(hi) >= y
    for _ in range(2000):
        short = phi(hi) < flat
        if not np.any(short):
            break
        hi = np.where(short, hi * 2.0, hi)
    else:
        raise DomainError("custom phi appears bounded; cannot invert")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = phi(mid) < flat
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= INVERSE_RTOL * np.maximum(hi, 1e-300)):
            break
    return hi.reshape(np.shape(y))


# ---------------------------------------------------------------------------
# growth conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthParams:
    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise DomainError("growth parameters a, b must be >= 0")


@dataclass(frozen=True, eq=False)
class PsiParams:
    psi: OrliczFn
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise DomainError("alpha, beta must be >= 0")


@dataclass(frozen=True)
class ConditionReport:
    """Result of a grid falsification search.

    ``max_violation`` is the largest value of (lhs - rhs) / max(1, |rhs|)
    seen on the grid and ``witness`` the (x, y) where it occurred. The
    normalisation keeps rounding in large powers from reading as violations.
    """

    name: str
    passed: bool
    max_violation: float
    witness: tuple[float, float]
    grid_shape: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_violation": self.max_violation,
            "witness": list(self.witness),
            "grid_shape": list(self.grid_shape),
        }


def default_x_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 199)])


def default_y_grid(lower: float, upper: float = 1e3) -> np.ndarray:
    return np.geomspace(lower, max(upper, lower), 200)


def _ratio(fn, x, y):
    # phi(xy)/phi(y) on an outer grid; 0/0 = 0
    num = evaluate(fn, np.multiply.outer(x, y))
    den = np.broadcast_to(np.asarray(evaluate(fn, y)), num.shape)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _report(name, lhs, rhs, x, y):
    excess = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
    worst = float(excess[i, j])
    return ConditionReport(name, worst <= CONDITION_TOL, worst, (float(x[i]), float(y[j])),
                           excess.shape)


def check_growth_condition(fn: OrliczFn, params: GrowthParams, x_grid=None, y_grid=None) -> ConditionReport:
    """Search for violations of x <= a + b phi(xy)/phi(y), y >= phi^{-1}(1)."""
    x = default_x_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    y = default_y_grid(inverse(fn, 1.0)) if y_grid is None else np.asarray(y_grid, dtype=float)
    rhs = params.a + params.b * _ratio(fn, x, y)
    return _report("growth", np.broadcast_to(x[:, None], rhs.shape), rhs, x, y)


def check_psi_condition(fn: OrliczFn, psi_params: PsiParams, x_grid=None, y_grid=None) -> ConditionReport:
    """Search for violations of psi(x) <= alpha + beta phi(xy)/phi(y), y > 0.

    The default y grid runs geometrically from 1e-6: at y = 0 itself the
    ratio is 0/0, so the bottom of the range is approached, not sampled.
    """
    x = default_x_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    y = np.geomspace(1e-6, 1e3, 200) if y_grid is None else np.asarray(y_grid, dtype=float)
    lhs = np.asarray(evaluate(psi_params.psi, x))[:, None]
    rhs = psi_params.alpha + psi_params.beta * _ratio(fn, x, y)
    return _report("psi", np.broadcast_to(lhs, rhs.shape), rhs, x, y)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def constants_AB(R):
    """A = R^3 / ((R-1)(R-2)) and B = R^2 / (R-1).

    Exact when ``R`` is an int or Fraction. At R = 2, A is returned as
    ``math.inf``; it may only be combined with a = 0 (see
    :func:`chaining_constant_K`).
    """
    if R < 2:
        raise InvalidR(f"R must be >= 2, got {R}")
    if isinstance(R, int):
        R = Fraction(R)
    B = R ** 2 / (R - 1)
    A = math.inf if R == 2 else R ** 3 / ((R - 1) * (R - 2))
    return A, B


def chaining_constant_K(a: float, b: float, R, S: float):
    """(a A(R) + b B(R)) S with 0 * inf = 0 when a = 0 and R = 2."""
    A, B = constants_AB(R)
    if math.isinf(A):
        if a != 0:
            raise InvalidR("R = 2 makes A infinite; only allowed with a = 0")
        return b * B * S
    return (a * A + b * B) * S


def coefficient(a: float, b: float, R) -> float:
    """The bracket a A(R) + b B(R) (K per unit of S)."""
    return float(chaining_constant_K(a, b, R, 1))


class PowerConstants(NamedTuple):
    R: float
    a: float
    b: float
    kcoef: float


def power_constants(p: float) -> PowerConstants:
    """Optimal (R, a, b) and K/S for phi(x) = x**p.

    p = 1 returns the limit (2, 0, 1, 4).
    """
    p = float(p)
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if p == 1.0:
        return PowerConstants(2.0, 0.0, 1.0, 4.0)
    q = p / (p - 1)
    s = 3 * q - q / p
    R = 2 + (math.sqrt(s) + 1) / q
    a = s ** (-1 / (2 * p)) / q
    b = s ** (1 / (2 * q)) / p
    kcoef = 2 * ((3 * p - 1) / p) * s ** (1 / (2 * q))
    return PowerConstants(R, a, b, kcoef)


def power_membership_value(p: float, a: float, b: float) -> float:
    """(aq)^{1/q} (bp)^{1/p}; phi_p is in G_{a,b} iff this is >= 1."""
    p = float(p)
    if not p > 1:
        raise DomainError("membership value needs p > 1")
    q = p / (p - 1)
    return (a * q) ** (1 / q) * (b * p) ** (1 / p)


def power_membership_criterion(p: float, a: float, b: float) -> bool:
    if a < 0 or b < 0:
        raise DomainError("a, b must be >= 0")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if p == 1:
        # x <= a + b x for all x >= 0
        return b >= 1
    return power_membership_value(p, a, b) >= 1
