"""Finite metric spaces, full-support probability measures, test families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import kernels
from .errors import (
    AsymmetricDistance,
    InvalidMeasure,
    InvalidSpec,
    NegativeDistance,
    NonFiniteDistance,
    NonZeroDiagonal,
    NotSquare,
    TriangleViolation,
    ZeroOffDiagonal,
)

MEASURE_TOL = 1e-12
# triangle inequality slack, relative to the diameter
TRIANGLE_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A validated finite metric space.

    Build through :func:`build_metric_space`; the constructor does not check
    anything. ``coords`` is an optional embedding kept by generators whose
    points live in R^d (used by the Gaussian ``embed-euclidean`` model).
    """

    dist: np.ndarray
    labels: tuple[str, ...] | None = None
    coords: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return diameter(self)

    def scaled(self, factor: float) -> "MetricSpace":
        coords = None if self.coords is None else _frozen(self.coords * factor)
        return MetricSpace(_frozen(self.dist * factor), self.labels, coords)

    def subspace(self, points: Sequence[int]) -> "MetricSpace":
        idx = np.asarray(points, dtype=int)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        coords = None if self.coords is None else _frozen(self.coords[idx])
        return MetricSpace(_frozen(self.dist[np.ix_(idx, idx)]), labels, coords)


@dataclass(frozen=True, eq=False)
class ProbMeasure:
    """Strictly positive weights summing to one."""

    w: np.ndarray

    @property
    def n(self) -> int:
        return self.w.shape[0]


def build_metric_space(dist, labels: Sequence[str] | None = None, coords=None) -> MetricSpace:
    """Validate ``dist`` and wrap it as a :class:`MetricSpace`.

    Raises
    ------
    NotSquare, NonFiniteDistance, NegativeDistance, AsymmetricDistance,
    ZeroOffDiagonal, TriangleViolation
        The latter four carry a ``witness`` attribute with offending indices.
    """
    d = np.array(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
        raise NotSquare(f"distance array must be n x n with n >= 1, got shape {d.shape}")
    n = d.shape[0]
    if not np.all(np.isfinite(d)):
        raise NonFiniteDistance("distances must be finite")
    neg = np.argwhere(d < 0)
    if neg.size:
        raise NegativeDistance(*map(int, neg[0]))
    asym = np.argwhere(d != d.T)
    if asym.size:
        raise AsymmetricDistance(*map(int, asym[0]))
    diag = np.flatnonzero(np.diag(d) != 0)
    if diag.size:
        raise NonZeroDiagonal(int(diag[0]))
    zero = np.argwhere((d == 0) & ~np.eye(n, dtype=bool))
    if zero.size:
        raise ZeroOffDiagonal(*map(int, zero[0]))
    tol = TRIANGLE_RTOL * float(d.max())
    hit = kernels.triangle_witness(d, tol)
    if hit is not None:
        raise TriangleViolation(*hit)
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise NotSquare(f"{len(labels)} labels for {n} points")
    if coords is not None:
        coords = _frozen(np.asarray(coords, dtype=float).reshape(n, -1))
    return MetricSpace(_frozen(d), labels, coords)


def build_measure(w, n: int | None = None) -> ProbMeasure:
    """Validate weights; sums within 1e-12 of one are renormalised."""
    w = np.array(w, dtype=float).ravel()
    if n is not None and w.shape[0] != n:
        raise InvalidMeasure(f"measure has {w.shape[0]} weights, space has {n} points")
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise InvalidMeasure("weights must be finite and nonempty")
    if np.any(w <= 0):
        raise InvalidMeasure(f"weight at point {int(np.argmax(w <= 0))} is not positive (full support required)")
    total = float(w.sum())
    if abs(total - 1.0) > MEASURE_TOL:
        raise InvalidMeasure(f"weights sum to {total!r}, not 1")
    return ProbMeasure(_frozen(w / total))


def uniform_measure(n: int) -> ProbMeasure:
    return ProbMeasure(_frozen(np.full(n, 1.0 / n)))


def diameter(space: MetricSpace) -> float:
    return float(space.dist.max()) if space.n > 1 else 0.0


def ball_mass(space: MetricSpace, measure: ProbMeasure, x: int, eps: float) -> float:
    """m(B(x, eps)) for the closed ball B(x, eps) = {y : d(x, y) <= eps}."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return float(measure.w[space.dist[x] <= eps].sum())


# ---------------------------------------------------------------------------
# generated families
# ---------------------------------------------------------------------------

FAMILY_KINDS = ("path", "grid2d", "ultrametric-tree", "random-euclidean", "explicit")


@dataclass(frozen=True)
class SpaceFamilySpec:
    """Recipe for a test space.

    ``params`` by kind (defaults in brackets):

    * path: ``n``, ``step`` [1.0], ``gaps`` ("uniform" | "random")
    * grid2d: ``rows``, ``cols``, ``step`` [1.0]; l1 graph distance
    * ultrametric-tree: ``depth``, ``branching``, ``ratio`` [2.0],
      ``scale`` [1.0], ``jitter`` [0.0, must be < 1 - 1/ratio]
    * random-euclidean: ``n``, ``dim`` [2], ``scale`` [1.0]
    * explicit: ``dist``

    Every kind accepts ``measure``: "uniform" (default), "dirichlet", or an
    explicit weight list.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"kind": self.kind, **dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SpaceFamilySpec":
        data = dict(data)
        try:
            kind = data.pop("kind")
        except KeyError:
            raise InvalidSpec("family spec needs a 'kind'") from None
        seed = int(data.pop("seed", 0))
        return cls(kind, data, seed)


def _require(params, key, cast=float, minimum=None):
    if key not in params:
        raise InvalidSpec(f"missing parameter {key!r}")
    try:
        val = cast(params[key])
    except (TypeError, ValueError):
        raise InvalidSpec(f"parameter {key!r} has bad value {params[key]!r}") from None
    if minimum is not None and val < minimum:
        raise InvalidSpec(f"parameter {key!r} must be >= {minimum}")
    return val


def _path(params, rng):
    n = _require(params, "n", int, 1)
    step = float(params.get("step", 1.0))
    if step <= 0:
        raise InvalidSpec("step must be positive")
    gaps = params.get("gaps", "uniform")
    if gaps == "uniform":
        pos = step * np.arange(n, dtype=float)
    elif gaps == "random":
        pos = np.concatenate([[0.0], np.cumsum(step * rng.uniform(0.2, 1.8, n - 1))])
    else:
        raise InvalidSpec(f"unknown gaps mode {gaps!r}")
    return np.abs(pos[:, None] - pos[None, :]), pos[:, None]


def _grid2d(params, rng):
    rows = _require(params, "rows", int, 1)
    cols = _require(params, "cols", int, 1)
    step = float(params.get("step", 1.0))
    if step <= 0:
        raise InvalidSpec("step must be positive")
    ij = np.array([(i, j) for i in range(rows) for j in range(cols)], dtype=float)
    d = step * (np.abs(ij[:, None, 0] - ij[None, :, 0]) + np.abs(ij[:, None, 1] - ij[None, :, 1]))
    return d, step * ij


def _ultrametric(params, rng):
    depth = _require(params, "depth", int, 0)
    branching = _require(params, "branching", int, 2)
    ratio = float(params.get("ratio", 2.0))
    scale = float(params.get("scale", 1.0))
    jitter = float(params.get("jitter", 0.0))
    if ratio < 1 or scale <= 0:
        raise InvalidSpec("ultrametric-tree needs ratio >= 1 and scale > 0")
    if jitter and not 0 <= jitter < 1 - 1 / ratio:
        raise InvalidSpec("jitter must lie in [0, 1 - 1/ratio) to keep heights monotone")
    n = branching ** depth
    # digits[x, level] = branch taken at that level, most significant first
    digits = np.array([[(x // branching ** (depth - 1 - lv)) % branching for lv in range(depth)]
                       for x in range(n)], dtype=int).reshape(n, depth)
    # height of every internal node at each level, jittered but below the parent
    heights = {}
    for lv in range(depth):
        h_level = scale * ratio ** (depth - 1 - lv)
        for prefix in {tuple(row[:lv]) for row in digits}:
            heights[prefix] = h_level * (1.0 - jitter * rng.uniform())
    d = np.zeros((n, n))
    for x in range(n):
        for y in range(x + 1, n):
            lv = int(np.argmax(digits[x] != digits[y]))
            d[x, y] = d[y, x] = heights[tuple(digits[x, :lv])]
    return d, None


def _random_euclidean(params, rng):
    n = _require(params, "n", int, 1)
    dim = int(params.get("dim", 2))
    scale = float(params.get("scale", 1.0))
    if dim < 1 or scale <= 0:
        raise InvalidSpec("random-euclidean needs dim >= 1 and scale > 0")
    pts = scale * rng.uniform(size=(n, dim))
    return squareform(pdist(pts)) if n > 1 else np.zeros((1, 1)), pts


def _explicit(params, rng):
    if "dist" not in params:
        raise InvalidSpec("explicit family needs 'dist'")
    return np.asarray(params["dist"], dtype=float), None


_GENERATORS = {
    "path": _path,
    "grid2d": _grid2d,
    "ultrametric-tree": _ultrametric,
    "random-euclidean": _random_euclidean,
    "explicit": _explicit,
}


def generate_space(spec: SpaceFamilySpec) -> tuple[MetricSpace, ProbMeasure]:
    """Deterministically build ``(space, measure)`` from a family spec."""
    try:
        gen = _GENERATORS[spec.kind]
    except KeyError:
        raise InvalidSpec(f"unknown family kind {spec.kind!r}; expected one of {FAMILY_KINDS}") from None
    rng = np.random.default_rng(spec.seed)
    dist, coords = gen(spec.params, rng)
    space = build_metric_space(dist, coords=coords)

    mspec = spec.params.get("measure", "uniform")
    if isinstance(mspec, str):
        if mspec == "uniform":
            measure = uniform_measure(space.n)
        elif mspec == "dirichlet":
            alpha = float(spec.params.get("concentration", 1.0))
            w = rng.dirichlet(np.full(space.n, alpha))
            # keep atoms bounded away from zero so the level count stays modest
            w = np.maximum(w, 1e-3 / space.n)
            measure = ProbMeasure(_frozen(w / w.sum()))
        else:
            raise InvalidSpec(f"unknown measure {mspec!r}")
    else:
        try:
            measure = build_measure(mspec, space.n)
        except InvalidMeasure as exc:
            raise InvalidSpec(str(exc)) from exc
    return space, measure
