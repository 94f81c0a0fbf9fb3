"""Backend switch for the hot loops.

Set ``CHAINKIT_BACKEND=numpy`` to force the pure-numpy path. Otherwise the
numba kernels are used when numba imports cleanly.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import _kernels_numpy

log = logging.getLogger(__name__)


def _select_backend():
    wanted = os.environ.get("CHAINKIT_BACKEND", "numba").strip().lower()
    if wanted == "numpy":
        return "numpy", _kernels_numpy
    if wanted != "numba":
        log.warning("unknown CHAINKIT_BACKEND=%r, using numba if available", wanted)
    try:
        from . import _kernels_numba
    except ImportError:  # numba missing or broken
        log.info("numba unavailable, falling back to numpy kernels")
        return "numpy", _kernels_numpy
    return "numba", _kernels_numba


BACKEND, _impl = _select_backend()


def triangle_witness(dist: np.ndarray, tol: float):
    i, j, k, excess = _impl.triangle_witness(dist, float(tol))
    if i < 0:
        return None
    return int(i), int(j), int(k), float(excess)


def ball_profile(dist: np.ndarray, w: np.ndarray):
    """Per-row sorted distances and cumulative ball masses (stable order)."""
    return _impl.ball_profile(dist, w)


def first_reach(sorted_d: np.ndarray, cum_mass: np.ndarray, threshold: float) -> np.ndarray:
    return _impl.first_reach(sorted_d, cum_mass, float(threshold))


def lipschitz_excess(dist: np.ndarray, radii: np.ndarray):
    exc, level, s, t = _impl.lipschitz_excess(dist, np.ascontiguousarray(radii))
    return float(exc), int(level), int(s), int(t)


def assemble_nu(dist: np.ndarray, w: np.ndarray, radii: np.ndarray, rpow: np.ndarray):
    level_nu, total = _impl.assemble_nu(dist, w, np.ascontiguousarray(radii), rpow)
    return level_nu, float(total)


def power_energy(F: np.ndarray, dist: np.ndarray, nu: np.ndarray, p: float) -> np.ndarray:
    return _impl.power_energy(np.ascontiguousarray(F, dtype=float), dist, nu, float(p))


def row_range(X: np.ndarray) -> np.ndarray:
    return _impl.row_range(np.ascontiguousarray(X, dtype=float))
