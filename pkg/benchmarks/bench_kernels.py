"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 20 40 80 160] [--repeat 5]

Both backends are imported directly, so the CHAINKIT_BACKEND flag does not
matter here. The first numba call (compilation) is excluded.
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.spatial.distance import pdist, squareform

from chainkit import _kernels_numpy as npk

try:
    from chainkit import _kernels_numba as nbk
except ImportError:  # numba missing
    nbk = None


def _inputs(n, rng):
    pts = rng.uniform(size=(n, 2))
    dist = squareform(pdist(pts))
    w = rng.dirichlet(np.ones(n))
    levels = 8
    radii = np.sort(rng.uniform(0, dist.max(), (levels, n)), axis=0)[::-1].copy()
    rpow = 4.0 ** np.arange(levels)
    nu = rng.uniform(size=(n, n))
    nu /= nu.sum()
    F = rng.standard_normal((256, n))
    return {
        "triangle_witness": (dist, 1e-12),
        "ball_profile": (dist, w),
        "lipschitz_excess": (dist, radii),
        "assemble_nu": (dist, w, radii, rpow),
        "power_energy": (F, dist, nu, 2.0),
        "row_range": (rng.standard_normal((4096, n)),),
    }


def _best(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80, 160])
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in ns.sizes:
        for name, args in _inputs(n, rng).items():
            t_np = _best(getattr(npk, name), args, ns.repeat)
            if nbk is None:
                print(f"{name:<18}{n:>6}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}")
                continue
            jit = getattr(nbk, name)
            jit(*args)  # compile
            t_nb = _best(jit, args, ns.repeat)
            print(f"{name:<18}{n:>6}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
