"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--points M]

For a few representative criteria, a random patch is built and the per-point
evaluation and constrained grid argmin are timed on both backends; the
results are checked to agree before timing.
"""

import argparse
import time

import numpy as np

from qcsmooth import kernels
from qcsmooth.criteria import criterion
from qcsmooth.generators import random_patch
from qcsmooth.qcp import _grid, domain_bounds

CASES = [("min-angle", "tri"), ("aspect-ratio", "tri"), ("quad-width", "quad"),
         ("solid-angle-interior", "tet"), ("dihedral-fixed-axis", "tet")]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=64, help="grid points per axis")
    args = ap.parse_args(argv)
    if "compiled" not in kernels.BACKENDS:
        raise SystemExit("compiled kernels are not built; reinstall with Cython available")

    rng = np.random.default_rng(0)
    print(f"{'case':28s} {'kernel':12s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, kind in CASES:
        prog = random_patch(rng, kind).program([criterion(name)])
        lo, hi = domain_bounds(prog.domain)
        n = args.points if prog.dimension == 2 else max(8, args.points // 4)
        X = _grid(lo, hi, n)
        A, b = prog.A, prog.b
        slack = 1e-9 * prog.scale
        calls = {
            "eval_costs": lambda: kernels.eval_costs(prog.codes, prog.weights, prog.fixed, X),
            "grid_argmin": lambda: kernels.grid_argmin(prog.codes, prog.weights, prog.fixed,
                                                       X, A, b, slack),
        }
        for label, fn in calls.items():
            timings, results = {}, {}
            for backend in ("python", "compiled"):
                kernels.use_backend(backend)
                results[backend] = fn()
                timings[backend] = best_of(fn, args.repeat)
            a, c = results["python"], results["compiled"]
            if label == "eval_costs":
                assert np.allclose(a, c, rtol=1e-9, atol=1e-12, equal_nan=True)
            else:
                assert a[0] == c[0]
            py, co = timings["python"] * 1e3, timings["compiled"] * 1e3
            print(f"{name + '/' + kind:28s} {label:12s} {py:10.2f} {co:12.2f} {py / co:7.1f}x")
    kernels.use_backend("compiled")


if __name__ == "__main__":
    main()
