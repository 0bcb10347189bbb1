"""Timing comparison of the compiled and pure-numpy kernel backends.

Run directly for both backends (the script re-invokes itself under each
SPARSE_MINIMAX_BACKEND), or with --backend to time just the current one.
Reported numbers are best-of-N wall times after a warmup pass, so numba's
compilation cost never pollutes the table (it is reported separately).
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _best_of(f, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite(n: int, p: int, repeat: int) -> dict:
    import numpy as np

    from sparse_minimax import _kernels
    from sparse_minimax.design import gen_design, make_signal, synthesize
    from sparse_minimax.estimators import (
        LassoConfig,
        SlopeConfig,
        lambda_eps,
        lasso_fit,
        slope_fit,
        slope_lambda_seq,
    )
    from sparse_minimax.rng import SeedSpec

    spec = SeedSpec(1234, 0)
    design = gen_design(n, p, spec)
    signal = make_signal(p, max(2, p // 50), 2.0)
    inst = synthesize(design, signal, 1.0, spec)
    X, y = design.entries, inst.response
    k = signal.k
    lam = lambda_eps(0.1, 1.0, n, p, k)
    seq = slope_lambda_seq(0.1, 1.0, n, p, 0.5)
    r = y - X @ np.zeros(p)
    w = spec.generator(9).standard_normal(p)
    sorted_abs = np.sort(np.abs(spec.generator(10).standard_normal(4 * p)))[::-1].copy()

    t_compile = time.perf_counter()
    _kernels.xt_dot(X, r)
    _kernels.col_sumsq(X)
    _kernels.pava_decreasing(sorted_abs.copy())
    lasso_fit(X, y, LassoConfig(lam=lam))
    slope_fit(X, y, SlopeConfig(lambda_seq=seq))
    t_compile = time.perf_counter() - t_compile

    times = {
        "xt_dot": _best_of(lambda: _kernels.xt_dot(X, r), repeat),
        "col_sumsq": _best_of(lambda: _kernels.col_sumsq(X), repeat),
        "x_dot_dense": _best_of(lambda: _kernels.x_dot_dense(X, w), repeat),
        "pava": _best_of(lambda: _kernels.pava_decreasing(sorted_abs.copy()), repeat),
        "lasso_fit": _best_of(lambda: lasso_fit(X, y, LassoConfig(lam=lam)), repeat),
        "slope_fit": _best_of(lambda: slope_fit(X, y, SlopeConfig(lambda_seq=seq)), repeat),
    }
    return {"backend": _kernels.BACKEND, "warmup_s": t_compile, "times": times}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--p", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--backend", choices=["numba", "numpy"], default=None,
                    help="time one backend in-process instead of comparing both")
    ap.add_argument("--json", action="store_true", help="emit machine-readable results")
    args = ap.parse_args()

    if args.backend is not None:
        os.environ["SPARSE_MINIMAX_BACKEND"] = args.backend
        result = run_suite(args.n, args.p, args.repeat)
        print(json.dumps(result))
        return

    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, SPARSE_MINIMAX_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--backend", backend,
             "--n", str(args.n), "--p", str(args.p), "--repeat", str(args.repeat)],
            capture_output=True, text=True, env=env,
        )
        if proc.returncode != 0:
            print(f"{backend} backend failed:\n{proc.stderr}", file=sys.stderr)
            sys.exit(1)
        results[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    if args.json:
        print(json.dumps(results, indent=2))
        return

    print(f"n={args.n} p={args.p} best of {args.repeat}")
    print(f"numba warmup (compile + first call): {results['numba']['warmup_s']:.2f}s")
    print(f"{'kernel':<12} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, t_np in results["numpy"]["times"].items():
        t_nb = results["numba"]["times"][name]
        print(f"{name:<12} {t_np * 1e3:>9.3f}ms {t_nb * 1e3:>9.3f}ms {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
