"""Timing comparison of the jitted kernels against their numpy twins.

Run as a script:

    python3 benchmarks/bench_kernels.py

Each kernel is warmed first so compilation time never lands in a
measurement.  For a package-wide fallback run (everything routed through
the numpy twins, including the fitters), set OPTINFORMED_NO_NUMBA=1 and
rerun; in that mode both columns time the same code.
"""

import time

import numpy as np

from optinformed import kernels

N = 100_000
REPEATS = 30


def best_of(fn, *args):
    fn(*args)  # warmup: first call may compile
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(1234)
    eps = rng.standard_normal(N)
    x = kernels.arma11_path(eps, 1e-4, -0.5, 0.3, 0.0, 0.0)

    pairs = [
        ("arma_residuals", kernels.arma_residuals, kernels.arma_residuals_numpy,
         (x, 1e-4, -0.5, 0.3)),
        ("css_objective_grad", kernels.css_objective_grad,
         kernels.css_objective_grad_numpy, (x, -0.5, 0.3)),
        ("ar1_path", kernels.ar1_path, kernels.ar1_path_numpy,
         (eps, 0.6, 0.1, 0.0)),
        ("arma11_path", kernels.arma11_path, kernels.arma11_path_numpy,
         (eps, 1e-4, -0.5, 0.3, 0.0, 0.0)),
    ]

    mode = "numba" if kernels.NUMBA_ENABLED else f"fallback ({kernels.ENV_FLAG} set)"
    print(f"kernel timings, n={N}, best of {REPEATS}, active path: {mode}")
    print(f"{'kernel':<22}{'jit':>12}{'numpy':>12}{'speedup':>10}")
    for name, jit_fn, np_fn, args in pairs:
        t_jit = best_of(jit_fn, *args)
        t_np = best_of(np_fn, *args)
        print(f"{name:<22}{t_jit * 1e3:>10.3f}ms{t_np * 1e3:>10.3f}ms"
              f"{t_np / t_jit:>9.1f}x")

    # fit-level number for scale: one 10^4-point estimation end to end
    y = x[:10_000]
    t_fit = best_of(kernels.fit_css, y, 1.0e-7, 60)
    print(f"\nfit_css on 10_000 points: {t_fit * 1e3:.2f}ms")


if __name__ == "__main__":
    main()
