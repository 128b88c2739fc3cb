"""Benchmark the JIT kernels against their pure-numpy fallbacks.

Run with numba active (default) to get both timings in one process:

    python3 benchmarks/bench_kernels.py

or force the numpy path everywhere with CEBEAM_DISABLE_NUMBA=1 (then the two
columns coincide).  Sizes mirror the detection acceptance workload.
"""

import time

import numpy as np

from cebeam import _accel
from cebeam.quantizer import lloyd_max_codebook


def timeit(fn, *args, repeats=5):
    fn(*args)                      # warm-up / JIT compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"numba active: {_accel.using_numba()}")

    q = lloyd_max_codebook(3)
    x = rng.standard_normal(8192 * 32 * 16 * 2)
    rows = []

    t_np = timeit(_accel.quantize_values_numpy, x, q.thresholds, q.levels)
    t_jit = timeit(_accel.quantize_values, x, q.thresholds, q.levels)
    same = np.array_equal(_accel.quantize_values(x, q.thresholds, q.levels),
                          _accel.quantize_values_numpy(x, q.thresholds, q.levels))
    rows.append(("quantize_values (8.4M reals)", t_np, t_jit, same))

    Y = (rng.standard_normal((4096, 32, 16)) + 1j * rng.standard_normal((4096, 32, 16)))
    H = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    M = H + H.conj().T
    t_np = timeit(_accel.lrt_statistics_numpy, Y, M)
    t_jit = timeit(_accel.lrt_statistics, Y, M)
    close = np.allclose(_accel.lrt_statistics(Y, M), _accel.lrt_statistics_numpy(Y, M),
                        rtol=1e-10)
    rows.append(("lrt_statistics (4096 trials)", t_np, t_jit, close))

    print(f"{'kernel':34s} {'numpy':>10s} {'active':>10s} {'speedup':>8s}  agree")
    for name, t_np, t_jit, agree in rows:
        print(f"{name:34s} {t_np * 1e3:8.2f}ms {t_jit * 1e3:8.2f}ms "
              f"{t_np / t_jit:7.2f}x  {agree}")


if __name__ == "__main__":
    main()
