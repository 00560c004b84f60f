"""Benchmark the numba-jitted kernels against their pure-numpy twins.

Run: python benchmarks/bench_kernels.py
The same comparison can be forced package-wide with LANESHIELD_NUMBA=0.
"""
import time

import numpy as np

from laneshield import _kernels, constant_mlp
from laneshield.constants import DEFAULTS
from laneshield.verifier import _embedding, _net_pack, root_box

if not _kernels.HAVE_NUMBA:
    raise SystemExit("numba is not installed; nothing to compare")


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_euler():
    n_sub = 200_000

    def make():
        x = np.array([0.0, 60.0])
        v = np.array([35.0, 20.0])
        a = np.array([-3.0, -5.0])
        return x, v, a

    def jit():
        x, v, a = make()
        _kernels._euler_run_jit(x, v, a, 1e-4, n_sub, 40.0, 5.0)

    def plain():
        x, v, a = make()
        _kernels._euler_run_np(x, v, a, 1e-4, n_sub, 40.0, 5.0)

    jit()  # warm-up compile
    return "euler_run (2 cars x 200k substeps)", timeit(jit), timeit(plain)


def bench_two_phase():
    n = 200_000
    rng = np.random.default_rng(0)
    ve = rng.uniform(0, 40, n)
    vo = rng.uniform(0, 40, n)
    gap = rng.uniform(5, 300, n)
    ae = rng.uniform(-5, 5, n)
    args = (gap, vo, np.full(n, -5.0), np.full(n, -5.0),
            np.zeros(n), ve, ae, np.full(n, -3.0))

    def jit():
        _kernels._two_phase_min_gap_jit(*args, 1.0, 40.0, 30.0)

    def plain():
        _kernels._two_phase_min_gap_np(*args, 1.0, 40.0, 30.0)

    jit()
    return f"two_phase_min_gap ({n} rollouts)", timeit(jit), timeit(plain)


def bench_frontier():
    n = 100_000
    rng = np.random.default_rng(1)
    m = constant_mlp((0.0, 0.0, 1.0), input_dim=10)
    net = _net_pack(m)
    emb = _embedding(m, 2)
    root = root_box(2)
    centers = rng.uniform(root.lo, root.hi, (n, 4))
    half = rng.uniform(0.001, 0.05, (n, 4))
    lo = np.maximum(centers - half, root.lo)
    hi = np.minimum(centers + half, root.hi)
    c = DEFAULTS
    consts = (c.T, c.L, c.V, c.Amin, c.Amax, c.Bmin, c.Bmax)
    active = np.array([False, True, True, True])

    def run(fn):
        verdict = np.empty(n, dtype=np.int8)
        split_dim = np.empty(n, dtype=np.int32)
        cand = np.empty(n, dtype=np.int8)
        fn(lo, hi, *net, *emb, active, *(float(v) for v in consts), 1e-3, 2,
           verdict, split_dim, cand)

    run(_kernels._frontier_jit)  # warm-up compile
    return (f"frontier_step ({n} boxes)",
            timeit(lambda: run(_kernels._frontier_jit)),
            timeit(lambda: run(_kernels._frontier_np)))


def main():
    rows = [bench_euler(), bench_two_phase(), bench_frontier()]
    print(f"{'kernel':<42} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, t_jit, t_np in rows:
        print(f"{name:<42} {t_jit * 1e3:>8.1f}ms {t_np * 1e3:>8.1f}ms {t_np / t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
