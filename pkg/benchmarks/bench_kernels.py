"""Time the tanh jet kernels (numpy reference vs numba) and one training epoch.

    python3 benchmarks/bench_kernels.py [--points 2000] [--width 64] [--repeat 50]

Run twice with MGPINN_DISABLE_NUMBA=1 / unset to compare whole-epoch cost
under each backend; the kernel table always shows both.
"""

import argparse
import time

import numpy as np

from mgpinn import _kernels
from mgpinn.autodiff import JetLayout
from mgpinn.problems import get_problem
from mgpinn.sampling import build_samples
from mgpinn.trainer import GradeConfig, Stage2Config, run_ts_mgdl


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(n, w, repeat):
    rng = np.random.default_rng(0)
    pairs = _kernels.as_pairs(JetLayout((0, 1), (1,)).pairs)  # value, u_t, u_x, u_xx
    z = rng.normal(size=(4, n, w))
    g = rng.normal(size=(4, n, w))
    rows = []
    impls = {"numpy": _kernels.numpy_kernels()}
    try:
        impls["numba"] = _kernels.numba_kernels()
    except ImportError:
        pass
    ref_a = impls["numpy"][0](z, pairs)
    for name, (fwd, bwd) in impls.items():
        a = fwd(z, pairs)
        bwd(z, a, g, pairs)  # compile
        err = float(np.max(np.abs(a - ref_a)))
        tf = best_of(lambda: fwd(z, pairs), repeat)
        tb = best_of(lambda: bwd(z, a, g, pairs), repeat)
        rows.append((name, tf, tb, err))
    return rows


def bench_epoch(n):
    prob = get_problem("burgers1d")
    samples = build_samples(prob, n, 120, 80, 0)
    grades = [GradeConfig([2, 64, 64, 1], 1e-3, 1e-4, 1), GradeConfig([64, 64, 64, 1], 3e-4, 1e-4, 1)]
    run_ts_mgdl(prob, samples, grades, Stage2Config(3, 3e-4, 1e-4, 1))  # warm caches and jit
    t0 = time.perf_counter()
    _, reps = run_ts_mgdl(prob, samples, grades, Stage2Config(3, 3e-4, 1e-4, 50))
    return reps[-1].duration / 50, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()

    print(f"active backend: {_kernels.BACKEND}")
    print(f"{'kernel':<8}{'forward ms':>12}{'backward ms':>13}{'max |diff|':>12}")
    rows = bench_kernels(args.points, args.width, args.repeat)
    for name, tf, tb, err in rows:
        print(f"{name:<8}{tf * 1e3:>12.3f}{tb * 1e3:>13.3f}{err:>12.1e}")
    if len(rows) == 2:
        print(f"numba speedup: forward {rows[0][1] / rows[1][1]:.1f}x, backward {rows[0][2] / rows[1][2]:.1f}x")
    per_epoch, _ = bench_epoch(args.points)
    print(f"stage-2 epoch ({args.points} collocation points, {_kernels.BACKEND}): {per_epoch * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
