#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Runs conv2d forward/backward and maxpool2 at a few representative sizes,
checks the backends agree numerically, and prints a timing table.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from voxelflow.numerics import _npkernels

try:
    from voxelflow.numerics import _ckernels
except ImportError:
    _ckernels = None

CASES = [
    # (label, N, Cin, Cout, H, W, k, stride, pad)
    ("tiny 16x16", 8, 1, 4, 16, 16, 3, 1, 1),
    ("mid 32x32", 8, 8, 16, 32, 32, 3, 1, 1),
    ("wide 64x64", 4, 4, 8, 64, 64, 3, 1, 1),
    ("strided", 8, 8, 16, 32, 32, 3, 2, 1),
]


def timeit(fn, repeats):
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_case(label, n, cin, cout, h, w, k, stride, pad, repeats):
    rng = np.random.RandomState(0)
    x = rng.randn(n, cin, h, w).astype(np.float32)
    wt = rng.randn(cout, cin, k, k).astype(np.float32)
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    dy = rng.randn(n, cout, ho, wo).astype(np.float32)

    results = {}
    for name, impl in backends():
        fwd = timeit(lambda: impl.conv2d_forward(x, wt, stride, pad), repeats)
        bwd = timeit(lambda: impl.conv2d_backward(dy, x, wt, stride, pad), repeats)
        ph, pw = h - h % 2, w - w % 2
        px = np.ascontiguousarray(x[:, :, :ph, :pw])
        pool = timeit(lambda: impl.maxpool2_forward(px), repeats)
        results[name] = (fwd, bwd, pool)

    if len(results) == 2:
        y_np = _npkernels.conv2d_forward(x, wt, stride, pad)
        y_c = _ckernels.conv2d_forward(x, wt, stride, pad)
        assert np.allclose(y_np, y_c, atol=1e-3), f"{label}: backends disagree"

    return results


def backends():
    yield "python", _npkernels
    if _ckernels is not None:
        yield "compiled", _ckernels


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels unavailable; timing the numpy fallback only\n")

    header = f"{'case':<12} {'backend':<10} {'conv fwd':>12} {'conv bwd':>12} {'maxpool':>12}"
    print(header)
    print("-" * len(header))
    for case in CASES:
        results = bench_case(*case, repeats=args.repeats)
        for name, (fwd, bwd, pool) in results.items():
            print(f"{case[0]:<12} {name:<10} {fwd * 1e6:>10.1f}us {bwd * 1e6:>10.1f}us {pool * 1e6:>10.1f}us")
        if len(results) == 2:
            f_ratio = results["python"][0] / results["compiled"][0]
            b_ratio = results["python"][1] / results["compiled"][1]
            print(f"{'':<12} {'speedup':<10} {f_ratio:>11.2f}x {b_ratio:>11.2f}x")
        print()


if __name__ == "__main__":
    main()
