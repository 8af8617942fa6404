"""Timing comparison of the compiled and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed
on a few representative sizes; the table reports the best-of-N wall
time per call and the native speedup. The numpy fallback must always be
available; the native column reads "missing" when the extension is not
built.
"""

import argparse
import time

import numpy as np

from depthfuse._kernels import _numpy_impl

try:
    from depthfuse._kernels import _native
except ImportError:
    _native = None


def best_of(fn, args, repeats, min_time=0.05):
    """Best wall time of ``fn(*args)`` over ``repeats`` timed batches."""
    # Calibrate the batch size so one batch is long enough to time.
    calls = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(calls):
            fn(*args)
        elapsed = time.perf_counter() - t0
        if elapsed >= min_time or calls >= 1 << 16:
            break
        calls *= 2
    best = elapsed / calls
    for _ in range(repeats - 1):
        t0 = time.perf_counter()
        for _ in range(calls):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / calls)
    return best


def make_cases(rng):
    cases = []
    for size in (128, 512):
        arr = rng.uniform(0.0, 1.0, size=(size, size))
        cases.append((f"box_mean {size}x{size} r=8", "box_mean", (arr, 8)))
    for size in (128, 512):
        arr = rng.uniform(0.0, 1.0, size=(size, size))
        cases.append(
            (f"resize {size}->{2 * size}", "resize_bilinear", (arr, 2 * size, 2 * size))
        )
    for size in (128, 512):
        arr = rng.uniform(0.0, 1.0, size=(size, size))
        fx = rng.normal(0.0, 1.5, size=(size, size))
        fy = rng.normal(0.0, 1.5, size=(size, size))
        cases.append((f"warp {size}x{size}", "warp_bilinear", (arr, fx, fy)))
    for size, search in ((64, 4), (128, 4)):
        a = rng.uniform(0.0, 1.0, size=(size, size))
        b = np.roll(a, 2, axis=1)
        cases.append(
            (f"block_match {size}x{size} s={search}", "block_match", (a, b, 3, search))
        )
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3, help="timed batches per case")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = make_cases(rng)

    name_w = max(len(name) for name, _, _ in cases)
    print(f"{'case':<{name_w}}  {'numpy':>10}  {'native':>10}  {'speedup':>7}")
    for name, kernel, call_args in cases:
        numpy_time = best_of(getattr(_numpy_impl, kernel), call_args, args.repeats)
        if _native is None:
            print(f"{name:<{name_w}}  {numpy_time * 1e3:9.3f}ms  {'missing':>10}  {'-':>7}")
            continue
        native_time = best_of(getattr(_native, kernel), call_args, args.repeats)
        ratio = numpy_time / native_time
        print(
            f"{name:<{name_w}}  {numpy_time * 1e3:9.3f}ms  "
            f"{native_time * 1e3:9.3f}ms  {ratio:6.2f}x"
        )


if __name__ == "__main__":
    main()
