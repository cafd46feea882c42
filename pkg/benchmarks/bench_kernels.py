#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy twins.

Runs each hot kernel on realistic shapes and prints median wall time per
call plus the speedup. The numba path needs one warmup call to compile;
compile time is reported separately so it is not mistaken for throughput.

Run from the repo root:

    python3 benchmarks/bench_kernels.py
    TEXSUM_DISABLE_NUMBA=1 python3 benchmarks/bench_kernels.py   # numpy only
"""

import argparse
import statistics
import time

import numpy as np

from texsum import kernels
from texsum.features import dct_basis, zigzag_order


def median_time(fn, args, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--height", type=int, default=480, help="source frame height")
    ap.add_argument("--width", type=int, default=640, help="source frame width")
    ap.add_argument("--codewords", type=int, default=40)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)

    # the DCT kernel sees the half-resolution grayscale frame
    gray = rng.uniform(-128, 127, (args.height // 2, args.width // 2))
    basis = dct_basis(8)
    rows, cols = zigzag_order(8)
    zz_r, zz_c = rows[1:16], cols[1:16]      # DC dropped, 15 kept
    n_blocks = ((gray.shape[0] - 8) // 2 + 1) * ((gray.shape[1] - 8) // 2 + 1)

    X = rng.normal(0, 30, (n_blocks, 15))
    C = rng.normal(0, 30, (args.codewords, 15))
    rgb = rng.integers(0, 256, (args.height, args.width, 3), dtype=np.uint8)

    cases = [
        ("block_dct_features", f"{gray.shape} -> ({n_blocks}, 15)",
         kernels._block_dct_features_numpy, (gray, basis, zz_r, zz_c, 2)),
        ("assign_nearest", f"({n_blocks}, 15) x {args.codewords}",
         kernels._assign_nearest_numpy, (X, C)),
        ("hue_bin_counts", f"{rgb.shape} -> 16 bins",
         kernels._hue_bin_counts_numpy, (rgb, 16)),
    ]

    print(f"backend at import: {kernels.BACKEND}  "
          f"(numba available: {kernels.HAS_NUMBA})")
    print(f"{'kernel':22s} {'shape':26s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")

    for name, shape, numpy_fn, call_args in cases:
        t_np = median_time(numpy_fn, call_args, args.repeats)
        if kernels.HAS_NUMBA:
            numba_fn = getattr(kernels, f"_{name}_numba")
            t0 = time.perf_counter()
            out_nb = numba_fn(*call_args)          # compiles on first call
            compile_s = time.perf_counter() - t0
            out_np = numpy_fn(*call_args)
            ref = out_np[0] if isinstance(out_np, tuple) else out_np
            got = out_nb[0] if isinstance(out_nb, tuple) else out_nb
            assert np.allclose(ref, got, rtol=1e-10, atol=1e-10), name
            t_nb = median_time(numba_fn, call_args, args.repeats)
            print(f"{name:22s} {shape:26s} {t_np * 1e3:9.3f}ms {t_nb * 1e3:9.3f}ms "
                  f"{t_np / t_nb:7.1f}x   (compile {compile_s:.2f}s)")
        else:
            print(f"{name:22s} {shape:26s} {t_np * 1e3:9.3f}ms {'n/a':>10s} {'':>8s}")

    if not kernels.HAS_NUMBA:
        print("numba path unavailable in this process; unset TEXSUM_DISABLE_NUMBA "
              "or install numba to compare.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
