"""Benchmark the compiled lattice kernel against the pure-numpy fallback.

Both backends must produce bit-identical trajectories; this script checks
that on every workload while timing them. Run from the repository root:

    python benchmarks/bench_kernels.py [--steps 2000] [--repeats 3]
"""

import argparse
import time

import numpy as np

from pedflow import _kernels_py
from pedflow.model import VelocityParams

try:
    from pedflow import _kernels
except ImportError:
    _kernels = None


WORKLOADS = [
    # (label, cells, fill fraction): sparse red-light block vs dense mixed traffic
    ("redlight-like N=1400 sparse", 1400, 0.03),
    ("mixed-like   N=450  dense", 450, 0.30),
    ("oracle-like  N=100  dense", 100, 0.25),
]


def run_backend(advance, sp, sm, uniforms, ptab, chunk=512):
    sp = sp.copy()
    sm = sm.copy()
    scratch_p = np.empty(sp.shape[0], np.int8)
    scratch_m = np.empty(sp.shape[0], np.int8)
    start = time.perf_counter()
    for lo in range(0, uniforms.shape[0], chunk):
        advance(sp, sm, uniforms[lo : lo + chunk], ptab, scratch_p, scratch_m)
    return time.perf_counter() - start, sp, sm


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled kernel not available; run pip install -e . first")
        return 1

    v = VelocityParams(0.8, 0.4, 0.4, 0.2)
    ptab = 0.04 * v.as_array()
    rng = np.random.default_rng(2024)

    print(f"{'workload':<30} {'cython':>10} {'numpy':>10} {'speedup':>9}  identical")
    for label, n, fill in WORKLOADS:
        sp = (rng.random(n) < fill).astype(np.int8)
        sm = (rng.random(n) < fill).astype(np.int8)
        uniforms = rng.random((args.steps, 2, n))

        t_cy = min(
            run_backend(_kernels.ca_advance, sp, sm, uniforms, ptab)[0]
            for _ in range(args.repeats)
        )
        t_py = min(
            run_backend(_kernels_py.ca_advance, sp, sm, uniforms, ptab)[0]
            for _ in range(args.repeats)
        )
        _, cy_sp, cy_sm = run_backend(_kernels.ca_advance, sp, sm, uniforms, ptab)
        _, py_sp, py_sm = run_backend(_kernels_py.ca_advance, sp, sm, uniforms, ptab)
        same = np.array_equal(cy_sp, py_sp) and np.array_equal(cy_sm, py_sm)

        rate_cy = args.steps * n / t_cy / 1e6
        rate_py = args.steps * n / t_py / 1e6
        print(
            f"{label:<30} {rate_cy:>7.1f} M/s {rate_py:>7.1f} M/s {t_py / t_cy:>8.1f}x  {same}"
        )
        if not same:
            print("BACKEND MISMATCH - trajectories diverged")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
