"""Time the compiled kernels against the numpy fallback.

Runs each hot kernel on workloads shaped like the ones the networks
produce (28x28 conv feature maps, dense 256x256 weight matrices) and
prints median wall times for both backends plus the speedup. A full
Jacobi SVD driven to convergence is included as the end-to-end number.

Usage:
    python benchmarks/bench_kernels.py [--batch 64] [--repeats 20]
"""

import argparse
import sys
import time

import numpy as np

from condlab.kernels import _fallback

try:
    from condlab.kernels import _core
except ImportError:
    _core = None


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def svd_to_convergence(impl, a, tol=1e-12, max_sweeps=60):
    work = a.copy()
    for _ in range(max_sweeps):
        if impl.jacobi_sweep(work, None, tol) <= tol:
            break
    return work


def build_cases(batch, rng):
    x = rng.standard_normal((batch, 16, 28, 28))
    cols = rng.standard_normal((batch * 28 * 28, 9 * 16))
    _, idx = _fallback.maxpool2_forward(x)
    gout = rng.standard_normal((batch, 16, 14, 14))
    dense = rng.standard_normal((256, 256))
    small = rng.standard_normal((64, 64))
    return [
        ("im2col 3x3 (%dx16x28x28)" % batch,
         lambda impl: impl.im2col(x, 3, 3)),
        ("col2im 3x3 (%dx16x28x28)" % batch,
         lambda impl: impl.col2im(cols, batch, 16, 28, 28, 3, 3)),
        ("maxpool2 forward (%dx16x28x28)" % batch,
         lambda impl: impl.maxpool2_forward(x)),
        ("maxpool2 backward (%dx16x14x14)" % batch,
         lambda impl: impl.maxpool2_backward(gout, idx, 28, 28)),
        ("jacobi sweep (256x256)",
         lambda impl: impl.jacobi_sweep(dense.copy(), None, 1e-12)),
        ("jacobi SVD to 1e-12 (64x64)",
         lambda impl: svd_to_convergence(impl, small)),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare compiled kernels with the numpy fallback")
    parser.add_argument("--batch", type=int, default=64,
                        help="image batch size for the conv kernels")
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed repetitions per case (median reported)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if args.batch < 1 or args.repeats < 1:
        parser.error("--batch and --repeats must be positive")

    rng = np.random.default_rng(args.seed)
    cases = build_cases(args.batch, rng)

    if _core is None:
        print("compiled extension not built; timing the fallback only")
    header = "%-36s %12s %12s %9s" % ("kernel", "python (ms)", "cython (ms)", "speedup")
    print(header)
    print("-" * len(header))
    for name, call in cases:
        call(_fallback)  # warm up caches before timing
        t_py = median_time(lambda: call(_fallback), args.repeats)
        if _core is None:
            print("%-36s %12.3f %12s %9s" % (name, t_py * 1e3, "-", "-"))
            continue
        call(_core)
        t_cy = median_time(lambda: call(_core), args.repeats)
        print("%-36s %12.3f %12.3f %8.1fx" % (
            name, t_py * 1e3, t_cy * 1e3, t_py / t_cy))
    return 0


if __name__ == "__main__":
    sys.exit(main())
