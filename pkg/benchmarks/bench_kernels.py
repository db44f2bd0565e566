"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Sizes match a default
campaign: a 512 x 256 posterior grid and batched delta^2 over 500 Monte
Carlo repetitions of 100 points against a 500-node reference.
"""

import argparse
import timeit

import numpy as np

from qfe import kernels
from qfe.functions import interpolation_plan, trapezoid_weights


def likelihood_case(rng):
    log_p = np.ascontiguousarray(np.log(rng.uniform(0.01, 0.5, size=(4, 512, 256))))
    counts = rng.multinomial(950, [0.25] * 4).astype(float)
    return log_p, counts


def delta2_case(rng, method="linear"):
    sample_xs = np.linspace(0, 3, 100)
    ref_xs = np.linspace(0, 3, 500)
    lo, hi, t = interpolation_plan(sample_xs, ref_xs, method)
    values = np.ascontiguousarray(rng.normal(size=(500, 100)))
    return values, lo, hi, t, np.sin(ref_xs), trapezoid_weights(ref_xs), 3.0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=20)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    cases = {
        "likelihood_surface": ("likelihood_surface", likelihood_case(rng)),
        "delta2_batch": ("delta2_batch", delta2_case(rng)),
    }
    print(f"{'kernel':<20} {'backend':<10} {'ms/call':>10}")
    for name, (attr, inputs) in cases.items():
        timings = {}
        for backend in kernels.BACKENDS:
            fn = getattr(kernels.get_backend(backend), attr)
            best = min(timeit.repeat(lambda: fn(*inputs), repeat=args.repeat, number=args.number))
            timings[backend] = 1e3 * best / args.number
            print(f"{name:<20} {backend:<10} {timings[backend]:>10.3f}")
        if len(timings) == 2:
            print(f"{name:<20} {'speedup':<10} {timings['python'] / timings['compiled']:>9.2f}x")


if __name__ == "__main__":
    main()
