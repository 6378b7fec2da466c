"""Time the compiled iteration kernel against the pure numpy fallback.

Runs the same batch of detection problems through both kernels and
prints a per-backend timing table plus the speedup. The problems are
seeded, so repeated invocations measure the same work.

Usage:
    python benchmarks/bench_backends.py [--repeats N] [--trials N]
"""

import argparse
import time

import numpy as np

from psadmm import backend
from psadmm.detector import DetectorParams, psadmm_detect
from psadmm.modulation import (ChannelInstance, bits_to_layers, noise_sigma,
                               rayleigh_channel, recompose, transmit)
from psadmm.numerics import Unconverged, gram, spectrum_bounds

CASES = (
    #  label            b    u   q  snr_db
    ("128x16 4-QAM", 128, 16, 1, 8.0),
    ("128x32 16-QAM", 128, 32, 2, 16.0),
    ("64x64 16-QAM", 64, 64, 2, 20.0),
)


def make_problems(b, u, q, snr_db, trials, seed):
    rng = np.random.default_rng(seed)
    sigma2 = noise_sigma(snr_db, u, q)
    problems = []
    for _ in range(trials):
        bits = rng.integers(0, 2, size=2 * q * u)
        layers = bits_to_layers(bits, q, u)
        x_true = recompose(layers)
        h = rayleigh_channel(b, u, rng)
        instance = transmit(h, x_true, sigma2, rng)
        problems.append(instance)
    return problems


def tuned_params(problems, q):
    try:
        bounds = spectrum_bounds(gram(problems[0].channel))
    except Unconverged as exc:
        bounds = exc.bounds  # partial estimates are fine for tuning
    rho = 1.5 * np.sqrt(2.0) * bounds.lambda_max
    alphas = tuple(0.5 * 4.0 ** qi * rho for qi in range(q))
    return DetectorParams(rho=rho, alphas=alphas)


def time_backend(name, problems, params, q, repeats):
    # Warm up once so import/JIT costs stay out of the numbers.
    psadmm_detect(problems[0], params, q, backend=name)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for instance in problems:
            psadmm_detect(instance, params, q, backend=name)
        best = min(best, time.perf_counter() - t0)
    return best / len(problems)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats per case, best is kept")
    parser.add_argument("--trials", type=int, default=50,
                        help="problems per case")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    names = backend.available()
    print(f"backends: {', '.join(names)}")
    if "compiled" not in names:
        print("note: compiled kernel unavailable, timing pure only")
    header = f"{'case':<16}" + "".join(f"{n:>14}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, b, u, q, snr_db in CASES:
        problems = make_problems(b, u, q, snr_db, args.trials, args.seed)
        params = tuned_params(problems, q)
        per = {n: time_backend(n, problems, params, q, args.repeats)
               for n in names}
        row = f"{label:<16}"
        for n in names:
            row += f"{per[n] * 1e6:>11.1f} us"
        if "compiled" in per and "pure" in per:
            row += f"{per['pure'] / per['compiled']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
