"""Shared builders for the test suite.

Tests construct their inputs through the public modulation primitives
(rather than harness.make_instance) so harness bugs cannot mask detector
bugs, and vice versa. The "conforming" parameter rule used throughout
(rho = 1.5 * sqrt(2) * lambda_max, alpha_q = 4^(q-1) * rho / 2) keeps
every strict-convexity margin and the spectral step condition satisfied
with slack, which is what the convergence certificates require.
"""

import math

import numpy as np

from psadmm import (DetectorParams, SpectrumBounds, Unconverged,
                    bits_to_layers, gram, noise_sigma, rayleigh_channel,
                    recompose, spectrum_bounds, transmit)


def certified_spectrum(g, rel_tolerance=1e-8, max_iters=20000):
    """Spectrum bounds with the PSD floor applied when lambda_min stalls.

    Power iteration for lambda_min can stall on near-degenerate spectra;
    0 is always a valid lower bound for a PSD Gramian, so the estimate is
    floored instead of failing. A stalled lambda_max pass is a real error.
    """
    try:
        return spectrum_bounds(g, rel_tolerance=rel_tolerance,
                               max_iters=max_iters)
    except Unconverged as exc:
        if exc.which != "lambda_min":
            raise
        return SpectrumBounds(lambda_min=0.0,
                              lambda_max=exc.bounds.lambda_max,
                              rel_tolerance=exc.bounds.rel_tolerance,
                              iterations=exc.bounds.iterations)


def random_bits(rng, q_layers, n_users):
    return rng.integers(0, 2, size=2 * q_layers * n_users)


def draw_instance(rng, n_rx, n_users, q_layers, snr_db):
    """One random detection problem: (bits, layer stack, channel instance)."""
    bits = random_bits(rng, q_layers, n_users)
    layers = bits_to_layers(bits, q_layers, n_users)
    x_true = recompose(layers)
    h = rayleigh_channel(n_rx, n_users, rng)
    sigma2 = noise_sigma(snr_db, n_users, q_layers)
    return bits, layers, transmit(h, x_true, sigma2, rng)


def conforming_params(g, q_layers, max_iters=2000, residual_tol=1e-5):
    """(params, bounds) satisfying every convergence condition with slack."""
    bounds = certified_spectrum(g)
    rho = 1.5 * math.sqrt(2.0) * bounds.lambda_max
    alphas = tuple(0.5 * 4.0 ** q * rho for q in range(q_layers))
    params = DetectorParams(rho=rho, alphas=alphas, max_iters=max_iters,
                            residual_tol=residual_tol)
    return params, bounds


def random_channel(rng, n_rx, n_users):
    return rayleigh_channel(n_rx, n_users, rng)


def complex_normal(rng, shape, scale=1.0):
    z = rng.standard_normal(shape + (2,))
    return scale * (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)
