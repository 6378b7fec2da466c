"""Pure numpy iteration kernel.

Same contract as the compiled kernel in _kernels.pyx; psadmm.backend
picks between them at import time. Semantics must stay in lockstep with
the compiled version (a parity test compares both to 1e-9), but exact
floating-point equality across the two is not promised because BLAS and
the naive C loops accumulate in different orders.

The Lagrangian and penalized objective are evaluated in U-space using
the precomputed Gramian, matched filter and ||r||^2:

    l(v) = 1/2 (||r||^2 - 2 Re<v, H^H r> + v^H G v)

which keeps the per-iteration trace cost at O(U^2) instead of O(BU).
"""

import numpy as np

# run_iterations status codes (shared with the compiled kernel)
DONE_MAX_ITERS = 0
DONE_TOL = 1
BLOWUP = 2


def _norm2(v):
    return float(np.sum(v.real ** 2 + v.imag ** 2))


def _ell(v, gram_matrix, matched_filter, r_energy):
    quad = float(np.real(np.vdot(v, gram_matrix @ v)))
    lin = float(np.real(np.vdot(v, matched_filter)))
    return 0.5 * (r_energy - 2.0 * lin + quad)


def _penalty(layers, alphas):
    return 0.5 * float(np.sum(alphas * np.sum(layers.real ** 2
                                              + layers.imag ** 2, axis=1)))


def _lagrangian(layers, x0, y, s, gram_matrix, matched_filter, r_energy,
                rho, alphas):
    gap = x0 - s
    coupling = float(np.real(np.vdot(gap, y))) + 0.5 * rho * _norm2(gap)
    return (_ell(x0, gram_matrix, matched_filter, r_energy)
            - _penalty(layers, alphas) + coupling)


def run_iterations(gram_matrix, a_inv, matched_filter, r_energy,
                   layers, x0, y, rho, alphas, weights, denoms,
                   max_iters, residual_tol):
    q_layers, n_users = layers.shape
    layers = layers.copy()
    x0 = x0.copy()
    y = y.copy()
    s = np.tensordot(weights, layers, axes=1)

    lagrangian = np.empty(max_iters)
    penalized = np.empty(max_iters)
    residuals = np.empty(max_iters)
    layer_steps = np.empty((max_iters, q_layers))
    x0_steps = np.empty(max_iters)
    dual_steps = np.empty(max_iters)
    gaps = np.empty(max_iters)
    layers_hist = np.empty((max_iters + 1, q_layers, n_users), dtype=np.complex128)
    x0_hist = np.empty((max_iters + 1, n_users), dtype=np.complex128)
    y_hist = np.empty((max_iters + 1, n_users), dtype=np.complex128)
    layers_hist[0] = layers
    x0_hist[0] = x0
    y_hist[0] = y

    lag_init = _lagrangian(layers, x0, y, s, gram_matrix, matched_filter,
                           r_energy, rho, alphas)
    pen_init = (_ell(s, gram_matrix, matched_filter, r_energy)
                - _penalty(layers, alphas))

    status = DONE_MAX_ITERS
    t = 0
    for t in range(1, max_iters + 1):
        i = t - 1
        x0_old = x0
        y_old = y
        for q in range(q_layers):
            w = weights[q]
            s_minus = s - w * layers[q]
            raw = (w / denoms[q]) * (rho * (x0 - s_minus) + y)
            new = (np.clip(raw.real, -1.0, 1.0)
                   + 1j * np.clip(raw.imag, -1.0, 1.0))
            layer_steps[i, q] = _norm2(new - layers[q])
            layers[q] = new
            s = s_minus + w * new
        x0 = a_inv @ (matched_filter + rho * s - y)
        y = y + rho * (x0 - s)

        x0_steps[i] = _norm2(x0 - x0_old)
        dual_steps[i] = _norm2(y - y_old)
        gaps[i] = _norm2(x0 - s)
        residuals[i] = float(np.sum(layer_steps[i])) + x0_steps[i]
        lagrangian[i] = _lagrangian(layers, x0, y, s, gram_matrix,
                                    matched_filter, r_energy, rho, alphas)
        penalized[i] = (_ell(s, gram_matrix, matched_filter, r_energy)
                        - _penalty(layers, alphas))
        layers_hist[t] = layers
        x0_hist[t] = x0
        y_hist[t] = y

        if not (np.isfinite(residuals[i]) and np.isfinite(lagrangian[i])):
            status = BLOWUP
            break
        if residuals[i] < residual_tol:
            status = DONE_TOL
            break

    n = t
    return (status, n, layers, x0, y,
            lagrangian[:n].copy(), penalized[:n].copy(), residuals[:n].copy(),
            layer_steps[:n].copy(), x0_steps[:n].copy(), dual_steps[:n].copy(),
            gaps[:n].copy(), lag_init, pen_init,
            layers_hist[:n + 1].copy(), x0_hist[:n + 1].copy(),
            y_hist[:n + 1].copy())
