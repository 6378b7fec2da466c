# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled iteration kernel.

Contract and trace semantics match _kernels_py.run_iterations exactly;
keep the two in lockstep. The whole loop runs nogil so the harness can
parallelize trials with plain threads.
"""

import numpy as np

from libc.math cimport isfinite

DONE_MAX_ITERS = 0
DONE_TOL = 1
BLOWUP = 2

cdef int _DONE_MAX = 0
cdef int _DONE_TOL = 1
cdef int _BLOWUP = 2

cdef double complex J = 1j


cdef inline double _clip1(double t) nogil:
    if t > 1.0:
        return 1.0
    if t < -1.0:
        return -1.0
    return t


cdef double _ell(double complex[:, ::1] g, double complex[::1] hr,
                 double r_energy, double complex[::1] v) nogil:
    # 1/2 (||r||^2 - 2 Re<v, hr> + v^H G v)
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i, j
    cdef double quad = 0.0, lin = 0.0
    cdef double complex acc
    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + g[i, j] * v[j]
        quad += (v[i].conjugate() * acc).real
        lin += (v[i].conjugate() * hr[i]).real
    return 0.5 * (r_energy - 2.0 * lin + quad)


cdef double _penalty(double complex[:, ::1] layers, double[::1] alphas) nogil:
    cdef Py_ssize_t q, u
    cdef double out = 0.0, acc
    for q in range(layers.shape[0]):
        acc = 0.0
        for u in range(layers.shape[1]):
            acc += (layers[q, u].real * layers[q, u].real
                    + layers[q, u].imag * layers[q, u].imag)
        out += alphas[q] * acc
    return 0.5 * out


cdef double _lagrangian(double complex[:, ::1] layers,
                        double complex[::1] x0, double complex[::1] y,
                        double complex[::1] s,
                        double complex[:, ::1] g, double complex[::1] hr,
                        double r_energy, double rho,
                        double[::1] alphas) nogil:
    cdef Py_ssize_t u
    cdef double coupling = 0.0, gap2 = 0.0
    cdef double complex gap
    for u in range(x0.shape[0]):
        gap = x0[u] - s[u]
        coupling += (gap.conjugate() * y[u]).real
        gap2 += gap.real * gap.real + gap.imag * gap.imag
    return (_ell(g, hr, r_energy, x0) - _penalty(layers, alphas)
            + coupling + 0.5 * rho * gap2)


def run_iterations(double complex[:, ::1] gram_matrix,
                   double complex[:, ::1] a_inv,
                   double complex[::1] matched_filter,
                   double r_energy,
                   layers_in, x0_in, y_in,
                   double rho,
                   double[::1] alphas,
                   double[::1] weights,
                   double[::1] denoms,
                   int max_iters,
                   double residual_tol):
    layers_np = np.array(layers_in, dtype=np.complex128, order="C", copy=True)
    x0_np = np.array(x0_in, dtype=np.complex128, copy=True)
    y_np = np.array(y_in, dtype=np.complex128, copy=True)
    cdef Py_ssize_t Q = layers_np.shape[0]
    cdef Py_ssize_t U = layers_np.shape[1]

    lagrangian_np = np.empty(max_iters)
    penalized_np = np.empty(max_iters)
    residuals_np = np.empty(max_iters)
    layer_steps_np = np.empty((max_iters, Q))
    x0_steps_np = np.empty(max_iters)
    dual_steps_np = np.empty(max_iters)
    gaps_np = np.empty(max_iters)
    layers_hist_np = np.empty((max_iters + 1, Q, U), dtype=np.complex128)
    x0_hist_np = np.empty((max_iters + 1, U), dtype=np.complex128)
    y_hist_np = np.empty((max_iters + 1, U), dtype=np.complex128)
    s_np = np.empty(U, dtype=np.complex128)
    rhs_np = np.empty(U, dtype=np.complex128)
    x0_new_np = np.empty(U, dtype=np.complex128)

    cdef double complex[:, ::1] layers = layers_np
    cdef double complex[::1] x0 = x0_np
    cdef double complex[::1] y = y_np
    cdef double[::1] lagrangian = lagrangian_np
    cdef double[::1] penalized = penalized_np
    cdef double[::1] residuals = residuals_np
    cdef double[:, ::1] layer_steps = layer_steps_np
    cdef double[::1] x0_steps = x0_steps_np
    cdef double[::1] dual_steps = dual_steps_np
    cdef double[::1] gaps = gaps_np
    cdef double complex[:, :, ::1] layers_hist = layers_hist_np
    cdef double complex[:, ::1] x0_hist = x0_hist_np
    cdef double complex[:, ::1] y_hist = y_hist_np
    cdef double complex[::1] s = s_np
    cdef double complex[::1] rhs = rhs_np
    cdef double complex[::1] x0_new = x0_new_np

    cdef int status = _DONE_MAX
    cdef int t = 0
    cdef Py_ssize_t i, q, u, j
    cdef double w, coef, step_acc, x0_step, dual_step, gap2, res
    cdef double lag_init, pen_init
    cdef double complex s_mu, raw, newv, d, acc, yd, gap

    with nogil:
        for u in range(U):
            acc = 0
            for q in range(Q):
                acc = acc + weights[q] * layers[q, u]
            s[u] = acc
            x0_hist[0, u] = x0[u]
            y_hist[0, u] = y[u]
        for q in range(Q):
            for u in range(U):
                layers_hist[0, q, u] = layers[q, u]

        lag_init = _lagrangian(layers, x0, y, s, gram_matrix, matched_filter,
                               r_energy, rho, alphas)
        pen_init = (_ell(gram_matrix, matched_filter, r_energy, s)
                    - _penalty(layers, alphas))

        for t in range(1, max_iters + 1):
            i = t - 1
            for q in range(Q):
                w = weights[q]
                coef = w / denoms[q]
                step_acc = 0.0
                for u in range(U):
                    s_mu = s[u] - w * layers[q, u]
                    raw = coef * (rho * (x0[u] - s_mu) + y[u])
                    newv = _clip1(raw.real) + J * _clip1(raw.imag)
                    d = newv - layers[q, u]
                    step_acc += d.real * d.real + d.imag * d.imag
                    layers[q, u] = newv
                    s[u] = s_mu + w * newv
                layer_steps[i, q] = step_acc

            for u in range(U):
                rhs[u] = matched_filter[u] + rho * s[u] - y[u]
            x0_step = 0.0
            for u in range(U):
                acc = 0
                for j in range(U):
                    acc = acc + a_inv[u, j] * rhs[j]
                x0_new[u] = acc
                d = acc - x0[u]
                x0_step += d.real * d.real + d.imag * d.imag

            dual_step = 0.0
            gap2 = 0.0
            for u in range(U):
                x0[u] = x0_new[u]
                gap = x0[u] - s[u]
                yd = rho * gap
                y[u] = y[u] + yd
                dual_step += yd.real * yd.real + yd.imag * yd.imag
                gap2 += gap.real * gap.real + gap.imag * gap.imag

            res = x0_step
            for q in range(Q):
                res += layer_steps[i, q]
            x0_steps[i] = x0_step
            dual_steps[i] = dual_step
            gaps[i] = gap2
            residuals[i] = res
            lagrangian[i] = _lagrangian(layers, x0, y, s, gram_matrix,
                                        matched_filter, r_energy, rho, alphas)
            penalized[i] = (_ell(gram_matrix, matched_filter, r_energy, s)
                            - _penalty(layers, alphas))
            for q in range(Q):
                for u in range(U):
                    layers_hist[t, q, u] = layers[q, u]
            for u in range(U):
                x0_hist[t, u] = x0[u]
                y_hist[t, u] = y[u]

            if not (isfinite(residuals[i]) and isfinite(lagrangian[i])):
                status = _BLOWUP
                break
            if residuals[i] < residual_tol:
                status = _DONE_TOL
                break

    n = t
    return (status, n, layers_np, x0_np, y_np,
            lagrangian_np[:n].copy(), penalized_np[:n].copy(),
            residuals_np[:n].copy(), layer_steps_np[:n].copy(),
            x0_steps_np[:n].copy(), dual_steps_np[:n].copy(),
            gaps_np[:n].copy(), lag_init, pen_init,
            layers_hist_np[:n + 1].copy(), x0_hist_np[:n + 1].copy(),
            y_hist_np[:n + 1].copy())
