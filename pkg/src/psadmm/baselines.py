"""Reference detectors: ZF, MMSE, plain box-ADMM, brute-force ML.

All detectors share the hard_decision quantizer and return symbol
vectors in the 4^Q-QAM constellation, so the harness can score any of
them interchangeably. zf/mmse are one-shot linear equalizers; box_admm
is the penalty-sharing detector with every alpha_q = 0 (identical code
path, so the degeneration identity is exact); ml_bruteforce enumerates
the full candidate set and is the optimality oracle at small sizes.
"""

import dataclasses

import numpy as np

from .detector import psadmm_detect
from .modulation import constellation, hard_decision, symbol_energy
from .numerics import HermitianFactorization, factor_regularized, gram

ML_CANDIDATE_CAP = 10 ** 6
_ENUM_CHUNK = 4096


class TooLarge(ValueError):
    """Brute-force candidate count 4^(Q U) exceeds the enumeration cap."""


def zf_detect(instance, q_layers):
    """Zero-forcing: quantized LS solution of H x = r."""
    h = instance.channel
    g = gram(h)
    fact = HermitianFactorization.from_matrix(g)
    x_soft = fact.solve(h.conj().T @ instance.received)
    return hard_decision(x_soft, q_layers)


def mmse_detect(instance, q_layers):
    """LMMSE equalizer: (H^H H + (sigma2 / E_s) I)^(-1) H^H r, quantized.

    With sigma2 = 0 the regularizer vanishes and the output equals
    zero-forcing exactly.
    """
    h = instance.channel
    g = gram(h)
    reg = instance.sigma2 / symbol_energy(q_layers)
    if reg > 0:
        fact = factor_regularized(g, reg)
    else:
        fact = HermitianFactorization.from_matrix(g)
    x_soft = fact.solve(h.conj().T @ instance.received)
    return hard_decision(x_soft, q_layers)


def box_admm_detect(instance, params, q_layers, *, record_states=False,
                    decision="x0", backend=None):
    """Box-constrained ADMM: the penalized detector with all alphas = 0.

    Same signature and return as psadmm_detect; rho, iteration budget,
    tolerance and init come from params, whose alphas are ignored.
    """
    zeroed = dataclasses.replace(params, alphas=(0.0,) * q_layers)
    return psadmm_detect(instance, zeroed, q_layers,
                         record_states=record_states, decision=decision,
                         backend=backend)


def ml_candidate_count(q_layers, n_users):
    return 4 ** (q_layers * n_users)


def ml_bruteforce(instance, q_layers):
    """Exact maximum-likelihood detection by exhaustive enumeration.

    Minimizes ||r - H x||^2 over the full candidate grid. Candidates are
    ordered lexicographically (per-user symbols sorted by (real, imag)
    ascending, first user most significant) and ties keep the earliest
    candidate, so the output is deterministic. Raises TooLarge above
    ML_CANDIDATE_CAP candidates.
    """
    n_users = instance.n_users
    count = ml_candidate_count(q_layers, n_users)
    if count > ML_CANDIDATE_CAP:
        raise TooLarge(
            f"4^(Q U) = {count} candidates exceeds cap {ML_CANDIDATE_CAP}")
    points = constellation(q_layers)
    m = points.shape[0]
    h = instance.channel
    r = instance.received

    best_val = np.inf
    best = None
    # Mixed-radix enumeration, chunked so the candidate matrix stays small.
    for start in range(0, count, _ENUM_CHUNK):
        idx = np.arange(start, min(start + _ENUM_CHUNK, count))
        digits = np.empty((idx.shape[0], n_users), dtype=np.int64)
        rem = idx.copy()
        for u in range(n_users - 1, -1, -1):
            digits[:, u] = rem % m
            rem //= m
        cand = points[digits]  # (chunk, U)
        misfit = r[None, :] - cand @ h.T
        vals = np.sum(misfit.real ** 2 + misfit.imag ** 2, axis=1)
        j = int(np.argmin(vals))
        # strict < keeps the earliest candidate on exact ties across chunks
        if vals[j] < best_val:
            best_val = float(vals[j])
            best = cand[j].copy()
    return best
