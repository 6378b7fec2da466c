"""Runtime convergence certificates and cost accounting.

The detector's convergence theory yields three inequalities that every
conforming run must satisfy along its trajectory:

  1. dual steps are dominated by x0 steps:
         ||y(k+1) - y(k)||^2 <= lambda_max^2 ||x0(k+1) - x0(k)||^2
  2. the augmented Lagrangian descends by at least the weighted squared
     step norms:
         L(k+1) - L(k) <= - sum_q (gamma_q / 2) ||dx_q||^2
                          - (gamma_0 / 2 - lambda_max^2 / rho) ||dx_0||^2
  3. the Lagrangian dominates the penalized objective of the layer
     recomposition:
         L(state) >= 1/2 ||r - H s||^2 - sum_q (alpha_q / 2) ||x_q||^2

All three derivations lean on the dual identity y = -H^H (H x0 - r),
which the first x0/y update pair establishes. The identity does not
hold at the initial state, so the first recorded transition is excluded
from checks 1-2 and the initial state from check 3; everything after
that is fair game and is checked with a relative tolerance of
1e-9 * (1 + |lhs| + |rhs|). Eigenvalue estimates enter through their
certified one-sided bounds so estimate error cannot flag a spurious
violation.
"""

from dataclasses import dataclass

import numpy as np

from .modulation import recompose
from .numerics import gram, spectrum_bounds

REL_TOL = 1e-9


def augmented_lagrangian(state, h, r, params):
    """Full-space evaluation of the augmented Lagrangian at a state.

    Deliberately computed from (H, r) directly, term by term, as an
    independent cross-check of the U-space values the kernels record.
    """
    s = recompose(state.layers)
    gap = state.x0 - s
    misfit = r - h @ state.x0
    ell = 0.5 * float(np.real(np.vdot(misfit, misfit)))
    pen = 0.5 * sum(a * float(np.real(np.vdot(xq, xq)))
                    for a, xq in zip(params.alphas, state.layers))
    coupling = float(np.real(np.vdot(gap, state.y)))
    quad = 0.5 * params.rho * float(np.real(np.vdot(gap, gap)))
    return ell - pen + coupling + quad


def penalized_objective(layers, h, r, alphas):
    """1/2 ||r - H s||^2 - sum_q (alpha_q / 2) ||x_q||^2 at a layer stack."""
    s = recompose(layers)
    misfit = r - h @ s
    ell = 0.5 * float(np.real(np.vdot(misfit, misfit)))
    pen = 0.5 * sum(a * float(np.real(np.vdot(xq, xq)))
                    for a, xq in zip(alphas, layers))
    return ell - pen


def _tol(lhs, rhs):
    return REL_TOL * (1.0 + np.abs(lhs) + np.abs(rhs))


@dataclass
class LemmaCheck:
    """Per-iteration outcome of one certificate inequality.

    ok[i] is True where row i passed or was not checked; checked[i] is
    False on rows the inequality's premises exclude (the first recorded
    transition for the dual-identity-based checks). violation[i] is the
    raw positive excess lhs - rhs (0 where satisfied).
    """

    name: str
    ok: np.ndarray
    violation: np.ndarray
    checked: np.ndarray

    @property
    def passed(self):
        return bool(self.ok.all())

    @property
    def worst(self):
        return float(self.violation.max()) if self.violation.size else 0.0

    def failures(self):
        return int(np.count_nonzero(~self.ok))


def _build_check(name, lhs, rhs, first_checked_row):
    """lhs <= rhs + tol on rows >= first_checked_row."""
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    n = lhs.shape[0]
    checked = np.arange(n) >= first_checked_row
    excess = np.maximum(0.0, lhs - rhs)
    ok = ~checked | (lhs <= rhs + _tol(lhs, rhs))
    violation = np.where(checked, excess, 0.0)
    return LemmaCheck(name=name, ok=ok, violation=violation, checked=checked)


def check_lemma1(trace, bounds):
    """Dual-step domination: ||dy||^2 <= lambda_max^2 ||dx0||^2."""
    lam = bounds.lambda_max_upper()
    return _build_check("lemma1", trace.dual_steps,
                        lam * lam * trace.x0_steps, first_checked_row=1)


def check_lemma2(trace, report):
    """Sufficient descent of the recorded augmented Lagrangian."""
    lam_hi = report.bounds.lambda_max_upper()
    gamma0_lo = report.rho + report.bounds.lambda_min_lower()
    coef0 = gamma0_lo / 2.0 - lam_hi ** 2 / report.rho
    gammas = np.asarray(report.gammas, dtype=np.float64)
    n = len(trace)
    prev = np.empty(n)
    prev[0] = trace.lagrangian_initial
    prev[1:] = trace.lagrangian[:-1]
    descent = trace.lagrangian - prev
    budget = -(trace.layer_steps @ (gammas / 2.0) + coef0 * trace.x0_steps)
    return _build_check("lemma2", descent, budget, first_checked_row=1)


def check_lemma3(trace, states, h, r, params, bounds=None):
    """Lagrangian lower bound by the penalized objective, per state.

    states must be the recorded sequence [initial, after iter 1, ...]
    (trace.state_sequence()); the initial state is skipped because the
    dual identity is only established after the first update pair. Both
    sides are recomputed in full space from (H, r), independent of the
    kernel's trace values.
    """
    del bounds  # applicability is judged by the caller via the report
    n = len(trace)
    if len(states) != n + 1:
        raise ValueError(f"expected {n + 1} states for a {n}-row trace, "
                         f"got {len(states)}")
    lhs = np.empty(n)
    rhs = np.empty(n)
    for i in range(n):
        st = states[i + 1]
        rhs[i] = augmented_lagrangian(st, h, r, params)
        lhs[i] = penalized_objective(st.layers, h, r, params.alphas)
    # assert rhs >= lhs, phrased as lhs <= rhs for the shared builder
    return _build_check("lemma3", lhs, rhs, first_checked_row=0)


@dataclass
class CertificateReport:
    """Bundle of the three lemma checks for one detector run.

    applicable is False when the sufficient convergence conditions
    (positive margins and rho > sqrt(2) lambda_max) do not hold, in
    which case failures are reported but carry no weight.
    """

    applicable: bool
    lemma1: LemmaCheck
    lemma2: LemmaCheck
    lemma3: LemmaCheck

    @property
    def checks(self):
        return (self.lemma1, self.lemma2, self.lemma3)

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return sum(c.failures() for c in self.checks)

    def failure_lines(self, prefix=""):
        """One line per failed per-iteration check, for the verify report."""
        lines = []
        for c in self.checks:
            for i in np.flatnonzero(~c.ok):
                lines.append(f"{prefix}{c.name} iteration {i + 1}: "
                             f"violation {c.violation[i]:.6e}")
        return lines


def run_certificates(trace, h, r, params, report):
    """Evaluate all three certificates on a recorded run."""
    states = trace.state_sequence()
    return CertificateReport(
        applicable=report.conforming,
        lemma1=check_lemma1(trace, report.bounds),
        lemma2=check_lemma2(trace, report),
        lemma3=check_lemma3(trace, states, h, r, params))


def certificates_for_run(trace, instance, params, rel_tolerance=1e-8):
    """Convenience wrapper: spectrum, validation report, certificates."""
    from .detector import validate_params
    bounds = spectrum_bounds(gram(instance.channel), rel_tolerance=rel_tolerance)
    report = validate_params(params, bounds)
    return run_certificates(trace, instance.channel, instance.received,
                            params, report), report


def flop_estimate(n_rx, n_users, q_layers, iterations):
    """Complex-multiplication count of one detection.

    One-time work: (1/3) U^3 for the regularized Gramian inverse,
    (1/2) B U^2 for the Gramian product, B U for the matched filter.
    Per-iteration work: U^2 for the x0 matrix-vector product plus Q U
    for the layer sweep. Rounded to the nearest integer at the end.
    """
    b, u, q, k = float(n_rx), float(n_users), float(q_layers), float(iterations)
    total = u ** 3 / 3.0 + 0.5 * b * u ** 2 + b * u + k * (u ** 2 + q * u)
    return int(round(total))
