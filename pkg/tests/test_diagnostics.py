"""Convergence certificates and the arithmetic cost model.

The certificate checks are validated in both directions: conforming runs
must pass every inequality, and deliberately tampered traces/states must
trip exactly the check whose premise they break. The recorded trace is
also cross-checked against full-space recomputation from (H, r), which
is independent of the kernels' Gramian-space bookkeeping.
"""

import dataclasses
import math

import numpy as np
import pytest

from conftest import (certified_spectrum, complex_normal, conforming_params,
                      draw_instance)
from psadmm.detector import (DetectorParams, DetectorState, psadmm_detect,
                             residual, validate_params)
from psadmm.diagnostics import (CertificateReport, LemmaCheck,
                                augmented_lagrangian, certificates_for_run,
                                check_lemma1, check_lemma2, check_lemma3,
                                flop_estimate, penalized_objective,
                                run_certificates)
from psadmm.modulation import recompose, transmit
from psadmm.numerics import gram


def _conforming_run(seed=80, n_rx=10, n_users=4, q_layers=2, snr_db=10.0):
    rng = np.random.default_rng(seed)
    _, layers, inst = draw_instance(rng, n_rx, n_users, q_layers, snr_db)
    params, bounds = conforming_params(gram(inst.channel), q_layers)
    report = validate_params(params, bounds)
    _, trace, state = psadmm_detect(inst, params, q_layers, record_states=True)
    return inst, layers, params, report, trace, state


# ------------------------------------------------------------ functionals

def test_augmented_lagrangian_matches_term_by_term_oracle():
    rng = np.random.default_rng(81)
    h = complex_normal(rng, (7, 3))
    r = complex_normal(rng, (7,))
    params = DetectorParams(rho=5.0, alphas=(1.5, 4.0))
    layers = complex_normal(rng, (2, 3), scale=0.7)
    x0 = complex_normal(rng, (3,))
    y = complex_normal(rng, (3,))
    state = DetectorState(layers=layers, x0=x0, y=y, k=3)

    s = 1.0 * layers[0] + 2.0 * layers[1]
    misfit = sum(abs(r[i] - sum(h[i, j] * x0[j] for j in range(3))) ** 2
                 for i in range(7))
    penalty = sum(params.alphas[q] * sum(abs(layers[q, j]) ** 2
                                         for j in range(3)) for q in range(2))
    gap = x0 - s
    coupling = sum((np.conj(gap[j]) * y[j]).real for j in range(3))
    quad = params.rho * sum(abs(gap[j]) ** 2 for j in range(3))
    expected = 0.5 * misfit - 0.5 * penalty + coupling + 0.5 * quad
    got = augmented_lagrangian(state, h, r, params)
    assert got == pytest.approx(expected, rel=1e-12)


def test_augmented_lagrangian_trivial_cases():
    h = np.eye(2, dtype=np.complex128)
    params = DetectorParams(rho=3.0, alphas=(1.0,))
    zero = DetectorState(layers=np.zeros((1, 2), dtype=np.complex128),
                         x0=np.zeros(2, dtype=np.complex128),
                         y=np.zeros(2, dtype=np.complex128), k=0)
    assert augmented_lagrangian(zero, h, np.zeros(2, np.complex128),
                                params) == 0.0
    r = np.array([3.0 + 4.0j, 0.0j])
    assert augmented_lagrangian(zero, h, r, params) == 12.5  # ||r||^2 / 2


def test_penalized_objective_at_truth_noiseless():
    rng = np.random.default_rng(82)
    _, layers, inst = draw_instance(rng, 9, 4, 2, float("inf"))
    alphas = (2.0, 6.0)
    # exact misfit 0; ||x_q||^2 = 2U for +-1+-1j layers
    expected = -sum(a * inst.n_users for a in alphas)
    got = penalized_objective(layers, inst.channel, inst.received, alphas)
    assert got == pytest.approx(expected, rel=1e-12)


def test_zero_gap_state_collapses_lagrangian_to_penalized():
    rng = np.random.default_rng(83)
    h = complex_normal(rng, (6, 3))
    r = complex_normal(rng, (6,))
    params = DetectorParams(rho=7.0, alphas=(2.0,))
    layers = complex_normal(rng, (1, 3), scale=0.5)
    state = DetectorState(layers=layers, x0=recompose(layers),
                          y=complex_normal(rng, (3,)), k=1)
    lag = augmented_lagrangian(state, h, r, params)
    pen = penalized_objective(layers, h, r, params.alphas)
    assert lag == pen  # identical arithmetic when x0 - s == 0 exactly


# ---------------------------------------------------- trace vs full space

def test_trace_rows_match_full_space_recomputation():
    inst, _, params, _, trace, _ = _conforming_run()
    h, r = inst.channel, inst.received
    states = trace.state_sequence()
    assert trace.lagrangian_initial == pytest.approx(
        augmented_lagrangian(states[0], h, r, params), rel=1e-9, abs=1e-9)
    assert trace.penalized_initial == pytest.approx(
        penalized_objective(states[0].layers, h, r, params.alphas),
        rel=1e-9, abs=1e-9)
    for i, st in enumerate(states[1:]):
        scale = 1.0 + abs(trace.lagrangian[i])
        assert abs(trace.lagrangian[i]
                   - augmented_lagrangian(st, h, r, params)) <= 1e-8 * scale
        assert abs(trace.penalized[i]
                   - penalized_objective(st.layers, h, r, params.alphas)
                   ) <= 1e-8 * scale
    for i, (prev, cur) in enumerate(zip(states[:-1], states[1:])):
        assert trace.residuals[i] == pytest.approx(residual(prev, cur),
                                                   rel=1e-9, abs=1e-12)
        gap = cur.x0 - recompose(cur.layers)
        assert trace.primal_gaps[i] == pytest.approx(
            float(np.sum(np.abs(gap) ** 2)), rel=1e-9, abs=1e-12)
        dy = cur.y - prev.y
        assert trace.dual_steps[i] == pytest.approx(
            float(np.sum(np.abs(dy) ** 2)), rel=1e-9, abs=1e-12)
        dx0 = cur.x0 - prev.x0
        assert trace.x0_steps[i] == pytest.approx(
            float(np.sum(np.abs(dx0) ** 2)), rel=1e-9, abs=1e-12)


# ------------------------------------------------------------ the lemmas

def test_certificates_pass_on_conforming_runs():
    for seed in (84, 85, 86):
        inst, _, params, report, trace, _ = _conforming_run(seed=seed)
        assert report.conforming
        cert = run_certificates(trace, inst.channel, inst.received, params,
                                report)
        assert cert.applicable
        assert cert.all_passed
        assert cert.failures() == 0
        assert cert.failure_lines() == []


def test_lemma1_gating_excludes_only_the_first_transition():
    """Row 0 precedes the dual identity and is excluded by design; with a
    zeros start and rho > lambda_max the raw inequality genuinely fails
    there, which is exactly why the gate exists."""
    inst, _, params, report, trace, _ = _conforming_run(seed=87)
    check = check_lemma1(trace, report.bounds)
    assert not check.checked[0]
    assert bool(check.checked[1:].all())
    assert check.passed
    lam2 = report.bounds.lambda_max_upper() ** 2
    raw_excess_row0 = trace.dual_steps[0] - lam2 * trace.x0_steps[0]
    assert raw_excess_row0 > 0.0
    assert check.violation[0] == 0.0  # not charged on the ungated row


def test_lemma1_flags_tampered_dual_steps():
    inst, _, params, report, trace, _ = _conforming_run(seed=88)
    trace.dual_steps[2] *= 1e6
    check = check_lemma1(trace, report.bounds)
    assert not check.passed
    assert not check.ok[2]
    assert check.failures() == 1
    assert check.worst > 0.0


def test_lemma2_flags_raised_lagrangian():
    inst, _, params, report, trace, _ = _conforming_run(seed=89)
    assert check_lemma2(trace, report).passed
    # force a genuine ascent at row 1 (the budget there is <= 0)
    trace.lagrangian[1] = trace.lagrangian[0] + 1.0
    check = check_lemma2(trace, report)
    assert not check.ok[1]
    assert not check.passed


def test_lemma3_flags_tampered_state():
    inst, _, params, report, trace, _ = _conforming_run(seed=90)
    states = trace.state_sequence()
    assert check_lemma3(trace, states, inst.channel, inst.received,
                        params).passed
    victim = states[3]
    gap = victim.x0 - recompose(victim.layers)
    gap_norm2 = float(np.sum(np.abs(gap) ** 2))
    assert gap_norm2 > 0.0
    states[3] = DetectorState(layers=victim.layers, x0=victim.x0,
                              y=-1e9 / gap_norm2 * gap, k=victim.k)
    check = check_lemma3(trace, states, inst.channel, inst.received, params)
    assert not check.ok[2]  # states[3] backs trace row 2
    assert not check.passed


def test_lemma3_checks_every_recorded_row():
    inst, _, params, report, trace, _ = _conforming_run(seed=91)
    states = trace.state_sequence()
    check = check_lemma3(trace, states, inst.channel, inst.received, params)
    assert bool(check.checked.all())
    with pytest.raises(ValueError, match="states"):
        check_lemma3(trace, states[:-1], inst.channel, inst.received, params)


def test_certificate_report_applicability():
    rng = np.random.default_rng(92)
    _, _, inst = draw_instance(rng, 8, 3, 1, 10.0)
    params = DetectorParams(rho=1.0, alphas=(0.5,))  # rho far below spectrum
    _, trace, _ = psadmm_detect(inst, params, 1, record_states=True)
    cert, report = certificates_for_run(trace, inst, params)
    assert not report.conforming
    assert not cert.applicable
    assert isinstance(cert, CertificateReport)
    assert len(cert.checks) == 3


def test_certificates_for_run_conforming_path():
    rng = np.random.default_rng(93)
    _, _, inst = draw_instance(rng, 10, 3, 1, 10.0)
    params, _ = conforming_params(gram(inst.channel), 1)
    _, trace, _ = psadmm_detect(inst, params, 1, record_states=True)
    cert, report = certificates_for_run(trace, inst, params)
    assert report.conforming
    assert cert.applicable
    assert cert.all_passed


def test_failure_lines_format():
    ok = LemmaCheck(name="lemma1", ok=np.array([True, True]),
                    violation=np.zeros(2), checked=np.array([False, True]))
    bad = LemmaCheck(name="lemma2", ok=np.array([True, False]),
                     violation=np.array([0.0, 0.25]),
                     checked=np.array([False, True]))
    report = CertificateReport(applicable=True, lemma1=ok, lemma2=bad,
                               lemma3=ok)
    assert report.failures() == 1
    assert not report.all_passed
    lines = report.failure_lines(prefix="run 7: ")
    assert lines == ["run 7: lemma2 iteration 2: violation 2.500000e-01"]
    assert bad.worst == 0.25


def test_descent_telescopes_to_the_residual_sum():
    """Summing the per-iteration descent bound: L1 - LK >= C * sum res_k."""
    inst, _, params, report, trace, _ = _conforming_run(seed=94)
    assert report.c_constant > 0
    drop = trace.lagrangian[0] - trace.lagrangian[-1]
    budget = report.c_constant * float(np.sum(trace.residuals[1:]))
    assert drop >= budget - 1e-9 * (1.0 + abs(drop))


# ------------------------------------------------------------- cost model

def test_flop_estimate_pinned_values():
    assert flop_estimate(128, 16, 2, 30) == 28437
    assert flop_estimate(1, 1, 1, 0) == 2


def test_flop_estimate_linear_in_iterations():
    b, u, q = 64, 32, 2
    per_iter = u ** 2 + q * u
    base = flop_estimate(b, u, q, 0)
    for k in (1, 7, 30, 100):
        assert flop_estimate(b, u, q, k) == base + k * per_iter


def test_flop_estimate_scales_sanely():
    # doubling the receiver only affects the Gramian/matched-filter terms
    small = flop_estimate(64, 16, 2, 0)
    big = flop_estimate(128, 16, 2, 0)
    assert big - small == round(0.5 * 64 * 16 ** 2 + 64 * 16)
