"""Penalized-sharing ADMM detection for layered-QAM massive MIMO.

The package splits into a small set of layers:

``numerics``
    Hermitian linear algebra: Gramians, Cholesky factorizations,
    certified extremal-eigenvalue estimates.
``modulation``
    Bit/layer/symbol maps for 4^Q-QAM, channel and noise generation,
    hard decisions.
``detector``
    The penalized-sharing ADMM iteration, parameter validation, and
    the per-run trace it produces.
``baselines``
    Reference detectors: zero forcing, MMSE, plain box-constrained
    ADMM, and exhaustive maximum likelihood for tiny systems.
``diagnostics``
    Runtime convergence certificates (dual-step bound, descent
    inequality, lower bound) and the arithmetic cost model.
``harness``
    Monte Carlo BER experiments: config parsing, seeded trial
    generation, aggregation, CSV output, parameter sweeps.

Hot iteration kernels run through a compiled extension when available
and fall back to a pure numpy implementation otherwise; see
``psadmm.backend``.
"""

from . import backend
from .baselines import (ML_CANDIDATE_CAP, TooLarge, box_admm_detect,
                        ml_bruteforce, ml_candidate_count, mmse_detect,
                        zf_detect)
from .detector import (INIT_MODES, DetectorParams, DetectorState, HardFailure,
                       IterationTrace, NumericalBlowup, ValidationReport,
                       initial_state, iteration_bound, psadmm_detect,
                       require_strict_convexity, residual,
                       stationarity_residual, update_dual, update_layer,
                       update_x0, validate_params)
from .diagnostics import (CertificateReport, LemmaCheck, augmented_lagrangian,
                          certificates_for_run, check_lemma1, check_lemma2,
                          check_lemma3, flop_estimate, penalized_objective,
                          run_certificates)
from .harness import (CSV_HEADER, DETECTOR_IDS, BerRecord, ExperimentConfig,
                      ParseError, ValidationError, emit_csv, flatten_sweep,
                      load_config, load_records, make_instance,
                      parse_config_text, render_csv, run_experiment,
                      run_with_certificates, sweep_params, trial_rng)
from .modulation import (BITS_PER_LAYER, ChannelInstance, LengthMismatch,
                         ModulationSpec, NotInConstellation, bits_from_symbols,
                         bits_to_layers, constellation, decompose,
                         hard_decision, layers_to_bits, noise_sigma,
                         pam_levels, rayleigh_channel, recompose,
                         symbol_energy, transmit)
from .numerics import (DimensionMismatch, FactorizationFailure,
                       HermitianFactorization, SpectrumBounds, Unconverged,
                       factor_regularized, gram, solve, spectrum_bounds)
from .presets import PRESETS, preset_summary, preset_text

__version__ = "0.1.0"

__all__ = [
    "BITS_PER_LAYER",
    "BerRecord",
    "CSV_HEADER",
    "CertificateReport",
    "ChannelInstance",
    "DETECTOR_IDS",
    "DetectorParams",
    "DetectorState",
    "DimensionMismatch",
    "ExperimentConfig",
    "FactorizationFailure",
    "HardFailure",
    "HermitianFactorization",
    "INIT_MODES",
    "IterationTrace",
    "LemmaCheck",
    "LengthMismatch",
    "ML_CANDIDATE_CAP",
    "ModulationSpec",
    "NotInConstellation",
    "NumericalBlowup",
    "PRESETS",
    "ParseError",
    "SpectrumBounds",
    "TooLarge",
    "Unconverged",
    "ValidationError",
    "ValidationReport",
    "augmented_lagrangian",
    "backend",
    "bits_from_symbols",
    "bits_to_layers",
    "box_admm_detect",
    "certificates_for_run",
    "check_lemma1",
    "check_lemma2",
    "check_lemma3",
    "constellation",
    "decompose",
    "emit_csv",
    "factor_regularized",
    "flatten_sweep",
    "flop_estimate",
    "gram",
    "hard_decision",
    "initial_state",
    "iteration_bound",
    "layers_to_bits",
    "load_config",
    "load_records",
    "make_instance",
    "ml_bruteforce",
    "ml_candidate_count",
    "mmse_detect",
    "noise_sigma",
    "pam_levels",
    "parse_config_text",
    "penalized_objective",
    "preset_summary",
    "preset_text",
    "psadmm_detect",
    "rayleigh_channel",
    "recompose",
    "render_csv",
    "require_strict_convexity",
    "residual",
    "run_certificates",
    "run_experiment",
    "run_with_certificates",
    "solve",
    "spectrum_bounds",
    "stationarity_residual",
    "sweep_params",
    "symbol_energy",
    "transmit",
    "trial_rng",
    "update_dual",
    "update_layer",
    "update_x0",
    "validate_params",
    "zf_detect",
]
