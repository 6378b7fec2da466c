"""Monte Carlo BER harness: configs, paired trials, CSV emission.

Experiments are described by flat key = value config files (see
load_config for the schema). Every trial derives its own RNG stream
from (master_seed, snr_index, trial_index), so results are independent
of execution order and worker count, and every detector inside a trial
sees the same channel, symbols and noise (paired design). Records are
aggregated in trial order and emitted sorted by (detector, snr_db),
which makes CSV output byte-reproducible.
"""

import dataclasses
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import (ML_CANDIDATE_CAP, box_admm_detect, ml_bruteforce,
                        ml_candidate_count, mmse_detect, zf_detect)
from .detector import (INIT_MODES, DetectorParams, psadmm_detect,
                       require_strict_convexity, validate_params)
from .diagnostics import run_certificates
from .modulation import (BITS_PER_LAYER, bits_from_symbols, bits_to_layers,
                         noise_sigma, rayleigh_channel, recompose, transmit)
from .numerics import SpectrumBounds, Unconverged, gram, spectrum_bounds

DETECTOR_IDS = ("psadmm", "box_admm", "zf", "mmse", "ml")
CSV_HEADER = ("detector,snr_db,bit_errors,bits_total,ber,"
              "mean_iters,mean_residual_final,certificate_failures")


class ParseError(ValueError):
    """Config text could not be parsed; carries line/key context."""

    def __init__(self, message, line_no=None, key=None):
        ctx = []
        if line_no is not None:
            ctx.append(f"line {line_no}")
        if key is not None:
            ctx.append(f"key {key!r}")
        suffix = f" ({', '.join(ctx)})" if ctx else ""
        super().__init__(message + suffix)
        self.line_no = line_no
        self.key = key


class ValidationError(ValueError):
    """Config parsed but violates constraints; lists every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n  - " + "\n  - ".join(self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    n_rx: int
    n_users: int
    q_layers: int
    snr_grid_db: tuple
    detectors: tuple
    trials: int = 500
    params: DetectorParams | None = None
    master_seed: int = 12345
    verify: bool = False
    output_path: str = "results.csv"

    @property
    def bits_per_trial(self):
        return BITS_PER_LAYER * self.q_layers * self.n_users


@dataclass(frozen=True)
class BerRecord:
    """One (detector, SNR) row of an experiment.

    detector_errors counts trials whose detector raised; those trials
    score all bits as errors. The field stays out of the CSV because the
    CSV schema is pinned to eight columns.
    """

    detector: str
    snr_db: float
    bit_errors: int
    bits_total: int
    ber: float
    mean_iters: float
    mean_residual_final: float
    certificate_failures: int
    detector_errors: int = 0


# ---------------------------------------------------------------- config

_KEYS = {
    "n_rx": "int", "n_users": "int", "q_layers": "int", "trials": "int",
    "max_iters": "int", "seed": "int", "init_seed": "int",
    "rho": "float", "residual_tol": "float",
    "snr_db": "float_list", "alphas": "float_list",
    "detectors": "str_list", "init": "str", "out": "str", "verify": "bool",
}


def _convert(key, raw, line_no):
    kind = _KEYS[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float_list":
            return tuple(float(v) for v in raw.split(","))
        if kind == "str_list":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return raw
    except ValueError as exc:
        raise ParseError(f"bad value for {key}: {exc}", line_no, key) from None


def parse_config_text(text):
    """Parse flat 'key = value' lines into a raw dict.

    '#' starts a comment; blank lines are skipped; keys must be known
    and unique. Raises ParseError with line/key context.
    """
    raw = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", line_no)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", line_no, key)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", line_no, key)
        if not value:
            raise ParseError(f"empty value for {key!r}", line_no, key)
        raw[key] = _convert(key, value, line_no)
    return raw


def build_config(raw):
    """Turn a parsed key dict into an ExperimentConfig.

    Collects every violated constraint into one ValidationError instead
    of stopping at the first.
    """
    bad = []

    def need(key):
        if key not in raw:
            bad.append(f"missing required key {key!r}")
            return False
        return True

    for key in ("n_rx", "n_users", "q_layers", "snr_db", "detectors"):
        need(key)

    n_rx = raw.get("n_rx", 0)
    n_users = raw.get("n_users", 0)
    q_layers = raw.get("q_layers", 0)
    if "n_users" in raw and n_users < 1:
        bad.append(f"n_users must be >= 1, got {n_users}")
    if "n_rx" in raw and "n_users" in raw and n_rx < n_users:
        bad.append(f"need n_rx >= n_users, got {n_rx} < {n_users}")
    if "q_layers" in raw and q_layers < 1:
        bad.append(f"q_layers must be >= 1, got {q_layers}")

    snr = raw.get("snr_db", ())
    if "snr_db" in raw:
        if len(snr) == 0:
            bad.append("snr_db must list at least one value")
        for v in snr:
            if math.isnan(v) or (math.isinf(v) and v < 0):
                bad.append(f"snr_db entries must be finite or inf, got {v}")

    trials = raw.get("trials", 500)
    if trials < 1:
        bad.append(f"trials must be >= 1, got {trials}")

    detectors = raw.get("detectors", ())
    for d in detectors:
        if d not in DETECTOR_IDS:
            bad.append(f"unknown detector {d!r}; choose from {DETECTOR_IDS}")
    if len(set(detectors)) != len(detectors):
        bad.append("detectors must not repeat")
    if not detectors and "detectors" in raw:
        bad.append("detectors must list at least one entry")

    if "ml" in detectors and q_layers >= 1 and n_users >= 1:
        count = ml_candidate_count(q_layers, n_users)
        if count > ML_CANDIDATE_CAP:
            bad.append(f"ml needs 4^(Q U) <= {ML_CANDIDATE_CAP}, got {count}")

    seed = raw.get("seed", 12345)
    if not 0 <= seed < 2 ** 64:
        bad.append(f"seed must be in [0, 2^64), got {seed}")

    init_mode = raw.get("init", "zeros")
    if init_mode not in INIT_MODES:
        bad.append(f"init must be one of {INIT_MODES}, got {init_mode!r}")

    params = None
    needs_admm = any(d in detectors for d in ("psadmm", "box_admm"))
    if needs_admm:
        if "rho" not in raw:
            bad.append("rho is required when psadmm or box_admm is requested")
        alphas = raw.get("alphas")
        if "psadmm" in detectors and alphas is None:
            bad.append("alphas is required when psadmm is requested")
        if alphas is None:
            alphas = (0.0,) * max(q_layers, 1)
        if q_layers >= 1 and len(alphas) != q_layers:
            bad.append(f"alphas must have q_layers={q_layers} entries, "
                       f"got {len(alphas)}")
        if "rho" in raw and not bad:
            try:
                params = DetectorParams(
                    rho=raw["rho"], alphas=tuple(alphas),
                    max_iters=raw.get("max_iters", 30),
                    residual_tol=raw.get("residual_tol", 1e-5),
                    init_mode=init_mode, init_seed=raw.get("init_seed"))
            except ValueError as exc:
                bad.append(str(exc))

    if bad:
        raise ValidationError(bad)
    return ExperimentConfig(
        n_rx=n_rx, n_users=n_users, q_layers=q_layers,
        snr_grid_db=tuple(float(v) for v in snr),
        detectors=tuple(detectors), trials=trials, params=params,
        master_seed=seed, verify=raw.get("verify", False),
        output_path=raw.get("out", "results.csv"))


def load_config(path_or_name):
    """Load a config file, or a named built-in preset (e.g. 'fig1a')."""
    from .presets import PRESETS, preset_text
    if path_or_name in PRESETS:
        return build_config(parse_config_text(preset_text(path_or_name)))
    if not os.path.exists(path_or_name):
        raise FileNotFoundError(
            f"no config file {path_or_name!r} and no preset by that name "
            f"(presets: {', '.join(sorted(PRESETS))})")
    with open(path_or_name, encoding="utf-8") as fh:
        text = fh.read()
    return build_config(parse_config_text(text))


# ---------------------------------------------------------------- trials

def trial_rng(master_seed, snr_index, trial_index):
    """Counter-based per-trial stream.

    Seeded by the master seed with (snr_index, trial_index) as the
    spawn key, so any trial's stream can be reconstructed in isolation.
    """
    seq = np.random.SeedSequence(master_seed,
                                 spawn_key=(snr_index, trial_index))
    return np.random.default_rng(seq)


def make_instance(config, snr_index, trial_index):
    """Draw one trial's (bits, channel instance).

    Draw order within the trial stream: payload bits, then the channel
    matrix, then the noise vector.
    """
    rng = trial_rng(config.master_seed, snr_index, trial_index)
    bits = rng.integers(0, 2, size=config.bits_per_trial)
    layers = bits_to_layers(bits, config.q_layers, config.n_users)
    x_true = recompose(layers)
    h = rayleigh_channel(config.n_rx, config.n_users, rng)
    sigma2 = noise_sigma(config.snr_grid_db[snr_index],
                         config.n_users, config.q_layers)
    return bits, transmit(h, x_true, sigma2, rng)


@dataclass
class _Outcome:
    errors: int
    iters: int = 0
    final_residual: float = 0.0
    cert_failures: int = 0
    failed: bool = False
    cert_inapplicable: bool = False
    cert_lines: tuple = ()


def _certified_bounds(g):
    """Spectrum bounds that are always safe to certify against.

    A stalled lambda_min pass keeps the converged lambda_max and floors
    lambda_min to 0 (always valid for a PSD Gramian). A stalled
    lambda_max pass falls back to [0, trace(G)], a rigorous enclosure,
    rather than certifying with an estimate that did not converge.
    """
    try:
        return spectrum_bounds(g, rel_tolerance=1e-8, max_iters=5000)
    except Unconverged as exc:
        if exc.which == "lambda_min":
            return SpectrumBounds(lambda_min=0.0,
                                  lambda_max=exc.bounds.lambda_max,
                                  rel_tolerance=exc.bounds.rel_tolerance,
                                  iterations=exc.bounds.iterations)
        return SpectrumBounds(lambda_min=0.0,
                              lambda_max=float(np.real(np.trace(g))),
                              rel_tolerance=0.0)


def _run_admm(name, config, instance, backend):
    params = config.params
    detect = psadmm_detect if name == "psadmm" else box_admm_detect
    x_hat, trace, _ = detect(instance, params, config.q_layers,
                             record_states=config.verify, backend=backend)
    out = _Outcome(errors=0, iters=trace.iterations,
                   final_residual=trace.final_residual)
    if config.verify:
        eff = params if name == "psadmm" else dataclasses.replace(
            params, alphas=(0.0,) * config.q_layers)
        bounds = _certified_bounds(gram(instance.channel))
        report = validate_params(eff, bounds)
        cert = run_certificates(trace, instance.channel, instance.received,
                                eff, report)
        if cert.applicable:
            out.cert_failures = cert.failures()
            out.cert_lines = tuple(cert.failure_lines())
        else:
            out.cert_inapplicable = True
    return x_hat, out


def _run_trial(config, snr_index, trial_index, backend):
    bits, instance = make_instance(config, snr_index, trial_index)
    outcomes = {}
    for name in config.detectors:
        try:
            if name in ("psadmm", "box_admm"):
                x_hat, out = _run_admm(name, config, instance, backend)
            else:
                if name == "zf":
                    x_hat = zf_detect(instance, config.q_layers)
                elif name == "mmse":
                    x_hat = mmse_detect(instance, config.q_layers)
                else:
                    x_hat = ml_bruteforce(instance, config.q_layers)
                out = _Outcome(errors=0)
            bits_hat = bits_from_symbols(x_hat, config.q_layers)
            out.errors = int(np.count_nonzero(bits_hat != bits))
        except Exception:  # noqa: BLE001 - a failed trial must not kill the sweep
            out = _Outcome(errors=config.bits_per_trial, failed=True)
        outcomes[name] = out
    return outcomes


def _run_grid(config, workers, backend):
    """Fill the (snr, trial) outcome table, any worker count."""
    if any(d in config.detectors for d in ("psadmm", "box_admm")):
        if config.params is None:
            raise ValidationError(["psadmm/box_admm requested without params"])
        require_strict_convexity(config.params)

    n_snr = len(config.snr_grid_db)
    table = [[None] * config.trials for _ in range(n_snr)]

    def block(snr_index, lo, hi):
        return [(snr_index, t, _run_trial(config, snr_index, t, backend))
                for t in range(lo, hi)]

    if workers <= 1:
        for si in range(n_snr):
            for si_, t, out in block(si, 0, config.trials):
                table[si_][t] = out
    else:
        step = max(1, math.ceil(config.trials / workers))
        jobs = [(si, lo, min(lo + step, config.trials))
                for si in range(n_snr)
                for lo in range(0, config.trials, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(block, *job) for job in jobs]:
                for si, t, out in fut.result():
                    table[si][t] = out
    return table


def _aggregate(config, table):
    records = []
    bits_total = config.trials * config.bits_per_trial
    for name in config.detectors:
        for si, snr in enumerate(config.snr_grid_db):
            errors = iters = certf = failed = 0
            res_sum = 0.0
            for t in range(config.trials):
                out = table[si][t][name]
                errors += out.errors
                iters += out.iters
                res_sum += out.final_residual
                certf += out.cert_failures
                failed += int(out.failed)
            records.append(BerRecord(
                detector=name, snr_db=float(snr), bit_errors=errors,
                bits_total=bits_total, ber=errors / bits_total,
                mean_iters=iters / config.trials,
                mean_residual_final=res_sum / config.trials,
                certificate_failures=certf, detector_errors=failed))
    records.sort(key=lambda rec: (rec.detector, rec.snr_db))
    return records


def run_experiment(config, workers=1, backend=None):
    """Run the full (detector x SNR x trial) grid.

    Returns BerRecords sorted by (detector, snr_db). Output is
    byte-identical for any worker count: trials are scored from
    index-derived RNG streams and reduced in trial order.
    """
    return _aggregate(config, _run_grid(config, workers, backend))


def run_with_certificates(config, workers=1, backend=None):
    """One verified pass: (records, certificate report lines).

    Forces verify mode so the ADMM runs record state history and the
    three lemma checks are evaluated per iteration. The report has one
    line per failed check plus a total.
    """
    cfg = dataclasses.replace(config, verify=True)
    table = _run_grid(cfg, workers, backend)
    records = _aggregate(cfg, table)
    lines = [f"certificate report: seed={cfg.master_seed}, "
             f"trials={cfg.trials}"]
    admm = [d for d in cfg.detectors if d in ("psadmm", "box_admm")]
    if not admm:
        lines.append("no iterative detectors requested; nothing to certify")
        return records, lines
    total = 0
    inapplicable = 0
    for si, snr in enumerate(cfg.snr_grid_db):
        for t in range(cfg.trials):
            for name in admm:
                out = table[si][t][name]
                total += out.cert_failures
                inapplicable += int(out.cert_inapplicable)
                for line in out.cert_lines:
                    lines.append(f"{name} snr={snr:g} trial={t}: {line}")
    if inapplicable:
        lines.append(f"runs with convergence conditions unmet "
                     f"(not certified): {inapplicable}")
    lines.append(f"total certificate failures: {total}")
    return records, lines


# ------------------------------------------------------------------- csv

def _fmt(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def render_csv(records):
    """Records to CSV text: pinned header, 10 significant digits, \\n."""
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(",".join((
            rec.detector, _fmt(rec.snr_db), str(rec.bit_errors),
            str(rec.bits_total), _fmt(rec.ber), _fmt(rec.mean_iters),
            _fmt(rec.mean_residual_final), str(rec.certificate_failures))))
    return "\n".join(lines) + "\n"


def emit_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_csv(records))


def load_records(path):
    """Read a results CSV back into BerRecords (round-trip helper)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {path}")
    records = []
    for line in lines[1:]:
        (det, snr, errs, total, ber, miters, mres, certf) = line.split(",")
        records.append(BerRecord(
            detector=det, snr_db=float(snr), bit_errors=int(errs),
            bits_total=int(total), ber=float(ber), mean_iters=float(miters),
            mean_residual_final=float(mres), certificate_failures=int(certf)))
    return records


# ----------------------------------------------------------------- sweep

def sweep_params(config, rho_grid, alpha_grid, workers=1, backend=None):
    """Factorial (rho, alpha) sweep of the psadmm detector.

    All other factors (channel draws included: same master seed and
    trial indexing) stay fixed across cells, so cells are directly
    comparable. alpha_grid entries are scalars for Q = 1 or per-layer
    tuples for deeper modulations. Returns {(rho, alphas): records}.
    """
    if config.params is None:
        raise ValidationError(["sweep requires psadmm params in the config"])
    results = {}
    for rho in rho_grid:
        for alpha in alpha_grid:
            alphas = ((float(alpha),) if np.isscalar(alpha)
                      else tuple(float(a) for a in alpha))
            if len(alphas) != config.q_layers:
                raise ValidationError(
                    [f"alpha grid entry {alphas} does not match "
                     f"q_layers={config.q_layers}"])
            cell = dataclasses.replace(
                config, detectors=("psadmm",),
                params=dataclasses.replace(config.params, rho=float(rho),
                                           alphas=alphas))
            results[(float(rho), alphas)] = run_experiment(
                cell, workers=workers, backend=backend)
    return results


def flatten_sweep(results):
    """Sweep dict to a single record list with cell-tagged detector ids."""
    flat = []
    for (rho, alphas), records in sorted(results.items()):
        tag = f"psadmm[rho={rho:g};alpha={','.join(f'{a:g}' for a in alphas)}]"
        for rec in records:
            flat.append(dataclasses.replace(rec, detector=tag))
    flat.sort(key=lambda rec: (rec.detector, rec.snr_db))
    return flat
