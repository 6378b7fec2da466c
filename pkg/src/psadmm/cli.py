"""Command-line front end.

    detect run      --config <path|preset> [--seed N] [--trials N]
                    [--out PATH] [--verify] [--workers N] [--backend NAME]
    detect sweep    --config <path|preset> --rho a,b,c --alpha a,b,c [...]
    detect presets
    detect validate --config <path|preset>

Exit codes: 0 success, 1 hard parameter failure, 2 bad config/usage.
"""

import argparse
import dataclasses
import sys

from . import backend as backend_mod
from .detector import HardFailure, validate_params
from .diagnostics import flop_estimate
from .harness import (ParseError, ValidationError, emit_csv, flatten_sweep,
                      load_config, make_instance, run_experiment,
                      run_with_certificates, sweep_params)
from .numerics import Unconverged, gram, spectrum_bounds
from .presets import preset_summary


def _apply_overrides(config, args):
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ValidationError([f"trials must be >= 1, got {args.trials}"])
        updates["trials"] = args.trials
    if args.out is not None:
        updates["output_path"] = args.out
    if getattr(args, "verify", False):
        updates["verify"] = True
    return dataclasses.replace(config, **updates) if updates else config


def _print_records(records):
    print(f"{'detector':<28} {'snr_db':>7} {'ber':>12} {'bit_errors':>10} "
          f"{'mean_iters':>10}")
    for rec in records:
        print(f"{rec.detector:<28} {rec.snr_db:>7g} {rec.ber:>12.4e} "
              f"{rec.bit_errors:>10d} {rec.mean_iters:>10.2f}")


def _cmd_run(args):
    config = _apply_overrides(load_config(args.config), args)
    if config.verify:
        records, lines = run_with_certificates(config, workers=args.workers,
                                               backend=args.backend)
        report_path = config.output_path + ".certificates.txt"
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"certificate report: {report_path}")
    else:
        records = run_experiment(config, workers=args.workers,
                                 backend=args.backend)
    emit_csv(records, config.output_path)
    _print_records(records)
    print(f"wrote {config.output_path}")
    return 0


def _parse_alpha_grid(text):
    """'60,70,80' for Q=1, or '8,30;9,40' for per-layer tuples."""
    cells = []
    for chunk in text.split(";"):
        values = tuple(float(v) for v in chunk.split(",") if v.strip())
        if not values:
            raise ValidationError([f"empty alpha grid cell in {text!r}"])
        cells.append(values[0] if len(values) == 1 else values)
    return cells


def _cmd_sweep(args):
    config = _apply_overrides(load_config(args.config), args)
    rho_grid = [float(v) for v in args.rho.split(",") if v.strip()]
    alpha_grid = _parse_alpha_grid(args.alpha)
    results = sweep_params(config, rho_grid, alpha_grid,
                           workers=args.workers, backend=args.backend)
    records = flatten_sweep(results)
    emit_csv(records, config.output_path)
    _print_records(records)
    print(f"wrote {config.output_path}")
    return 0


def _cmd_presets(args):
    del args
    for line in preset_summary():
        print(line)
    return 0


def _cmd_validate(args):
    config = load_config(args.config)
    print(f"config ok: {config.n_rx}x{config.n_users}, "
          f"{4 ** config.q_layers}-QAM, detectors: "
          f"{', '.join(config.detectors)}")
    if config.params is None:
        print("no iterative detector parameters to validate")
        return 0
    params = config.params
    # Judge the convergence conditions on one sample channel draw.
    _, instance = make_instance(config, 0, 0)
    try:
        bounds = spectrum_bounds(gram(instance.channel), rel_tolerance=1e-8)
    except Unconverged as exc:
        bounds = exc.bounds
        print("warning: eigenvalue estimation hit its iteration cap; "
              "conditions judged on partial estimates")
    report = validate_params(params, bounds)
    print(f"sample channel spectrum: lambda_min {bounds.lambda_min:.4f}, "
          f"lambda_max {bounds.lambda_max:.4f}")
    for q, (g, ok) in enumerate(zip(report.gammas, report.layer_conditions)):
        mark = "ok" if ok else "VIOLATED"
        print(f"layer {q + 1}: 4^(q-1) rho - alpha_q = {g:g} [{mark}]")
    mark = "ok" if report.spectral_condition else "VIOLATED (advisory)"
    print(f"spectral condition rho > sqrt(2) lambda_max: "
          f"{params.rho:g} vs {2 ** 0.5 * bounds.lambda_max:.4f} [{mark}]")
    print(f"descent constant C = {report.c_constant:g}")
    if report.c_constant <= 0:
        print("iteration bound inapplicable (C <= 0)")
    flops = flop_estimate(config.n_rx, config.n_users, config.q_layers,
                          params.max_iters)
    print(f"per-detection cost at K={params.max_iters}: "
          f"{flops} complex multiplications")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="detect",
        description="Monte Carlo BER experiments for layered-QAM detectors")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, verify=False):
        p.add_argument("--config", required=True,
                       help="config file path or preset name (fig1a..fig1l)")
        p.add_argument("--seed", type=int, help="override master seed")
        p.add_argument("--trials", type=int, help="override trial count")
        p.add_argument("--out", help="override output CSV path")
        p.add_argument("--workers", type=int, default=1,
                       help="thread count (results identical for any value)")
        p.add_argument("--backend", choices=backend_mod.available(),
                       help="iteration kernel override")
        if verify:
            p.add_argument("--verify", action="store_true",
                           help="run convergence certificates per trial and "
                                "write a report next to the CSV")

    run_p = sub.add_parser("run", help="run the configured BER experiment")
    common(run_p, verify=True)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="grid-sweep (rho, alpha) cells")
    common(sweep_p)
    sweep_p.add_argument("--rho", required=True, help="comma list, e.g. 120,160")
    sweep_p.add_argument("--alpha", required=True,
                         help="comma list; ';' separates per-layer tuples")
    sweep_p.set_defaults(func=_cmd_sweep)

    presets_p = sub.add_parser("presets", help="list built-in presets")
    presets_p.set_defaults(func=_cmd_presets)

    validate_p = sub.add_parser("validate",
                                help="check a config and its parameters")
    validate_p.add_argument("--config", required=True)
    validate_p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HardFailure as exc:
        print(f"hard failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
