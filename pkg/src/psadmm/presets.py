"""Built-in experiment presets.

Twelve named BER-curve setups on a 128-antenna receiver, sweeping the
user load U in {16, 32, 64, 128} for 4-, 16- and 64-QAM, each with the
penalty/step pair tuned for that operating point. Preset names resolve
directly in load_config, and `detect presets` lists them.

The tuned (alphas, rho) pairs are per operating point; the SNR grids
and trial counts are editable defaults (dump the text and tweak).
"""

PRESETS = {
    # 4-QAM
    "fig1a": {"n_rx": 128, "n_users": 16, "q_layers": 1,
              "alphas": (80.0,), "rho": 120.0, "snr_db": (0, 2, 4, 6, 8)},
    "fig1b": {"n_rx": 128, "n_users": 32, "q_layers": 1,
              "alphas": (80.0,), "rho": 120.0, "snr_db": (0, 2, 4, 6, 8)},
    "fig1c": {"n_rx": 128, "n_users": 64, "q_layers": 1,
              "alphas": (80.0,), "rho": 120.0, "snr_db": (2, 4, 6, 8, 10)},
    "fig1d": {"n_rx": 128, "n_users": 128, "q_layers": 1,
              "alphas": (80.0,), "rho": 120.0, "snr_db": (4, 6, 8, 10, 12)},
    # 16-QAM
    "fig1e": {"n_rx": 128, "n_users": 16, "q_layers": 2,
              "alphas": (8.0, 30.0), "rho": 16.0, "snr_db": (6, 8, 10, 12, 14)},
    "fig1f": {"n_rx": 128, "n_users": 32, "q_layers": 2,
              "alphas": (9.0, 40.0), "rho": 20.0, "snr_db": (6, 8, 10, 12, 14)},
    "fig1g": {"n_rx": 128, "n_users": 64, "q_layers": 2,
              "alphas": (12.0, 64.0), "rho": 20.0, "snr_db": (8, 10, 12, 14, 16)},
    "fig1h": {"n_rx": 128, "n_users": 128, "q_layers": 2,
              "alphas": (10.0, 60.0), "rho": 16.0,
              "snr_db": (10, 12, 14, 16, 18)},
    # 64-QAM
    "fig1i": {"n_rx": 128, "n_users": 16, "q_layers": 3,
              "alphas": (22.0, 17.0, 95.0), "rho": 96.0,
              "snr_db": (12, 14, 16, 18, 20)},
    "fig1j": {"n_rx": 128, "n_users": 32, "q_layers": 3,
              "alphas": (2.0, 2.0, 10.5), "rho": 9.0,
              "snr_db": (12, 14, 16, 18, 20)},
    "fig1k": {"n_rx": 128, "n_users": 64, "q_layers": 3,
              "alphas": (22.0, 22.5, 85.0), "rho": 44.0,
              "snr_db": (14, 16, 18, 20, 22)},
    "fig1l": {"n_rx": 128, "n_users": 128, "q_layers": 3,
              "alphas": (2.75, 2.25, 10.5), "rho": 5.0,
              "snr_db": (16, 18, 20, 22, 24)},
}

_DEFAULT_TRIALS = 1000
_DEFAULT_DETECTORS = ("psadmm", "box_admm", "mmse", "zf")


def preset_text(name):
    """Render a preset as config text (the load_config input format)."""
    p = PRESETS[name]
    lines = [
        f"# preset {name}: {p['n_rx']}x{p['n_users']}, "
        f"{4 ** p['q_layers']}-QAM",
        f"n_rx = {p['n_rx']}",
        f"n_users = {p['n_users']}",
        f"q_layers = {p['q_layers']}",
        f"snr_db = {', '.join(f'{v:g}' for v in p['snr_db'])}",
        f"trials = {_DEFAULT_TRIALS}",
        f"detectors = {', '.join(_DEFAULT_DETECTORS)}",
        f"rho = {p['rho']:g}",
        f"alphas = {', '.join(f'{a:g}' for a in p['alphas'])}",
        f"seed = 12345",
        f"out = {name}.csv",
    ]
    return "\n".join(lines) + "\n"


def preset_summary():
    """One formatted line per preset, for the CLI listing."""
    rows = []
    for name, p in PRESETS.items():
        alphas = ", ".join(f"{a:g}" for a in p["alphas"])
        rows.append(f"{name}  {p['n_rx']:>3}x{p['n_users']:<3} "
                    f"{4 ** p['q_layers']:>2}-QAM  rho={p['rho']:<5g} "
                    f"alphas=({alphas})")
    return rows
