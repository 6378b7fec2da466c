"""Penalty-sharing ADMM detector core.

The detector relaxes each binary layer x_q onto the box [-1, 1] (both
rails), subtracts concave penalties (alpha_q / 2) ||x_q||^2 to push
iterates back toward the corners, and splits the sum x_0 = sum_q
2^(q-1) x_q off as a shared variable. One iteration is a Gauss-Seidel
sweep over the layers (each update is a box-projected closed form,
exact because the layer subproblem Hessian is isotropic), a regularized
least-squares update of x_0, and a dual ascent step:

    x_q  <- Pi_box( (2^(q-1) / (4^(q-1) rho - alpha_q))
                    (rho (x_0 - s_(-q)) + y) )
    x_0  <- (H^H H + rho I)^(-1) (H^H r + rho s - y)
    y    <- y + rho (x_0 - s)

where s is the layer recomposition and s_(-q) excludes layer q. The
strict-convexity margins gamma_q = 4^(q-1) rho - alpha_q must be
positive for the layer updates to be well defined at all; rho >
sqrt(2) lambda_max(H^H H) additionally guarantees monotone descent of
the augmented Lagrangian and convergence to a stationary point of the
penalized relaxation.

The iteration loop itself lives in a kernel (compiled or numpy, see
psadmm.backend); this module holds the reference update operations, the
driver, and parameter validation.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend as backend_mod
from .modulation import hard_decision, recompose
from .numerics import SpectrumBounds, factor_regularized, gram

INIT_MODES = ("zeros", "ones", "minus_ones", "random")


class HardFailure(Exception):
    """Parameters break strict convexity: some 4^(q-1) rho - alpha_q <= 0."""


class NumericalBlowup(Exception):
    """Iterates left the representable range (non-finite values)."""


@dataclass(frozen=True)
class DetectorParams:
    """Penalty/step configuration for one detector run.

    alphas has one entry per layer; len(alphas) defines Q. init_mode
    "random" draws the initial layers uniformly from the box and
    requires init_seed for reproducibility.
    """

    rho: float
    alphas: tuple
    max_iters: int = 30
    residual_tol: float = 1e-5
    init_mode: str = "zeros"
    init_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive and finite, got {self.rho}")
        if len(self.alphas) < 1:
            raise ValueError("alphas must have at least one entry")
        if any(not math.isfinite(a) or a < 0 for a in self.alphas):
            raise ValueError(f"alphas must be finite and >= 0, got {self.alphas}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be >= 0")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")
        if self.init_mode == "random" and self.init_seed is None:
            raise ValueError("init_mode 'random' requires init_seed")

    @property
    def n_layers(self):
        return len(self.alphas)

    @property
    def gammas(self):
        """Strict-convexity margins gamma_q = 4^(q-1) rho - alpha_q."""
        return tuple(4.0 ** q * self.rho - a for q, a in enumerate(self.alphas))


@dataclass
class DetectorState:
    """Iterate snapshot: layer stack (Q, U), shared x0, dual y, index k."""

    layers: np.ndarray
    x0: np.ndarray
    y: np.ndarray
    k: int


@dataclass
class IterationTrace:
    """Per-iteration scalars recorded by the kernel.

    Row t (0-based) describes iteration t+1: the squared step norms of
    that iteration, the residual (their sum), the dual step and primal
    gap after it, and the augmented Lagrangian / penalized objective of
    the state it produced. lagrangian_initial / penalized_initial hold
    the same functionals at the initial state. When states were
    recorded, *_hist[0] is the initial state and *_hist[t+1] the state
    after iteration t+1.
    """

    lagrangian: np.ndarray
    penalized: np.ndarray
    residuals: np.ndarray
    layer_steps: np.ndarray
    x0_steps: np.ndarray
    dual_steps: np.ndarray
    primal_gaps: np.ndarray
    lagrangian_initial: float
    penalized_initial: float
    layers_hist: np.ndarray | None = None
    x0_hist: np.ndarray | None = None
    y_hist: np.ndarray | None = None

    def __len__(self):
        return int(self.residuals.shape[0])

    @property
    def iterations(self):
        return len(self)

    @property
    def final_residual(self):
        return float(self.residuals[-1]) if len(self) else math.inf

    def state_sequence(self):
        """States [initial, after iter 1, ..., after iter T].

        Requires the run to have recorded state history
        (psadmm_detect(record_states=True)).
        """
        if self.layers_hist is None:
            raise ValueError("trace has no recorded states; "
                             "run with record_states=True")
        return [DetectorState(layers=self.layers_hist[t],
                              x0=self.x0_hist[t],
                              y=self.y_hist[t], k=t)
                for t in range(self.layers_hist.shape[0])]

    def first_crossing(self, eps):
        """1-based index of the first iteration with residual < eps."""
        hits = np.flatnonzero(self.residuals < eps)
        return int(hits[0]) + 1 if hits.size else None


@dataclass(frozen=True)
class ValidationReport:
    """Convergence-theory conditions evaluated for one (params, channel).

    layer_conditions[q] is 4^(q-1) rho > alpha_q; spectral_condition is
    rho > sqrt(2) lambda_max. Both are advisory (the built-in presets
    violate the spectral one at the larger loads). c_constant is the
    descent constant min{gamma_q / 2, gamma_0 / 2 - lambda_max^2 / rho},
    evaluated with the eigenvalue estimates widened by their stated
    tolerance so it is safe to use in certificates.
    """

    layer_conditions: tuple
    spectral_condition: bool
    gammas: tuple
    gamma0: float
    c_constant: float
    bounds: SpectrumBounds
    rho: float

    @property
    def conforming(self):
        return all(self.layer_conditions) and self.spectral_condition


def require_strict_convexity(params):
    """Raise HardFailure unless every gamma_q > 0."""
    bad = [q for q, g in enumerate(params.gammas) if g <= 0]
    if bad:
        margins = ", ".join(f"gamma_{q + 1}={params.gammas[q]:g}" for q in bad)
        raise HardFailure(
            f"4^(q-1) rho - alpha_q must be positive for every layer; {margins}")


def validate_params(params, bounds):
    """Check the sufficient convergence conditions against a spectrum.

    Raises HardFailure when some layer margin gamma_q <= 0 (the update
    itself is ill-posed); everything else is reported, not enforced.
    """
    require_strict_convexity(params)
    gammas = params.gammas
    layer_ok = tuple(g > 0 for g in gammas)
    spectral_ok = bool(params.rho > math.sqrt(2.0) * bounds.lambda_max)
    gamma0 = params.rho + bounds.lambda_min
    lam_hi = bounds.lambda_max_upper()
    gamma0_lo = params.rho + bounds.lambda_min_lower()
    c_constant = min(min(g / 2.0 for g in gammas),
                     gamma0_lo / 2.0 - lam_hi ** 2 / params.rho)
    return ValidationReport(layer_conditions=layer_ok,
                            spectral_condition=spectral_ok,
                            gammas=gammas, gamma0=gamma0,
                            c_constant=c_constant, bounds=bounds,
                            rho=float(params.rho))


def _clip_box(v):
    return np.clip(v.real, -1.0, 1.0) + 1j * np.clip(v.imag, -1.0, 1.0)


def update_layer(q, layers, x0_prev, y, params):
    """Closed-form box-projected update of layer q (0-based).

    layers carries already-updated entries for indices < q and stale
    ones for indices > q, per the Gauss-Seidel sweep; layers[q] itself
    is the stale value and is not modified here.
    """
    w = 2.0 ** q
    d = 4.0 ** q * params.rho - params.alphas[q]
    weights = 2.0 ** np.arange(layers.shape[0])
    s_other = np.tensordot(weights, layers, axes=1) - w * layers[q]
    raw = (w / d) * (params.rho * (x0_prev - s_other) + y)
    return _clip_box(raw)


def update_x0(fact, matched_filter, layer_sum, y, rho):
    """Regularized LS update: (H^H H + rho I)^(-1) (H^H r + rho s - y)."""
    return fact.solve(matched_filter + rho * layer_sum - y)


def update_dual(y, x0, layer_sum, rho):
    """Dual ascent on the sharing constraint: y + rho (x0 - s)."""
    return y + rho * (x0 - layer_sum)


def residual(state_prev, state_next):
    """Squared iterate movement: sum_q ||dx_q||^2 + ||dx_0||^2."""
    d = state_next.layers - state_prev.layers
    out = float(np.sum(d.real ** 2 + d.imag ** 2))
    d0 = state_next.x0 - state_prev.x0
    return out + float(np.sum(d0.real ** 2 + d0.imag ** 2))


def initial_state(params, q_layers, n_users):
    """Initial (layers, x0, y) per init_mode.

    Non-zero modes start the layers at box corners (or uniformly inside
    the box for "random") with x0 equal to their recomposition, so the
    sharing constraint starts satisfied; y always starts at zero.
    """
    shape = (q_layers, n_users)
    if params.init_mode == "zeros":
        layers = np.zeros(shape, dtype=np.complex128)
    elif params.init_mode == "ones":
        layers = np.full(shape, 1.0 + 1.0j, dtype=np.complex128)
    elif params.init_mode == "minus_ones":
        layers = np.full(shape, -1.0 - 1.0j, dtype=np.complex128)
    else:
        rng = np.random.default_rng(params.init_seed)
        z = rng.uniform(-1.0, 1.0, size=(2,) + shape)
        layers = z[0] + 1j * z[1]
    x0 = recompose(layers)
    y = np.zeros(n_users, dtype=np.complex128)
    return layers, x0, y


def psadmm_detect(instance, params, q_layers, *, record_states=False,
                  decision="x0", backend=None):
    """Run the penalty-sharing ADMM detector on one channel instance.

    Returns (x_hat, trace, state_final). x_hat is the entrywise hard
    decision of the final x0 (decision="x0", default) or the
    recomposition of the layer signs (decision="layers"). The loop stops
    at max_iters or as soon as the squared-movement residual drops below
    residual_tol.
    """
    if params.n_layers != q_layers:
        raise ValueError(
            f"params carry {params.n_layers} alphas but q_layers={q_layers}")
    if decision not in ("x0", "layers"):
        raise ValueError(f"decision must be 'x0' or 'layers', got {decision!r}")
    require_strict_convexity(params)

    h = instance.channel
    g = gram(h)
    fact = factor_regularized(g, params.rho)
    a_inv = fact.inverse()
    matched_filter = h.conj().T @ instance.received
    r_energy = float(np.real(np.vdot(instance.received, instance.received)))
    weights = 2.0 ** np.arange(q_layers)
    denoms = np.asarray(params.gammas, dtype=np.float64)
    alphas = np.asarray(params.alphas, dtype=np.float64)

    layers0, x00, y0 = initial_state(params, q_layers, instance.n_users)
    kern = backend_mod.resolve(backend)
    out = kern.run_iterations(g, a_inv, matched_filter, r_energy,
                              layers0, x00, y0, float(params.rho), alphas,
                              weights, denoms, int(params.max_iters),
                              float(params.residual_tol))
    (status, n_iters, layers, x0, y, lagrangian, penalized, residuals,
     layer_steps, x0_steps, dual_steps, gaps, lag_init, pen_init,
     layers_hist, x0_hist, y_hist) = out
    if status == 2:
        raise NumericalBlowup(
            f"non-finite iterate at iteration {n_iters}; "
            f"rho={params.rho:g}, alphas={params.alphas}")

    trace = IterationTrace(
        lagrangian=lagrangian, penalized=penalized, residuals=residuals,
        layer_steps=layer_steps, x0_steps=x0_steps, dual_steps=dual_steps,
        primal_gaps=gaps, lagrangian_initial=float(lag_init),
        penalized_initial=float(pen_init),
        layers_hist=layers_hist if record_states else None,
        x0_hist=x0_hist if record_states else None,
        y_hist=y_hist if record_states else None)
    state = DetectorState(layers=layers, x0=x0, y=y, k=n_iters)

    if decision == "x0":
        x_hat = hard_decision(x0, q_layers)
    else:
        signs = (np.where(layers.real >= 0, 1.0, -1.0)
                 + 1j * np.where(layers.imag >= 0, 1.0, -1.0))
        x_hat = recompose(signs)
    return x_hat, trace, state


def iteration_bound(report, l_first, l_star, eps):
    """Worst-case index of the first sub-eps residual, implied by the
    per-iteration descent guarantee: t <= (L_first - L_star) / (C eps).

    L_first is the augmented Lagrangian after the first iteration (the
    point from which descent is guaranteed); a practical stand-in for
    L_star is the final recorded Lagrangian, valid because the sequence
    is non-increasing from L_first on. Returns None when the descent
    constant C is not positive (bound inapplicable).
    """
    if report.c_constant <= 0 or eps <= 0:
        return None
    return (l_first - l_star) / (report.c_constant * eps)


def stationarity_residual(state, h, r, params):
    """Max KKT violation of the penalized relaxation at a state.

    The objective is f = 1/2 ||r - H s||^2 - sum_q (alpha_q/2)||x_q||^2
    over the box; per real coordinate t with partial derivative g the
    violation is |g| in the interior, max(0, g) at t = +1 and
    max(0, -g) at t = -1.
    """
    layers = state.layers
    s = recompose(layers)
    common = h.conj().T @ (h @ s - r)
    worst = 0.0
    for q in range(layers.shape[0]):
        grad = 2.0 ** q * common - params.alphas[q] * layers[q]
        for t, g in ((layers[q].real, grad.real), (layers[q].imag, grad.imag)):
            at_hi = t >= 1.0 - 1e-12
            at_lo = t <= -1.0 + 1e-12
            viol = np.where(at_hi, np.maximum(0.0, g),
                            np.where(at_lo, np.maximum(0.0, -g), np.abs(g)))
            worst = max(worst, float(viol.max()))
    return worst
