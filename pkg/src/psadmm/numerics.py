"""Dense Hermitian linear algebra for the detector hot path.

Everything here operates on complex128 ndarrays. The three jobs are:
forming the Gramian H^H H with exact Hermitian symmetry, factoring the
regularized Gramian G + rho*I once per detection for repeated solves,
and estimating the extreme eigenvalues of G by power iteration (only
the extremes are needed, and power iteration scales to B = U = 128
without pulling in a full eigensolver).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

# Fixed start-vector seed so spectrum_bounds is reproducible run to run.
_POWER_SEED = 0x5EED


class FactorizationFailure(Exception):
    """The regularized Gramian was not positive definite (bad pivot)."""


class DimensionMismatch(ValueError):
    """Operand shapes are incompatible."""


class Unconverged(Exception):
    """Power iteration hit its iteration cap.

    Carries the partial estimates in ``bounds`` and the name of the
    offending pass in ``which`` ("lambda_max" or "lambda_min") so the
    caller can decide whether to proceed anyway. A stalled lambda_min
    pass is usually benign: 0 is always a valid lower bound for a PSD
    spectrum, so consumers can floor the estimate and continue.
    """

    def __init__(self, message, bounds, which=""):
        super().__init__(message)
        self.bounds = bounds
        self.which = which


def _require_matrix(a, name="matrix"):
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} has non-finite entries")
    return np.ascontiguousarray(a, dtype=np.complex128)


def gram(h):
    """Return G = H^H H with Hermitian symmetry enforced exactly.

    The product is computed once and the strict lower triangle is then
    overwritten with the conjugate of the upper triangle (and the diagonal
    with its real part), so G == G.conj().T holds entrywise, not just to
    rounding. Downstream factorization and eigenvalue code assumes this.
    """
    h = _require_matrix(h, "H")
    g = h.conj().T @ h
    u = g.shape[0]
    iu, ju = np.triu_indices(u, k=1)
    g[ju, iu] = np.conj(g[iu, ju])
    g[np.diag_indices(u)] = g.diagonal().real
    return g


@dataclass
class HermitianFactorization:
    """Cholesky factor of a Hermitian positive definite matrix.

    Built once per detection and reused for every solve; ``inverse()``
    materializes the dense inverse for the iteration kernels, which apply
    it as a matrix-vector product each iteration.
    """

    c_and_lower: tuple
    n: int
    _inv: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_matrix(cls, a):
        a = _require_matrix(a, "matrix")
        n, m = a.shape
        if n != m:
            raise DimensionMismatch(f"matrix must be square, got {a.shape}")
        try:
            c, low = scipy.linalg.cho_factor(a, lower=False, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise FactorizationFailure(str(exc)) from exc
        return cls(c_and_lower=(c, low), n=n)

    def solve(self, b):
        b = np.asarray(b, dtype=np.complex128)
        if b.shape[0] != self.n:
            raise DimensionMismatch(
                f"rhs has leading dimension {b.shape[0]}, expected {self.n}")
        return scipy.linalg.cho_solve(self.c_and_lower, b, check_finite=False)

    def inverse(self):
        """Dense inverse, cached. Hermitian-symmetrized like gram()."""
        if self._inv is None:
            inv = self.solve(np.eye(self.n, dtype=np.complex128))
            inv = 0.5 * (inv + inv.conj().T)
            self._inv = np.ascontiguousarray(inv)
        return self._inv


def factor_regularized(g, rho):
    """Factor G + rho*I for a Hermitian PSD G and rho > 0."""
    g = _require_matrix(g, "G")
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"G must be square, got {g.shape}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    a = g + rho * np.eye(g.shape[0], dtype=np.complex128)
    return HermitianFactorization.from_matrix(a)


def solve(fact, b):
    """Solve (G + rho*I) v = b against an existing factorization."""
    return fact.solve(b)


@dataclass(frozen=True)
class SpectrumBounds:
    """Extreme-eigenvalue estimates of a Hermitian PSD matrix.

    rel_tolerance is the accuracy the estimates were converged to,
    relative to the spectral scale lambda_max. The *_certified helpers
    widen each estimate by that tolerance, giving one-sided bounds safe
    to use inside convergence certificates.
    """

    lambda_min: float
    lambda_max: float
    rel_tolerance: float
    iterations: int = 0

    def lambda_max_upper(self):
        return self.lambda_max * (1.0 + self.rel_tolerance)

    def lambda_min_lower(self):
        return max(0.0, self.lambda_min - self.rel_tolerance * self.lambda_max)


def _power_method(a, v0, rel_tolerance, max_iters):
    """Largest eigenvalue of Hermitian PSD a, residual-converged.

    Returns (rayleigh, iterations, converged). Convergence requires
    ||a v - lam v|| <= rel_tolerance * lam, which certifies the estimate
    to rel_tolerance of the dominant eigenvalue.
    """
    v = v0 / np.linalg.norm(v0)
    lam = 0.0
    for k in range(1, max_iters + 1):
        w = a @ v
        lam = float(np.real(np.vdot(v, w)))
        res = float(np.linalg.norm(w - lam * v))
        if res <= rel_tolerance * abs(lam):
            return lam, k, True
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # a annihilates v: eigenvalue 0 reached exactly.
            return 0.0, k, True
        v = w / nw
    return lam, max_iters, False


def spectrum_bounds(g, rel_tolerance=1e-6, max_iters=500):
    """Estimate (lambda_min, lambda_max) of a Hermitian PSD matrix.

    lambda_max comes from power iteration on G; lambda_min from power
    iteration on (lambda_max*I - G) with the shift undone afterwards.
    Start vectors are drawn from a fixed seed so results are
    deterministic. Raises Unconverged (carrying partial estimates) if
    either pass exhausts max_iters.

    For lambda_min near 0 the accuracy is rel_tolerance relative to
    lambda_max, the natural spectral scale.
    """
    g = _require_matrix(g, "G")
    n = g.shape[0]
    if n != g.shape[1]:
        raise DimensionMismatch(f"G must be square, got {g.shape}")
    rng = np.random.default_rng(_POWER_SEED)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)

    lam_max, it1, ok1 = _power_method(g, v0, rel_tolerance, max_iters)
    lam_max = max(lam_max, 0.0)

    shifted = lam_max * np.eye(n, dtype=np.complex128) - g
    v1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    mu, it2, ok2 = _power_method(shifted, v1, rel_tolerance, max_iters)
    lam_min = max(lam_max - max(mu, 0.0), 0.0)

    bounds = SpectrumBounds(lambda_min=lam_min, lambda_max=lam_max,
                            rel_tolerance=rel_tolerance, iterations=it1 + it2)
    if not (ok1 and ok2):
        which = "lambda_max" if not ok1 else "lambda_min"
        raise Unconverged(
            f"power iteration did not converge for {which} "
            f"within {max_iters} iterations", bounds, which)
    return bounds
