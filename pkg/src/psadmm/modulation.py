"""Square-QAM signal plumbing: layers, channels, noise, and decisions.

A 4^Q-QAM symbol has independent real and imaginary parts drawn from the
odd integers {+-1, ..., +-(2^Q - 1)}. Each symbol splits into Q binary
layers x = sum_q 2^(q-1) x_q with x_q having +-1 real and imaginary
parts, which is the representation the detector iterates on. All maps
here (bits -> layers -> symbols -> bits) are exact bijections; tests
enumerate them exhaustively for Q <= 3.
"""

from dataclasses import dataclass, field

import numpy as np

BITS_PER_LAYER = 2  # one bit on the real rail, one on the imaginary rail


class LengthMismatch(ValueError):
    """Bit-vector or array length does not match (Q, U)."""


class NotInConstellation(ValueError):
    """A value is not a valid 4^Q-QAM symbol."""


def symbol_energy(q_layers):
    """Mean symbol energy E_s = 2(4^Q - 1)/3 of uniform 4^Q-QAM."""
    if q_layers < 1:
        raise ValueError(f"q_layers must be >= 1, got {q_layers}")
    return 2.0 * (4 ** q_layers - 1) / 3.0


def pam_levels(q_layers):
    """The per-rail amplitude alphabet: odd integers up to 2^Q - 1."""
    top = 2 ** q_layers - 1
    return np.arange(-top, top + 1, 2, dtype=np.float64)


def constellation(q_layers):
    """All 4^Q symbols, sorted by (real, imag) ascending.

    This ordering is the canonical candidate order for brute-force ML
    tie-breaking.
    """
    levels = pam_levels(q_layers)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    return (re + 1j * im).ravel()


@dataclass(frozen=True)
class ModulationSpec:
    """Modulation order bundle for 4^Q-QAM."""

    q_layers: int
    points: np.ndarray = field(repr=False, compare=False, default=None)

    @classmethod
    def for_layers(cls, q_layers):
        return cls(q_layers=q_layers, points=constellation(q_layers))

    @property
    def bits_per_symbol(self):
        return BITS_PER_LAYER * self.q_layers

    @property
    def energy(self):
        return symbol_energy(self.q_layers)


def bits_to_layers(bits, q_layers, n_users):
    """Map a bit vector to the (Q, U) layer stack.

    Bit order: for user u, layers q = 1..Q, real rail then imaginary
    rail. Bit b maps to the sign 2b - 1.
    """
    bits = np.asarray(bits)
    if bits.shape != (BITS_PER_LAYER * q_layers * n_users,):
        raise LengthMismatch(
            f"need {BITS_PER_LAYER * q_layers * n_users} bits for "
            f"Q={q_layers}, U={n_users}, got shape {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must be 0/1")
    signs = 2.0 * bits.astype(np.float64) - 1.0
    per_user = signs.reshape(n_users, q_layers, BITS_PER_LAYER)
    stack = per_user[:, :, 0] + 1j * per_user[:, :, 1]
    return np.ascontiguousarray(stack.T)  # (Q, U)


def recompose(layers):
    """Collapse a (Q, U) layer stack to symbols: sum_q 2^(q-1) x_q."""
    layers = np.asarray(layers, dtype=np.complex128)
    q = layers.shape[0]
    weights = 2.0 ** np.arange(q)
    return np.tensordot(weights, layers, axes=1)


def decompose(x, q_layers):
    """Split symbols into the unique (Q, U) +-1 layer stack.

    Greedy from the top layer: the sign of the running remainder gives
    x_q for q = Q down to 1, separately on each rail.
    """
    x = np.asarray(x, dtype=np.complex128)
    top = 2 ** q_layers - 1
    for part in (x.real, x.imag):
        rounded = np.round(part)
        if not (np.abs(part - rounded) < 1e-9).all():
            raise NotInConstellation("symbol rails must be integers")
        if not ((np.abs(rounded) <= top) & (np.mod(rounded, 2) == 1)).all():
            raise NotInConstellation(
                f"symbol rails must be odd integers within +-{top}")

    def rails(v):
        out = np.empty((q_layers, v.shape[0]))
        rem = v.copy()
        for q in range(q_layers - 1, -1, -1):
            s = np.where(rem >= 0, 1.0, -1.0)
            out[q] = s
            rem = rem - s * 2.0 ** q
        return out

    return rails(x.real.astype(np.float64)) + 1j * rails(x.imag.astype(np.float64))


def layers_to_bits(layers):
    """Inverse of bits_to_layers: signs back to bits in canonical order."""
    layers = np.asarray(layers)
    q_layers, n_users = layers.shape
    per_user = np.empty((n_users, q_layers, BITS_PER_LAYER))
    per_user[:, :, 0] = layers.T.real
    per_user[:, :, 1] = layers.T.imag
    return (per_user.reshape(-1) > 0).astype(np.int64)


def bits_from_symbols(x_hat, q_layers):
    """Demap hard symbol decisions to bits (canonical bit order)."""
    return layers_to_bits(decompose(x_hat, q_layers))


def noise_sigma(snr_db, n_users, q_layers):
    """Total noise variance sigma^2 for a per-receive-antenna SNR.

    The received signal power per antenna is U * E_s (unit-variance
    Rayleigh entries), so sigma2 = U * E_s / 10^(snr_db / 10). An SNR of
    +inf means noiseless: sigma2 = 0.
    """
    if np.isposinf(snr_db):
        return 0.0
    return n_users * symbol_energy(q_layers) / 10.0 ** (snr_db / 10.0)


def rayleigh_channel(n_rx, n_users, rng):
    """i.i.d. CN(0, 1) channel matrix, shape (B, U)."""
    if n_rx < n_users or n_users < 1:
        raise ValueError(f"need B >= U >= 1, got B={n_rx}, U={n_users}")
    z = rng.standard_normal((n_rx, n_users, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


@dataclass
class ChannelInstance:
    """One detection problem: r = H x_true + n."""

    channel: np.ndarray
    x_true: np.ndarray
    sigma2: float
    received: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.channel)
        if h.ndim != 2 or h.shape[0] < h.shape[1]:
            raise ValueError(f"channel must be tall (B >= U), got {h.shape}")
        if self.x_true.shape != (h.shape[1],):
            raise ValueError("x_true length must equal U")
        if self.received.shape != (h.shape[0],):
            raise ValueError("received length must equal B")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        for name in ("channel", "x_true", "received"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} has non-finite entries")

    @property
    def n_rx(self):
        return self.channel.shape[0]

    @property
    def n_users(self):
        return self.channel.shape[1]


def transmit(channel, x_true, sigma2, rng):
    """Push x_true through the channel with CN(0, sigma2) noise."""
    channel = np.asarray(channel, dtype=np.complex128)
    x_true = np.asarray(x_true, dtype=np.complex128)
    r = channel @ x_true
    if sigma2 > 0:
        z = rng.standard_normal((channel.shape[0], 2))
        r = r + np.sqrt(sigma2 / 2.0) * (z[:, 0] + 1j * z[:, 1])
    return ChannelInstance(channel=channel, x_true=x_true,
                           sigma2=float(sigma2), received=r)


def hard_decision(v, q_layers):
    """Entrywise nearest constellation point, ties rounding up.

    Each rail maps through t -> clamp(2*floor(t/2) + 1, +-(2^Q - 1)),
    which is the nearest odd integer with ties at even integers resolved
    upward.
    """
    v = np.asarray(v, dtype=np.complex128)
    top = float(2 ** q_layers - 1)

    def rail(t):
        return np.clip(2.0 * np.floor(t / 2.0) + 1.0, -top, top)

    return rail(v.real) + 1j * rail(v.imag)
