"""Signal layer: bit/layer/symbol maps, channels, noise, hard decisions.

The bit<->layer<->symbol maps are exact bijections, so they are checked
by exhaustive enumeration for Q <= 3; statistical properties (channel
moments, SNR calibration) are checked on large seeded draws.
"""

import itertools
import math

import numpy as np
import pytest

from psadmm.modulation import (BITS_PER_LAYER, ChannelInstance, LengthMismatch,
                               ModulationSpec, NotInConstellation,
                               bits_from_symbols, bits_to_layers, constellation,
                               decompose, hard_decision, layers_to_bits,
                               noise_sigma, pam_levels, rayleigh_channel,
                               recompose, symbol_energy, transmit)

# ---------------------------------------------------------------- basics


def test_symbol_energy_known_values():
    assert symbol_energy(1) == 2.0
    assert symbol_energy(2) == 10.0
    assert symbol_energy(3) == 42.0
    with pytest.raises(ValueError):
        symbol_energy(0)


def test_pam_levels_and_constellation_order():
    assert np.array_equal(pam_levels(1), [-1.0, 1.0])
    assert np.array_equal(pam_levels(2), [-3.0, -1.0, 1.0, 3.0])
    pts = constellation(2)
    assert pts.shape == (16,)
    expected = [re + 1j * im for re in (-3, -1, 1, 3) for im in (-3, -1, 1, 3)]
    assert np.array_equal(pts, np.array(expected))


def test_modulation_spec_bundle():
    spec = ModulationSpec.for_layers(2)
    assert spec.bits_per_symbol == 4
    assert spec.energy == 10.0
    assert spec.points.shape == (16,)
    assert BITS_PER_LAYER == 2


# ------------------------------------------------------------- bijections

@pytest.mark.parametrize("q_layers", [1, 2, 3])
def test_bits_layers_symbols_exhaustive_round_trip(q_layers):
    """Every bit pattern maps to a distinct constellation point and back."""
    n_bits = BITS_PER_LAYER * q_layers
    seen = set()
    for pattern in itertools.product((0, 1), repeat=n_bits):
        bits = np.array(pattern)
        layers = bits_to_layers(bits, q_layers, 1)
        assert layers.shape == (q_layers, 1)
        assert np.all(np.abs(layers.real) == 1.0)
        assert np.all(np.abs(layers.imag) == 1.0)
        x = recompose(layers)
        seen.add(complex(x[0]))
        assert np.array_equal(decompose(x, q_layers), layers)
        assert np.array_equal(layers_to_bits(layers), bits)
        assert np.array_equal(bits_from_symbols(x, q_layers), bits)
    assert len(seen) == 4 ** q_layers
    assert seen == set(map(complex, constellation(q_layers)))


@pytest.mark.parametrize("q_layers", [1, 2, 3])
def test_decompose_recompose_over_constellation(q_layers):
    pts = constellation(q_layers)
    layers = decompose(pts, q_layers)
    assert np.array_equal(recompose(layers), pts)
    assert np.all(np.abs(layers.real) == 1.0)
    assert np.all(np.abs(layers.imag) == 1.0)


def test_bits_to_layers_multiuser_round_trip():
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, size=2 * 3 * 4)  # Q=3, U=4
    layers = bits_to_layers(bits, 3, 4)
    assert layers.shape == (3, 4)
    assert np.array_equal(layers_to_bits(layers), bits)


def test_layer_map_pinned_values():
    # user bit order: (layer1 re, layer1 im, layer2 re, layer2 im)
    layers = bits_to_layers(np.array([1, 0, 1, 1]), 2, 1)
    assert np.array_equal(layers, np.array([[1.0 - 1.0j], [1.0 + 1.0j]]))
    assert recompose(layers)[0] == 3.0 + 1.0j

    lay = decompose(np.array([-3.0 + 1.0j]), 2)
    assert np.array_equal(lay, np.array([[-1.0 - 1.0j], [-1.0 + 1.0j]]))

    lay3 = decompose(np.array([7.0 - 5.0j]), 3)
    assert np.array_equal(
        lay3, np.array([[1.0 + 1.0j], [1.0 - 1.0j], [1.0 - 1.0j]]))


def test_bits_to_layers_errors():
    with pytest.raises(LengthMismatch):
        bits_to_layers(np.array([0, 1]), 2, 1)  # needs 4 bits
    with pytest.raises(ValueError, match="0/1"):
        bits_to_layers(np.array([0, 2, 0, 1]), 2, 1)


def test_decompose_rejects_nonconstellation_points():
    with pytest.raises(NotInConstellation):
        decompose(np.array([0.5 + 1.0j]), 1)
    with pytest.raises(NotInConstellation):
        decompose(np.array([5.0 + 1.0j]), 2)  # odd but beyond +-3
    with pytest.raises(NotInConstellation):
        decompose(np.array([2.0 + 1.0j]), 2)  # even rail


# --------------------------------------------------------- hard decisions

def test_hard_decision_pinned_values():
    v = np.array([0.4 - 0.9j, 2.0 + 3.7j, 9.2 - 8.0j])
    out = hard_decision(v, 2)
    assert np.array_equal(out, np.array([1.0 - 1.0j, 3.0 + 3.0j, 3.0 - 3.0j]))


def test_hard_decision_ties_round_up():
    v = np.array([0.0 + 0.0j, -2.0 + 2.0j])
    out = hard_decision(v, 2)
    assert np.array_equal(out, np.array([1.0 + 1.0j, -1.0 + 3.0j]))
    # 4-QAM collapses everything to the four corners
    assert hard_decision(np.array([0.0 + 0.0j]), 1)[0] == 1.0 + 1.0j
    assert hard_decision(np.array([-0.1 + 5.0j]), 1)[0] == -1.0 + 1.0j


def test_hard_decision_outputs_lie_in_constellation():
    rng = np.random.default_rng(6)
    for q in (1, 2, 3):
        pts = set(map(complex, constellation(q)))
        v = rng.uniform(-10, 10, 200) + 1j * rng.uniform(-10, 10, 200)
        out = hard_decision(v, q)
        assert all(complex(z) in pts for z in out)


# ------------------------------------------------------- noise & channel

def test_noise_sigma_known_value_and_noiseless_sentinel():
    assert noise_sigma(10.0, 4, 2) == 4.0
    assert noise_sigma(0.0, 3, 1) == 3 * 2.0
    assert noise_sigma(float("inf"), 8, 2) == 0.0


def test_rayleigh_channel_shape_dtype_and_moments():
    rng = np.random.default_rng(7)
    h = rayleigh_channel(512, 64, rng)
    assert h.shape == (512, 64)
    assert h.dtype == np.complex128
    power = np.mean(np.abs(h) ** 2)
    assert abs(power - 1.0) < 0.02          # unit variance entries
    assert abs(np.mean(h)) < 0.02           # zero mean
    assert abs(np.mean(h ** 2)) < 0.02      # circular symmetry
    with pytest.raises(ValueError):
        rayleigh_channel(3, 4, rng)  # must be tall


def test_transmit_noiseless_is_exact():
    rng = np.random.default_rng(8)
    h = rayleigh_channel(6, 3, rng)
    x = np.array([1 + 1j, -3 + 1j, 1 - 3j], dtype=np.complex128)
    inst = transmit(h, x, 0.0, rng)
    assert np.array_equal(inst.received, h @ x)
    assert inst.sigma2 == 0.0


def test_transmit_noise_power_matches_sigma2():
    rng = np.random.default_rng(9)
    h = rayleigh_channel(4096, 1, rng)
    x = np.array([1 + 1j], dtype=np.complex128)
    sigma2 = 2.5
    inst = transmit(h, x, sigma2, rng)
    noise = inst.received - h @ x
    measured = np.mean(np.abs(noise) ** 2)
    assert abs(measured - sigma2) / sigma2 < 0.06


def test_snr_calibration_within_tenth_db():
    """Measured per-antenna SNR over many draws matches the target."""
    rng = np.random.default_rng(10)
    n_rx, n_users, q_layers, snr_db = 64, 8, 2, 10.0
    sigma2 = noise_sigma(snr_db, n_users, q_layers)
    pts = constellation(q_layers)
    sig_power = 0.0
    n_trials = 2000
    for _ in range(n_trials):
        h = rayleigh_channel(n_rx, n_users, rng)
        x = rng.choice(pts, size=n_users)
        sig_power += np.mean(np.abs(h @ x) ** 2)
    measured_db = 10.0 * math.log10(sig_power / n_trials / sigma2)
    assert abs(measured_db - snr_db) < 0.1


def test_channel_instance_validation():
    h = np.ones((4, 2), dtype=np.complex128)
    x = np.array([1 + 1j, 1 - 1j])
    r = np.ones(4, dtype=np.complex128)
    inst = ChannelInstance(channel=h, x_true=x, sigma2=1.0, received=r)
    assert inst.n_rx == 4
    assert inst.n_users == 2
    with pytest.raises(ValueError, match="tall"):
        ChannelInstance(channel=h.T, x_true=r[:4], sigma2=1.0, received=x)
    with pytest.raises(ValueError, match="x_true"):
        ChannelInstance(channel=h, x_true=np.ones(3), sigma2=1.0, received=r)
    with pytest.raises(ValueError, match="received"):
        ChannelInstance(channel=h, x_true=x, sigma2=1.0, received=np.ones(3))
    with pytest.raises(ValueError, match="sigma2"):
        ChannelInstance(channel=h, x_true=x, sigma2=-1.0, received=r)
    bad = h.copy()
    bad[0, 0] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        ChannelInstance(channel=bad, x_true=x, sigma2=1.0, received=r)
