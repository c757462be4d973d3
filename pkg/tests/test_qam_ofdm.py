import math

import numpy as np
import pytest

from onoma.ofdm import (DcoOfdmConfig, dco_ofdm_demodulate, dco_ofdm_modulate,
                        hermitian_spectrum)
from onoma.qam import (bits_per_symbol, bits_to_symbols, constellation,
                       nearest_symbols, symbols_to_bits)

ORDERS = [4, 16, 64]


@pytest.mark.parametrize("order", ORDERS)
def test_constellation_unit_average_power(order):
    pts = constellation(order)
    assert len(pts) == order
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("order", ORDERS)
def test_bits_roundtrip(order):
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, 120 * bits_per_symbol(order))
    syms = bits_to_symbols(bits, order)
    assert syms.size == 120
    np.testing.assert_array_equal(symbols_to_bits(syms, order), bits)


@pytest.mark.parametrize("order", ORDERS)
def test_nearest_symbols_snaps_small_noise(order):
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, 64 * bits_per_symbol(order))
    syms = bits_to_symbols(bits, order)
    noisy = syms + 0.01 * (rng.normal(size=64) + 1j * rng.normal(size=64))
    np.testing.assert_allclose(nearest_symbols(noisy, order), syms,
                               atol=1e-12)


@pytest.mark.parametrize("order", ORDERS)
def test_gray_mapping_neighbors_differ_in_one_bit(order):
    pts = constellation(order)
    spacing = 2.0 / math.sqrt({4: 2, 16: 10, 64: 42}[order])
    for a in range(order):
        for b in range(a + 1, order):
            if abs(pts[a] - pts[b]) < spacing * 1.001:
                assert bin(a ^ b).count("1") == 1


def test_qam_validation():
    with pytest.raises(ValueError):
        bits_per_symbol(8)
    with pytest.raises(ValueError):
        bits_to_symbols([0, 1, 0], 4)  # not a multiple of 2


def test_ofdm_config_validation():
    with pytest.raises(ValueError):
        DcoOfdmConfig(n_subcarriers=48)
    with pytest.raises(ValueError):
        DcoOfdmConfig(n_subcarriers=4)
    with pytest.raises(ValueError):
        DcoOfdmConfig(n_subcarriers=16, cyclic_prefix_len=16)


def test_hermitian_spectrum_real_ifft():
    rng = np.random.default_rng(9)
    blocks = rng.normal(size=(3, 31)) + 1j * rng.normal(size=(3, 31))
    spec = hermitian_spectrum(blocks, 64)
    assert np.all(spec[:, 0] == 0) and np.all(spec[:, 32] == 0)
    time_sig = np.fft.ifft(spec, axis=1)
    assert np.max(np.abs(time_sig.imag)) < 1e-12


def test_modulate_all_zero_data_gives_constant_bias():
    cfg = DcoOfdmConfig(n_subcarriers=16, dc_bias=0.7, cyclic_prefix_len=4)
    out = dco_ofdm_modulate(np.zeros(7, dtype=complex), cfg)
    np.testing.assert_allclose(out, 0.7, atol=1e-15)
    assert out.size == cfg.symbol_len


def test_roundtrip_without_clipping():
    rng = np.random.default_rng(17)
    cfg = DcoOfdmConfig(n_subcarriers=64, dc_bias=2.0, cyclic_prefix_len=8)
    data = (rng.normal(size=93) + 1j * rng.normal(size=93)) / math.sqrt(2)
    out = dco_ofdm_modulate(data, cfg)
    assert np.all(out >= cfg.clip_floor)
    back = dco_ofdm_demodulate(out, cfg)
    np.testing.assert_allclose(back, data, atol=1e-9)


def test_roundtrip_auto_bias():
    # 3-sigma auto bias rarely clips a 31-symbol frame; pick a seed that
    # stays clear and confirm exact inversion
    rng = np.random.default_rng(2)
    cfg = DcoOfdmConfig(n_subcarriers=64, dc_bias=None, cyclic_prefix_len=8)
    data = (rng.normal(size=31) + 1j * rng.normal(size=31)) / math.sqrt(2)
    out = dco_ofdm_modulate(data, cfg)
    back = dco_ofdm_demodulate(out, cfg)
    np.testing.assert_allclose(back, data, atol=1e-9)


def test_single_tone_matches_cosine_oracle():
    # subcarrier 1 of N=16: x[n] = (2/16) * (a cos(2 pi n/16) - b sin(2 pi n/16))
    a, b = 0.9, -0.4
    cfg = DcoOfdmConfig(n_subcarriers=16, dc_bias=0.0,
                        clip_floor=-math.inf, cyclic_prefix_len=0)
    data = np.zeros(7, dtype=complex)
    data[0] = a + 1j * b
    out = dco_ofdm_modulate(data, cfg)
    n = np.arange(16)
    oracle = (2.0 / 16.0) * (a * np.cos(2 * np.pi * n / 16)
                             - b * np.sin(2 * np.pi * n / 16))
    np.testing.assert_allclose(out, oracle, atol=1e-12)


def test_modulate_output_real_and_clipped():
    rng = np.random.default_rng(21)
    cfg = DcoOfdmConfig(n_subcarriers=32, dc_bias=0.0, clip_floor=0.0,
                        cyclic_prefix_len=4)
    data = rng.normal(size=15) + 1j * rng.normal(size=15)
    out = dco_ofdm_modulate(data, cfg)
    assert out.dtype.kind == "f"
    assert np.all(out >= 0.0)
    assert np.any(out == 0.0)  # zero bias clips the negative half


def test_stream_length_validation():
    cfg = DcoOfdmConfig(n_subcarriers=16, cyclic_prefix_len=2)
    with pytest.raises(ValueError):
        dco_ofdm_modulate(np.zeros(5, dtype=complex), cfg)
    with pytest.raises(ValueError):
        dco_ofdm_demodulate(np.zeros(19), cfg)


def test_cyclic_prefix_is_tail_copy():
    rng = np.random.default_rng(33)
    cfg = DcoOfdmConfig(n_subcarriers=16, dc_bias=1.0, cyclic_prefix_len=4)
    data = rng.normal(size=7) + 1j * rng.normal(size=7)
    out = dco_ofdm_modulate(data, cfg)
    np.testing.assert_allclose(out[:4], out[16:20], atol=1e-15)
