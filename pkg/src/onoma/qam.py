"""Gray-mapped square QAM with unit average symbol power.

Supported orders: 4, 16, 64. Bits map per axis with a Gray code, the I
axis taking the first half of each symbol's bits. Hard detection slices
each axis to the nearest level, which for square QAM equals the
minimum-distance decision over the full constellation.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "bits_per_symbol",
    "constellation",
    "bits_to_symbols",
    "symbols_to_bits",
    "nearest_symbols",
]

# Gray-ordered level sequences: index = Gray-decoded bit pattern value.
_GRAY_LEVELS = {
    1: np.array([-1.0, 1.0]),
    2: np.array([-3.0, -1.0, 1.0, 3.0]),
    3: np.array([-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0]),
}
# Average symbol power of the unnormalized grid: 2 * mean(levels^2).
_SCALE = {4: math.sqrt(2.0), 16: math.sqrt(10.0), 64: math.sqrt(42.0)}


def bits_per_symbol(order: int) -> int:
    if order not in _SCALE:
        raise ValueError(f"qam order must be one of 4, 16, 64, got {order}")
    return int(math.log2(order))


def _axis_bits(order):
    return bits_per_symbol(order) // 2


def _bits_to_levels(bits, k):
    """Map k-bit groups to Gray-ordered PAM levels."""
    bits = np.asarray(bits, dtype=int).reshape(-1, k)
    idx = np.zeros(bits.shape[0], dtype=int)
    for b in range(k):
        idx = (idx << 1) | bits[:, b]
    # convert the natural index to its position in the Gray sequence
    gray_pos = idx.copy()
    shift = idx >> 1
    while np.any(shift):
        gray_pos ^= shift
        shift >>= 1
    return _GRAY_LEVELS[k][gray_pos]


def _levels_to_bits(level_idx, k):
    """Inverse of _bits_to_levels: Gray position -> k bits."""
    gray = level_idx ^ (level_idx >> 1)
    out = np.zeros((len(level_idx), k), dtype=int)
    for b in range(k):
        out[:, b] = (gray >> (k - 1 - b)) & 1
    return out.reshape(-1)


def constellation(order: int) -> np.ndarray:
    """All constellation points indexed by their bit pattern."""
    k = _axis_bits(order)
    n = bits_per_symbol(order)
    pts = np.empty(order, dtype=complex)
    for v in range(order):
        bits = [(v >> (n - 1 - b)) & 1 for b in range(n)]
        pts[v] = _bits_to_levels(bits[:k], k)[0] + 1j * _bits_to_levels(bits[k:], k)[0]
    return pts / _SCALE[order]


def bits_to_symbols(bits, order: int) -> np.ndarray:
    """Gray-map a bit stream to unit-average-power QAM symbols."""
    n = bits_per_symbol(order)
    bits = np.asarray(bits, dtype=int)
    if bits.size % n:
        raise ValueError(f"bit count must be a multiple of {n}")
    k = n // 2
    grouped = bits.reshape(-1, n)
    i_lvl = _bits_to_levels(grouped[:, :k].reshape(-1), k)
    q_lvl = _bits_to_levels(grouped[:, k:].reshape(-1), k)
    return (i_lvl + 1j * q_lvl) / _SCALE[order]


def _slice_axis(values, k):
    """Nearest-level index per axis for (possibly noisy) PAM values."""
    levels = _GRAY_LEVELS[k]
    idx = np.rint((values + levels[-1]) / 2.0).astype(int)
    return np.clip(idx, 0, len(levels) - 1)


def nearest_symbols(values, order: int) -> np.ndarray:
    """Minimum-distance hard decisions as constellation points."""
    k = _axis_bits(order)
    scaled = np.asarray(values) * _SCALE[order]
    i_idx = _slice_axis(scaled.real, k)
    q_idx = _slice_axis(scaled.imag, k)
    levels = _GRAY_LEVELS[k]
    return (levels[i_idx] + 1j * levels[q_idx]) / _SCALE[order]


def symbols_to_bits(symbols, order: int) -> np.ndarray:
    """Hard-detect symbols and Gray-demap them back to bits."""
    k = _axis_bits(order)
    scaled = np.asarray(symbols) * _SCALE[order]
    i_idx = _slice_axis(scaled.real, k)
    q_idx = _slice_axis(scaled.imag, k)
    i_bits = _levels_to_bits(i_idx, k).reshape(-1, k)
    q_bits = _levels_to_bits(q_idx, k).reshape(-1, k)
    return np.concatenate([i_bits, q_bits], axis=1).reshape(-1)
