"""DC-biased optical OFDM (DCO-OFDM).

Data occupies subcarriers 1 .. N/2-1; subcarriers 0 and N/2 carry zero and
the upper half mirrors the data conjugated (Hermitian symmetry), so the
IFFT output is real. A DC bias is added and everything below the clip
floor is clipped to the floor, producing the nonnegative drive signal of
an intensity-modulated LED. Without clipping the chain is exactly
invertible; demodulation drops the cyclic prefix, applies the forward FFT
and extracts the data subcarriers (which also removes the DC bias, since
the bias only lands on subcarrier 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DcoOfdmConfig",
    "hermitian_spectrum",
    "dco_ofdm_modulate",
    "dco_ofdm_demodulate",
    "data_subcarriers",
]


@dataclass(frozen=True)
class DcoOfdmConfig:
    """DCO-OFDM parameters.

    dc_bias None selects the per-call convention of 3x the standard
    deviation of the unbiased time signal. clip_floor may be -inf to
    disable clipping entirely.
    """

    n_subcarriers: int = 64
    dc_bias: float | None = None
    clip_floor: float = 0.0
    cyclic_prefix_len: int = 8

    def __post_init__(self):
        n = self.n_subcarriers
        if n < 8 or n & (n - 1):
            raise ValueError("n_subcarriers must be a power of two >= 8")
        if not 0 <= self.cyclic_prefix_len < n:
            raise ValueError("cyclic_prefix_len must be in [0, n_subcarriers)")

    @property
    def n_data(self) -> int:
        return self.n_subcarriers // 2 - 1

    @property
    def symbol_len(self) -> int:
        return self.n_subcarriers + self.cyclic_prefix_len


def data_subcarriers(cfg: DcoOfdmConfig) -> np.ndarray:
    """Indices of the data-bearing subcarriers (1 .. N/2-1)."""
    return np.arange(1, cfg.n_subcarriers // 2)


def hermitian_spectrum(blocks: np.ndarray, n_subcarriers: int) -> np.ndarray:
    """Hermitian-symmetric spectra from data blocks of length N/2-1."""
    blocks = np.atleast_2d(blocks)
    n = n_subcarriers
    if blocks.shape[1] != n // 2 - 1:
        raise ValueError("each block must hold N/2-1 data symbols")
    spec = np.zeros((blocks.shape[0], n), dtype=complex)
    spec[:, 1:n // 2] = blocks
    spec[:, n // 2 + 1:] = np.conj(blocks[:, ::-1])
    return spec


def dco_ofdm_modulate(frequency_symbols, cfg: DcoOfdmConfig) -> np.ndarray:
    """Frequency-domain data stream -> real, clipped, biased time samples.

    The stream length must be a multiple of the N/2-1 data slots per OFDM
    symbol. Each block is Hermitian-mapped, IFFT'd, cyclic-prefixed, then
    biased and clipped.
    """
    stream = np.asarray(frequency_symbols, dtype=complex).ravel()
    n_data = cfg.n_data
    if stream.size == 0 or stream.size % n_data:
        raise ValueError(
            f"stream length must be a positive multiple of {n_data} data slots"
        )
    blocks = stream.reshape(-1, n_data)
    spec = hermitian_spectrum(blocks, cfg.n_subcarriers)
    time_sig = np.fft.ifft(spec, axis=1).real
    if cfg.cyclic_prefix_len:
        cp = time_sig[:, -cfg.cyclic_prefix_len:]
        time_sig = np.concatenate([cp, time_sig], axis=1)
    out = time_sig.ravel()
    bias = cfg.dc_bias
    if bias is None:
        bias = 3.0 * float(np.std(out))
    out = out + bias
    if np.isfinite(cfg.clip_floor):
        out = np.maximum(out, cfg.clip_floor)
    return out


def dco_ofdm_demodulate(samples, cfg: DcoOfdmConfig) -> np.ndarray:
    """Received time samples -> frequency-domain data stream.

    Exact inverse of dco_ofdm_modulate when no sample was clipped.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    sym_len = cfg.symbol_len
    if samples.size == 0 or samples.size % sym_len:
        raise ValueError(f"sample count must be a positive multiple of {sym_len}")
    frames = samples.reshape(-1, sym_len)
    if cfg.cyclic_prefix_len:
        frames = frames[:, cfg.cyclic_prefix_len:]
    if cfg.dc_bias is not None:
        frames = frames - cfg.dc_bias
    spec = np.fft.fft(frames, axis=1)
    return spec[:, 1:cfg.n_subcarriers // 2].ravel()
