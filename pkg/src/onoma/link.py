"""PHY engine for the power-domain NOMA downlink and its OFDMA baseline.

Covers superposition coding, the DCO-OFDM chain, successive interference
cancellation (SIC) with hard minimum-distance detection, SINR/rate
formulas, channel-knowledge impairments and the Monte Carlo estimators
for bit error rate and coverage probability.

Conventions:
* Power coefficients are amplitudes sqrt(P_i/total) on unit-power
  constellation symbols, so the assigned P_i literally sum to the budget
  and the composite stream has unit average power.
* Rates use the 1/2 pre-log of real-valued intensity channels:
  R = 1/2 * log2(1 + SINR).
* All randomness comes from numpy's default PCG64 generator, seeded per
  (master seed, frame index, stream tag, user) so frames are independent
  and reproducible regardless of evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .allocation import PowerVector, make_allocator, sort_users
from .geometry import Luminaire, Receiver, los_gain, receiver_at
from .ofdm import DcoOfdmConfig, dco_ofdm_demodulate, dco_ofdm_modulate
from .qam import (bits_per_symbol, bits_to_symbols, nearest_symbols,
                  symbols_to_bits)

__all__ = [
    "UserSignal",
    "CsiModel",
    "SicResult",
    "LinkScenario",
    "BerEstimate",
    "RateEstimate",
    "superpose",
    "apply_channel",
    "sic_decode",
    "sinr_noma",
    "rate",
    "rate_ofdma",
    "impair_csi",
    "ber_montecarlo",
    "rate_montecarlo",
    "coverage_probability",
    "ofdma_slots",
]

# stream tags for per-frame substream derivation
_TAG_BITS = 5
_TAG_NOISE = 7
_TAG_CSI = 11


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an rng seed or Generator is required")
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class UserSignal:
    """One user's frame of unit-average-power QAM constellation points."""

    user_id: int
    qam_order: int
    symbols: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "symbols",
                           np.asarray(self.symbols, dtype=complex))
        bits_per_symbol(self.qam_order)  # validates the order
        if self.symbols.ndim != 1 or self.symbols.size == 0:
            raise ValueError("symbols must be a non-empty 1-D sequence")
        snapped = nearest_symbols(self.symbols, self.qam_order)
        if np.max(np.abs(self.symbols - snapped)) > 1e-9:
            raise ValueError(
                f"symbols are not {self.qam_order}-QAM constellation points"
            )

    def __len__(self):
        return self.symbols.size

    @property
    def average_power(self) -> float:
        return float(np.mean(np.abs(self.symbols) ** 2))


@dataclass(frozen=True)
class CsiModel:
    """Channel-knowledge impairment: perfect, noisy or outdated.

    noisy:    multiplicative Gaussian error, h_hat = h * (1 + e) with
              e ~ N(0, noise_std^2), redrawn until h_hat > 0.
    outdated: the estimate is the LOS gain at a position displaced by
              `displacement` meters in a random horizontal direction,
              standing in for user movement since the last CSI update.
    """

    kind: str = "perfect"
    noise_std: float = 0.0
    displacement: float = 0.0

    def __post_init__(self):
        if self.kind not in ("perfect", "noisy", "outdated"):
            raise ValueError(f"unknown CSI kind {self.kind!r}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.displacement < 0:
            raise ValueError("displacement must be >= 0")


@dataclass(frozen=True, eq=False)
class SicResult:
    """Outcome of one SIC pass at a single receiving terminal.

    decoded maps each decoded sorted-user position to its hard symbol
    decisions; positions are visited in descending allocated-power order
    until the terminal's own signal is reached. cancellation_error_power
    records the mean residual power after each subtraction stage, as a
    cancellation-quality diagnostic. success[j] flags whether user j's
    signal was decoded at this terminal.
    """

    decoded: dict
    cancellation_error_power: tuple[float, ...]
    success: tuple[bool, ...]
    decode_order: tuple[int, ...]


def superpose(signals, powers) -> np.ndarray:
    """Superposition-coded composite stream sum_i sqrt(P_i/total) x_i.

    signals and powers must be aligned (sorted-user order). Accepts
    UserSignal objects or plain complex arrays, and a PowerVector or any
    power sequence. The composite has unit average power for independent
    unit-power user streams.
    """
    arrays = [s.symbols if isinstance(s, UserSignal) else
              np.asarray(s, dtype=complex) for s in signals]
    if isinstance(powers, PowerVector):
        p = powers.as_array()
        total = powers.total
    else:
        p = np.asarray(powers, dtype=float)
        total = float(p.sum())
    if len(arrays) != p.size:
        raise ValueError("signals and powers must have the same length")
    if not arrays:
        raise ValueError("at least one signal is required")
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError("all user streams must have the same length")
    coeff = np.sqrt(p / total)
    out = np.zeros(length, dtype=complex)
    for c, a in zip(coeff, arrays):
        out += c * a
    return out


def apply_channel(samples, gain: float, noise_power: float, rng_seed) -> np.ndarray:
    """Flat LOS channel with additive white Gaussian noise: y = h x + n.

    Deterministic under a fixed seed; noise_power is the electrical
    variance per time sample.
    """
    x = np.asarray(samples, dtype=float)
    y = gain * x
    if noise_power < 0:
        raise ValueError("noise_power must be >= 0")
    if noise_power > 0:
        rng = _as_rng(rng_seed)
        y = y + rng.normal(0.0, math.sqrt(noise_power), x.shape)
    return y


def sic_decode(received, gains_hat, powers, own_user: int, qam_orders,
               residual_fraction: float = 0.0) -> SicResult:
    """Successive interference cancellation at one receiving terminal.

    Iteratively hard-decodes the highest-power remaining user with a
    minimum-distance detector, reconstructs its contribution from the
    terminal's own estimated gain (gains_hat[own_user]) and subtracts it,
    until the terminal's own signal is decoded. Users with less allocated
    power than the terminal's own are treated as noise. A nonzero
    residual_fraction leaves that fraction of each subtracted signal in
    place, modelling imperfect cancellation.

    received are frequency-domain data symbols; gains_hat, powers and
    qam_orders are aligned with the sorted-user order of the allocation.
    """
    y = np.array(received, dtype=complex)
    if isinstance(powers, PowerVector):
        p = powers.as_array()
        total = powers.total
    else:
        p = np.asarray(powers, dtype=float)
        total = float(p.sum())
    n = p.size
    if not 0 <= own_user < n:
        raise ValueError(f"unknown user id {own_user} for {n} users")
    if len(gains_hat) != n or len(qam_orders) != n:
        raise ValueError("gains_hat and qam_orders must align with powers")
    if not 0.0 <= residual_fraction <= 1.0:
        raise ValueError("residual_fraction must be in [0, 1]")
    g_own = float(gains_hat[own_user])
    if g_own <= 0:
        raise ValueError("own estimated gain must be positive")

    order = np.argsort(-p, kind="stable")  # descending allocated power
    decoded = {}
    cancel = []
    visited = []
    for j in order:
        j = int(j)
        visited.append(j)
        amp = g_own * math.sqrt(p[j] / total)
        decoded[j] = nearest_symbols(y / amp, qam_orders[j])
        if j == own_user:
            break
        y = y - (1.0 - residual_fraction) * amp * decoded[j]
        cancel.append(float(np.mean(np.abs(y) ** 2)))
    success = tuple(j in decoded for j in range(n))
    return SicResult(decoded=decoded,
                     cancellation_error_power=tuple(cancel),
                     success=success,
                     decode_order=tuple(visited))


def sinr_noma(i: int, powers, gain_i: float, noise: float) -> float:
    """Post-SIC SINR of sorted user i.

    SINR_i = P_i h_i^2 / (h_i^2 * sum_{j: P_j < P_i} P_j + noise); only
    users with strictly less allocated power (decoded later in the SIC
    chain) interfere. For the lowest-power user the sum is empty.
    """
    p = powers.as_array() if isinstance(powers, PowerVector) \
        else np.asarray(powers, dtype=float)
    if noise <= 0:
        raise ValueError("noise must be positive")
    p_i = p[i]
    interference = gain_i * gain_i * float(p[p < p_i].sum())
    return float(p_i * gain_i * gain_i / (interference + noise))


def rate(sinr) -> float:
    """Achievable rate 1/2 log2(1 + SINR), bits/s/Hz.

    The 1/2 pre-log reflects real-valued intensity-modulated signaling.
    """
    return 0.5 * float(np.log2(1.0 + sinr))


def rate_ofdma(gains, noise: float, total: float, n_users: int | None = None):
    """Per-user OFDMA baseline rates.

    Bandwidth is split equally (1/N of the subcarriers each) and every
    user is served at the full LED power on its own subcarriers, with no
    inter-user interference: R_i = (1/N) * 1/2 * log2(1 + total h_i^2 / noise).
    """
    g = np.asarray(gains, dtype=float)
    n = n_users if n_users is not None else g.size
    if n < 1:
        raise ValueError("n_users must be >= 1")
    return (0.5 / n) * np.log2(1.0 + total * g * g / noise)


def impair_csi(true_gain: float, model: CsiModel, tx: Luminaire | None = None,
               rx: Receiver | None = None, rng_seed=None) -> float:
    """Estimated channel gain under the given CSI impairment."""
    if model.kind == "perfect":
        return float(true_gain)
    if model.kind == "noisy":
        if model.noise_std == 0.0:
            return float(true_gain)
        rng = _as_rng(rng_seed)
        for _ in range(1000):
            h_hat = true_gain * (1.0 + rng.normal(0.0, model.noise_std))
            if h_hat > 0.0:
                return float(h_hat)
        raise RuntimeError("could not draw a positive noisy gain estimate")
    # outdated: stale estimate taken at a horizontally displaced position
    if tx is None or rx is None:
        raise ValueError("outdated CSI requires the tx/rx geometry")
    if model.displacement == 0.0:
        return los_gain(tx, rx)
    rng = _as_rng(rng_seed)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    moved = receiver_at(rx,
                        rx.position[0] + model.displacement * math.cos(theta),
                        rx.position[1] + model.displacement * math.sin(theta),
                        rx.position[2])
    return los_gain(tx, moved)


@dataclass(frozen=True)
class LinkScenario:
    """Everything a Monte Carlo link run needs.

    True channel gains may be given directly or derived from (tx, users)
    geometry. noise_power is the electrical noise variance per time
    sample at each photodiode. The allocation strategy sees the
    per-subcarrier post-FFT noise (n_subcarriers * noise_power) so that
    allocations match the analytic rate computations at the same SNR.
    """

    gains: tuple[float, ...] | None = None
    tx: Luminaire | None = None
    users: tuple[Receiver, ...] | None = None
    total_power: float = 1.0
    noise_power: float = 1e-2
    scheme: str = "noma"  # noma | ofdma
    allocation: str = "grpa"
    allocation_params: dict = field(default_factory=dict)
    qam_order: int = 4
    ofdm: DcoOfdmConfig = field(default_factory=DcoOfdmConfig)
    csi: CsiModel = field(default_factory=CsiModel)
    sic_residual: float = 0.0
    rx_template: Receiver | None = None
    placement_region: tuple[float, float, float, float] | None = None
    n_users: int | None = None

    def __post_init__(self):
        if self.scheme not in ("noma", "ofdma"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.gains is not None:
            object.__setattr__(self, "gains",
                               tuple(float(g) for g in self.gains))
        if self.users is not None:
            object.__setattr__(self, "users", tuple(self.users))

    def resolve_gains(self) -> np.ndarray:
        if self.gains is not None:
            return np.asarray(self.gains, dtype=float)
        if self.tx is None or self.users is None:
            raise ValueError("scenario needs gains or (tx, users) geometry")
        return np.array([los_gain(self.tx, rx) for rx in self.users])

    def replace(self, **kw) -> "LinkScenario":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class BerEstimate:
    ber: np.ndarray
    ci_halfwidth: np.ndarray  # 95% normal-approximation half-width
    bit_errors: np.ndarray
    bits: np.ndarray


@dataclass(frozen=True, eq=False)
class RateEstimate:
    rates: np.ndarray
    ci_halfwidth: np.ndarray


def ofdma_slots(n_data: int, n_users: int):
    """Round-robin data-slot assignment for the OFDMA baseline."""
    return [np.arange(u, n_data, n_users) for u in range(n_users)]


def _estimated_gains(scenario, gains, seed, frame_idx):
    ghat = np.empty(gains.size)
    for u in range(gains.size):
        rng = np.random.default_rng([seed, frame_idx, _TAG_CSI, u])
        rx = scenario.users[u] if scenario.users is not None else None
        ghat[u] = impair_csi(gains[u], scenario.csi, scenario.tx, rx, rng)
    return ghat


def _static_link_state(scenario, gains):
    """Per-run CSI/allocation state when it does not vary across frames."""
    if scenario.csi.kind != "perfect":
        return None
    ghat = gains.copy()
    if scenario.scheme == "ofdma":
        return (ghat, None, None)
    channels = sort_users(ghat)
    allocator = make_allocator(scenario.allocation, **scenario.allocation_params)
    alloc_noise = scenario.noise_power * scenario.ofdm.n_subcarriers
    powers = allocator(channels, alloc_noise, scenario.total_power)
    return (ghat, channels, powers)


def _frame_bit_errors(scenario, gains, seed, frame_idx, static=None):
    """(bit errors, bits sent) per user for one seeded frame."""
    cfg = scenario.ofdm
    n_users = gains.size
    order = scenario.qam_order
    bps = bits_per_symbol(order)
    errors = np.zeros(n_users, dtype=np.int64)
    nbits = np.zeros(n_users, dtype=np.int64)

    if scenario.scheme == "ofdma":
        slots = ofdma_slots(cfg.n_data, n_users)
        ghat = static[0] if static is not None \
            else _estimated_gains(scenario, gains, seed, frame_idx)
        stream = np.zeros(cfg.n_data, dtype=complex)
        tx_bits = []
        for u in range(n_users):
            rng = np.random.default_rng([seed, frame_idx, _TAG_BITS, u])
            bits = rng.integers(0, 2, slots[u].size * bps)
            tx_bits.append(bits)
            stream[slots[u]] = bits_to_symbols(bits, order)
        samples = dco_ofdm_modulate(stream, cfg)
        for u in range(n_users):
            rng = np.random.default_rng([seed, frame_idx, _TAG_NOISE, u])
            y = apply_channel(samples, gains[u], scenario.noise_power, rng)
            rx_stream = dco_ofdm_demodulate(y, cfg)
            est = nearest_symbols(rx_stream[slots[u]] / ghat[u], order)
            rx_bits = symbols_to_bits(est, order)
            errors[u] = np.count_nonzero(rx_bits != tx_bits[u])
            nbits[u] = tx_bits[u].size
        return errors, nbits

    # NOMA: allocation and user ordering derive from the transmitter's
    # (possibly impaired) channel knowledge; propagation uses true gains.
    if static is not None:
        ghat, channels, powers = static
    else:
        ghat = _estimated_gains(scenario, gains, seed, frame_idx)
        channels = sort_users(ghat)
        allocator = make_allocator(scenario.allocation,
                                   **scenario.allocation_params)
        alloc_noise = scenario.noise_power * cfg.n_subcarriers
        powers = allocator(channels, alloc_noise, scenario.total_power)
    tx_bits = []
    symbols = []
    for u in range(n_users):
        rng = np.random.default_rng([seed, frame_idx, _TAG_BITS, u])
        bits = rng.integers(0, 2, cfg.n_data * bps)
        tx_bits.append(bits)
        symbols.append(bits_to_symbols(bits, order))
    aligned = [symbols[u] for u in channels.original_indices]
    composite = superpose(aligned, powers)
    samples = dco_ofdm_modulate(composite, cfg)
    ghat_sorted = [ghat[u] for u in channels.original_indices]
    orders = [order] * n_users
    for u in range(n_users):
        rng = np.random.default_rng([seed, frame_idx, _TAG_NOISE, u])
        y = apply_channel(samples, gains[u], scenario.noise_power, rng)
        rx_stream = dco_ofdm_demodulate(y, cfg)
        pos = channels.position_of(u)
        result = sic_decode(rx_stream, ghat_sorted, powers, pos, orders,
                            scenario.sic_residual)
        rx_bits = symbols_to_bits(result.decoded[pos], order)
        errors[u] = np.count_nonzero(rx_bits != tx_bits[u])
        nbits[u] = tx_bits[u].size
    return errors, nbits


def ber_montecarlo(scenario: LinkScenario, n_frames: int, seed: int,
                   threads: int | None = None) -> BerEstimate:
    """Monte Carlo per-user BER through the full transmit/receive chain.

    Frames are independent given per-frame seeds derived from
    (seed, frame index), so results are bit-identical for any thread
    count; aggregation sums integer error counts before one division.
    Reports the 95% normal-approximation confidence half-width.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    gains = scenario.resolve_gains()
    static = _static_link_state(scenario, gains)

    def work(f):
        return _frame_bit_errors(scenario, gains, seed, f, static)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(n_frames)))
    else:
        results = [work(f) for f in range(n_frames)]
    errors = np.sum([r[0] for r in results], axis=0)
    bits = np.sum([r[1] for r in results], axis=0)
    ber = errors / bits
    ci = 1.96 * np.sqrt(np.maximum(ber * (1.0 - ber), 0.0) / bits)
    return BerEstimate(ber=ber, ci_halfwidth=ci, bit_errors=errors, bits=bits)


def _frame_rates(scenario, gains, seed, frame_idx):
    """Analytic per-user NOMA rates for one CSI realization."""
    ghat = _estimated_gains(scenario, gains, seed, frame_idx)
    channels = sort_users(ghat)
    allocator = make_allocator(scenario.allocation, **scenario.allocation_params)
    powers = allocator(channels, scenario.noise_power, scenario.total_power)
    out = np.empty(gains.size)
    for u in range(gains.size):
        pos = channels.position_of(u)
        out[u] = rate(sinr_noma(pos, powers, gains[u], scenario.noise_power))
    return out


def rate_montecarlo(scenario: LinkScenario, n_frames: int, seed: int) -> RateEstimate:
    """Per-user NOMA rates averaged over seeded CSI realizations.

    With perfect CSI every frame is identical, so a single evaluation is
    performed and the confidence half-width is zero.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    gains = scenario.resolve_gains()
    if scenario.csi.kind == "perfect":
        rates = _frame_rates(scenario, gains, seed, 0)
        return RateEstimate(rates=rates, ci_halfwidth=np.zeros_like(rates))
    samples = np.stack([_frame_rates(scenario, gains, seed, f)
                        for f in range(n_frames)])
    rates = samples.mean(axis=0)
    ci = 1.96 * samples.std(axis=0, ddof=1) / math.sqrt(n_frames) \
        if n_frames > 1 else np.zeros_like(rates)
    return RateEstimate(rates=rates, ci_halfwidth=ci)


def coverage_probability(scenario: LinkScenario, target_rates, n_trials: int,
                         seed: int) -> float:
    """Fraction of random placements where every user meets its target.

    Each trial places the users uniformly in the scenario's placement
    region on the receiver plane, allocates power with the configured
    strategy and checks every user's achieved rate against its target.
    The same seed reproduces the same placements, so coverage is monotone
    non-increasing under a common scaling of the targets.
    """
    targets = np.asarray(target_rates, dtype=float)
    if scenario.tx is None or scenario.rx_template is None \
            or scenario.placement_region is None:
        raise ValueError("coverage needs tx, rx_template and placement_region")
    n_users = scenario.n_users if scenario.n_users is not None else targets.size
    if targets.size != n_users:
        raise ValueError("one target rate per user is required")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    x0, y0, x1, y1 = scenario.placement_region
    z = scenario.rx_template.position[2]
    allocator = make_allocator(scenario.allocation, **scenario.allocation_params)
    covered = 0
    for t in range(n_trials):
        rng = np.random.default_rng([seed, t])
        xs = rng.uniform(x0, x1, n_users)
        ys = rng.uniform(y0, y1, n_users)
        gains = np.array([
            los_gain(scenario.tx, receiver_at(scenario.rx_template,
                                              xs[u], ys[u], z))
            for u in range(n_users)
        ])
        try:
            channels = sort_users(gains)
            powers = allocator(channels, scenario.noise_power,
                               scenario.total_power)
        except ValueError:
            # degenerate placement (e.g. zero gain under GRPA): only the
            # all-zero target profile is satisfiable
            if np.all(targets <= 0.0):
                covered += 1
            continue
        rates = np.array([
            rate(sinr_noma(channels.position_of(u), powers, gains[u],
                           scenario.noise_power))
            for u in range(n_users)
        ])
        if np.all(rates >= targets):
            covered += 1
    return covered / n_trials
