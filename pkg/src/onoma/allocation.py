"""Per-user power allocation over one LED's transmit budget.

Users are sorted by channel gain in ascending order (index 1 is the
weakest) and the weakest user receives the most power. Three strategies:

* fixed power allocation (FPA):        P_i = alpha * P_{i-1}, 0 < alpha < 1
* gain ratio power allocation (GRPA):  P_i = (h_1 / h_i)^i * P_{i-1}
* exhaustive grid search over the power simplex for a configurable
  objective, optionally under per-user minimum-rate constraints.

Both recurrences are anchored by the total-power constraint: the assigned
powers sum to the LED's transmit budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SortedUserChannels",
    "PowerVector",
    "InfeasibleError",
    "sort_users",
    "fpa",
    "grpa",
    "optimal_search",
    "make_allocator",
]

_SUM_RTOL = 1e-12


class InfeasibleError(ValueError):
    """No allocation on the search grid satisfies the rate constraints."""


@dataclass(frozen=True)
class SortedUserChannels:
    """Channel gains in ascending order plus the sorting permutation.

    original_indices[k] is the user id that ended up at sorted position k.
    Ties are broken by ascending user id, so the permutation is
    deterministic and invertible.
    """

    gains: tuple[float, ...]
    original_indices: tuple[int, ...]

    def __post_init__(self):
        if len(self.gains) == 0:
            raise ValueError("at least one user is required")
        if len(self.gains) != len(self.original_indices):
            raise ValueError("gains and original_indices must align")
        if any(g < 0 for g in self.gains):
            raise ValueError("channel gains must be non-negative")
        if not any(g > 0 for g in self.gains):
            raise ValueError("at least one channel gain must be positive")
        if any(a > b for a, b in zip(self.gains, self.gains[1:])):
            raise ValueError("gains must be sorted in ascending order")
        if sorted(self.original_indices) != list(range(len(self.gains))):
            raise ValueError("original_indices must be a permutation")

    def __len__(self):
        return len(self.gains)

    def position_of(self, user_id: int) -> int:
        """Sorted position of an original user id."""
        return self.original_indices.index(user_id)


def sort_users(gains) -> SortedUserChannels:
    """Sort users ascending by channel gain, ties by ascending user id."""
    arr = np.asarray(list(gains), dtype=float)
    if arr.size == 0:
        raise ValueError("cannot sort an empty gain list")
    order = np.argsort(arr, kind="stable")
    return SortedUserChannels(
        gains=tuple(float(arr[i]) for i in order),
        original_indices=tuple(int(i) for i in order),
    )


@dataclass(frozen=True)
class PowerVector:
    """Per-user powers aligned with the sorted-user order.

    Entries are positive, non-increasing (the weakest user gets the most
    power) and sum to `total` within 1e-12 relative tolerance.
    """

    powers: tuple[float, ...]
    total: float

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if self.total <= 0:
            raise ValueError("total power must be positive")
        if len(self.powers) == 0:
            raise ValueError("power vector must be non-empty")
        if any(p <= 0 for p in self.powers):
            raise ValueError("all power entries must be positive")
        if any(a < b for a, b in zip(self.powers, self.powers[1:])):
            raise ValueError("powers must be non-increasing across sorted users")
        if abs(math.fsum(self.powers) - self.total) > _SUM_RTOL * self.total:
            raise ValueError("powers must sum to the total budget")

    def __len__(self):
        return len(self.powers)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.powers, dtype=float)


def fpa(alpha: float, n_users: int, total: float) -> PowerVector:
    """Fixed power allocation P_i = alpha * P_{i-1}, scaled to the budget.

    The geometric recurrence plus the sum constraint force
    P_1 = total * (1 - alpha) / (1 - alpha^N). Depends only on
    (alpha, n_users, total), never on the gain values.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in the open interval (0, 1), got {alpha}")
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    if total <= 0:
        raise ValueError("total power must be positive")
    p1 = total * (1.0 - alpha) / (1.0 - alpha ** n_users)
    powers = [p1]
    for _ in range(n_users - 1):
        powers.append(powers[-1] * alpha)
    return PowerVector(powers=tuple(powers), total=total)


def grpa(channels: SortedUserChannels, total: float) -> PowerVector:
    """Gain ratio power allocation P_i = (h_1 / h_i)^i * P_{i-1}.

    i is the 1-based sorted index (ascending gains), so the exponent for
    the second user is 2. The recurrence is scaled so the powers sum to
    the budget. All gains must be strictly positive.
    """
    if total <= 0:
        raise ValueError("total power must be positive")
    if any(g <= 0 for g in channels.gains):
        raise ValueError("GRPA requires strictly positive channel gains")
    n = len(channels)
    if n == 1:
        return PowerVector(powers=(total,), total=total)
    h1 = channels.gains[0]
    raw = [1.0]
    for i in range(2, n + 1):
        ratio = (h1 / channels.gains[i - 1]) ** i
        raw.append(raw[-1] * ratio)
    scale = total / math.fsum(raw)
    return PowerVector(powers=tuple(p * scale for p in raw), total=total)


def _descending_compositions(total_ticks: int, n: int):
    """Strictly decreasing integer compositions k_1 > ... > k_n >= 1."""
    if n == 1:
        yield (total_ticks,)
        return

    def rec(prefix, remaining, slots):
        if slots == 1:
            if 1 <= remaining < prefix[-1]:
                yield prefix + (remaining,)
            return
        # k must exceed remaining/slots and leave room for smaller parts
        lo = remaining // slots + 1
        hi = min(prefix[-1] - 1, remaining - (slots - 1))
        for k in range(hi, lo - 1, -1):
            yield from rec(prefix + (k,), remaining - k, slots - 1)

    for k1 in range(total_ticks - n + 1, total_ticks // n, -1):
        yield from rec((k1,), total_ticks - k1, n - 1)


def optimal_search(channels: SortedUserChannels, noise: float, total: float,
                   objective: str = "sum_rate", min_rates=None,
                   grid_points: int = 101) -> PowerVector:
    """Exhaustive search over a uniform grid of the power simplex.

    Candidates are the grid points of {P_i > 0, sum P_i = total} with
    `grid_points` levels per dimension, restricted to strictly decreasing
    allocations so the SIC decode order is always well defined (this also
    keeps every entry at least total/(grid_points-1), far above the 1e-9
    positivity floor). The candidate count grows combinatorially with the
    user count; intended for N <= 3.

    Objectives (rates via the NOMA SINR chain):
      sum_rate      maximize the sum of user rates
      max_min_rate  maximize the worst user rate
      coverage      maximize the worst rate margin over `min_rates`

    When `min_rates` is given, candidates must satisfy R_i >= min_rates[i]
    for every user; InfeasibleError is raised when none does. Ties on the
    objective are broken toward more power for the weakest user, then
    lexicographically on the full power tuple.
    """
    from .link import rate, sinr_noma  # deferred: link imports this module

    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if objective not in ("sum_rate", "max_min_rate", "coverage"):
        raise ValueError(f"unknown objective {objective!r}")
    if noise <= 0:
        raise ValueError("noise must be positive")
    if total <= 0:
        raise ValueError("total power must be positive")
    n = len(channels)
    if min_rates is not None and len(min_rates) not in (0, n):
        raise ValueError("min_rates must be empty or one entry per user")
    targets = None
    if min_rates is not None and len(min_rates) == n:
        targets = np.asarray(min_rates, dtype=float)
    if n == 1:
        pv = PowerVector(powers=(total,), total=total)
        if targets is not None:
            r = rate(sinr_noma(0, pv.powers, channels.gains[0], noise))
            if r < targets[0]:
                raise InfeasibleError("single-user rate below its minimum")
        return pv

    ticks = grid_points - 1
    gains = np.asarray(channels.gains, dtype=float)
    best_key = None
    best_powers = None
    for comp in _descending_compositions(ticks, n):
        powers = tuple(k / ticks * total for k in comp)
        rates = np.array([rate(sinr_noma(i, powers, gains[i], noise))
                          for i in range(n)])
        if targets is not None and np.any(rates < targets):
            continue
        if objective == "sum_rate":
            obj = float(rates.sum())
        elif objective == "max_min_rate":
            obj = float(rates.min())
        else:  # coverage: worst rate margin over the targets
            obj = float((rates - targets).min()) if targets is not None \
                else float(rates.min())
        key = (obj, powers)
        if best_key is None or key > best_key:
            best_key = key
            best_powers = powers
    if best_powers is None:
        raise InfeasibleError("no grid allocation satisfies the minimum rates")
    return PowerVector(powers=best_powers, total=total)


def make_allocator(strategy: str, **params):
    """Allocation strategy by name, as used by scenario configs.

    Returns a callable (channels, noise, total) -> PowerVector. FPA
    ignores the gains and the noise level.
    """
    if strategy == "fpa":
        alpha = params.get("alpha", 0.3)

        def _fpa(channels, noise, total):
            return fpa(alpha, len(channels), total)

        return _fpa
    if strategy == "grpa":
        def _grpa(channels, noise, total):
            return grpa(channels, total)

        return _grpa
    if strategy == "optimal":
        objective = params.get("objective", "max_min_rate")
        grid_points = params.get("grid_points", 101)
        min_rates = params.get("min_rates")

        def _opt(channels, noise, total):
            return optimal_search(channels, noise, total, objective=objective,
                                  min_rates=min_rates, grid_points=grid_points)

        return _opt
    raise ValueError(f"unknown allocation strategy {strategy!r}")
