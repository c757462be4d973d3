"""Hybrid OMA / power-domain NOMA scheduling.

Users are partitioned into small groups (pairs by default); groups share
the cell through orthogonal resources (OFDMA subbands or TDMA slots)
while the users inside a group are multiplexed in the power domain. The
default pairing matches the users with the most dissimilar channel gains:
strongest with weakest, second strongest with second weakest, inward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import grpa, make_allocator, sort_users
from .link import rate, sinr_noma

__all__ = [
    "PairingPlan",
    "pair_max_disparity",
    "pair_random",
    "schedule_hybrid",
]


@dataclass(frozen=True)
class PairingPlan:
    """Partition of a cell's users into NOMA groups.

    groups hold original user ids; resource_assignment maps group index
    to its orthogonal resource index (subband for ofdma, slot for tdma).
    """

    groups: tuple[tuple[int, ...], ...]
    resource_assignment: tuple[int, ...]
    mode: str = "ofdma"  # ofdma | tdma
    max_group: int = 2

    def __post_init__(self):
        if self.mode not in ("ofdma", "tdma"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 2 <= self.max_group <= 5:
            raise ValueError("max_group must be between 2 and 5")
        members = [u for g in self.groups for u in g]
        if len(members) != len(set(members)):
            raise ValueError("groups must not share users")
        if any(len(g) == 0 or len(g) > self.max_group for g in self.groups):
            raise ValueError("each group must hold 1..max_group users")
        if len(self.resource_assignment) != len(self.groups):
            raise ValueError("one resource per group is required")

    def n_users(self) -> int:
        return sum(len(g) for g in self.groups)


def pair_max_disparity(gains, mode: str = "ofdma",
                       max_group: int = 2) -> PairingPlan:
    """Group the users with the most distinctive channel conditions.

    For pairs: sort by gain (ties by user id) and match strongest with
    weakest, second strongest with second weakest, moving inward; an odd
    user forms a singleton OMA group. For larger groups the sorted list
    is striped so each group spans the full gain range.
    """
    gains = list(gains)
    if not gains:
        raise ValueError("at least one user is required")
    order = sorted(range(len(gains)), key=lambda u: (gains[u], u))
    if max_group == 2:
        groups = []
        lo, hi = 0, len(order) - 1
        while lo < hi:
            groups.append((order[lo], order[hi]))
            lo += 1
            hi -= 1
        if lo == hi:
            groups.append((order[lo],))
    else:
        n_groups = math.ceil(len(order) / max_group)
        groups = [tuple(order[g::n_groups]) for g in range(n_groups)]
    return PairingPlan(groups=tuple(groups),
                       resource_assignment=tuple(range(len(groups))),
                       mode=mode, max_group=max_group)


def pair_random(gains, seed, mode: str = "ofdma") -> PairingPlan:
    """Seeded uniformly random perfect matching (baseline pairing)."""
    gains = list(gains)
    if not gains:
        raise ValueError("at least one user is required")
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(gains)))
    groups = [tuple(int(u) for u in order[i:i + 2])
              for i in range(0, len(order), 2)]
    return PairingPlan(groups=tuple(groups),
                       resource_assignment=tuple(range(len(groups))),
                       mode=mode)


def schedule_hybrid(plan: PairingPlan, gains, noise: float, total: float,
                    allocation: str = "grpa", **allocation_params) -> np.ndarray:
    """Per-user rates under a hybrid OMA/NOMA schedule.

    Every group receives an equal share (1/#groups) of the bandwidth
    (ofdma) or of the time (tdma); numerically the two are identical with
    noise expressed per sample. Within a group the rates follow the
    configured power-allocation strategy through the NOMA SINR chain;
    singleton groups get their whole resource share without superposition.
    """
    gains = np.asarray(list(gains), dtype=float)
    if plan.n_users() != gains.size:
        raise ValueError("plan and gains must cover the same users")
    allocator = make_allocator(allocation, **allocation_params)
    fraction = 1.0 / len(plan.groups)
    rates = np.zeros(gains.size)
    for group in plan.groups:
        if len(group) == 1:
            u = group[0]
            rates[u] = fraction * rate(total * gains[u] ** 2 / noise)
            continue
        channels = sort_users([gains[u] for u in group])
        powers = allocator(channels, noise, total)
        for local, member in enumerate(channels.original_indices):
            u = group[member]
            s = sinr_noma(local, powers, channels.gains[local], noise)
            rates[u] = fraction * rate(s)
    return rates
