"""Multi-LED network layer: reuse groups, overlap classes, association.

A point is "covered" by an LED when the received optical power there
exceeds a configurable threshold. Overlap classes for a frequency-reuse-2
deployment:

    L1  exactly one covering LED (no interference)
    L2  two covering LEDs on different bands (no interference)
    L3  two covering LEDs sharing a band (load-balanced)
    L4  four or more covering LEDs (served on a reserved band)

Three covering LEDs are not part of the published taxonomy; they are
classified by the same group logic (any same-band pair behaves like L3,
otherwise L2) and the case is logged.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Luminaire, Receiver, RoomConfig, los_gain, receiver_at

__all__ = [
    "CellLayout",
    "AreaClass",
    "Association",
    "AssociationMap",
    "ZoomResult",
    "GreyHoleError",
    "coverage_set",
    "classify_area",
    "assign_frequency_groups",
    "associate_users",
    "handover_count",
    "cell_zoom",
    "area_map",
    "write_area_map_csv",
    "read_mobility_trace",
]

logger = logging.getLogger(__name__)

# power within this factor of the threshold counts as the cell edge (3 dB)
EDGE_MARGIN = 10.0 ** 0.3


class GreyHoleError(Exception):
    """A probe point is covered by no LED."""


@dataclass(frozen=True)
class CellLayout:
    """LEDs of one room plus the reserved-band share for L4 zones."""

    luminaires: tuple[Luminaire, ...]
    room: RoomConfig
    reserved_fraction: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "luminaires", tuple(self.luminaires))
        if not self.luminaires:
            raise ValueError("a layout needs at least one luminaire")
        groups = {lum.frequency_group for lum in self.luminaires}
        if not groups <= {0, 1}:
            raise ValueError(f"frequency groups must be 0 or 1, got {groups}")
        if not 0.0 < self.reserved_fraction < 1.0:
            raise ValueError("reserved_fraction must be in (0, 1)")

    def groups(self) -> tuple[int, ...]:
        return tuple(lum.frequency_group for lum in self.luminaires)


@dataclass(frozen=True)
class AreaClass:
    label: str  # L1 | L2 | L3 | L4
    covering_leds: frozenset[int]

    def __post_init__(self):
        if self.label not in ("L1", "L2", "L3", "L4"):
            raise ValueError(f"unknown area label {self.label!r}")


@dataclass(frozen=True)
class Association:
    user: int
    led_ids: tuple[int, ...]
    fov: float
    band: str  # "group" or "reserved"
    grey_hole: bool = False


@dataclass(frozen=True)
class AssociationMap:
    entries: tuple[Association, ...]

    def serving(self, user: int) -> tuple[int, ...]:
        return self.entries[user].led_ids


@dataclass(frozen=True)
class ZoomResult:
    half_angles: tuple[float, ...]  # chosen setting per LED
    grey_holes: tuple[int, ...]  # indices of users left uncovered
    overlap_users: int


def _received_powers(point, layout: CellLayout, rx_template: Receiver,
                     half_angles=None) -> np.ndarray:
    x, y = float(point[0]), float(point[1])
    rx = receiver_at(rx_template, x, y, layout.room.receiver_plane_height)
    powers = np.empty(len(layout.luminaires))
    for i, lum in enumerate(layout.luminaires):
        tx = lum if half_angles is None else lum.with_half_angle(half_angles[i])
        powers[i] = tx.optical_power * los_gain(tx, rx)
    return powers


def coverage_set(point, layout: CellLayout, threshold: float,
                 rx_template: Receiver) -> set[int]:
    """Ids of the LEDs whose received power at the point exceeds threshold."""
    if threshold <= 0:
        raise ValueError("coverage threshold must be positive")
    powers = _received_powers(point, layout, rx_template)
    return {int(i) for i in np.nonzero(powers > threshold)[0]}


def classify_area(point, layout: CellLayout, threshold: float,
                  rx_template: Receiver) -> AreaClass:
    """Overlap class of a receiver-plane point; GreyHoleError if uncovered."""
    covering = coverage_set(point, layout, threshold, rx_template)
    if not covering:
        raise GreyHoleError(f"point {tuple(point)} is covered by no LED")
    groups = layout.groups()
    if len(covering) == 1:
        label = "L1"
    elif len(covering) >= 4:
        label = "L4"
    else:
        covered_groups = [groups[i] for i in sorted(covering)]
        if len(covering) == 3:
            logger.debug("3-LED overlap at %s classified by group logic",
                         tuple(point))
        # any same-band pair among the covering LEDs behaves like L3
        label = "L3" if len(set(covered_groups)) < len(covered_groups) else "L2"
    return AreaClass(label=label, covering_leds=frozenset(covering))


def assign_frequency_groups(layout: CellLayout) -> CellLayout:
    """Checkerboard reuse-2 group assignment over the LED grid.

    LEDs are ranked by their distinct x and y coordinates; group is
    (x rank + y rank) mod 2, which minimizes same-group adjacency on grid
    layouts and is deterministic for any layout.
    """
    xs = sorted({lum.position[0] for lum in layout.luminaires})
    ys = sorted({lum.position[1] for lum in layout.luminaires})
    relabeled = []
    for lum in layout.luminaires:
        ix = xs.index(lum.position[0])
        iy = ys.index(lum.position[1])
        relabeled.append(Luminaire(lum.position, lum.half_angle,
                                   lum.optical_power, (ix + iy) % 2,
                                   lum.zoom_settings))
    return CellLayout(tuple(relabeled), layout.room, layout.reserved_fraction)


def associate_users(users, layout: CellLayout, threshold: float,
                    policy: str = "load_balance") -> AssociationMap:
    """Attach each user to its serving LED(s), in user-id order.

    L1 users attach to their covering LED, L2 users to both (different
    bands), L3 users per the load-balancing rule (fewest attached users,
    tie toward the lower LED id; policy "strongest" picks the stronger
    LED instead) and L4 users to the strongest covering LED on the
    reserved band. Uncovered users are flagged as sitting in a grey hole.
    """
    if policy not in ("load_balance", "strongest"):
        raise ValueError(f"unknown association policy {policy!r}")
    attached = [0] * len(layout.luminaires)
    entries = []
    for uid, rx in enumerate(users):
        point = rx.position[:2]
        powers = _received_powers(point, layout, rx)
        covering = sorted(int(i) for i in np.nonzero(powers > threshold)[0])
        if not covering:
            entries.append(Association(uid, (), rx.fov, "group", grey_hole=True))
            continue
        try:
            label = classify_area(point, layout, threshold, rx).label
        except GreyHoleError:  # pragma: no cover - covering is non-empty
            label = "L1"
        band = "group"
        if label in ("L1", "L2"):
            chosen = tuple(covering)
        elif label == "L3":
            if policy == "strongest":
                chosen = (max(covering, key=lambda i: powers[i]),)
            else:
                chosen = (min(covering, key=lambda i: (attached[i], i)),)
        else:  # L4: strongest LED on the reserved band
            chosen = (max(covering, key=lambda i: (powers[i], -i)),)
            band = "reserved"
        for led in chosen:
            attached[led] += 1
        entries.append(Association(uid, chosen, rx.fov, band))
    return AssociationMap(entries=tuple(entries))


def handover_count(mobility_trace, layout: CellLayout, fov_policy: str,
                   threshold: float, rx_template: Receiver) -> int:
    """Serving-LED changes while replaying a timestamped position trace.

    The terminal stays on its serving LED while that LED keeps covering
    it, and hands over to the strongest covering LED once it is lost.
    With fov_policy "widen_at_edge" the receiver switches to its wide FOV
    setting whenever the serving LED's power falls within 3 dB of the
    coverage threshold, clinging to the home cell for longer; "fixed"
    always uses the narrow setting.
    """
    if fov_policy not in ("fixed", "widen_at_edge"):
        raise ValueError(f"unknown fov policy {fov_policy!r}")
    narrow, wide = rx_template.fov_settings
    serving = None
    last_attached = None
    count = 0
    steps = sorted(mobility_trace, key=lambda s: s[0])
    for _, x, y in steps:
        fov = narrow
        if fov_policy == "widen_at_edge" and serving is not None:
            p_serving = _received_powers((x, y), layout,
                                         rx_template.with_fov(narrow))[serving]
            if p_serving <= threshold * EDGE_MARGIN:
                fov = wide
        powers = _received_powers((x, y), layout, rx_template.with_fov(fov))
        if serving is not None and powers[serving] > threshold:
            continue  # home cell still covers
        candidates = np.nonzero(powers > threshold)[0]
        if candidates.size == 0:
            serving = None
            continue
        new = int(candidates[np.argmax(powers[candidates])])
        if last_attached is not None and new != last_attached:
            count += 1
        serving = new
        last_attached = new
    return count


def cell_zoom(layout: CellLayout, user_positions, threshold: float,
              rx_template: Receiver) -> ZoomResult:
    """Pick one of each LED's two transmit-angle settings.

    Exhaustively evaluates all 2^L setting combinations (L <= 8), keeping
    the one that minimizes the number of users sitting in overlap areas
    subject to zero uncovered users. If every combination leaves someone
    uncovered, the one with the fewest uncovered users wins and they are
    reported as grey holes. Ties prefer narrower settings.
    """
    n_leds = len(layout.luminaires)
    if n_leds > 8:
        raise ValueError("cell zooming supports at most 8 LEDs")
    users = [tuple(p) for p in user_positions]
    # options per LED, narrow setting first so ties prefer it
    options = [tuple(sorted(lum.zoom_settings)) for lum in layout.luminaires]
    # received power per (led, setting index, user)
    power = np.empty((n_leds, 2, len(users)))
    for i, lum in enumerate(layout.luminaires):
        for s, angle in enumerate(options[i]):
            zoomed = lum.with_half_angle(angle)
            for u, pos in enumerate(users):
                rx = receiver_at(rx_template, pos[0], pos[1],
                                 layout.room.receiver_plane_height)
                power[i, s, u] = zoomed.optical_power * los_gain(zoomed, rx)
    best = None
    for combo in itertools.product(range(2), repeat=n_leds):
        cover = np.stack([power[i, combo[i], :] > threshold
                          for i in range(n_leds)])
        n_covering = cover.sum(axis=0)
        uncovered = int(np.count_nonzero(n_covering == 0))
        overlap = int(np.count_nonzero(n_covering >= 2))
        key = (uncovered, overlap, combo)
        if best is None or key < best[0]:
            best = (key, combo, n_covering)
    key, combo, n_covering = best
    return ZoomResult(
        half_angles=tuple(options[i][combo[i]] for i in range(n_leds)),
        grey_holes=tuple(int(u) for u in np.nonzero(n_covering == 0)[0]),
        overlap_users=key[1],
    )


def area_map(layout: CellLayout, threshold: float, rx_template: Receiver,
             grid_step: float = 0.1):
    """Classify a grid over the receiver plane.

    Returns (xs, ys, labels, led_ids) with labels[i][j] in
    {"L1".."L4", "grey"} and led_ids[i][j] the sorted covering set.
    """
    room = layout.room
    nx = int(room.width / grid_step)
    ny = int(room.depth / grid_step)
    xs = grid_step / 2.0 + grid_step * np.arange(nx)
    ys = grid_step / 2.0 + grid_step * np.arange(ny)
    labels = [[None] * ny for _ in range(nx)]
    led_ids = [[()] * ny for _ in range(nx)]
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            try:
                cls = classify_area((x, y), layout, threshold, rx_template)
                labels[i][j] = cls.label
                led_ids[i][j] = tuple(sorted(cls.covering_leds))
            except GreyHoleError:
                labels[i][j] = "grey"
    return xs, ys, labels, led_ids


def write_area_map_csv(path, xs, ys, labels, led_ids, comment=None):
    """Export an area classification map as `x,y,label,led_ids` rows."""
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("x,y,label,led_ids\n")
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                ids = ";".join(str(v) for v in led_ids[i][j])
                fh.write(f"{x:.9g},{y:.9g},{labels[i][j]},{ids}\n")


def read_mobility_trace(path):
    """Parse a `t,user,x,y` CSV into per-user traces sorted by time."""
    traces = {}
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        if [c.strip() for c in header] != ["t", "user", "x", "y"]:
            raise ValueError("trace header must be 't,user,x,y'")
        for row in reader:
            if not row:
                continue
            t, user, x, y = row
            traces.setdefault(int(user), []).append(
                (float(t), float(x), float(y)))
    return {u: sorted(steps) for u, steps in traces.items()}
