"""Indoor LED line-of-sight channel geometry.

Lambertian LOS DC gain of an LED downlink:

    m = -ln(2) / ln(cos(phi_half))
    h = (m + 1) * A / (2 pi d^2) * cos(phi)^m * cos(psi)    if psi <= FOV, else 0

where phi is the emission angle off the LED's downward axis, psi the
incidence angle at the photodiode and d the transmitter-receiver distance.
LEDs face straight down and receivers straight up, so cos(phi) and cos(psi)
both equal dz/d. Optical filter and concentrator gains are fixed to 1.
Only the LOS path is modelled; multipath reflections are out of scope.

All angles at the public interfaces are in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RoomConfig",
    "Luminaire",
    "Receiver",
    "PowerMap",
    "lambert_order",
    "los_gain",
    "power_map",
    "receiver_at",
    "write_power_map_csv",
]


def _as_xyz(value):
    pos = tuple(float(v) for v in value)
    if len(pos) != 3:
        raise ValueError(f"position must have 3 components, got {len(pos)}")
    if not all(math.isfinite(v) for v in pos):
        raise ValueError(f"position must be finite, got {pos}")
    return pos


@dataclass(frozen=True)
class RoomConfig:
    """Rectangular room with a horizontal receiver plane."""

    width: float
    depth: float
    height: float
    receiver_plane_height: float = 0.85

    def __post_init__(self):
        for name in ("width", "depth", "height"):
            if getattr(self, name) <= 0:
                raise ValueError(f"room {name} must be positive")
        if not 0 <= self.receiver_plane_height < self.height:
            raise ValueError(
                "receiver_plane_height must satisfy 0 <= h < room height, "
                f"got {self.receiver_plane_height}"
            )


@dataclass(frozen=True)
class Luminaire:
    """Downward-facing LED transmitter mounted on the ceiling plane."""

    position: tuple[float, float, float]
    half_angle: float  # half-intensity transmit angle, degrees
    optical_power: float = 1.0  # watts
    frequency_group: int = 0
    zoom_settings: tuple[float, float] = None  # alternative half-angle pair

    def __post_init__(self):
        object.__setattr__(self, "position", _as_xyz(self.position))
        if not 0 < self.half_angle < 90:
            raise ValueError(f"half_angle must be in (0, 90), got {self.half_angle}")
        if self.optical_power <= 0:
            raise ValueError("optical_power must be positive")
        zoom = self.zoom_settings
        if zoom is None:
            zoom = (self.half_angle, self.half_angle)
        zoom = (float(zoom[0]), float(zoom[1]))
        for a in zoom:
            if not 0 < a < 90:
                raise ValueError(f"zoom setting must be in (0, 90), got {a}")
        object.__setattr__(self, "zoom_settings", zoom)

    def with_half_angle(self, half_angle: float) -> "Luminaire":
        return Luminaire(self.position, half_angle, self.optical_power,
                         self.frequency_group, self.zoom_settings)


@dataclass(frozen=True)
class Receiver:
    """Upward-facing photodiode terminal."""

    position: tuple[float, float, float]
    fov: float = 90.0  # field-of-view half-angle, degrees
    detector_area: float = 1e-4  # m^2
    noise_power: float = 1e-12  # electrical noise variance, W^2
    fov_settings: tuple[float, float] = None  # (narrow, wide) pair

    def __post_init__(self):
        object.__setattr__(self, "position", _as_xyz(self.position))
        if not 0 < self.fov <= 90:
            raise ValueError(f"fov must be in (0, 90], got {self.fov}")
        if self.detector_area <= 0:
            raise ValueError("detector_area must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        settings = self.fov_settings
        if settings is None:
            settings = (self.fov, self.fov)
        settings = (float(settings[0]), float(settings[1]))
        for a in settings:
            if not 0 < a <= 90:
                raise ValueError(f"fov setting must be in (0, 90], got {a}")
        object.__setattr__(self, "fov_settings", settings)

    def with_fov(self, fov: float) -> "Receiver":
        return Receiver(self.position, fov, self.detector_area,
                        self.noise_power, self.fov_settings)


def receiver_at(template: Receiver, x: float, y: float, z: float) -> Receiver:
    """Copy of a receiver template moved to a new position."""
    return Receiver((x, y, z), template.fov, template.detector_area,
                    template.noise_power, template.fov_settings)


def lambert_order(half_angle: float) -> float:
    """Lambertian mode number m = -ln(2) / ln(cos(half_angle)).

    half_angle is the half-intensity angle in degrees, restricted to
    (0, 90). m >= 1 for half_angle <= 60 degrees.
    """
    if not 0 < half_angle < 90:
        raise ValueError(f"half_angle must be in (0, 90) degrees, got {half_angle}")
    return -math.log(2.0) / math.log(math.cos(math.radians(half_angle)))


def los_gain(tx: Luminaire, rx: Receiver) -> float:
    """LOS channel DC gain h between one LED and one photodiode.

    Returns 0 exactly when the receiver lies outside the LED's downward
    emission hemisphere or the LED lies outside the receiver's FOV.
    """
    dx = rx.position[0] - tx.position[0]
    dy = rx.position[1] - tx.position[1]
    dz = tx.position[2] - rx.position[2]  # positive when rx below tx
    d2 = dx * dx + dy * dy + dz * dz
    if d2 == 0.0:
        raise ValueError("transmitter and receiver positions coincide")
    d = math.sqrt(d2)
    cos_phi = dz / d  # emission angle off the downward normal
    if cos_phi <= 0.0:
        return 0.0
    cos_psi = cos_phi  # receiver faces straight up
    if cos_psi < math.cos(math.radians(rx.fov)):
        return 0.0
    m = lambert_order(tx.half_angle)
    return (m + 1.0) * rx.detector_area / (2.0 * math.pi * d2) * cos_phi ** m * cos_psi


@dataclass(frozen=True)
class PowerMap:
    """Received optical power sampled on the receiver plane."""

    xs: np.ndarray  # grid cell centers along room width
    ys: np.ndarray  # grid cell centers along room depth
    values: np.ndarray  # shape (len(xs), len(ys)), watts

    def max(self) -> float:
        return float(self.values.max())


def power_map(room: RoomConfig, luminaires, grid_step: float,
              rx_template: Receiver) -> PowerMap:
    """Total received optical power over a grid of the receiver plane.

    Each cell is sampled at its center and holds the sum over LEDs of
    optical_power * los_gain at that point. Pure function; rows could be
    evaluated concurrently with bit-identical results, the implementation
    is a single vectorized pass.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if grid_step >= min(room.width, room.depth):
        raise ValueError("grid_step must be smaller than the room extent")
    nx = int(room.width / grid_step)
    ny = int(room.depth / grid_step)
    xs = grid_step / 2.0 + grid_step * np.arange(nx)
    ys = grid_step / 2.0 + grid_step * np.arange(ny)
    z = room.receiver_plane_height
    cos_fov = math.cos(math.radians(rx_template.fov))
    total = np.zeros((nx, ny))
    for lum in luminaires:
        m = lambert_order(lum.half_angle)
        dx = xs[:, None] - lum.position[0]
        dy = ys[None, :] - lum.position[1]
        dz = lum.position[2] - z
        d2 = dx * dx + dy * dy + dz * dz
        with np.errstate(invalid="ignore"):
            cos_ang = dz / np.sqrt(d2)
        gain = (m + 1.0) * rx_template.detector_area / (2.0 * math.pi * d2)
        gain = gain * cos_ang ** (m + 1.0)
        visible = (cos_ang > 0.0) & (cos_ang >= cos_fov)
        total += np.where(visible, lum.optical_power * gain, 0.0)
    return PowerMap(xs=xs, ys=ys, values=total)


def write_power_map_csv(path, pmap: PowerMap, comment: str | None = None):
    """Export a power map as CSV rows `x,y,power_watts`, row-major in x.

    Values are printed with 9 significant digits and a locale-independent
    decimal point.
    """
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("x,y,power_watts\n")
        for i, x in enumerate(pmap.xs):
            for j, y in enumerate(pmap.ys):
                fh.write(f"{x:.9g},{y:.9g},{pmap.values[i, j]:.9g}\n")
