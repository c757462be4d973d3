"""Scenario configuration: YAML loading, validation, digests, presets.

Configs are YAML mappings validated against the JSON Schema shipped as
`schema.json` plus a handful of cross-field checks. The config digest is
the SHA-256 of the canonical JSON serialization (sorted keys), so it is
stable under key reordering.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources

import jsonschema
import yaml

from .geometry import Luminaire, Receiver, RoomConfig
from .link import CsiModel
from .ofdm import DcoOfdmConfig

__all__ = [
    "load_config",
    "validate_config",
    "config_digest",
    "list_presets",
    "preset_path",
    "build_room",
    "build_luminaires",
    "build_receiver_template",
    "build_ofdm",
    "build_csi",
    "allocation_params",
    "ConfigError",
]

_RANDOMIZED_METRICS = {"ber", "coverage", "sum_rate"}


class ConfigError(ValueError):
    """Raised when a config fails validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _schema():
    text = resources.files("onoma").joinpath("schema.json").read_text()
    return json.loads(text)


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError(["config root must be a mapping"])
    return cfg


def config_digest(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _path_str(error) -> str:
    parts = []
    for p in error.absolute_path:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        else:
            parts.append(f".{p}" if parts else str(p))
    return "".join(parts) or "<root>"


def validate_config(cfg: dict) -> list[str]:
    """All violations found in a config; empty means valid.

    Every message names the offending key and the violated constraint.
    """
    validator = jsonschema.Draft7Validator(_schema())
    violations = [f"{_path_str(e)}: {e.message}"
                  for e in sorted(validator.iter_errors(cfg), key=str)]

    alloc = cfg.get("allocation")
    if isinstance(alloc, dict) and alloc.get("strategy") == "fpa":
        alpha = alloc.get("alpha", 0.3)
        if isinstance(alpha, (int, float)) and not 0.0 < alpha < 1.0:
            violations.append(
                "allocation.alpha: must be in the open interval (0, 1)")
    if violations:
        return violations

    room = cfg["room"]
    plane = room.get("receiver_plane_height", 0.85)
    if not plane < room["height"]:
        violations.append(
            "room.receiver_plane_height: must be below room.height")
    for i, lum in enumerate(cfg["luminaires"]):
        z = lum["position"][2]
        if z <= plane:
            violations.append(
                f"luminaires[{i}].position: LED must sit above the receiver plane")
        if z > room["height"]:
            violations.append(
                f"luminaires[{i}].position: LED cannot sit above the ceiling")

    metrics = set(cfg.get("metrics", []))
    users = cfg.get("users", {})
    if metrics & {"sum_rate", "ber"}:
        if "sweep" not in cfg:
            violations.append("sweep: required by the sum_rate/ber metrics")
        if "fixed" not in users:
            violations.append(
                "users.fixed: sum_rate/ber metrics need fixed user positions")
    if "coverage" in metrics:
        if "coverage" not in cfg:
            violations.append("coverage: section required by the coverage metric")
        if "random" not in users:
            violations.append(
                "users.random: coverage metric needs a random placement region")
    if "handover" in metrics and "handover" not in cfg:
        violations.append("handover: section required by the handover metric")

    randomized = bool(metrics & _RANDOMIZED_METRICS) \
        or "random" in users \
        or cfg.get("csi", {}).get("kind", "perfect") != "perfect" \
        or cfg.get("pairing", {}).get("strategy") == "random"
    if randomized and "master_seed" not in cfg:
        violations.append(
            "master_seed: required whenever a randomized element is configured")

    if "fixed" in users:
        for i, (x, y) in enumerate(users["fixed"]):
            if not (0 <= x <= room["width"] and 0 <= y <= room["depth"]):
                violations.append(
                    f"users.fixed[{i}]: position must lie inside the room")
    return violations


def list_presets() -> list[str]:
    names = []
    for entry in resources.files("onoma").joinpath("presets").iterdir():
        if entry.name.endswith(".yaml"):
            names.append(entry.name[:-5])
    return sorted(names)


def preset_path(name: str):
    path = resources.files("onoma").joinpath("presets").joinpath(f"{name}.yaml")
    if not path.is_file():
        raise ConfigError([f"unknown preset {name!r}; "
                           f"available: {', '.join(list_presets())}"])
    return path


# --- builders from validated config sections ---------------------------------

def build_room(cfg: dict) -> RoomConfig:
    r = cfg["room"]
    return RoomConfig(width=r["width"], depth=r["depth"], height=r["height"],
                      receiver_plane_height=r.get("receiver_plane_height", 0.85))


def build_luminaires(cfg: dict) -> list[Luminaire]:
    out = []
    for lum in cfg["luminaires"]:
        out.append(Luminaire(
            position=tuple(lum["position"]),
            half_angle=lum["half_angle"],
            optical_power=lum.get("optical_power", 1.0),
            frequency_group=lum.get("frequency_group", 0),
            zoom_settings=tuple(lum["zoom_settings"]) if "zoom_settings" in lum
            else None,
        ))
    return out


def build_receiver_template(cfg: dict) -> Receiver:
    r = cfg.get("receiver", {})
    room = build_room(cfg)
    return Receiver(
        position=(0.0, 0.0, room.receiver_plane_height),
        fov=r.get("fov", 90.0),
        detector_area=r.get("detector_area", 1e-4),
        noise_power=r.get("noise_power", 1e-12),
        fov_settings=tuple(r["fov_settings"]) if "fov_settings" in r else None,
    )


def build_ofdm(cfg: dict) -> DcoOfdmConfig:
    o = cfg.get("ofdm", {})
    bias = o.get("dc_bias", "auto")
    return DcoOfdmConfig(
        n_subcarriers=o.get("n_subcarriers", 64),
        dc_bias=None if bias == "auto" else bias,
        clip_floor=o.get("clip_floor", 0.0),
        cyclic_prefix_len=o.get("cyclic_prefix_len", 8),
    )


def build_csi(cfg: dict) -> CsiModel:
    c = cfg.get("csi", {"kind": "perfect"})
    return CsiModel(kind=c.get("kind", "perfect"),
                    noise_std=c.get("noise_std", 0.0),
                    displacement=c.get("displacement", 0.0))


def allocation_params(cfg: dict) -> tuple[str, dict]:
    alloc = cfg.get("allocation", {"strategy": "grpa"})
    strategy = alloc.get("strategy", "grpa")
    params = {}
    if strategy == "fpa":
        params["alpha"] = alloc.get("alpha", 0.3)
    elif strategy == "optimal":
        params["objective"] = alloc.get("objective", "max_min_rate")
        params["grid_points"] = alloc.get("grid_points", 101)
        if alloc.get("min_rates"):
            params["min_rates"] = list(alloc["min_rates"])
    return strategy, params
