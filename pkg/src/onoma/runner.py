"""Scenario runner: wires the modules into reproducible metric campaigns.

Every requested metric is executed from a validated config and written as
CSV into the output directory, each file carrying the config digest in a
leading comment line. Identical (config, seed) pairs produce byte-identical
CSVs at any thread count: all randomness is keyed by
(master seed, trial/frame index) and aggregation is order-independent.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import make_allocator, sort_users
from .config import (ConfigError, allocation_params, build_csi,
                     build_luminaires, build_ofdm, build_receiver_template,
                     build_room, config_digest, load_config, validate_config)
from .geometry import los_gain, power_map, receiver_at, write_power_map_csv
from .link import (LinkScenario, ber_montecarlo, coverage_probability,
                   rate_montecarlo, rate_ofdma)
from .multicell import (CellLayout, area_map, assign_frequency_groups,
                        handover_count, read_mobility_trace,
                        write_area_map_csv)
from .pairing import pair_max_disparity, pair_random, schedule_hybrid

__all__ = ["RunManifest", "run", "validate"]


@dataclass(frozen=True)
class RunManifest:
    config_digest: str
    version: str
    outputs: dict
    wallclock_s: float
    seed: int | None

    def to_dict(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "version": self.version,
            "outputs": dict(sorted(self.outputs.items())),
            "wallclock_s": self.wallclock_s,
            "seed": self.seed,
        }


def validate(config) -> list[str]:
    """Violation list for a config path or dict; empty means valid."""
    cfg = load_config(config) if not isinstance(config, dict) else config
    return validate_config(cfg)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_csv(path: Path, header: str, rows, digest: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fixed_receivers(cfg):
    template = build_receiver_template(cfg)
    room = build_room(cfg)
    return tuple(receiver_at(template, x, y, room.receiver_plane_height)
                 for x, y in cfg["users"]["fixed"])


def _base_link_scenario(cfg, noise_power, scheme):
    tx = build_luminaires(cfg)[0]
    users = _fixed_receivers(cfg)
    strategy, params = allocation_params(cfg)
    return LinkScenario(
        tx=tx,
        users=users,
        total_power=cfg.get("total_power", 1.0),
        noise_power=noise_power,
        scheme=scheme,
        allocation=strategy,
        allocation_params=params,
        qam_order=cfg.get("qam_order", 4),
        ofdm=build_ofdm(cfg),
        csi=build_csi(cfg),
        sic_residual=cfg.get("sic_residual", 0.0),
    )


def _reference_gain(cfg) -> float:
    """Weakest user's LOS gain, the anchor of the SNR sweeps."""
    tx = build_luminaires(cfg)[0]
    gains = [los_gain(tx, rx) for rx in _fixed_receivers(cfg)]
    ref = min(gains)
    if ref <= 0:
        raise ConfigError(["users.fixed: a user has zero channel gain, "
                           "the SNR sweep is undefined"])
    return ref


def _metric_power_map(cfg, out_dir, digest, seed, threads):
    room = build_room(cfg)
    lums = build_luminaires(cfg)
    template = build_receiver_template(cfg)
    pmap = power_map(room, lums, cfg.get("grid_step", 0.05), template)
    path = out_dir / "power_map.csv"
    write_power_map_csv(path, pmap, comment=f"config_digest={digest}")
    return {"power_map": path.name}


def _metric_area_map(cfg, out_dir, digest, seed, threads):
    mc = cfg.get("multicell", {})
    layout = CellLayout(build_luminaires(cfg), build_room(cfg),
                        mc.get("reserved_fraction", 0.2))
    if mc.get("auto_groups", False):
        layout = assign_frequency_groups(layout)
    template = build_receiver_template(cfg)
    threshold = mc.get("coverage_threshold", 1e-7)
    xs, ys, labels, led_ids = area_map(layout, threshold, template,
                                       grid_step=mc.get("grid_step", 0.1))
    path = out_dir / "area_map.csv"
    write_area_map_csv(path, xs, ys, labels, led_ids,
                       comment=f"config_digest={digest}")
    return {"area_map": path.name}


def _metric_sum_rate(cfg, out_dir, digest, seed, threads):
    scheme = cfg["scheme"]
    total = cfg.get("total_power", 1.0)
    n_frames = cfg.get("n_frames", 1000)
    h_ref = _reference_gain(cfg)
    rows = []
    for snr_db in cfg["sweep"]["snr_db"]:
        noise = total * h_ref * h_ref / 10.0 ** (snr_db / 10.0)
        scenario = _base_link_scenario(cfg, noise, "noma")
        gains = scenario.resolve_gains()
        if scheme in ("noma", "ofdma"):
            if scheme == "noma":
                est = rate_montecarlo(scenario, n_frames, cfg["master_seed"])
                for u, (r, ci) in enumerate(zip(est.rates, est.ci_halfwidth)):
                    rows.append((snr_db, u, "rate_noma", r, ci))
                rows.append((snr_db, "sum", "sum_rate_noma",
                             float(est.rates.sum()),
                             float(est.ci_halfwidth.sum())))
            ofdma = rate_ofdma(gains, noise, total)
            for u, r in enumerate(ofdma):
                rows.append((snr_db, u, "rate_ofdma", float(r), 0.0))
            rows.append((snr_db, "sum", "sum_rate_ofdma",
                         float(ofdma.sum()), 0.0))
        else:  # hybrid
            pairing = cfg.get("pairing", {})
            if pairing.get("strategy", "max_disparity") == "random":
                plan = pair_random(gains, cfg["master_seed"])
            else:
                plan = pair_max_disparity(
                    gains, max_group=pairing.get("max_group", 2))
            strategy, params = allocation_params(cfg)
            rates = schedule_hybrid(plan, gains, noise, total,
                                    allocation=strategy, **params)
            for u, r in enumerate(rates):
                rows.append((snr_db, u, "rate_hybrid", float(r), 0.0))
            rows.append((snr_db, "sum", "sum_rate_hybrid",
                         float(rates.sum()), 0.0))
    path = out_dir / "sum_rate.csv"
    _write_csv(path, "snr_db,user,metric,value,ci_halfwidth", rows, digest)
    return {"sum_rate": path.name}


def _metric_ber(cfg, out_dir, digest, seed, threads):
    scheme = cfg["scheme"]
    total = cfg.get("total_power", 1.0)
    n_frames = cfg.get("n_frames", 1000)
    n_fft = build_ofdm(cfg).n_subcarriers
    h_ref = _reference_gain(cfg)
    schemes = ["noma", "ofdma"] if scheme == "noma" else [scheme]
    rows = []
    for snr_db in cfg["sweep"]["snr_db"]:
        # per-subcarrier post-FFT SNR of the weakest user at full power
        noise = total * h_ref * h_ref / (n_fft * 10.0 ** (snr_db / 10.0))
        for sch in schemes:
            scenario = _base_link_scenario(cfg, noise, sch)
            est = ber_montecarlo(scenario, n_frames, cfg["master_seed"],
                                 threads=threads)
            for u, (b, ci) in enumerate(zip(est.ber, est.ci_halfwidth)):
                rows.append((snr_db, u, f"ber_{sch}", float(b), float(ci)))
    path = out_dir / "ber.csv"
    _write_csv(path, "snr_db,user,metric,value,ci_halfwidth", rows, digest)
    return {"ber": path.name}


def _metric_coverage(cfg, out_dir, digest, seed, threads):
    section = cfg["coverage"]
    random_users = cfg["users"]["random"]
    strategy, params = allocation_params(cfg)
    template = build_receiver_template(cfg)
    scenario = LinkScenario(
        tx=build_luminaires(cfg)[0],
        total_power=cfg.get("total_power", 1.0),
        noise_power=template.noise_power,
        allocation=strategy,
        allocation_params=params,
        rx_template=template,
        placement_region=tuple(random_users["region"]),
        n_users=random_users["count"],
    )
    n_trials = section.get("n_trials", 1000)
    n_users = random_users["count"]
    rows = []
    for level in section["target_levels"]:
        p = coverage_probability(scenario, [level] * n_users, n_trials,
                                 cfg["master_seed"])
        ci = 1.96 * np.sqrt(max(p * (1.0 - p), 0.0) / n_trials)
        rows.append((level, "all", "coverage", p, ci))
    path = out_dir / "coverage.csv"
    _write_csv(path, "target_rate,user,metric,value,ci_halfwidth", rows, digest)
    return {"coverage": path.name}


def _metric_handover(cfg, out_dir, digest, seed, threads, base_dir):
    section = cfg["handover"]
    trace_path = Path(section["trace_file"])
    if not trace_path.is_absolute():
        trace_path = base_dir / trace_path
    traces = read_mobility_trace(trace_path)
    mc = cfg.get("multicell", {})
    layout = CellLayout(build_luminaires(cfg), build_room(cfg),
                        mc.get("reserved_fraction", 0.2))
    if mc.get("auto_groups", False):
        layout = assign_frequency_groups(layout)
    template = build_receiver_template(cfg)
    rows = []
    for user in sorted(traces):
        for policy in ("fixed", "widen_at_edge"):
            n = handover_count(traces[user], layout, policy,
                               section["threshold"], template)
            rows.append((user, policy, n))
    path = out_dir / "handover.csv"
    _write_csv(path, "user,policy,handovers", rows, digest)
    return {"handover": path.name}


_METRICS = {
    "power_map": _metric_power_map,
    "area_map": _metric_area_map,
    "sum_rate": _metric_sum_rate,
    "ber": _metric_ber,
    "coverage": _metric_coverage,
}


def run(config, out_dir, seed: int | None = None,
        threads: int | None = None) -> RunManifest:
    """Execute every metric of a scenario config and write CSV outputs.

    `config` is a path or an already-parsed dict. A seed argument
    overrides the config's master_seed. Returns the run manifest, which
    is also written as `manifest.json` next to the outputs.
    """
    started = time.perf_counter()
    if isinstance(config, dict):
        cfg = json.loads(json.dumps(config))  # defensive copy
        base_dir = Path.cwd()
    else:
        cfg = load_config(config)
        base_dir = Path(config).resolve().parent
    if seed is not None:
        cfg["master_seed"] = int(seed)
    violations = validate_config(cfg)
    if violations:
        raise ConfigError(violations)
    if threads is None:
        threads = cfg.get("threads") or os.cpu_count() or 1
    digest = config_digest(cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    outputs = {}
    for metric in cfg.get("metrics", []):
        if metric == "handover":
            outputs.update(_metric_handover(cfg, out_dir, digest, seed,
                                            threads, base_dir))
        else:
            outputs.update(_METRICS[metric](cfg, out_dir, digest, seed,
                                            threads))
    manifest = RunManifest(
        config_digest=digest,
        version=__version__,
        outputs=outputs,
        wallclock_s=time.perf_counter() - started,
        seed=cfg.get("master_seed"),
    )
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
