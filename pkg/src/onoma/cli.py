"""Command line interface.

    onoma run <config> [--out DIR] [--seed N] [--threads N]
    onoma validate <config>
    onoma presets list

Exit codes: 0 ok, 1 validation failure, 2 runtime failure. The output
directory and thread count can also be set through the ONOMA_OUT_DIR and
ONOMA_THREADS environment variables; command line flags win.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, list_presets, preset_path
from .runner import run, validate


def _resolve_config(name_or_path: str):
    if os.path.exists(name_or_path):
        return name_or_path
    try:
        return preset_path(name_or_path)
    except ConfigError:
        return name_or_path  # let the loader report the missing file


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="onoma",
        description="Indoor VLC simulator for power-domain NOMA downlinks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config or preset")
    p_run.add_argument("config", help="config file path or preset name")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads for Monte Carlo trials")

    p_val = sub.add_parser("validate", help="validate a config or preset")
    p_val.add_argument("config", help="config file path or preset name")

    p_pre = sub.add_parser("presets", help="preset utilities")
    p_pre.add_argument("action", choices=["list"])

    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in list_presets():
            print(name)
        return 0

    config = _resolve_config(args.config)

    if args.command == "validate":
        try:
            violations = validate(config)
        except (OSError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        if violations:
            for v in violations:
                print(f"violation: {v}", file=sys.stderr)
            return 1
        print("ok")
        return 0

    # run
    out_dir = args.out or os.environ.get("ONOMA_OUT_DIR") or "onoma_out"
    threads = args.threads
    if threads is None and os.environ.get("ONOMA_THREADS"):
        threads = int(os.environ["ONOMA_THREADS"])
    try:
        manifest = run(config, out_dir, seed=args.seed, threads=threads)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"violation: {v}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for metric, filename in sorted(manifest.outputs.items()):
        print(f"{metric}: {os.path.join(str(out_dir), filename)}")
    print(f"manifest: {os.path.join(str(out_dir), 'manifest.json')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
