#!/usr/bin/env python3
"""Run the full experiment battery against the shipped configs.

Usage:
    python scripts/run_experiments.py [--out results] [--only regulate ...]
                                      [--parallel]

Each experiment writes its bundle under <out>/<name>/ and the script ends
with a one-line digest per experiment.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from ringswarm.cli import COMMANDS

ROOT = Path(__file__).resolve().parent.parent
EXPERIMENTS = [
    ("regulate", "configs/regulation.json"),
    ("track", "configs/tracking.json"),
    ("proximity", "configs/proximity.json"),
    ("nn-sweep", "configs/nn_sweep.json"),
    ("macro-verify", "configs/macro_verify.json"),
]


def digest(name: str, summary: dict) -> str:
    if name == "regulate":
        settle = summary["settle"]
        return (f"settle dec={settle['decentralized']:.4f} "
                f"cent={settle['centralized']:.4f} "
                f"gap={settle['relative_gap']:.2%}")
    if name == "track":
        modes = summary["modes"]
        return ("final dec={:.4f} cent={:.4f}".format(
            modes["decentralized"]["final_density_error_normalized"],
            modes["centralized"]["final_density_error_normalized"]))
    if name == "proximity":
        return (f"steady={summary['steady_state_normalized_error']:.4f} "
                f"disconnected={summary['disconnected_steps']} steps")
    if name == "nn-sweep":
        halves = ", ".join(f"k={k}: {v:.2f}" for k, v in
                           summary["time_to_half"].items())
        return f"time-to-half {halves}"
    return (f"rate={summary.get('fitted_rate', float('nan')):.6f} "
            f"(k_p={summary['k_p']})")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output root directory")
    parser.add_argument("--only", nargs="*", default=None,
                        help="subset of experiment names to run")
    parser.add_argument("--parallel", action="store_true",
                        help="run sweep members concurrently")
    args = parser.parse_args(argv)

    out_root = Path(args.out)
    lines = []
    for name, config in EXPERIMENTS:
        if args.only and name not in args.only:
            continue
        started = time.perf_counter()
        bundle = COMMANDS[name](ROOT / config, out_root / name.replace("-", "_"),
                                parallel=args.parallel)
        elapsed = time.perf_counter() - started
        line = f"{name:12s} [{elapsed:6.1f}s] {digest(name, bundle.summary)}"
        print(line)
        lines.append(line)
    (out_root / "digest.txt").write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
