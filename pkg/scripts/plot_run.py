#!/usr/bin/env python3
"""Plot the metrics and snapshots of one run directory.

Usage:
    python scripts/plot_run.py <run-dir> [--save out.png]

<run-dir> is a directory holding metrics.csv / snapshots.csv as written by
the command-line front end (e.g. results/regulate/decentralized).
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--save", type=Path, default=None)
    args = parser.parse_args(argv)

    metrics = np.genfromtxt(args.run_dir / "metrics.csv", delimiter=",",
                            names=True)
    snaps = np.genfromtxt(args.run_dir / "snapshots.csv", delimiter=",",
                          names=True)

    fig, (ax_err, ax_rho) = plt.subplots(1, 2, figsize=(11, 4))

    ax_err.plot(metrics["time"], metrics["density_error_normalized"],
                label="density error")
    if "estimation_error_normalized" in (metrics.dtype.names or ()):
        ax_err.plot(metrics["time"], metrics["estimation_error_normalized"],
                    label="estimation error", linestyle="--")
    ax_err.set_xlabel("t")
    ax_err.set_ylabel("normalized error")
    ax_err.legend()
    ax_err.grid(alpha=0.3)

    snap_times = np.unique(snaps["snapshot_time"])
    for t in (snap_times[0], snap_times[-1]):
        sel = snaps["snapshot_time"] == t
        ax_rho.plot(snaps["x"][sel], snaps["density"][sel], label=f"rho, t={t:g}")
    sel = snaps["snapshot_time"] == snap_times[-1]
    ax_rho.plot(snaps["x"][sel], snaps["target"][sel], "k:", label="target")
    ax_rho.set_xlabel("x")
    ax_rho.set_ylabel("density")
    ax_rho.legend()
    ax_rho.grid(alpha=0.3)

    fig.tight_layout()
    target = args.save or (args.run_dir / "run.png")
    fig.savefig(target, dpi=150)
    print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
