#!/usr/bin/env python3
"""Render the CLI outputs of a run directory: eigenvalue spectrum,
eigenfunction table, and (for sweeps) the log-log error decay.

Usage: scripts/plot_results.py OUT_DIR [--save PREFIX]

Requires matplotlib and numpy; purely presentational, nothing here feeds back
into the computations.
"""

import argparse
import csv
import json
import pathlib
import sys

import numpy as np

try:
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("matplotlib is required for plotting")


def plot_spectrum(path, ax):
    spec = json.loads(path.read_text())
    lams = [complex(e["re"], e["im"]) for e in spec["eigenvalues"]]
    theta = np.linspace(0, 2 * np.pi, 200)
    ax.plot(np.cos(theta), np.sin(theta), lw=0.5, color="gray")
    ax.scatter([l.real for l in lams], [l.imag for l in lams], zorder=3)
    for i, l in enumerate(lams):
        ax.annotate(f"λ{i+1}", (l.real, l.imag), fontsize=8)
    ax.set_aspect("equal")
    ax.set_title(f"{spec['operator']} spectrum (N={spec['N']}, M={spec['M']})")


def plot_eigenfunctions(path, ax):
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    n_coords = 1 if header[0] == "x" and header[1] != "y" else 3
    if n_coords != 1:
        ax.set_title("eigenfunctions: 3-D table, see CSV")
        return
    x = rows[:, 0]
    n_eig = (len(header) - 1) // 2
    for l in range(min(n_eig, 4)):
        ax.plot(x, rows[:, 1 + 2 * l], label=f"f{l+1}")
    ax.legend()
    ax.set_title("leading eigenfunctions (real part)")


def plot_sweep(path, ax):
    sweep = json.loads(path.read_text())
    p = np.array(sweep["parameter"])
    e = np.array(sweep["mean_error"])
    ax.loglog(p, e, "o-")
    ax.set_title(f"{sweep['kind']} sweep: slope {sweep['slope']:.3f} ± {sweep['slope_half_width']:.3f}")
    ax.set_xlabel("parameter")
    ax.set_ylabel("mean error")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--save", default=None, help="save figures with this prefix instead of showing")
    args = parser.parse_args()

    panels = []
    if (args.out_dir / "spectrum.json").exists():
        panels.append(("spectrum", plot_spectrum, args.out_dir / "spectrum.json"))
    if (args.out_dir / "eigenfunctions.csv").exists():
        panels.append(("eigenfunctions", plot_eigenfunctions, args.out_dir / "eigenfunctions.csv"))
    if (args.out_dir / "sweep.json").exists():
        panels.append(("sweep", plot_sweep, args.out_dir / "sweep.json"))
    if not panels:
        sys.exit(f"no plottable outputs in {args.out_dir}")

    for name, fn, path in panels:
        fig, ax = plt.subplots(figsize=(6, 5))
        fn(path, ax)
        fig.tight_layout()
        if args.save:
            fig.savefig(f"{args.save}_{name}.png", dpi=150)

    if not args.save:
        plt.show()


if __name__ == "__main__":
    main()
