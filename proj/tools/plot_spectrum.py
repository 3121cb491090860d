#!/usr/bin/env python3
"""Render a spectroscopy map produced by `stark-sense spectrum` as a heat map.

Usage:
    tools/plot_spectrum.py map.csv [-o map.png] [--lines lines.csv]

The input is the spectrum CSV (probe_ghz column plus one a_d_* column per
drive amplitude). With --lines, overlay the analytic line positions from a
`stark-sense levels` CSV (a_d_ghz column plus line_k* columns).
"""

import argparse
import csv
import sys


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        sys.exit(f"{path}: empty file")
    return rows[0], rows[1:]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("spectrum", help="CSV from `stark-sense spectrum`")
    parser.add_argument("-o", "--out", default=None, help="output image (default: <input>.png)")
    parser.add_argument("--lines", default=None, help="CSV from `stark-sense levels` to overlay")
    args = parser.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    header, rows = read_csv(args.spectrum)
    if header[0] != "probe_ghz" or len(header) < 2:
        sys.exit(f"{args.spectrum}: expected a probe_ghz column plus a_d_* columns")
    probe = np.array([float(r[0]) for r in rows])
    amplitudes = np.array([float(name.removeprefix("a_d_")) for name in header[1:]])
    values = np.array([[float(cell) for cell in r[1:]] for r in rows])

    fig, ax = plt.subplots(figsize=(7, 5))
    if len(amplitudes) > 1:
        mesh = ax.pcolormesh(amplitudes, probe, values, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="level population (window average)")
        ax.set_xlabel("drive amplitude $A_D/2\\pi$ (GHz)")
        ax.set_ylabel("probe frequency (GHz)")
    else:
        ax.plot(probe, values[:, 0])
        ax.set_xlabel("probe frequency (GHz)")
        ax.set_ylabel("level population (window average)")
        ax.set_title(f"$A_D/2\\pi$ = {amplitudes[0]} GHz")

    if args.lines:
        lheader, lrows = read_csv(args.lines)
        if lheader[0] != "a_d_ghz":
            sys.exit(f"{args.lines}: expected a_d_ghz plus line_k* columns")
        la = np.array([float(r[0]) for r in lrows])
        for j, name in enumerate(lheader[1:], start=1):
            ax.plot(la, [float(r[j]) for r in lrows], "w--", lw=1.0, label=name)
        ax.legend(loc="upper right", fontsize=8)
        ax.set_ylim(probe.min(), probe.max())

    out = args.out or args.spectrum.rsplit(".", 1)[0] + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=160)
    print(out)


if __name__ == "__main__":
    main()
