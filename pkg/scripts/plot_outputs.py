#!/usr/bin/env python3
"""Quick-look plots of golden-suite CSVs (needs matplotlib; not part of the acceptance path).

    python scripts/plot_outputs.py out/golden --save figs/
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from hybridsim.reproduction import read_map


def load(path: Path) -> tuple[list[str], np.ndarray]:
    head = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    return head, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def image(ax, path: Path, title):
    b, f, z = read_map(path)
    ax.pcolormesh(b, f, z.T, shading="auto")
    ax.set_xlabel("B (G)")
    ax.set_ylabel("f (MHz)")
    ax.set_title(title)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root", type=Path)
    ap.add_argument("--save", type=Path, help="write PNGs here instead of showing")
    args = ap.parse_args(argv)
    r = args.root

    figs = {}
    fig, ax = plt.subplots()
    for name in ("desw", "bvmsw"):
        _, d = load(r / "fig1c" / f"disp_{name}.csv")
        ax.plot(d[:, 0], d[:, 1], label=name.upper())
    ax.set_xlabel("k (rad/um)")
    ax.set_ylabel("f (MHz)")
    ax.legend()
    figs["fig1c"] = fig

    fig, ax = plt.subplots()
    image(ax, r / "fig1d" / "transmission.csv", "transmission")
    figs["fig1d"] = fig

    for case in ("fig2a", "fig2b", "fig2c"):
        panels = json.loads((r / case / "summary.json").read_text())["panels"]
        fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.5), squeeze=False)
        for ax, pnl in zip(axes[0], panels):
            image(ax, r / case / pnl["file"], f"theta={pnl['theta']:.2f}, P={pnl['power_mW']:g} mW")
        figs[case] = fig

    fig, ax = plt.subplots()
    for name in ("sw", "antenna"):
        _, d = load(r / "fig3a" / f"rabi_{name}.csv")
        ax.plot(d[:, 0], d[:, 1], label=name)
    ax.set_xlabel("t (us)")
    ax.legend()
    figs["fig3a"] = fig

    fig, ax = plt.subplots()
    _, d = load(r / "fig3b" / "amplification.csv")
    ax.plot(d[:, 0], d[:, 1], "o-")
    ax.set_xlabel("x (um)")
    ax.set_ylabel("amplification")
    figs["fig3b"] = fig

    fig, ax = plt.subplots()
    _, d = load(r / "fig3c" / "power_scaling.csv")
    ax.plot(d[:, 1], d[:, 2], "o")
    ax.set_xlabel("sqrt(P) (sqrt(mW))")
    ax.set_ylabel("Rabi (MHz)")
    figs["fig3c"] = fig

    fig, ax = plt.subplots()
    for p in sorted((r / "fig3d").glob("trace_*.csv")):
        _, d = load(p)
        ax.plot(d[:, 0], d[:, 1], label=p.stem[6:])
    ax.set_xlabel("free time (us)")
    ax.legend()
    figs["fig3d"] = fig

    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.5))
    _, d = load(r / "fig4" / "sensing_trace.csv")
    a1.plot(d[:, 0], d[:, 1])
    a1.set_xlabel("tau (us)")
    _, d = load(r / "fig4" / "sensing_sweep.csv")
    a2.plot(d[:, 0], d[:, 1])
    a2.set_xlabel("b_drive (G)")
    figs["fig4"] = fig

    if args.save:
        args.save.mkdir(parents=True, exist_ok=True)
        for name, f in figs.items():
            f.tight_layout()
            f.savefig(args.save / f"{name}.png", dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
