#!/usr/bin/env python3
"""Render the experiment CSVs produced by `reinsopt reproduce` as PNG figures.

Usage: python scripts/plot_figures.py RESULTS_DIR [OUT_DIR]

Plotting stays out of the package on purpose; the CSVs are the deliverable and
this script is just a convenience viewer.
"""

import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    cols = {name: [float(r[i]) for r in data] for i, name in enumerate(header)}
    return cols


def plot_trajectory(results, out):
    path = os.path.join(results, "fig1-trajectory", "fig1_trajectory.csv")
    if not os.path.exists(path):
        return
    cols = read_csv(path)
    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    axes[0].plot(cols["t"], cols["pi_star"], lw=1)
    axes[0].set_ylabel("investment")
    axes[1].plot(cols["t"], cols["theta_star"], lw=1, color="tab:red")
    axes[1].set_ylabel("retention")
    axes[1].set_xlabel("t")
    fig.suptitle("optimal strategy along one joint path")
    fig.tight_layout()
    fig.savefig(os.path.join(out, "fig1_trajectory.png"), dpi=150)
    plt.close(fig)


def plot_sweep(results, out, exp, stem, xcol):
    folder = os.path.join(results, exp)
    if not os.path.isdir(folder):
        return
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in sorted(os.listdir(folder)):
        if not name.startswith(stem):
            continue
        cols = read_csv(os.path.join(folder, name))
        tag = name[len(stem):-4]
        for col, style in (("pi_state1", "-"), ("pi_state2", "--")):
            if col in cols:
                ax.plot(cols[xcol], cols[col], style, label=f"{col}{tag}")
    ax.set_xlabel(xcol)
    ax.set_ylabel("investment")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(out, f"{exp}.png"), dpi=150)
    plt.close(fig)


def plot_gap(results, out):
    folder = os.path.join(results, "fig4-fb-gap")
    if not os.path.isdir(folder):
        return
    for name, xcol in (("fig4_gap_vs_t.csv", "t"),
                       ("fig4_gap_vs_beta.csv", "beta"),
                       ("fig4_gap_vs_gamma.csv", "gamma")):
        path = os.path.join(folder, name)
        if not os.path.exists(path):
            continue
        cols = read_csv(path)
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for col in cols:
            if col != xcol:
                ax.plot(cols[xcol], cols[col], label=col)
        ax.set_xlabel(xcol)
        ax.set_ylabel("forward minus benchmark investment")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(os.path.join(out, name.replace(".csv", ".png")), dpi=150)
        plt.close(fig)


def plot_value_gap(results, out):
    path = os.path.join(results, "fig5-value-gap", "fig5_value_gap.csv")
    if not os.path.exists(path):
        return
    cols = read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(cols["s"], cols["delta_state1"], "-", label="state 1")
    ax.plot(cols["s"], cols["delta_state2"], "--", label="state 2")
    ax.set_xlabel("initial price")
    ax.set_ylabel("relative value gap")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out, "fig5_value_gap.png"), dpi=150)
    plt.close(fig)


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    results = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else results
    os.makedirs(out, exist_ok=True)
    plot_trajectory(results, out)
    plot_sweep(results, out, "fig2-beta-sweep", "fig2_beta_sweep_s", "beta")
    plot_sweep(results, out, "fig3-gamma-sweep", "fig3_gamma_sweep_s", "gamma")
    plot_gap(results, out)
    plot_value_gap(results, out)
    print(f"figures written to {out}")


if __name__ == "__main__":
    main()
