"""Plot planner and Monte Carlo outputs written by the covgrad CLI.

usage: python3 scripts/plot_results.py PLAN_DIR [SIM_DIR ...] [-o figure.png]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("plan_dir", type=Path)
    ap.add_argument("sim_dirs", type=Path, nargs="*")
    ap.add_argument("-o", "--output", type=Path, default=Path("covgrad_results.png"))
    args = ap.parse_args()

    fig, axes = plt.subplots(2, 2, figsize=(11, 8))

    states = pd.read_csv(args.plan_dir / "states.csv")
    axes[0, 0].plot(states.px, states.py)
    axes[0, 0].set(title="planned path", xlabel="x [m]", ylabel="y [m]", aspect="equal")

    controls = pd.read_csv(args.plan_dir / "controls.csv")
    initial_path = args.plan_dir / "initial_controls.csv"
    if initial_path.exists():
        initial = pd.read_csv(initial_path)
        axes[0, 1].plot(initial.step, initial.nu, label="initial", alpha=0.6)
    axes[0, 1].plot(controls.step, controls.nu, label="planned")
    axes[0, 1].set(title="steering", xlabel="step", ylabel="nu [rad]")
    axes[0, 1].legend()

    history = pd.read_csv(args.plan_dir / "loss_history.csv")
    axes[1, 0].semilogy(history.iter, history.loss)
    axes[1, 0].set(title="objective", xlabel="iteration")

    for sim in args.sim_dirs:
        summary = pd.read_csv(sim / "error_summary.csv")
        axes[1, 1].plot(summary.step, summary.mean_lx, label=f"{sim.name} lx")
        axes[1, 1].plot(summary.step, summary.mean_ly, label=f"{sim.name} ly")
    if args.sim_dirs:
        axes[1, 1].set(title="mean absolute lever-arm error", xlabel="step", ylabel="[m]")
        axes[1, 1].legend()
    else:
        axes[1, 1].axis("off")

    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
