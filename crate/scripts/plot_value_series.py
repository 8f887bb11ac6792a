"""Plot value_series.csv written by `gdarb backtest`, one panel per strategy.

usage: python scripts/plot_value_series.py OUT_DIR [--save plot.png]
"""

import argparse
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--save", type=Path)
    args = ap.parse_args()

    df = pd.read_csv(args.out_dir / "value_series.csv")
    strategies = list(df["strategy"].unique())
    fig, axes = plt.subplots(1, len(strategies), figsize=(5 * len(strategies), 4), squeeze=False)
    for ax, name in zip(axes[0], strategies):
        sub = df[df["strategy"] == name]
        for (path_id, route), g in sub.groupby(["path_id", "route"]):
            style = "-" if route == "integral" else "--"
            ax.plot(g["t"], g["value"], style, lw=1, label=f"path {path_id} {route}")
        ax.set_title(name)
        ax.set_xlabel("t")
        ax.set_ylabel("V_t")
    axes[0][0].legend(fontsize=6)
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
