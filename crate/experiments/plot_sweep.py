"""Draw purity (bars) and final objective (line) against hidden width from a sweep CSV."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("out")
    ap.add_argument("--title", default=None)
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    df = df[df["method"] == "maxent-ffnn"].sort_values("hidden_size")

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(df["hidden_size"], df["purity"], color="#9ecae1", label="purity")
    ax.set_xlabel("hidden node number")
    ax.set_ylabel("purity")
    ax.set_ylim(0, 1)
    ax.set_xticks(df["hidden_size"])

    ax2 = ax.twinx()
    ax2.plot(df["hidden_size"], df["final_objective"], color="#d62728", marker="o", label="objective")
    ax2.set_ylabel("final objective J")

    handles = ax.get_legend_handles_labels()[0] + ax2.get_legend_handles_labels()[0]
    ax.legend(handles, ["purity", "objective"], loc="upper right")
    if args.title:
        ax.set_title(args.title)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
