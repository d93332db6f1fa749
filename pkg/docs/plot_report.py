"""Plot the node table of a matevo report (JSON or CSV).

Needs matplotlib, which is not a dependency of the package::

    python docs/plot_report.py report.json -o report.png
"""

import argparse
import csv
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SERIES = ("sym_dim", "evo_dim", "evo_base_dim", "morph_dim", "morph_base_dim")


def load_nodes(path):
    if path.endswith(".csv"):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return [{k: (float(v) if v not in ("",) and k != "flags" else v or None) for k, v in r.items()}
                for r in rows]
    with open(path) as fh:
        return json.load(fh)["nodes"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("report")
    ap.add_argument("-o", "--output", default="report.png")
    args = ap.parse_args()

    nodes = load_nodes(args.report)
    columns = sorted({n["x1"] for n in nodes})
    fig, axes = plt.subplots(len(columns), 1, figsize=(7, 2.6 * len(columns)), squeeze=False)
    for ax, x1 in zip(axes[:, 0], columns):
        col = [n for n in nodes if n["x1"] == x1]
        ts = [n["t"] for n in col]
        for key in SERIES:
            ax.step(ts, [n[key] if n[key] is not None else float("nan") for n in col],
                    where="mid", label=key)
        for n in col:
            if n["flags"] and "jump" in n["flags"]:
                ax.axvline(n["t"], color="k", ls=":", lw=0.8)
        ax.set_title(f"x1 = {x1:g}")
        ax.set_xlabel("t")
        ax.set_ylabel("dimension")
    axes[0, 0].legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
