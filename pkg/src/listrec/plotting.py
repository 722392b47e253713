"""Figures for experiment grids and Schwartz-Zippel runs."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

VERDICT_COLORS = {
    "ConsistentWithTheorem": "tab:green",
    "CounterexampleFound": "tab:red",
    "Inconclusive": "tab:gray",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_experiment(rows: Sequence[dict], path) -> Path:
    """Max near-codeword count against K*ell, one marker per cell.

    Filled markers are cells whose code is good up to B, hollow ones are not.
    """
    fig, ax = plt.subplots(figsize=(6, 4.5))
    top = 1.0
    for r in rows:
        if r["adversary_exact"] is None:
            # degenerate cells skip the adversary
            continue
        x = float(Fraction(r["K_ell"]))
        y = r["max_count_found"]
        top = max(top, x, y)
        color = VERDICT_COLORS.get(r["verdict"], "black")
        face = color if r["good"] else "none"
        ax.scatter([x], [y], s=30, edgecolors=color, facecolors=face, linewidths=1.2)
    ax.plot([0, top], [0, top], "k--", lw=0.8, label="count = K ell")
    for verdict, color in VERDICT_COLORS.items():
        ax.scatter([], [], color=color, label=verdict)
    ax.set_xlabel("K ell")
    ax.set_ylabel("largest count found")
    ax.set_title("Near-codeword counts per cell (filled: good up to B)")
    ax.legend(fontsize=8, loc="upper left")
    return _save(fig, path)


def plot_szlab(report: dict, path) -> Path:
    """Empirical failure frequency with its interval against the bounds."""
    fig, ax = plt.subplots(figsize=(5, 4))
    labels = ["empirical"]
    values = [report["frequency"]]
    lo, hi = report["wilson_95"]
    err = [[values[0] - lo], [hi - values[0]]]
    ax.bar([0], values, yerr=err, color="tab:blue", capsize=6)
    if report.get("union_bound") is not None:
        labels.append("union of vanishing")
        values.append(float(Fraction(report["union_bound"])))
        ax.bar([1], values[-1:], color="tab:orange")
    labels.append("failure bound (capped)")
    values.append(report["bound_capped"])
    ax.bar([len(labels) - 1], values[-1:], color="tab:gray")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("probability")
    ax.set_title(f"Not good up to B={report['B']} (m={report['m']}, d={report['d']}, p={report['p']})")
    return _save(fig, path)
