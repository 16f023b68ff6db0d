"""Score comparison tables from experiment cell records or score files."""

from __future__ import annotations

import csv
from collections import defaultdict

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import SCORE_KEYS, read_score_records

KIND_ORDER = ("isotropic", "axially_symmetric", "general")
KIND_LABEL = {
    "isotropic": "Isotropic",
    "axially_symmetric": "Axially symmetric",
    "general": "Nonstationary",
}


def aggregate(records):
    """Average replicates per (true, assumed, split); label-less records pass through.

    Returns a list of row dicts with keys: group, assumed, split, scores.
    """
    labeled = [r for r in records if r["assumed_kind"] is not None]
    bare = [r for r in records if r["assumed_kind"] is None]
    rows = []
    groups = defaultdict(list)
    for r in labeled:
        groups[(r["true_kind"], r["assumed_kind"], r["split"])].append(r)

    def kind_rank(kind):
        return KIND_ORDER.index(kind) if kind in KIND_ORDER else len(KIND_ORDER)

    for (true_kind, assumed, split), cell in sorted(
        groups.items(), key=lambda kv: (str(kv[0][2]), kind_rank(kv[0][0]), kind_rank(kv[0][1]))
    ):
        rows.append(
            {
                "group": f"True {KIND_LABEL.get(true_kind, true_kind)}" if true_kind else "",
                "assumed": KIND_LABEL.get(assumed, assumed),
                "split": split or "",
                "n": len(cell),
                **{k: float(np.mean([c[k] for c in cell])) for k in SCORE_KEYS},
            }
        )
    for r in bare:
        rows.append({"group": "", "assumed": r["label"], "split": "", "n": 1, **{k: r[k] for k in SCORE_KEYS}})
    return rows


def render_scores(paths, out_image, out_csv=None):
    """Render a Table-1-style score table image (and optional CSV)."""
    rows = aggregate(read_score_records(paths))
    header = ["True model", "Assumed model", "Split", "MAE", "RMSE", "CRPS", "Energy"]
    display = [
        [r["group"], r["assumed"], r["split"]] + [f"{r[k]:.3f}" for k in SCORE_KEYS] for r in rows
    ]

    fig_height = 0.42 * (len(display) + 2)
    fig, ax = plt.subplots(figsize=(9.2, fig_height))
    ax.axis("off")
    table = ax.table(cellText=display, colLabels=header, loc="center", cellLoc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(9)
    table.scale(1.0, 1.25)
    for (row, _col), cell in table.get_celld().items():
        if row == 0:
            cell.set_text_props(weight="bold")
    ax.set_title("Prediction scores (lower is better)", pad=14)
    fig.tight_layout()
    fig.savefig(out_image, dpi=150, bbox_inches="tight")
    plt.close(fig)

    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true_model", "assumed_model", "split", "replicates"] + list(SCORE_KEYS))
            for r in rows:
                writer.writerow([r["group"], r["assumed"], r["split"], r["n"]] + [f"{r[k]:.6g}" for k in SCORE_KEYS])
    return out_image
