"""Render curve-family plots from run CSVs; presentation only, no analysis.

The CSV header decides the family: grid aggregates become loss-vs-epsilon
curves per reference (one line per model, std error bars), EoT aggregates one
loss-vs-epsilon panel, transfer curves one panel per crafting model, and
defense rows one panel per transform kind. File names are deterministic.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from ..errors import ValidationError
from .runs import read_csv

logger = logging.getLogger(__name__)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def _floats(rows, col):
    return [float(r[col]) for r in rows]


def _plot_grid_aggregate(header, rows, out_dir: Path) -> list[Path]:
    paths = []
    col = {name: i for i, name in enumerate(header)}
    by_ref = defaultdict(list)
    for r in rows:
        by_ref[r[col["reference"]]].append(r)
    for ref in sorted(by_ref):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        by_model = defaultdict(list)
        for r in by_ref[ref]:
            by_model[r[col["model"]]].append(r)
        for model in sorted(by_model):
            rs = sorted(by_model[model], key=lambda r: float(r[col["epsilon"]]))
            ax.errorbar(_floats(rs, col["epsilon"]),
                        _floats(rs, col["loss_mean"]),
                        yerr=_floats(rs, col["loss_std"]),
                        marker="o", capsize=3, label=model)
        ax.set_xlabel("epsilon")
        ax.set_ylabel(f"loss to {ref}")
        ax.legend()
        paths.append(_save(fig, out_dir / f"grid_loss_{ref}.png"))
    return paths


def _plot_eot_aggregate(header, rows, out_dir: Path) -> list[Path]:
    col = {name: i for i, name in enumerate(header)}
    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_model = defaultdict(list)
    for r in rows:
        by_model[r[col["model"]]].append(r)
    for model in sorted(by_model):
        rs = sorted(by_model[model], key=lambda r: float(r[col["epsilon"]]))
        ax.errorbar(_floats(rs, col["epsilon"]), _floats(rs, col["loss_mean"]),
                    yerr=_floats(rs, col["loss_std"]), marker="o", capsize=3,
                    label=model)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("loss to target (held-out masks)")
    ax.legend()
    return [_save(fig, out_dir / "eot_loss.png")]


def _plot_transfer_curves(header, rows, out_dir: Path) -> list[Path]:
    paths = []
    col = {name: i for i, name in enumerate(header)}
    by_craft = defaultdict(list)
    for r in rows:
        by_craft[r[col["craft_model"]]].append(r)
    for craft in sorted(by_craft):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        by_eval = defaultdict(list)
        for r in by_craft[craft]:
            by_eval[r[col["eval_model"]]].append(r)
        for ev in sorted(by_eval):
            rs = sorted(by_eval[ev], key=lambda r: float(r[col["epsilon"]]))
            ax.errorbar(_floats(rs, col["epsilon"]),
                        _floats(rs, col["loss_mean"]),
                        yerr=_floats(rs, col["loss_std"]),
                        marker="o", capsize=3, label=ev)
        ax.set_xlabel("epsilon")
        ax.set_ylabel("loss to target")
        ax.set_title(f"crafted on {craft}")
        ax.legend()
        paths.append(_save(fig, out_dir / f"transfer_from_{craft}.png"))
    return paths


def _plot_defense_rows(header, rows, out_dir: Path) -> list[Path]:
    paths = []
    col = {name: i for i, name in enumerate(header)}
    by_kind = defaultdict(list)
    for r in rows:
        if r[col["kind"]] != "none":
            by_kind[r[col["kind"]]].append(r)
    for kind in sorted(by_kind):
        groups = defaultdict(lambda: ([], []))
        for r in by_kind[kind]:
            p = float(r[col["parameter"]])
            groups[p][0].append(float(r[col["loss_to_target"]]))
            groups[p][1].append(float(r[col["loss_to_benign"]]))
        params = sorted(groups)
        to_target = [sum(groups[p][0]) / len(groups[p][0]) for p in params]
        to_benign = [sum(groups[p][1]) / len(groups[p][1]) for p in params]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(params, to_target, marker="o", label="loss to target")
        ax.plot(params, to_benign, marker="s", label="loss to benign")
        ax.set_xlabel(f"{kind} parameter")
        ax.set_ylabel("patch loss")
        ax.legend()
        paths.append(_save(fig, out_dir / f"defense_{kind}.png"))
    return paths


_FAMILIES = [
    ({"epsilon", "model", "reference", "loss_mean"}, _plot_grid_aggregate),
    ({"epsilon", "model", "loss_mean", "loss_std"}, _plot_eot_aggregate),
    ({"craft_model", "eval_model", "epsilon", "loss_mean"},
     _plot_transfer_curves),
    ({"kind", "parameter", "loss_to_target", "loss_to_benign"},
     _plot_defense_rows),
]


def emit_plots(csv_path, out_dir) -> list[Path]:
    """Render the curve family a CSV holds; returns the written image paths."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir)
    if not csv_path.is_file():
        raise ValidationError(f"{csv_path}: no such CSV")
    header, rows = read_csv(csv_path)
    if not header:
        raise ValidationError(f"{csv_path}: malformed CSV (no header)")
    if not rows:
        logger.warning("%s holds no data rows; nothing to plot", csv_path)
        return []
    cols = set(header)
    for signature, renderer in _FAMILIES:
        if signature <= cols:
            return renderer(header, rows, out_dir)
    raise ValidationError(f"{csv_path}: unrecognized CSV family "
                          f"(columns {sorted(cols)})")
