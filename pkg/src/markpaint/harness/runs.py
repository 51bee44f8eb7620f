"""Shared machinery for batch runs: model loading, CSV emission, aggregation.

Data CSVs are fully determined by (config, seed, toolkit version): floats are
written with shortest-roundtrip repr, row order follows the configured loop
order, and wall-clock goes to a separate meta file that is excluded from the
determinism contract.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ConfigError
from ..inpaint import InpainterModel, load_model_spec


@dataclass
class RunRecord:
    """Outcome of one batch command."""

    config_hash: str
    out_dir: Path
    csv_paths: list[Path]
    row_count: int
    failures: list[tuple[str, str]]  # (combo label, error message)
    wall_clock: float
    version: str = __version__

    @property
    def ok(self) -> bool:
        return not self.failures


def load_models(specs: list[str]) -> list[tuple[str, InpainterModel]]:
    """Resolve model specs to (label, model) pairs with unique labels.

    A spec may carry an explicit label: ``label=spec`` (e.g.
    ``a=toy:/path/a.ckpt``); otherwise the checkpoint identifier is used.
    """
    out = []
    seen = set()
    for spec in specs:
        if "=" in spec:
            label, real = spec.split("=", 1)
        else:
            label, real = None, spec
        model = load_model_spec(real)
        label = label or model.identifier
        if label in seen:
            raise ConfigError(f"duplicate model label {label!r}; disambiguate "
                              f"with 'name={spec}'")
        seen.add(label)
        out.append((label, model))
    return out


def fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_value(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def mean_std(values: list[float]) -> tuple[float, float]:
    """Population mean/std; inf-valued cells propagate like the source tables
    (mean of infs is inf, their std is nan)."""
    arr = np.asarray(values, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        return float(arr.mean()), float(arr.std())


def write_meta(out_dir: Path, cfg_hash: str, wall_clock: float,
               failures: list) -> None:
    meta = {
        "config_hash": cfg_hash,
        "wall_clock_seconds": wall_clock,
        "toolkit_version": __version__,
        "failures": len(failures),
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def write_failures(out_dir: Path, failures: list[tuple[str, str]]) -> None:
    if failures:
        write_csv(out_dir / "failures.csv", ["combo", "error"],
                  [list(f) for f in failures])
