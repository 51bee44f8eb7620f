"""Transfer matrices: craft on model i, evaluate loss-to-target on model j.

Crafting seeds match the attack grid's derivation, so diagonal entries equal
the self-attack results of `run_attack_grid` under the same config. Emits the
per-row CSV, one mean matrix per epsilon, and per-(i, j) curves over epsilon.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

from ..attack import markpaint
from ..errors import MarkpaintError
from ..imaging import derive_seed
from ..metrics import evaluate
from .config import ExperimentConfig, config_hash
from .corpus import load_corpus, parse_target, target_label
from .grid import attack_config_for, fixed_masks, grid_loss_config
from .runs import (RunRecord, load_models, mean_std, write_csv, write_failures,
                   write_meta)

logger = logging.getLogger(__name__)

ROW_HEADER = ["image", "coverage", "target", "epsilon", "craft_model",
              "eval_model", "loss_to_target"]
CURVE_HEADER = ["craft_model", "eval_model", "epsilon", "loss_mean", "loss_std"]


def run_transfer_matrix(cfg: ExperimentConfig) -> RunRecord:
    t0 = time.time()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(cfg.corpus, cfg.working_size)
    craft_models = load_models(cfg.models.attack)
    eval_models = load_models(cfg.eval_model_specs())
    masks = fixed_masks(cfg)
    targets = [(target_label(t), parse_target(t, cfg.working_size,
                                              cfg.working_size))
               for t in cfg.targets]
    loss_cfg = grid_loss_config(cfg)

    rows: list[list] = []
    failures: list[tuple[str, str]] = []
    for name, img in corpus:
        for cov in cfg.coverages:
            for tlabel, tgt in targets:
                for eps in cfg.epsilons:
                    for clabel, cmodel in craft_models:
                        seed = derive_seed(cfg.seed, "attack", name, repr(cov),
                                           tlabel, repr(eps), clabel)
                        label = (f"{name}/cov={cov}/target={tlabel}/eps={eps}"
                                 f"/craft={clabel}")
                        try:
                            result = markpaint(img, masks[cov], tgt, [cmodel],
                                               attack_config_for(cfg, eps, seed))
                        except MarkpaintError as exc:
                            failures.append((label, str(exc)))
                            continue
                        for elabel, emodel in eval_models:
                            try:
                                report = evaluate(img, masks[cov], tgt, emodel,
                                                  result.adv, loss_cfg)
                            except MarkpaintError as exc:
                                failures.append((f"{label}/eval={elabel}",
                                                 str(exc)))
                                continue
                            rows.append([name, cov, tlabel, eps, clabel,
                                         elabel, report.target.loss])

    rows_path = write_csv(out_dir / "transfer_rows.csv", ROW_HEADER, rows)
    csv_paths = [rows_path]

    # One mean matrix per epsilon (craft rows x eval columns).
    eval_labels = [label for label, _ in eval_models]
    for eps in cfg.epsilons:
        matrix_rows = []
        for clabel, _ in craft_models:
            entry = [clabel]
            for elabel in eval_labels:
                vals = [r[6] for r in rows
                        if r[3] == eps and r[4] == clabel and r[5] == elabel]
                entry.append(mean_std(vals)[0] if vals else float("nan"))
            matrix_rows.append(entry)
        path = write_csv(out_dir / f"transfer_matrix_eps{eps:g}.csv",
                         ["craft_model"] + eval_labels, matrix_rows)
        csv_paths.append(path)

    curve_rows = []
    for clabel, _ in craft_models:
        for elabel in eval_labels:
            for eps in cfg.epsilons:
                vals = [r[6] for r in rows
                        if r[3] == eps and r[4] == clabel and r[5] == elabel]
                if vals:
                    m, s = mean_std(vals)
                    curve_rows.append([clabel, elabel, eps, m, s])
    csv_paths.append(write_csv(out_dir / "transfer_curves.csv", CURVE_HEADER,
                               curve_rows))

    write_failures(out_dir, failures)
    chash = config_hash(cfg)
    wall = time.time() - t0
    write_meta(out_dir, chash, wall, failures)
    return RunRecord(config_hash=chash, out_dir=out_dir, csv_paths=csv_paths,
                     row_count=len(rows), failures=failures, wall_clock=wall)
