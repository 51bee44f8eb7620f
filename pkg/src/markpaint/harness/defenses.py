"""Defense sweeps across the experiment grid.

Thin wrapper over `defense_sweep`: craft each combo's adversarial image with
the grid's seed derivation, run every transform in the grid, and record the
patch losses to the target and to the benign fill, plus an undefended
baseline row per combo (kind "none").
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

from ..attack import markpaint
from ..defense import defense_sweep
from ..errors import MarkpaintError
from ..imaging import derive_seed
from ..metrics import hole_patch_loss
from .config import ExperimentConfig, config_hash
from .corpus import load_corpus, parse_target, target_label
from .grid import attack_config_for, fixed_masks, grid_loss_config
from .runs import RunRecord, load_models, write_csv, write_failures, write_meta

logger = logging.getLogger(__name__)

ROW_HEADER = ["image", "coverage", "target", "epsilon", "model", "kind",
              "parameter", "loss_to_target", "loss_to_benign"]


def run_defense_sweep(cfg: ExperimentConfig) -> RunRecord:
    t0 = time.time()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(cfg.corpus, cfg.working_size)
    models = load_models(cfg.models.attack)
    masks = fixed_masks(cfg)
    targets = [(target_label(t), parse_target(t, cfg.working_size,
                                              cfg.working_size))
               for t in cfg.targets]
    specs = cfg.defenses.specs()
    loss_cfg = grid_loss_config(cfg)

    rows: list[list] = []
    failures: list[tuple[str, str]] = []
    for name, img in corpus:
        for cov in cfg.coverages:
            for tlabel, tgt in targets:
                for eps in cfg.epsilons:
                    for mlabel, model in models:
                        seed = derive_seed(cfg.seed, "attack", name, repr(cov),
                                           tlabel, repr(eps), mlabel)
                        label = (f"{name}/cov={cov}/target={tlabel}/eps={eps}"
                                 f"/model={mlabel}")
                        try:
                            result = markpaint(img, masks[cov], tgt, [model],
                                               attack_config_for(cfg, eps,
                                                                 seed))
                            mark = model.inpaint(result.adv, masks[cov])
                            benign = model.inpaint(img, masks[cov])
                            rows.append([
                                name, cov, tlabel, eps, mlabel, "none", 0.0,
                                hole_patch_loss(mark, tgt, masks[cov], loss_cfg),
                                hole_patch_loss(mark, benign, masks[cov],
                                                loss_cfg),
                            ])
                            outcomes = defense_sweep(img, result.adv,
                                                     masks[cov], tgt, model,
                                                     specs, loss_cfg)
                        except MarkpaintError as exc:
                            failures.append((label, str(exc)))
                            continue
                        for oc in outcomes:
                            rows.append([name, cov, tlabel, eps, mlabel,
                                         oc.spec.kind, oc.spec.parameter,
                                         oc.loss_to_target, oc.loss_to_benign])

    rows_path = write_csv(out_dir / "defense_rows.csv", ROW_HEADER, rows)
    write_failures(out_dir, failures)
    chash = config_hash(cfg)
    wall = time.time() - t0
    write_meta(out_dir, chash, wall, failures)
    return RunRecord(config_hash=chash, out_dir=out_dir, csv_paths=[rows_path],
                     row_count=len(rows), failures=failures, wall_clock=wall)
