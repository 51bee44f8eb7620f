"""The attack grid: craft and evaluate every image/mask/target/epsilon/model combo.

Emits a per-row CSV (one row per combo and reference) and a mean/std aggregate
CSV grouped by (epsilon, model, reference). Per-combination failures are
recorded and skipped so a long grid survives one bad combination.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..attack import AttackConfig, markpaint, resolve_step
from ..errors import MarkpaintError
from ..imaging import derive_seed, random_rect_mask
from ..loss import LossConfig
from ..metrics import evaluate
from .config import ExperimentConfig, config_hash
from .corpus import load_corpus, parse_target, target_label
from .runs import (RunRecord, load_models, mean_std, write_csv, write_failures,
                   write_meta)

logger = logging.getLogger(__name__)

ROW_HEADER = ["image", "coverage", "target", "epsilon", "model", "reference",
              "loss", "l2", "psnr", "ssim"]
AGG_HEADER = ["epsilon", "model", "reference", "loss_mean", "loss_std",
              "l2_mean", "l2_std", "psnr_mean", "psnr_std", "ssim_mean",
              "ssim_std"]
REFERENCES = ("original", "target", "benign")


def fixed_masks(cfg: ExperimentConfig) -> dict[float, np.ndarray]:
    """One fixed random mask per coverage level, shared across all images."""
    size = cfg.working_size
    return {cov: random_rect_mask(size, size, cov,
                                  derive_seed(cfg.seed, "mask", repr(cov)))
            for cov in cfg.coverages}


def grid_loss_config(cfg: ExperimentConfig) -> LossConfig:
    return LossConfig(alpha=cfg.loss.alpha, extractor=cfg.loss.extractor,
                      feature_weights=cfg.loss.feature_weights)


def attack_config_for(cfg: ExperimentConfig, epsilon: float,
                      seed: int) -> AttackConfig:
    return AttackConfig(epsilon=epsilon,
                        step=resolve_step(cfg.attack.step, epsilon),
                        iterations=cfg.attack.iterations,
                        loss=grid_loss_config(cfg), seed=seed)


def aggregate_rows(rows: list[list]) -> list[list]:
    """Group metric rows by (epsilon, model, reference); mean/std per metric."""
    groups: dict[tuple, list[list[float]]] = {}
    order: list[tuple] = []
    for row in rows:
        key = (row[3], row[4], row[5])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row[6:10])
    out = []
    for key in order:
        cells = groups[key]
        agg = list(key)
        for metric_idx in range(4):
            m, s = mean_std([c[metric_idx] for c in cells])
            agg += [m, s]
        out.append(agg)
    return out


def run_attack_grid(cfg: ExperimentConfig) -> RunRecord:
    t0 = time.time()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(cfg.corpus, cfg.working_size)
    models = load_models(cfg.models.attack)
    masks = fixed_masks(cfg)
    targets = [(target_label(t), parse_target(t, cfg.working_size,
                                              cfg.working_size))
               for t in cfg.targets]
    loss_cfg = grid_loss_config(cfg)

    combos = [(name, img, cov, tlabel, tgt, eps, mlabel, model)
              for name, img in corpus
              for cov in cfg.coverages
              for tlabel, tgt in targets
              for eps in cfg.epsilons
              for mlabel, model in models]

    def one(combo):
        name, img, cov, tlabel, tgt, eps, mlabel, model = combo
        seed = derive_seed(cfg.seed, "attack", name, repr(cov), tlabel,
                           repr(eps), mlabel)
        acfg = attack_config_for(cfg, eps, seed)
        result = markpaint(img, masks[cov], tgt, [model], acfg)
        report = evaluate(img, masks[cov], tgt, model, result.adv, loss_cfg)
        rows = []
        for ref, cell in report.rows():
            rows.append([name, cov, tlabel, eps, mlabel, ref,
                         cell.loss, cell.l2, cell.psnr, cell.ssim])
        return rows

    rows: list[list] = []
    failures: list[tuple[str, str]] = []
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(one, c) for c in combos]
            results = []
            for combo, fut in zip(combos, futures):
                try:
                    results.append(fut.result())
                except MarkpaintError as exc:
                    results.append(None)
                    failures.append((_combo_label(combo), str(exc)))
    else:
        results = []
        for combo in combos:
            try:
                results.append(one(combo))
            except MarkpaintError as exc:
                results.append(None)
                failures.append((_combo_label(combo), str(exc)))
    for chunk in results:
        if chunk:
            rows.extend(chunk)

    rows_path = write_csv(out_dir / "grid_rows.csv", ROW_HEADER, rows)
    agg_path = write_csv(out_dir / "grid_aggregate.csv", AGG_HEADER,
                         aggregate_rows(rows))
    write_failures(out_dir, failures)
    chash = config_hash(cfg)
    wall = time.time() - t0
    write_meta(out_dir, chash, wall, failures)
    if failures:
        logger.warning("grid finished with %d failed combos", len(failures))
    return RunRecord(config_hash=chash, out_dir=out_dir,
                     csv_paths=[rows_path, agg_path], row_count=len(rows),
                     failures=failures, wall_clock=wall)


def _combo_label(combo) -> str:
    name, _, cov, tlabel, _, eps, mlabel, _ = combo
    return f"{name}/cov={cov}/target={tlabel}/eps={eps}/model={mlabel}"
