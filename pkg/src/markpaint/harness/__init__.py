"""Experiment orchestration: grids, transfer matrices, EoT runs, defenses, plots."""

from .config import ExperimentConfig, config_hash, load_config
from .corpus import load_corpus, parse_target, target_label
from .grid import run_attack_grid
from .transfer import run_transfer_matrix
from .eot import run_eot_experiment
from .defenses import run_defense_sweep
from .plots import emit_plots
from .runs import RunRecord

__all__ = [
    "ExperimentConfig", "config_hash", "load_config",
    "load_corpus", "parse_target", "target_label",
    "run_attack_grid", "run_transfer_matrix", "run_eot_experiment",
    "run_defense_sweep", "emit_plots", "RunRecord",
]
