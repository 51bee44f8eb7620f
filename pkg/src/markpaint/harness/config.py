"""Experiment configuration: one YAML document, validated with exact paths.

The config drives every batch command. Defaults mirror the evaluation
protocol: 100 iterations at step eps/50 for table runs, 1500 iterations at
step eps/30 with 40 pre-sampled masks for mask-agnostic runs, coverages of
5/10/20%, and solid red/green/blue targets.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic import ValidationError as PydanticValidationError

from ..defense import DefenseSpec
from ..errors import ConfigError

StepSpec = Union[float, str, None]


class LossParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=4.0, ge=0.0)
    extractor: str = "pyramid"
    feature_weights: Optional[str] = None


class AttackParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    iterations: int = Field(default=100, ge=0)
    step: StepSpec = "eps/50"


class EoTParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    iterations: int = Field(default=1500, ge=0)
    step: StepSpec = "eps/30"
    n_masks: int = Field(default=40, ge=1)
    coverage_min: float = Field(default=0.01, gt=0.0, lt=1.0)
    coverage_max: float = Field(default=0.1, gt=0.0, lt=1.0)
    holdout_coverages: list[float] = Field(default=[0.025, 0.05, 0.1])
    holdout_per_coverage: int = Field(default=3, ge=1)


class DefenseGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")

    jpeg: list[float] = Field(default=[30, 50, 70, 90])
    lowpass: list[float] = Field(default=[0.25, 0.5, 0.75])
    gaussian_blur: list[float] = Field(default=[0.5, 1.0, 2.0])
    brightness: list[float] = Field(default=[-0.2, -0.1, 0.1, 0.2])
    contrast: list[float] = Field(default=[0.8, 1.2])

    def specs(self) -> list[DefenseSpec]:
        out = []
        for kind in ("jpeg", "lowpass", "gaussian_blur", "brightness",
                     "contrast"):
            out.extend(DefenseSpec(kind, p) for p in getattr(self, kind))
        return out


class ModelsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    attack: list[str] = Field(min_length=1)
    eval: Optional[list[str]] = None


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    corpus: str
    working_size: int = Field(default=256, ge=16)
    models: ModelsSpec
    epsilons: list[float] = Field(min_length=1)
    coverages: list[float] = Field(default=[0.05, 0.1, 0.2])
    targets: list[str] = Field(default=["red", "green", "blue"])
    loss: LossParams = LossParams()
    attack: AttackParams = AttackParams()
    eot: EoTParams = EoTParams()
    defenses: DefenseGrid = DefenseGrid()
    out_dir: str = "runs"
    seed: int = 0
    jobs: int = Field(default=1, ge=1)

    @field_validator("epsilons")
    @classmethod
    def _eps_range(cls, v):
        for e in v:
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"epsilon {e} outside [0, 1]")
        return v

    @field_validator("coverages")
    @classmethod
    def _cov_range(cls, v):
        for c in v:
            if not 0.0 < c <= 1.0:
                raise ValueError(f"coverage {c} outside (0, 1]")
        return v

    def eval_model_specs(self) -> list[str]:
        return self.models.eval if self.models.eval else self.models.attack


def _check_referenced_paths(cfg: ExperimentConfig) -> None:
    problems = []
    if not Path(cfg.corpus).is_dir():
        problems.append(f"corpus: directory {cfg.corpus!r} does not exist")
    for field_name, specs in (("models.attack", cfg.models.attack),
                              ("models.eval", cfg.models.eval or [])):
        for i, spec in enumerate(specs):
            path = spec.split("=", 1)[-1]
            if ":" in path:
                path = path.split(":", 1)[1]
            if path and not Path(path).is_file():
                problems.append(f"{field_name}[{i}]: checkpoint {path!r} "
                                f"does not exist")
    for i, t in enumerate(cfg.targets):
        looks_like_path = "." in Path(t).name and not t.startswith("#") \
            and "," not in t
        if looks_like_path and not Path(t).is_file():
            problems.append(f"targets[{i}]: image {t!r} does not exist")
    if problems:
        raise ConfigError("; ".join(problems))


def validate_config(raw: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except PydanticValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "(root)"
            lines.append(f"{loc}: {err['msg']}")
        raise ConfigError("invalid experiment config: " + "; ".join(lines)) \
            from None
    _check_referenced_paths(cfg)
    return cfg


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a YAML config file and validate it; `overrides` patch top-level keys."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a key-value document")
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(raw)


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of the canonical config JSON; stable under key reordering."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
