"""Signed-gradient optimization that steers inpainters toward a target.

Two engines: the fixed-mask attack (accumulate per-model signed gradients of
the loss-to-target, subtract, clip to the L-infinity budget each iteration)
and the mask-agnostic variant that optimizes the expectation over a set of
pre-sampled rectangular masks, weighting each step with a uniform random
field. Updates only ever touch known pixels; the hole never receives them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch

from .errors import ModelCapabilityError, ValidationError
from .imaging import (ensure_image, ensure_mask, ensure_same_shape,
                      linf_distance, new_rng, random_rect_mask)
from .inpaint.model import InpainterModel
from .loss import LossConfig, MarkLossFn, to_image, to_tensor

DEFAULT_STEP_DIVISOR = 50.0
EOT_STEP_DIVISOR = 30.0


def resolve_step(step, epsilon: float, divisor: float = DEFAULT_STEP_DIVISOR,
                 ) -> float:
    """Resolve a step spec: a float, an "eps/N" string, or None (eps/divisor)."""
    if step is None:
        return epsilon / divisor
    if isinstance(step, str):
        spec = step.strip().lower().replace(" ", "")
        if spec.startswith("eps/"):
            try:
                return epsilon / float(spec[4:])
            except (ValueError, ZeroDivisionError):
                raise ValidationError(f"bad step spec {step!r}") from None
        try:
            return float(spec)
        except ValueError:
            raise ValidationError(f"bad step spec {step!r}") from None
    return float(step)


@dataclass(frozen=True)
class AttackConfig:
    """Knobs of the fixed-mask attack; step defaults to epsilon/50."""

    epsilon: float
    step: Optional[float] = None
    iterations: int = 100
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1], got "
                                  f"{self.epsilon}")
        if self.iterations < 0:
            raise ValidationError(f"iterations must be >= 0, got "
                                  f"{self.iterations}")
        step = self.resolved_step
        if not 0.0 <= step <= max(self.epsilon, 0.0) + 1e-12:
            raise ValidationError(f"step must satisfy 0 <= step <= epsilon, "
                                  f"got step={step} epsilon={self.epsilon}")

    @property
    def resolved_step(self) -> float:
        return resolve_step(self.step, self.epsilon, DEFAULT_STEP_DIVISOR)


@dataclass(frozen=True)
class EoTConfig:
    """Knobs of the mask-agnostic attack; step defaults to epsilon/30."""

    epsilon: float
    step: Optional[float] = None
    iterations: int = 1500
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0
    n_masks: int = 40
    coverage_min: float = 0.01
    coverage_max: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1], got "
                                  f"{self.epsilon}")
        if self.iterations < 0:
            raise ValidationError(f"iterations must be >= 0, got "
                                  f"{self.iterations}")
        if self.n_masks < 1:
            raise ValidationError(f"n_masks must be >= 1, got {self.n_masks}")
        if not (0.0 < self.coverage_min <= self.coverage_max < 1.0):
            raise ValidationError(f"coverage range must satisfy 0 < min <= max "
                                  f"< 1, got [{self.coverage_min}, "
                                  f"{self.coverage_max}]")
        step = self.resolved_step
        if not 0.0 <= step <= max(self.epsilon, 0.0) + 1e-12:
            raise ValidationError(f"step must satisfy 0 <= step <= epsilon, "
                                  f"got step={step} epsilon={self.epsilon}")

    @property
    def resolved_step(self) -> float:
        return resolve_step(self.step, self.epsilon, EOT_STEP_DIVISOR)


@dataclass
class AttackResult:
    """Outcome of one optimization run.

    ``loss_trace[j, m]`` is model m's loss-to-target evaluated on the image at
    the start of iteration j, so row 0 holds the benign losses.
    """

    adv: np.ndarray
    loss_trace: np.ndarray
    iterations: int
    final_linf: float
    model_ids: tuple[str, ...]
    sampled_masks: Optional[list[np.ndarray]] = None


def project_budget(candidate: np.ndarray, origin: np.ndarray,
                   epsilon: float) -> np.ndarray:
    """Clamp elementwise to [origin-eps, origin+eps], then to [0, 1]."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in [0, 1], got {epsilon}")
    origin = ensure_image(origin, "origin")
    candidate = np.asarray(candidate, dtype=np.float32)
    if candidate.shape != origin.shape:
        raise ValidationError(f"candidate and origin have mismatched shapes: "
                              f"{candidate.shape} vs {origin.shape}")
    eps = np.float32(epsilon)
    out = np.clip(candidate, origin - eps, origin + eps)
    return np.clip(out, 0.0, 1.0)


def _project_t(candidate: torch.Tensor, lo: torch.Tensor,
               hi: torch.Tensor) -> torch.Tensor:
    return torch.clamp(candidate, min=lo, max=hi)


def _check_models(models: Sequence[InpainterModel]) -> tuple[InpainterModel, ...]:
    models = tuple(models)
    if not models:
        raise ValidationError("at least one target model is required")
    for m in models:
        if not m.differentiable:
            raise ModelCapabilityError(f"model {m.identifier!r} is not "
                                       f"differentiable; cannot attack it")
    return models


def _budget_bounds(orig_t: torch.Tensor, epsilon: float):
    eps = torch.tensor(epsilon, dtype=orig_t.dtype)
    lo = torch.clamp(orig_t - eps, 0.0, 1.0)
    hi = torch.clamp(orig_t + eps, 0.0, 1.0)
    return lo, hi


def _grad_and_loss(model: InpainterModel, cur: torch.Tensor,
                   mask_t: torch.Tensor, loss_fn: MarkLossFn):
    # craft_composite: the objective compares the network's fill to the
    # target, so known pixels enter the loss value but not the gradient
    x = cur.detach().requires_grad_(True)
    out = model.craft_composite(x, mask_t)
    value = loss_fn(out)
    (grad,) = torch.autograd.grad(value, x)
    return float(value.detach()), grad


def markpaint(img: np.ndarray, mask: np.ndarray, target: np.ndarray,
              models: Sequence[InpainterModel],
              cfg: AttackConfig) -> AttackResult:
    """Craft a budgeted perturbation so the hole fills with the target.

    Per iteration: sum step * sign(grad of loss-to-target) over models,
    subtract the sum on known pixels only, project back into the budget.
    Deterministic given the config and model order; hole pixels of the
    result equal the input bitwise.
    """
    img = ensure_image(img)
    mask = ensure_mask(mask)
    ensure_same_shape(img, mask, "image and mask")
    target = ensure_image(target, "target")
    ensure_same_shape(img, target, "image and target")
    models = _check_models(models)

    step = cfg.resolved_step
    orig_t = to_tensor(img)
    cur = orig_t.clone()
    mask_t = torch.from_numpy(mask).view(1, 1, *mask.shape)
    lo, hi = _budget_bounds(orig_t, cfg.epsilon)
    loss_fn = MarkLossFn(target, cfg.loss)

    trace = np.zeros((cfg.iterations, len(models)), dtype=np.float64)
    for j in range(cfg.iterations):
        eta = torch.zeros_like(cur)
        for mi, model in enumerate(models):
            value, grad = _grad_and_loss(model, cur, mask_t, loss_fn)
            eta = eta + step * torch.sign(grad)
            trace[j, mi] = value
        cur = _project_t(cur.detach() - eta * mask_t, lo, hi)

    adv = to_image(cur)
    return AttackResult(adv=adv, loss_trace=trace, iterations=cfg.iterations,
                        final_linf=linf_distance(adv, img),
                        model_ids=tuple(m.identifier for m in models))


def markpaint_eot(img: np.ndarray, target: np.ndarray,
                  models: Sequence[InpainterModel],
                  cfg: EoTConfig) -> AttackResult:
    """Mask-agnostic variant: optimize over pre-sampled rectangular masks.

    Each iteration draws one of ``n_masks`` fixed random masks, then weights
    every model's signed gradient with a fresh per-pixel uniform field. RNG
    draw order is fixed (mask coverages and placements first, then per
    iteration: mask index, then one field per model), so runs replay exactly
    for a given seed.
    """
    img = ensure_image(img)
    target = ensure_image(target, "target")
    ensure_same_shape(img, target, "image and target")
    models = _check_models(models)

    h, w = img.shape[:2]
    rng = new_rng(cfg.seed)
    masks = []
    for _ in range(cfg.n_masks):
        cov = float(rng.uniform(cfg.coverage_min, cfg.coverage_max))
        masks.append(random_rect_mask(h, w, cov, int(rng.integers(0, 2 ** 63))))
    mask_ts = [torch.from_numpy(m).view(1, 1, h, w) for m in masks]

    step = cfg.resolved_step
    orig_t = to_tensor(img)
    cur = orig_t.clone()
    lo, hi = _budget_bounds(orig_t, cfg.epsilon)
    loss_fn = MarkLossFn(target, cfg.loss)

    trace = np.zeros((cfg.iterations, len(models)), dtype=np.float64)
    for j in range(cfg.iterations):
        idx = int(rng.integers(0, cfg.n_masks))
        mask_t = mask_ts[idx]
        eta = torch.zeros_like(cur)
        for mi, model in enumerate(models):
            weight = to_tensor(rng.random((h, w, 3), dtype=np.float32))
            value, grad = _grad_and_loss(model, cur, mask_t, loss_fn)
            eta = eta + step * weight * torch.sign(grad)
            trace[j, mi] = value
        cur = _project_t(cur.detach() - eta * mask_t, lo, hi)

    adv = to_image(cur)
    return AttackResult(adv=adv, loss_trace=trace, iterations=cfg.iterations,
                        final_linf=linf_distance(adv, img),
                        model_ids=tuple(m.identifier for m in models),
                        sampled_masks=masks)
