"""Training loop for the reference inpainter.

Objective: per-pixel L1 on the hole plus a small perceptual term on the
composited output, with random rectangular holes sampled per batch. Runs are
seed-deterministic: reruns with the same config replay the same crops, masks,
and updates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import ImageIOError, ValidationError
from ..imaging import load_image, new_rng, random_rect_mask
from ..loss import get_extractor, perceptual_t
from .toy import ToyInpainter, ToyInpainterConfig

logger = logging.getLogger(__name__)

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class TrainingConfig:
    corpus: str
    crop_size: int = 64
    epochs: int = 20
    learning_rate: float = 1e-3
    coverage_range: tuple[float, float] = (0.02, 0.25)
    batch_size: int = 8
    perceptual_weight: float = 0.01
    lr_decay: float = 0.1  # applied once, three quarters through
    seed: int = 0
    identifier: str = "toy"

    def __post_init__(self):
        if self.crop_size < 16:
            raise ValidationError(f"crop_size must be >= 16, got {self.crop_size}")
        lo, hi = self.coverage_range
        if not (0.0 < lo <= hi < 1.0):
            raise ValidationError(f"coverage_range must be within (0, 1), got "
                                  f"{self.coverage_range}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be >= 1")


def _corpus_paths(corpus: str) -> list[Path]:
    root = Path(corpus)
    if not root.is_dir():
        raise ImageIOError(f"{root}: corpus directory does not exist")
    paths = sorted(p for p in root.iterdir()
                   if p.suffix.lower() in _IMAGE_SUFFIXES)
    if not paths:
        raise ImageIOError(f"{root}: corpus directory holds no images")
    return paths


def _prepare(img: np.ndarray, crop: int) -> np.ndarray:
    # Upscale so both sides fit the crop; random crops happen per step.
    h, w = img.shape[:2]
    if h >= crop and w >= crop:
        return img
    from PIL import Image as pil_image

    scale = max(crop / h, crop / w)
    nh, nw = max(crop, int(round(h * scale))), max(crop, int(round(w * scale)))
    im = pil_image.fromarray(np.rint(img * 255).astype(np.uint8))
    return np.asarray(im.resize((nw, nh), pil_image.BILINEAR),
                      dtype=np.float32) / 255.0


def train_toy(cfg: TrainingConfig,
              arch: ToyInpainterConfig = ToyInpainterConfig()) -> ToyInpainter:
    """Train a toy inpainter on a directory of images; deterministic per seed."""
    paths = _corpus_paths(cfg.corpus)
    images = [_prepare(load_image(p), cfg.crop_size) for p in paths]
    rng = new_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    model = ToyInpainter(arch, identifier=cfg.identifier)
    net = model.net
    net.train()
    for p in net.parameters():
        p.requires_grad_(True)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    fx = get_extractor("pyramid")

    crop = cfg.crop_size
    decay_at = max(1, (cfg.epochs * 3) // 4)
    history = []
    for epoch in range(cfg.epochs):
        if epoch == decay_at:
            for group in opt.param_groups:
                group["lr"] *= cfg.lr_decay
        order = rng.permutation(len(images))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            idxs = order[start:start + cfg.batch_size]
            crops, masks = [], []
            for i in idxs:
                img = images[int(i)]
                top = int(rng.integers(0, img.shape[0] - crop + 1))
                left = int(rng.integers(0, img.shape[1] - crop + 1))
                patch = img[top:top + crop, left:left + crop]
                cov = float(rng.uniform(*cfg.coverage_range))
                mask = random_rect_mask(crop, crop, cov,
                                        int(rng.integers(0, 2 ** 63)))
                crops.append(patch)
                masks.append(mask)
            x = torch.from_numpy(np.stack(crops)).permute(0, 3, 1, 2)
            m = torch.from_numpy(np.stack(masks)).unsqueeze(1)
            raw = model.raw_fill(x * m, m)
            hole = 1.0 - m
            l1 = (torch.abs(raw - x) * hole).sum() / (hole.sum() * 3 + 1e-8)
            composite = x * m + raw * hole
            per = perceptual_t(composite, x, fx)
            batch_loss = l1 + cfg.perceptual_weight * per
            opt.zero_grad()
            batch_loss.backward()
            opt.step()
            epoch_losses.append(float(batch_loss.detach()))
        history.append(float(np.mean(epoch_losses)))
        logger.debug("epoch %d/%d loss %.5f", epoch + 1, cfg.epochs, history[-1])

    net.eval()
    for p in net.parameters():
        p.requires_grad_(False)
    model.train_history = history
    return model
