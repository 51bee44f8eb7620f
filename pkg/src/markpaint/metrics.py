"""Patch-restricted quality metrics: loss, MSE, PSNR, SSIM vs three references.

All metrics run on full-image maps and then average over a pixel-selector
region (normally the hole), so the reported numbers describe the inpainted
patch only. PSNR uses peak value 1.0 and is +inf exactly when the region MSE
is zero. SSIM is single-scale with the standard 11x11 Gaussian window
(sigma 1.5, K1=0.01, K2=0.03, L=1), channel-averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ValidationError
from .imaging import ensure_image, ensure_mask, ensure_same_shape, hole_region
from .inpaint.model import InpainterModel
from .loss import LossConfig, mark_loss

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _region_selector(shape, region) -> np.ndarray:
    if region is None:
        return np.ones(shape, dtype=bool)
    region = np.asarray(region)
    if region.dtype != bool:
        raise ValidationError("region must be a boolean selector; for a mask's "
                              "hole use hole_region(mask)")
    if region.shape != shape:
        raise ValidationError(f"region shape {region.shape} does not match "
                              f"image shape {shape}")
    if not region.any():
        raise ValidationError("region is empty")
    return region


def _region_mse(a: np.ndarray, b: np.ndarray, region) -> float:
    a = ensure_image(a, "a")
    b = ensure_image(b, "b")
    ensure_same_shape(a, b, "images")
    sel = _region_selector(a.shape[:2], region)
    diff = a.astype(np.float64)[sel] - b.astype(np.float64)[sel]
    return float(np.mean(diff ** 2))


def psnr_from_mse(mse: float) -> float:
    """10*log10(1/MSE) with peak 1.0; +inf at MSE=0."""
    if mse < 0:
        raise ValidationError(f"MSE cannot be negative, got {mse}")
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def psnr(a: np.ndarray, b: np.ndarray, region=None) -> float:
    """Peak signal-to-noise ratio over the region, in dB."""
    return psnr_from_mse(_region_mse(a, b, region))


def l2_metric(a: np.ndarray, b: np.ndarray, region=None) -> float:
    """MSE over the region (all channels of selected pixels)."""
    return _region_mse(a, b, region)


def _gaussian_kernel() -> np.ndarray:
    half = SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x ** 2) / (2.0 * SSIM_SIGMA ** 2))
    return g / g.sum()


_SSIM_KERNEL = _gaussian_kernel()


def _window_mean(x: np.ndarray) -> np.ndarray:
    y = correlate1d(x, _SSIM_KERNEL, axis=0, mode="reflect")
    return correlate1d(y, _SSIM_KERNEL, axis=1, mode="reflect")


def ssim_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Channel-averaged SSIM map, same height/width as the inputs."""
    a = ensure_image(a, "a")
    b = ensure_image(b, "b")
    ensure_same_shape(a, b, "images")
    h, w = a.shape[:2]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValidationError(f"image must be at least "
                              f"{SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, got "
                              f"{h}x{w}")
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    maps = np.zeros((h, w), dtype=np.float64)
    for ch in range(3):
        x = a[:, :, ch].astype(np.float64)
        y = b[:, :, ch].astype(np.float64)
        mx = _window_mean(x)
        my = _window_mean(y)
        # Population (weighted) second moments, the classic formulation.
        vx = _window_mean(x * x) - mx * mx
        vy = _window_mean(y * y) - my * my
        cxy = _window_mean(x * y) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * cxy + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        maps += num / den
    return maps / 3.0


def ssim(a: np.ndarray, b: np.ndarray, region=None) -> float:
    """Mean SSIM over the region's pixels."""
    smap = ssim_map(a, b)
    sel = _region_selector(smap.shape, region)
    return float(smap[sel].mean())


@dataclass(frozen=True)
class ReferenceMetrics:
    """One metric row: the markpainted patch vs a single reference image."""

    loss: float
    l2: float
    psnr: float
    ssim: float


@dataclass(frozen=True)
class ComparisonReport:
    """Patch metrics against the original, the target, and the benign fill."""

    original: ReferenceMetrics
    target: ReferenceMetrics
    benign: ReferenceMetrics

    def rows(self):
        yield "original", self.original
        yield "target", self.target
        yield "benign", self.benign

    def as_dict(self) -> dict:
        return {ref: vars(m).copy() for ref, m in self.rows()}


def _hole_bbox(hole: np.ndarray) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(hole.any(axis=1))
    cols = np.flatnonzero(hole.any(axis=0))
    return rows[0], rows[-1] + 1, cols[0], cols[-1] + 1


def _resize_bilinear(img: np.ndarray, nh: int, nw: int) -> np.ndarray:
    import torch
    from torch.nn import functional as F

    t = torch.from_numpy(np.ascontiguousarray(img)).permute(2, 0, 1)[None]
    out = F.interpolate(t, size=(nh, nw), mode="bilinear", align_corners=False)
    return out[0].permute(1, 2, 0).contiguous().numpy()


def hole_patch_loss(a: np.ndarray, b: np.ndarray, mask: np.ndarray,
                    cfg: LossConfig = LossConfig()) -> float:
    """mark_loss on the hole's bounding-box crops of both images.

    Crops smaller than the feature extractor's minimum input are scaled up
    with bilinear interpolation (aspect preserved, same factor on both).
    """
    mask = ensure_mask(mask)
    hole = hole_region(mask)
    if not hole.any():
        raise ValidationError("mask has no hole; nothing to compare")
    r0, r1, c0, c1 = _hole_bbox(hole)
    crop_a = ensure_image(a, "a")[r0:r1, c0:c1]
    crop_b = ensure_image(b, "b")[r0:r1, c0:c1]
    fx = cfg.build_extractor()
    h, w = crop_a.shape[:2]
    if min(h, w) < fx.min_input:
        scale = fx.min_input / min(h, w)
        nh = max(fx.min_input, int(round(h * scale)))
        nw = max(fx.min_input, int(round(w * scale)))
        crop_a = np.clip(_resize_bilinear(crop_a, nh, nw), 0.0, 1.0)
        crop_b = np.clip(_resize_bilinear(crop_b, nh, nw), 0.0, 1.0)
    return mark_loss(crop_a, crop_b, cfg)


def evaluate(img: np.ndarray, mask: np.ndarray, target: np.ndarray,
             model: InpainterModel, adv: np.ndarray,
             cfg: LossConfig = LossConfig()) -> ComparisonReport:
    """Fill the hole from `img` and `adv`, then compare the patches.

    The adversarial fill is measured against the original image, the attack
    target, and the benign fill; every cell is restricted to the hole.
    """
    img = ensure_image(img)
    mask = ensure_mask(mask)
    ensure_same_shape(img, mask, "image and mask")
    target = ensure_image(target, "target")
    ensure_same_shape(img, target, "image and target")
    adv = ensure_image(adv, "adv")
    ensure_same_shape(img, adv, "image and adv")
    hole = hole_region(mask)
    if not hole.any():
        raise ValidationError("mask has no hole; nothing to evaluate")

    benign = model.inpaint(img, mask)
    mark = model.inpaint(adv, mask)

    def against(ref: np.ndarray) -> ReferenceMetrics:
        m = l2_metric(mark, ref, hole)
        return ReferenceMetrics(
            loss=hole_patch_loss(mark, ref, mask, cfg),
            l2=m,
            psnr=psnr_from_mse(m),
            ssim=ssim(mark, ref, hole),
        )

    return ComparisonReport(original=against(img), target=against(target),
                            benign=against(benign))
