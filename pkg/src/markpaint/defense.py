"""Transformation-based counter-measures applied before inpainting.

Five transforms: JPEG re-encoding, ideal (brick-wall) radial low-pass
filtering, Gaussian blurring, brightness shifts, and contrast scaling. All
are evaluation-time image transforms (no differentiable approximations), run
on the full image before it reaches the inpainter.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image as pil_image
from scipy.ndimage import correlate1d

from .errors import ValidationError
from .imaging import ensure_image, ensure_mask
from .inpaint.model import InpainterModel
from .loss import LossConfig
from .metrics import hole_patch_loss

_KINDS = ("jpeg", "lowpass", "gaussian_blur", "brightness", "contrast")


@dataclass(frozen=True)
class DefenseSpec:
    """One transform: kind plus its single parameter.

    Parameter ranges: jpeg quality 1-100; lowpass normalized cutoff (0, 1];
    gaussian_blur sigma >= 0; brightness delta in [-1, 1]; contrast factor
    >= 0.
    """

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown defense kind {self.kind!r}; known: "
                                  f"{', '.join(_KINDS)}")
        p = self.parameter
        ok = {
            "jpeg": 1 <= p <= 100,
            "lowpass": 0.0 < p <= 1.0,
            "gaussian_blur": p >= 0.0,
            "brightness": -1.0 <= p <= 1.0,
            "contrast": p >= 0.0,
        }[self.kind]
        if not ok:
            raise ValidationError(f"parameter {p} out of range for defense "
                                  f"{self.kind!r}")

    def label(self) -> str:
        return f"{self.kind}={self.parameter:g}"


def _jpeg(img: np.ndarray, quality: float) -> np.ndarray:
    arr = np.rint(img * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    pil_image.fromarray(arr, mode="RGB").save(buf, format="JPEG",
                                              quality=int(round(quality)))
    buf.seek(0)
    with pil_image.open(buf) as out:
        decoded = np.asarray(out.convert("RGB"), dtype=np.uint8)
    return decoded.astype(np.float32) / 255.0


def _lowpass(img: np.ndarray, cutoff: float) -> np.ndarray:
    h, w = img.shape[:2]
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    # Radial frequency normalized so the spectrum corner sits at 1; cutoff=1
    # then keeps every bin and the filter degenerates to the identity.
    keep = (fy ** 2 + fx ** 2) <= (cutoff ** 2) * 0.5 + 1e-12
    out = np.empty_like(img, dtype=np.float64)
    for ch in range(3):
        spectrum = np.fft.fft2(img[:, :, ch].astype(np.float64))
        out[:, :, ch] = np.fft.ifft2(spectrum * keep).real
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    if radius == 0:
        return img.copy()
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    kernel /= kernel.sum()
    out = img.astype(np.float64)
    out = correlate1d(out, kernel, axis=0, mode="reflect")
    out = correlate1d(out, kernel, axis=1, mode="reflect")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def apply_defense(img: np.ndarray, spec: DefenseSpec) -> np.ndarray:
    """Apply one transform; output stays a valid [0, 1] image."""
    img = ensure_image(img)
    p = spec.parameter
    if spec.kind == "jpeg":
        return _jpeg(img, p)
    if spec.kind == "lowpass":
        return _lowpass(img, p)
    if spec.kind == "gaussian_blur":
        return _gaussian_blur(img, p)
    if spec.kind == "brightness":
        # delta 0 must be an exact identity, not a float round trip
        if p == 0.0:
            return img.copy()
        return np.clip(img + np.float32(p), 0.0, 1.0)
    if spec.kind == "contrast":
        if p == 1.0:
            return img.copy()
        return np.clip((img - np.float32(0.5)) * np.float32(p) + np.float32(0.5),
                       0.0, 1.0)
    raise ValidationError(f"unknown defense kind {spec.kind!r}")


def default_defense_grid() -> list[DefenseSpec]:
    """The sweep grid used when a config does not override it."""
    grid = []
    grid += [DefenseSpec("jpeg", q) for q in (30, 50, 70, 90)]
    grid += [DefenseSpec("lowpass", c) for c in (0.25, 0.5, 0.75)]
    grid += [DefenseSpec("gaussian_blur", s) for s in (0.5, 1.0, 2.0)]
    grid += [DefenseSpec("brightness", d) for d in (-0.2, -0.1, 0.1, 0.2)]
    grid += [DefenseSpec("contrast", f) for f in (0.8, 1.2)]
    return grid


@dataclass(frozen=True)
class DefenseOutcome:
    spec: DefenseSpec
    loss_to_target: float
    loss_to_benign: float


def defense_sweep(img: np.ndarray, adv: np.ndarray, mask: np.ndarray,
                  target: np.ndarray, model: InpainterModel,
                  specs: Sequence[DefenseSpec],
                  cfg: LossConfig = LossConfig()) -> list[DefenseOutcome]:
    """Inpaint each defended adversarial image; report patch losses.

    For every spec: transform `adv`, fill the hole, and measure the
    loss-to-target and loss-to-benign of the result. Rows keep input order.
    """
    img = ensure_image(img)
    adv = ensure_image(adv, "adv")
    mask = ensure_mask(mask)
    benign = model.inpaint(img, mask)
    rows = []
    for spec in specs:
        defended = apply_defense(adv, spec)
        out = model.inpaint(defended, mask)
        rows.append(DefenseOutcome(
            spec=spec,
            loss_to_target=hole_patch_loss(out, target, mask, cfg),
            loss_to_benign=hole_patch_loss(out, benign, mask, cfg),
        ))
    return rows
