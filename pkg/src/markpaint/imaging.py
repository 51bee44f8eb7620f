"""Image and mask primitives every other module builds on.

An image is a float32 numpy array of shape (H, W, 3) with values in [0, 1].
A mask is a float32 numpy array of shape (H, W) whose values are exactly 0.0
or 1.0: 0 marks pixels to be inpainted (the hole), 1 marks known pixels.
Quantization to 8 bits happens only at file boundaries; everything in memory
stays real-valued so that sub-1/255 perturbation budgets survive optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as pil_image
from PIL import UnidentifiedImageError

from .errors import ImageIOError, ValidationError

# Aspect ratios sampled for random rectangular masks (height/width).
RECT_ASPECT_RANGE = (0.5, 2.0)


def ensure_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate the (H, W, 3) in-[0,1] contract, returning a float32 view."""
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ValidationError(f"{name} must be an (H, W, 3) array, got "
                              f"{getattr(img, 'shape', type(img))}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValidationError(f"{name} must be at least 1x1, got {img.shape}")
    if img.dtype != np.float32:
        img = img.astype(np.float32)
    if not np.isfinite(img).all():
        raise ValidationError(f"{name} holds non-finite values")
    lo, hi = float(img.min()), float(img.max())
    if lo < 0.0 or hi > 1.0:
        raise ValidationError(f"{name} values must lie in [0, 1], got range "
                              f"[{lo}, {hi}]")
    return img


def ensure_mask(mask: np.ndarray, name: str = "mask") -> np.ndarray:
    """Validate the binary (H, W) mask contract, returning a float32 view."""
    if not isinstance(mask, np.ndarray) or mask.ndim != 2:
        raise ValidationError(f"{name} must be an (H, W) array, got "
                              f"{getattr(mask, 'shape', type(mask))}")
    m = mask.astype(np.float32) if mask.dtype != np.float32 else mask
    bad = (m != 0.0) & (m != 1.0)
    if bad.any():
        offending = float(m[bad].flat[0])
        raise ValidationError(f"{name} values must be exactly 0 or 1, found "
                              f"{offending}")
    return m


def ensure_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValidationError(f"{what} have mismatched dimensions: "
                              f"{a.shape[:2]} vs {b.shape[:2]}")


def new_rng(seed: int | np.random.Generator) -> np.random.Generator:
    """A deterministic random stream. Identical seeds give identical streams."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit sub-seed from a base seed and a tuple of labels.

    String-keyed so the derivation survives reordering of experiment loops.
    """
    import hashlib

    key = repr((int(base),) + tuple(str(p) for p in parts)).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def load_image(path) -> np.ndarray:
    """Load an 8-bit RGB PNG or JPEG as a float image, values u/255."""
    path = Path(path)
    try:
        with pil_image.open(path) as im:
            if im.mode != "RGB":
                raise ImageIOError(f"{path}: expected an 8-bit RGB image, "
                                   f"got mode {im.mode!r}")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise ImageIOError(f"{path}: no such file") from exc
    except UnidentifiedImageError as exc:
        raise ImageIOError(f"{path}: not a decodable image") from exc
    return (arr.astype(np.float32) / 255.0)


def save_image(img: np.ndarray, path) -> None:
    """Write an 8-bit RGB PNG; channel v is stored as round(v*255)."""
    img = ensure_image(img)
    path = Path(path)
    arr = np.rint(img * 255.0).astype(np.uint8)
    try:
        pil_image.fromarray(arr, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write image ({exc})") from exc


def load_mask(path) -> np.ndarray:
    """Load a bilevel 8-bit grayscale PNG as a mask (0=hole, 255=known)."""
    path = Path(path)
    try:
        with pil_image.open(path) as im:
            if im.mode == "1":
                im = im.convert("L")
            if im.mode != "L":
                raise ImageIOError(f"{path}: expected an 8-bit grayscale mask, "
                                   f"got mode {im.mode!r}")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise ImageIOError(f"{path}: no such file") from exc
    except UnidentifiedImageError as exc:
        raise ImageIOError(f"{path}: not a decodable image") from exc
    bad = (arr != 0) & (arr != 255)
    if bad.any():
        offending = int(arr[bad].flat[0])
        raise ValidationError(f"{path}: mask pixels must be 0 or 255, found "
                              f"{offending}")
    return (arr == 255).astype(np.float32)


def save_mask(mask: np.ndarray, path) -> None:
    """Write a mask as a bilevel 8-bit grayscale PNG (round-trip exact)."""
    mask = ensure_mask(mask)
    path = Path(path)
    arr = (mask * 255.0).astype(np.uint8)
    try:
        pil_image.fromarray(arr, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write mask ({exc})") from exc


def solid_target(height: int, width: int, color) -> np.ndarray:
    """A height x width image where every pixel equals `color` (3 reals in [0,1])."""
    color = np.asarray(color, dtype=np.float32).reshape(-1)
    if color.shape != (3,):
        raise ValidationError(f"color must have 3 components, got {color.shape}")
    if color.min() < 0.0 or color.max() > 1.0:
        raise ValidationError(f"color components must lie in [0, 1], got "
                              f"{color.tolist()}")
    if height < 1 or width < 1:
        raise ValidationError(f"target size must be >= 1x1, got {height}x{width}")
    return np.broadcast_to(color, (height, width, 3)).astype(np.float32).copy()


@dataclass(frozen=True)
class RectSpec:
    """An axis-aligned rectangle, in pixel coordinates, inside an image."""

    top: int
    left: int
    rect_height: int
    rect_width: int

    def validate(self, height: int, width: int) -> None:
        if self.rect_height < 1 or self.rect_width < 1:
            raise ValidationError(f"rectangle sides must be >= 1, got "
                                  f"{self.rect_height}x{self.rect_width}")
        if (self.top < 0 or self.left < 0
                or self.top + self.rect_height > height
                or self.left + self.rect_width > width):
            raise ValidationError(f"rectangle {self} exceeds {height}x{width} "
                                  f"image bounds")


def rect_mask(height: int, width: int, rect: RectSpec) -> np.ndarray:
    """A mask whose hole is exactly `rect` (0 inside, 1 outside)."""
    rect.validate(height, width)
    mask = np.ones((height, width), dtype=np.float32)
    mask[rect.top:rect.top + rect.rect_height,
         rect.left:rect.left + rect.rect_width] = 0.0
    return mask


def _rect_sides_for_area(area: float, aspect: float,
                         height: int, width: int) -> tuple[int, int]:
    # Near-square integer sides for the requested area: solve h = sqrt(a*r),
    # w = sqrt(a/r), round, then clamp to the image and rebalance the other
    # side so coverage stays accurate when the clamp binds.
    rh = int(round(math.sqrt(area * aspect)))
    rw = int(round(math.sqrt(area / aspect)))
    rh = max(1, min(rh, height))
    rw = max(1, min(rw, width))
    if rh == height and rw < width:
        rw = max(1, min(int(round(area / rh)), width))
    elif rw == width and rh < height:
        rh = max(1, min(int(round(area / rw)), height))
    return rh, rw


def random_rect_mask(height: int, width: int, coverage: float,
                     rng: int | np.random.Generator) -> np.ndarray:
    """A mask whose hole is one random rectangle covering ~`coverage` of the image.

    Aspect ratio is sampled uniformly in [0.5, 2.0] and the top-left corner
    uniformly over all in-bounds placements; deterministic for a fixed seed.
    """
    if not 0.0 < coverage <= 1.0:
        raise ValidationError(f"coverage must lie in (0, 1], got {coverage}")
    area = coverage * height * width
    if area < 1.0:
        raise ValidationError(f"coverage {coverage} of a {height}x{width} image "
                              f"leaves no whole pixel to inpaint")
    gen = new_rng(rng)
    aspect = gen.uniform(*RECT_ASPECT_RANGE)
    rh, rw = _rect_sides_for_area(area, aspect, height, width)
    top = int(gen.integers(0, height - rh + 1))
    left = int(gen.integers(0, width - rw + 1))
    return rect_mask(height, width, RectSpec(top, left, rh, rw))


def mask_coverage(mask: np.ndarray) -> float:
    """Fraction of pixels in the hole (mask value 0)."""
    mask = ensure_mask(mask)
    return float((mask == 0.0).sum()) / mask.size


def hole_region(mask: np.ndarray) -> np.ndarray:
    """Boolean selector of the hole pixels (True where the mask is 0)."""
    return ensure_mask(mask) == 0.0


def masked_input(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """The image with the hole zeroed out, as fed to an inpainter."""
    img = ensure_image(img)
    mask = ensure_mask(mask)
    ensure_same_shape(img, mask, "image and mask")
    return img * mask[:, :, None]


def linf_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max absolute channel difference between two images."""
    a = ensure_image(a, "a")
    b = ensure_image(b, "b")
    ensure_same_shape(a, b, "images")
    return float(np.abs(a - b).max())
