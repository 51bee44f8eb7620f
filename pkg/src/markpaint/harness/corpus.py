"""Corpus ingestion and target parsing for experiment runs."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image as pil_image

from ..errors import ConfigError, ImageIOError
from ..imaging import ensure_image, load_image, solid_target

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}

_NAMED_COLORS = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "white": (1.0, 1.0, 1.0),
    "black": (0.0, 0.0, 0.0),
}


def fit_to_size(img: np.ndarray, size: int) -> np.ndarray:
    """Center-crop to square, then resize to size x size (bilinear)."""
    img = ensure_image(img)
    h, w = img.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    img = img[top:top + side, left:left + side]
    if side != size:
        im = pil_image.fromarray(np.rint(img * 255).astype(np.uint8))
        img = np.asarray(im.resize((size, size), pil_image.BILINEAR),
                         dtype=np.float32) / 255.0
    return img


def load_corpus(directory, size: int) -> list[tuple[str, np.ndarray]]:
    """All images in a directory, sorted by filename, fit to the working size."""
    root = Path(directory)
    if not root.is_dir():
        raise ImageIOError(f"{root}: corpus directory does not exist")
    paths = sorted(p for p in root.iterdir()
                   if p.suffix.lower() in _IMAGE_SUFFIXES)
    if not paths:
        raise ImageIOError(f"{root}: corpus directory holds no images")
    return [(p.stem, fit_to_size(load_image(p), size)) for p in paths]


def parse_color(spec: str):
    """A color spec: a name, '#rrggbb', or 'r,g,b' floats in [0, 1]."""
    s = spec.strip().lower()
    if s in _NAMED_COLORS:
        return _NAMED_COLORS[s]
    if re.fullmatch(r"#[0-9a-f]{6}", s):
        return tuple(int(s[i:i + 2], 16) / 255.0 for i in (1, 3, 5))
    if "," in s:
        parts = s.split(",")
        if len(parts) == 3:
            try:
                return tuple(float(p) for p in parts)
            except ValueError:
                pass
    return None


def parse_target(spec: str, height: int, width: int) -> np.ndarray:
    """Build a target image from a spec: a color or an image path."""
    color = parse_color(spec)
    if color is not None:
        return solid_target(height, width, color)
    path = Path(spec)
    if path.is_file():
        return fit_to_size(load_image(path), height)
    raise ConfigError(f"target {spec!r} is neither a color (name, #rrggbb, "
                      f"or r,g,b) nor an existing image file")


def target_label(spec: str) -> str:
    """A filesystem/CSV-safe label for a target spec."""
    color = parse_color(spec)
    if color is not None and spec.strip().lower() in _NAMED_COLORS:
        return spec.strip().lower()
    return re.sub(r"[^A-Za-z0-9._-]+", "_", Path(spec).stem or spec)
