"""Shared test utilities: deterministic synthetic images and corpora."""

from __future__ import annotations

import os

import numpy as np
from scipy.ndimage import gaussian_filter

from markpaint import save_image
from markpaint.inpaint import ToyInpainterConfig

# Architecture/training settings of the reference test model: small enough to
# train in under a minute, strong enough for the quality thresholds.
TEST_ARCH = ToyInpainterConfig(base_channels=16, depth=2)
TEST_TRAIN = dict(crop_size=64, epochs=40, learning_rate=2e-3, batch_size=8)

TINY_ARCH = ToyInpainterConfig(base_channels=8, depth=2)


def synth_image(rng: np.random.Generator, size: int = 64) -> np.ndarray:
    """A smooth natural-looking image: gradient background plus soft blobs."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32) / (size - 1)
    c0 = rng.random(3, dtype=np.float32)
    c1 = rng.random(3, dtype=np.float32)
    ang = rng.uniform(0, 2 * np.pi)
    t = (xx * np.cos(ang) + yy * np.sin(ang) + 1.0) / 2.0
    img = c0 + (c1 - c0) * t[:, :, None]
    for _ in range(int(rng.integers(2, 5))):
        cy, cx = rng.uniform(0, 1, 2)
        r = rng.uniform(0.1, 0.35)
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r)))
        col = rng.random(3, dtype=np.float32)
        w = rng.uniform(0.3, 0.9)
        img = img * (1 - w * blob[:, :, None]) + col * w * blob[:, :, None]
    img += rng.normal(0, 0.01, img.shape)
    img = gaussian_filter(img, sigma=(0.7, 0.7, 0))
    return np.clip(img, 0, 1).astype(np.float32)


def build_corpus(directory, count: int, seed: int, size: int = 64) -> None:
    rng = np.random.default_rng(seed)
    os.makedirs(directory, exist_ok=True)
    for i in range(count):
        save_image(synth_image(rng, size), os.path.join(directory,
                                                        f"img_{i:03d}.png"))


def holdout_images(count: int, seed: int = 9999, size: int = 64):
    rng = np.random.default_rng(seed)
    return [synth_image(rng, size) for _ in range(count)]


def assert_aggregate_matches_rows(rows_csv, agg_csv, tol: float = 1e-9):
    """Recompute every aggregate mean/std from the row CSV by brute force."""
    import math

    from markpaint.harness.runs import mean_std, read_csv

    _, rows = read_csv(rows_csv)
    _, arows = read_csv(agg_csv)
    groups = {}
    for r in rows:
        groups.setdefault((r[3], r[4], r[5]), []).append(
            [float(v) for v in r[6:10]])
    assert len(arows) == len(groups)
    for arow in arows:
        cells = groups[tuple(arow[:3])]
        for mi in range(4):
            mean, std = mean_std([c[mi] for c in cells])
            for got, want in ((float(arow[3 + 2 * mi]), mean),
                              (float(arow[4 + 2 * mi]), std)):
                if math.isnan(want):
                    assert math.isnan(got)
                elif math.isinf(want):
                    assert got == want
                else:
                    assert abs(got - want) <= tol
