import numpy as np
import pytest
from PIL import Image as pil_image

from markpaint import (ImageIOError, RectSpec, ValidationError, hole_region,
                       linf_distance, load_image, load_mask, mask_coverage,
                       masked_input, random_rect_mask, save_image, save_mask,
                       solid_target)
from markpaint.imaging import ensure_image, rect_mask


def test_load_image_scales_8bit_values(tmp_path):
    path = tmp_path / "px.png"
    pil_image.fromarray(np.array([[[255, 0, 0]]], dtype=np.uint8)).save(path)
    img = load_image(path)
    assert img.shape == (1, 1, 3)
    assert np.allclose(img, [[[1.0, 0.0, 0.0]]])

    pil_image.fromarray(np.full((1, 1, 3), 128, dtype=np.uint8)).save(path)
    img = load_image(path)
    assert np.allclose(img, 128 / 255.0)


def test_load_image_missing_file(tmp_path):
    with pytest.raises(ImageIOError, match="no such file"):
        load_image(tmp_path / "nope.png")


def test_load_image_rejects_non_rgb(tmp_path):
    path = tmp_path / "gray.png"
    pil_image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(path)
    with pytest.raises(ImageIOError, match="RGB"):
        load_image(path)


def test_load_image_rejects_garbage(tmp_path):
    path = tmp_path / "junk.png"
    path.write_bytes(b"this is not an image at all")
    with pytest.raises(ImageIOError, match="not a decodable"):
        load_image(path)


def test_save_load_quantization(tmp_path):
    path = tmp_path / "half.png"
    img = solid_target(3, 3, (0.5, 0.5, 0.5))
    save_image(img, path)
    back = load_image(path)
    assert np.allclose(back, 128 / 255.0)  # round(0.5*255) = 128

    for value in (0.0, 1.0):
        save_image(solid_target(2, 2, (value,) * 3), path)
        assert np.array_equal(load_image(path),
                              solid_target(2, 2, (value,) * 3))


def test_save_load_roundtrip_error_bound(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.random((9, 7, 3), dtype=np.float32)
    path = tmp_path / "r.png"
    save_image(img, path)
    assert linf_distance(load_image(path), img) <= 1 / 255.0 + 1e-9


def test_mask_roundtrip_and_validation(tmp_path):
    path = tmp_path / "m.png"
    pil_image.fromarray(np.full((4, 4), 255, dtype=np.uint8), mode="L").save(path)
    mask = load_mask(path)
    assert np.array_equal(mask, np.ones((4, 4), dtype=np.float32))

    bad = np.full((4, 4), 255, dtype=np.uint8)
    bad[1, 2] = 254
    pil_image.fromarray(bad, mode="L").save(path)
    with pytest.raises(ValidationError, match="254"):
        load_mask(path)


def test_save_mask_load_mask_identity(tmp_path):
    mask = random_rect_mask(16, 16, 0.2, 3)
    path = tmp_path / "m.png"
    save_mask(mask, path)
    assert np.array_equal(load_mask(path), mask)


def test_solid_target():
    img = solid_target(2, 2, (1, 0, 0))
    assert img.shape == (2, 2, 3)
    assert np.array_equal(img, np.broadcast_to([1, 0, 0], (2, 2, 3)))
    assert np.array_equal(solid_target(1, 1, (0, 0, 0)), np.zeros((1, 1, 3)))
    with pytest.raises(ValidationError):
        solid_target(2, 2, (1.5, 0, 0))


def test_random_rect_mask_area():
    # near-square rectangle of area 0.05*65536=3276.8; candidate integer side
    # pairs across aspect [0.5, 2] all land within [56^2, 58^2]
    mask = random_rect_mask(256, 256, 0.05, 7)
    holes = int((mask == 0).sum())
    assert 3136 <= holes <= 3364


def test_random_rect_mask_determinism_and_shape():
    a = random_rect_mask(64, 64, 0.1, 1234)
    b = random_rect_mask(64, 64, 0.1, 1234)
    assert np.array_equal(a, b)
    # the hole is one solid rectangle: count equals its bounding box area
    hole = hole_region(a)
    rows = np.flatnonzero(hole.any(axis=1))
    cols = np.flatnonzero(hole.any(axis=0))
    assert hole.sum() == len(rows) * len(cols)


def test_random_rect_mask_full_coverage():
    mask = random_rect_mask(8, 8, 1.0, 5)
    assert np.array_equal(mask, np.zeros((8, 8), dtype=np.float32))


def test_random_rect_mask_coverage_accuracy():
    h = w = 96
    for seed in range(25):
        cov = float(np.random.default_rng(seed).uniform(0.02, 0.3))
        mask = random_rect_mask(h, w, cov, seed)
        hole = hole_region(mask)
        rows = np.flatnonzero(hole.any(axis=1))
        cols = np.flatnonzero(hole.any(axis=0))
        max_side = max(len(rows), len(cols))
        assert abs(hole.sum() - cov * h * w) <= max_side


def test_random_rect_mask_too_small():
    with pytest.raises(ValidationError):
        random_rect_mask(8, 8, 0.001, 0)


def test_mask_coverage():
    assert mask_coverage(np.ones((4, 4), dtype=np.float32)) == 0.0
    assert mask_coverage(np.zeros((4, 4), dtype=np.float32)) == 1.0
    m = np.ones((4, 4), dtype=np.float32)
    m[0, 0] = 0.0
    assert mask_coverage(m) == 1 / 16


def test_masked_input():
    img = np.array([[[0.5, 0.5, 0.5]], [[0.25, 0.25, 0.25]]], dtype=np.float32)
    mask = np.array([[1.0], [0.0]], dtype=np.float32)
    out = masked_input(img, mask)
    assert np.array_equal(out[0, 0], [0.5, 0.5, 0.5])
    assert np.array_equal(out[1, 0], [0.0, 0.0, 0.0])

    assert np.array_equal(masked_input(img, np.ones((2, 1), np.float32)), img)
    assert np.array_equal(masked_input(img, np.zeros((2, 1), np.float32)),
                          np.zeros_like(img))


def test_masked_input_dimension_mismatch():
    img = solid_target(4, 4, (0, 0, 0))
    with pytest.raises(ValidationError, match="mismatch"):
        masked_input(img, np.ones((3, 4), dtype=np.float32))


def test_linf_distance():
    a = solid_target(4, 4, (0.2, 0.2, 0.2))
    assert linf_distance(a, a) == 0.0
    b = a.copy()
    b[1, 1, 2] = 0.5
    assert np.isclose(linf_distance(a, b), 0.3)
    assert linf_distance(a, b) == linf_distance(b, a)


def test_rect_spec_bounds():
    rect_mask(8, 8, RectSpec(0, 0, 8, 8))
    with pytest.raises(ValidationError):
        rect_mask(8, 8, RectSpec(4, 4, 5, 2))


def test_ensure_image_rejects_out_of_range():
    bad = np.full((2, 2, 3), 1.5, dtype=np.float32)
    with pytest.raises(ValidationError, match=r"\[0, 1\]"):
        ensure_image(bad)
    nan = np.full((2, 2, 3), np.nan, dtype=np.float32)
    with pytest.raises(ValidationError, match="non-finite"):
        ensure_image(nan)


def test_mask_values_must_be_binary():
    m = np.full((2, 2), 0.5, dtype=np.float32)
    with pytest.raises(ValidationError, match="0 or 1"):
        mask_coverage(m)
