import math

import numpy as np
import pytest

from helpers import synth_image

from markpaint import (ValidationError, evaluate, hole_patch_loss, hole_region,
                       l2_metric, psnr, random_rect_mask, solid_target, ssim)
from markpaint.metrics import psnr_from_mse, ssim_map


def test_psnr_oracles():
    assert abs(psnr_from_mse(0.01) - 20.0) <= 1e-9
    assert abs(psnr_from_mse(0.25) - 10 * math.log10(4.0)) <= 1e-9
    assert psnr_from_mse(0.0) == math.inf
    with pytest.raises(ValidationError):
        psnr_from_mse(-0.1)


def test_psnr_on_images():
    a = solid_target(16, 16, (0, 0, 0))
    b = solid_target(16, 16, (0.1, 0.1, 0.1))
    assert abs(psnr(a, b) - 20.0) <= 1e-5
    assert psnr(a, a) == math.inf


def test_psnr_strictly_decreasing_in_mse():
    values = [psnr_from_mse(m) for m in (1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_ssim_identity_and_symmetry():
    x = synth_image(np.random.default_rng(0), 32)
    y = synth_image(np.random.default_rng(1), 32)
    assert ssim(x, x) == 1.0
    assert np.isclose(ssim(x, y), ssim(y, x), rtol=1e-12)


def test_ssim_constant_images_closed_form():
    zeros = solid_target(16, 16, (0, 0, 0))
    ones = solid_target(16, 16, (1, 1, 1))
    c1 = 1e-4
    assert abs(ssim(zeros, ones) - c1 / (1 + c1)) <= 1e-7


def test_ssim_matches_skimage_in_interior():
    skimage_metrics = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(2)
    x = rng.random((40, 40, 3), dtype=np.float32)
    y = np.clip(x + rng.normal(0, 0.1, x.shape).astype(np.float32), 0, 1)
    mine = ssim_map(x, y)
    _, ref = skimage_metrics.structural_similarity(
        x, y, channel_axis=2, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False, data_range=1.0, full=True)
    inner = (slice(6, -6), slice(6, -6))
    assert np.abs(mine[inner] - ref.mean(axis=2)[inner]).max() <= 1e-5


def test_ssim_window_preconditions():
    small = solid_target(8, 8, (0, 0, 0))
    with pytest.raises(ValidationError, match="11x11"):
        ssim(small, small)
    x = solid_target(16, 16, (0, 0, 0))
    with pytest.raises(ValidationError, match="empty"):
        ssim(x, x, np.zeros((16, 16), dtype=bool))


def test_region_must_be_boolean():
    x = solid_target(16, 16, (0, 0, 0))
    mask = np.ones((16, 16), dtype=np.float32)
    with pytest.raises(ValidationError, match="boolean"):
        l2_metric(x, x, mask)


def test_l2_metric_values():
    a = solid_target(4, 4, (0, 0, 0))
    assert l2_metric(a, a) == 0.0
    b = solid_target(4, 4, (1, 1, 1))
    assert l2_metric(a, b) == 1.0


def test_l2_metric_hole_example():
    # 2-pixel hole; один pixel differs by 0.5 on every channel, the other not:
    # mean over 2*3 cells = 3*0.25/6 = 0.125
    a = solid_target(4, 4, (0.2, 0.2, 0.2))
    b = a.copy()
    b[0, 0] = [0.7, 0.7, 0.7]
    mask = np.ones((4, 4), dtype=np.float32)
    mask[0, 0] = 0.0
    mask[0, 1] = 0.0
    assert np.isclose(l2_metric(a, b, hole_region(mask)), 0.125, atol=1e-7)


def test_region_all_equals_hole_of_allzero_mask():
    x = synth_image(np.random.default_rng(3), 24)
    y = synth_image(np.random.default_rng(4), 24)
    all_hole = np.zeros((24, 24), dtype=np.float32)
    assert l2_metric(x, y) == l2_metric(x, y, hole_region(all_hole))
    assert psnr(x, y) == psnr(x, y, hole_region(all_hole))
    assert ssim(x, y) == ssim(x, y, hole_region(all_hole))


def test_evaluate_benign_column_at_zero_budget(fresh_model, sample_image):
    mask = random_rect_mask(64, 64, 0.05, 21)
    target = solid_target(64, 64, (1, 0, 0))
    report = evaluate(sample_image, mask, target, fresh_model, sample_image)
    assert report.benign.l2 == 0.0
    assert report.benign.psnr == math.inf
    assert report.benign.ssim == 1.0
    assert report.benign.loss == 0.0


def test_evaluate_target_equals_original_when_identical(fresh_model,
                                                        sample_image):
    mask = random_rect_mask(64, 64, 0.05, 21)
    report = evaluate(sample_image, mask, sample_image, fresh_model,
                      sample_image)
    assert report.original == report.target


def test_evaluate_deterministic(fresh_model, sample_image):
    mask = random_rect_mask(64, 64, 0.1, 2)
    target = solid_target(64, 64, (0, 0, 1))
    a = evaluate(sample_image, mask, target, fresh_model, sample_image)
    b = evaluate(sample_image, mask, target, fresh_model, sample_image)
    assert a == b


def test_evaluate_rejects_holeless_mask(fresh_model, sample_image):
    ones = np.ones((64, 64), dtype=np.float32)
    target = solid_target(64, 64, (1, 0, 0))
    with pytest.raises(ValidationError, match="no hole"):
        evaluate(sample_image, ones, target, fresh_model, sample_image)


def test_hole_patch_loss_small_hole_resizes(fresh_model, sample_image):
    # 2.5% of 64x64 -> a ~10x10 bbox below the extractor minimum; crop is
    # scaled up instead of erroring
    mask = random_rect_mask(64, 64, 0.025, 8)
    target = solid_target(64, 64, (1, 0, 0))
    value = hole_patch_loss(sample_image, target, mask)
    assert np.isfinite(value) and value > 0
    assert hole_patch_loss(sample_image, sample_image, mask) == 0.0


def test_report_as_dict(fresh_model, sample_image):
    mask = random_rect_mask(64, 64, 0.05, 21)
    target = solid_target(64, 64, (1, 0, 0))
    report = evaluate(sample_image, mask, target, fresh_model, sample_image)
    d = report.as_dict()
    assert set(d) == {"original", "target", "benign"}
    assert set(d["target"]) == {"loss", "l2", "psnr", "ssim"}
