import numpy as np
import pytest

from helpers import synth_image

from markpaint import (DefenseSpec, ValidationError, apply_defense,
                       default_defense_grid, defense_sweep, psnr,
                       random_rect_mask, solid_target)


def test_spec_validation():
    with pytest.raises(ValidationError, match="unknown defense kind"):
        DefenseSpec("sharpen", 1.0)
    with pytest.raises(ValidationError):
        DefenseSpec("jpeg", 0)
    with pytest.raises(ValidationError):
        DefenseSpec("lowpass", 0.0)
    with pytest.raises(ValidationError):
        DefenseSpec("gaussian_blur", -1.0)
    with pytest.raises(ValidationError):
        DefenseSpec("brightness", 1.5)
    DefenseSpec("contrast", 0.0)  # boundary values are fine


def test_identity_parameters(sample_image):
    for spec in (DefenseSpec("brightness", 0.0), DefenseSpec("contrast", 1.0),
                 DefenseSpec("gaussian_blur", 0.0)):
        assert np.array_equal(apply_defense(sample_image, spec), sample_image)
    lowpass1 = apply_defense(sample_image, DefenseSpec("lowpass", 1.0))
    assert np.abs(lowpass1 - sample_image).max() <= 1e-6


def test_outputs_stay_in_range(sample_image):
    for spec in default_defense_grid():
        out = apply_defense(sample_image, spec)
        assert out.shape == sample_image.shape
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert out.dtype == np.float32


def test_brightness_and_contrast_math():
    img = solid_target(4, 4, (0.4, 0.4, 0.4))
    up = apply_defense(img, DefenseSpec("brightness", 0.3))
    assert np.allclose(up, 0.7, atol=1e-6)
    clipped = apply_defense(img, DefenseSpec("brightness", 0.8))
    assert np.allclose(clipped, 1.0)
    widened = apply_defense(img, DefenseSpec("contrast", 2.0))
    assert np.allclose(widened, 0.3, atol=1e-6)


def test_blur_preserves_constant_images():
    img = solid_target(32, 32, (0.3, 0.6, 0.9))
    out = apply_defense(img, DefenseSpec("gaussian_blur", 2.0))
    assert np.abs(out - img).max() == 0.0


def test_blur_smooths(sample_image):
    out = apply_defense(sample_image, DefenseSpec("gaussian_blur", 2.0))
    def tv(x):
        return np.abs(np.diff(x, axis=0)).sum() + np.abs(np.diff(x, axis=1)).sum()
    assert tv(out) < tv(sample_image)


def test_lowpass_idempotent(sample_image):
    # keep values away from 0/1: the spectral projection is exactly
    # idempotent, the final range clamp is the sole nonlinearity
    img = (sample_image * 0.8 + 0.1).astype(np.float32)
    once = apply_defense(img, DefenseSpec("lowpass", 0.5))
    twice = apply_defense(once, DefenseSpec("lowpass", 0.5))
    assert np.abs(twice - once).max() <= 1e-5


def test_jpeg_quality_100_high_fidelity(sample_image):
    out = apply_defense(sample_image, DefenseSpec("jpeg", 100))
    assert psnr(out, sample_image) >= 40.0


def test_jpeg_lower_quality_degrades(sample_image):
    q90 = apply_defense(sample_image, DefenseSpec("jpeg", 90))
    q30 = apply_defense(sample_image, DefenseSpec("jpeg", 30))
    assert psnr(q30, sample_image) < psnr(q90, sample_image)


def test_default_grid_contents():
    grid = default_defense_grid()
    kinds = {s.kind for s in grid}
    assert kinds == {"jpeg", "lowpass", "gaussian_blur", "brightness",
                     "contrast"}
    assert len([s for s in grid if s.kind == "jpeg"]) == 4


def test_defense_sweep_empty_and_order(fresh_model, sample_image):
    mask = random_rect_mask(64, 64, 0.05, 21)
    target = solid_target(64, 64, (1, 0, 0))
    assert defense_sweep(sample_image, sample_image, mask, target,
                         fresh_model, []) == []
    specs = [DefenseSpec("contrast", 1.0), DefenseSpec("jpeg", 50)]
    rows = defense_sweep(sample_image, sample_image, mask, target,
                         fresh_model, specs)
    assert [r.spec for r in rows] == specs


def test_defense_tradeoff_exists(toy_model):
    # countering the attack and preserving the benign fill pull apart: the
    # spec minimizing loss-to-target is not the one minimizing deviation
    # from benign
    from markpaint import AttackConfig, markpaint

    img = synth_image(np.random.default_rng(2718))
    mask = random_rect_mask(64, 64, 0.05, 501)
    target = solid_target(64, 64, (1, 0, 0))
    result = markpaint(img, mask, target, [toy_model],
                       AttackConfig(epsilon=0.3, iterations=100))
    rows = defense_sweep(img, result.adv, mask, target, toy_model,
                         default_defense_grid())
    best_counter = min(rows, key=lambda r: r.loss_to_target)
    best_fidelity = min(rows, key=lambda r: r.loss_to_benign)
    assert best_counter.spec != best_fidelity.spec


def test_defense_sweep_identity_row_matches_undefended(fresh_model,
                                                       sample_image):
    from markpaint.metrics import hole_patch_loss

    mask = random_rect_mask(64, 64, 0.05, 21)
    target = solid_target(64, 64, (0, 0, 1))
    adv = np.clip(sample_image + 0.01, 0, 1)  # any perturbed input
    rows = defense_sweep(sample_image, adv, mask, target, fresh_model,
                         [DefenseSpec("contrast", 1.0)])
    out = fresh_model.inpaint(adv, mask)
    assert rows[0].loss_to_target == hole_patch_loss(out, target, mask)
