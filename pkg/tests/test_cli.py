import json

import numpy as np
import pytest
import yaml

from helpers import build_corpus

from markpaint import load_image, load_mask, mask_coverage
from markpaint.cli import main


def run_cli(*argv) -> int:
    return main(list(argv))


def test_make_mask_and_target(tmp_path):
    mask_path = tmp_path / "m.png"
    assert run_cli("make-mask", "--size", "32x32", "--coverage", "0.1",
                   "--seed", "5", "--out", str(mask_path)) == 0
    mask = load_mask(mask_path)
    assert 0.05 <= mask_coverage(mask) <= 0.15

    target_path = tmp_path / "t.png"
    assert run_cli("make-target", "--size", "32x32", "--color", "red",
                   "--out", str(target_path)) == 0
    target = load_image(target_path)
    assert np.array_equal(target, np.broadcast_to([1.0, 0.0, 0.0],
                                                  (32, 32, 3)))


def test_make_mask_bad_size(tmp_path):
    assert run_cli("make-mask", "--size", "32", "--coverage", "0.1",
                   "--out", str(tmp_path / "m.png")) == 1


def test_train_attack_evaluate_pipeline(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    build_corpus(corpus, 12, seed=77)
    ckpt = tmp_path / "toy.ckpt"
    assert run_cli("train-toy", "--corpus", str(corpus), "--out", str(ckpt),
                   "--epochs", "2", "--crop", "64", "--base-channels", "8",
                   "--depth", "2", "--seed", "3") == 0
    assert ckpt.is_file()

    img_path = str(corpus / "img_000.png")
    mask_path = tmp_path / "mask.png"
    run_cli("make-mask", "--size", "64x64", "--coverage", "0.05", "--seed",
            "2", "--out", str(mask_path))

    out_dir = tmp_path / "attack"
    assert run_cli("attack", "--image", img_path, "--mask", str(mask_path),
                   "--target", "red", "--models", str(ckpt),
                   "--epsilon", "0.1", "--iterations", "2",
                   "--step", "eps/50", "--out", str(out_dir)) == 0
    adv_path = out_dir / "adversarial.png"
    assert adv_path.is_file()
    meta = json.loads((out_dir / "attack.json").read_text())
    assert meta["iterations"] == 2
    assert meta["final_linf"] <= 0.1 + 1 / 255.0

    capsys.readouterr()
    assert run_cli("evaluate", "--image", img_path, "--adv", str(adv_path),
                   "--mask", str(mask_path), "--target", "red",
                   "--models", str(ckpt)) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "model,reference,loss,l2,psnr,ssim"
    assert len(lines) == 4

    eot_dir = tmp_path / "eot"
    assert run_cli("attack-eot", "--image", img_path, "--target", "blue",
                   "--models", str(ckpt), "--epsilon", "0.1",
                   "--iterations", "2", "--n-masks", "2",
                   "--out", str(eot_dir)) == 0
    assert (eot_dir / "adversarial.png").is_file()


def test_attack_missing_model(tmp_path):
    corpus = tmp_path / "c"
    build_corpus(corpus, 1, seed=1)
    mask = tmp_path / "m.png"
    run_cli("make-mask", "--size", "64x64", "--coverage", "0.05",
            "--out", str(mask))
    code = run_cli("attack", "--image", str(corpus / "img_000.png"),
                   "--mask", str(mask), "--target", "red",
                   "--models", str(tmp_path / "missing.ckpt"),
                   "--epsilon", "0.1", "--out", str(tmp_path / "o"))
    assert code == 1


def test_grid_cli_and_plot(tmp_path, toy_ckpt):
    corpus = tmp_path / "corpus"
    build_corpus(corpus, 2, seed=88)
    config = {
        "corpus": str(corpus),
        "working_size": 64,
        "models": {"attack": [f"a={toy_ckpt}"]},
        "epsilons": [0.0, 0.05],
        "coverages": [0.05],
        "targets": ["red"],
        "attack": {"iterations": 2},
        "out_dir": str(tmp_path / "run"),
        "seed": 5,
    }
    cfg_path = tmp_path / "exp.yaml"
    cfg_path.write_text(yaml.safe_dump(config))
    assert run_cli("grid", "--config", str(cfg_path)) == 0
    rows_csv = tmp_path / "run" / "grid_rows.csv"
    assert rows_csv.is_file()

    assert run_cli("plot", "--csv", str(tmp_path / "run" /
                                        "grid_aggregate.csv"),
                   "--out", str(tmp_path / "plots")) == 0
    assert (tmp_path / "plots" / "grid_loss_target.png").is_file()

    # CLI overrides: different out dir + seed flow through
    assert run_cli("grid", "--config", str(cfg_path), "--seed", "6",
                   "--out", str(tmp_path / "run2")) == 0
    assert (tmp_path / "run2" / "grid_rows.csv").is_file()


def test_grid_cli_bad_config(tmp_path):
    cfg_path = tmp_path / "bad.yaml"
    cfg_path.write_text("corpus: /nonexistent\nmodels: {attack: []}\n")
    assert run_cli("grid", "--config", str(cfg_path)) == 1
    assert run_cli("grid", "--config", str(tmp_path / "missing.yaml")) == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "markpaint" in capsys.readouterr().out
