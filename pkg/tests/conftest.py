import sys
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

from helpers import TEST_ARCH, TINY_ARCH, build_corpus, synth_image

from markpaint import ToyInpainter, TrainingConfig, save_model, train_toy


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus")
    build_corpus(path, 110, seed=1000)
    return path


@pytest.fixture(scope="session")
def toy_model(corpus_dir):
    cfg = TrainingConfig(corpus=str(corpus_dir), seed=11, identifier="toy-a",
                         crop_size=64, epochs=40, learning_rate=2e-3,
                         batch_size=8)
    return train_toy(cfg, TEST_ARCH)


@pytest.fixture(scope="session")
def toy_model_b(corpus_dir):
    cfg = TrainingConfig(corpus=str(corpus_dir), seed=12, identifier="toy-b",
                         crop_size=64, epochs=40, learning_rate=2e-3,
                         batch_size=8)
    return train_toy(cfg, TEST_ARCH)


@pytest.fixture(scope="session")
def toy_ckpt(toy_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "toy_a.ckpt"
    save_model(toy_model, path)
    return path


@pytest.fixture(scope="session")
def toy_ckpt_b(toy_model_b, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt_b") / "toy_b.ckpt"
    save_model(toy_model_b, path)
    return path


@pytest.fixture
def fresh_model():
    """An untrained (but valid and differentiable) inpainter; cheap."""
    torch.manual_seed(77)
    return ToyInpainter(TINY_ARCH, identifier="fresh")


@pytest.fixture
def sample_image():
    return synth_image(np.random.default_rng(4242))
