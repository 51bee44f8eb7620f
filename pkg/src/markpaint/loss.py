"""The optimization objective: perceptual feature distance plus alpha * MSE.

The perceptual term compares frozen convolutional features of the two images
(feature-reconstruction style). Two extractors ship by default:

* ``pyramid`` — a fixed-seed random-weight 4-level convolution pyramid. Frozen
  random features still define a deterministic perceptual metric, so tests and
  CI need no downloaded weights.
* ``vgg16``  — a 16-layer convolutional classifier tapped after convolutions
  2, 4, 7 and 10 (the usual relu1_2/relu2_2/relu3_3/relu4_3 choice). Requires
  a local weights file; selected via ``LossConfig.feature_weights``.

An ``identity`` extractor (single tap = raw pixels) exists for tests: with it,
the perceptual distance reduces to plain MSE.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import ValidationError
from .imaging import ensure_image, ensure_same_shape

logger = logging.getLogger(__name__)

# Seed for the hermetic random-feature pyramid; part of the toolkit version.
_PYRAMID_SEED = 0x6D61726B

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


def to_tensor(img: np.ndarray) -> torch.Tensor:
    """(H, W, 3) float numpy -> (1, 3, H, W) float32 tensor."""
    return torch.from_numpy(np.ascontiguousarray(img, dtype=np.float32)) \
        .permute(2, 0, 1).unsqueeze(0)


def to_image(t: torch.Tensor) -> np.ndarray:
    """(1, 3, H, W) tensor -> (H, W, 3) float32 numpy."""
    return t.detach().squeeze(0).permute(1, 2, 0).contiguous().numpy()


class FeatureExtractor(nn.Module):
    """Frozen feature taps; equal inputs always give equal features.

    Subclasses set ``identifier`` and ``min_input`` (the smallest H/W the tap
    stack accepts) and implement ``features``.
    """

    identifier: str = "base"
    min_input: int = 1

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        raise NotImplementedError

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        if x.shape[-2] < self.min_input or x.shape[-1] < self.min_input:
            raise ValidationError(
                f"{self.identifier} extractor needs inputs of at least "
                f"{self.min_input}px per side, got {tuple(x.shape[-2:])}")
        return self.features(x)


class IdentityExtractor(FeatureExtractor):
    """Single tap = raw pixels; makes perceptual distance equal MSE."""

    identifier = "identity"
    min_input = 1

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        return [x]


class ConvPyramidExtractor(FeatureExtractor):
    """Fixed-seed random-weight pyramid: conv3x3 taps at 4 scales."""

    identifier = "pyramid"
    min_input = 16

    def __init__(self, seed: int = _PYRAMID_SEED):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        channels = [3, 16, 32, 64, 64]
        convs = []
        for i, (cin, cout) in enumerate(zip(channels[:-1], channels[1:])):
            stride = 1 if i == 0 else 2
            conv = nn.Conv2d(cin, cout, kernel_size=3, stride=stride, padding=1)
            fan_in = cin * 9
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen)
                                  * (2.0 / fan_in) ** 0.5)
                conv.bias.zero_()
            convs.append(conv)
        self.convs = nn.ModuleList(convs)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        taps = []
        h = x
        for conv in self.convs:
            h = torch.relu(conv(h))
            taps.append(h)
        return taps


class VGGFeatureExtractor(FeatureExtractor):
    """VGG16 conv features from a local torchvision-format weights file."""

    identifier = "vgg16"
    min_input = 32
    # Indices into the torchvision vgg16 `features` stack, just after the
    # ReLUs that follow convolutions 2, 4, 7 and 10.
    _TAPS = (3, 8, 15, 22)

    def __init__(self, weights_path):
        super().__init__()
        from torchvision.models import vgg16

        path = Path(weights_path)
        if not path.is_file():
            raise ValidationError(f"feature weights file not found: {path}")
        net = vgg16(weights=None)
        state = torch.load(path, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
        self.stack = net.features[:max(self._TAPS) + 1]
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()
        self.register_buffer("mean", torch.tensor(_IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(_IMAGENET_STD).view(1, 3, 1, 1))

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        h = (x - self.mean) / self.std
        taps = []
        for i, layer in enumerate(self.stack):
            h = layer(h)
            if i in self._TAPS:
                taps.append(h)
        return taps


_EXTRACTOR_CACHE: dict[tuple, FeatureExtractor] = {}


def get_extractor(name: str = "pyramid",
                  feature_weights=None) -> FeatureExtractor:
    """Resolve an extractor by name, caching instances (they are immutable).

    When `feature_weights` is unset, the hermetic pyramid is used and the
    substitution is logged.
    """
    key = (name, str(feature_weights) if feature_weights else None)
    if key in _EXTRACTOR_CACHE:
        return _EXTRACTOR_CACHE[key]
    if name == "identity":
        fx = IdentityExtractor()
    elif name == "pyramid":
        fx = ConvPyramidExtractor()
    elif name == "vgg16":
        if feature_weights is None:
            logger.info("no feature weights configured; substituting the "
                        "hermetic random-feature pyramid for vgg16")
            fx = ConvPyramidExtractor()
        else:
            fx = VGGFeatureExtractor(feature_weights)
    else:
        raise ValidationError(f"unknown feature extractor {name!r}; known: "
                              f"identity, pyramid, vgg16")
    _EXTRACTOR_CACHE[key] = fx
    return fx


@dataclass(frozen=True)
class LossConfig:
    """Knobs of the objective: loss = perceptual + alpha * MSE (mean reduction)."""

    alpha: float = 4.0
    extractor: str = "pyramid"
    feature_weights: str | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")

    def build_extractor(self) -> FeatureExtractor:
        return get_extractor(self.extractor, self.feature_weights)


def mse_t(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    return torch.mean((x - y) ** 2)


def perceptual_t(x: torch.Tensor, y: torch.Tensor,
                 fx: FeatureExtractor) -> torch.Tensor:
    fx_x = fx(x)
    fx_y = fx(y)
    total = x.new_zeros(())
    for a, b in zip(fx_x, fx_y):
        total = total + torch.mean((a - b) ** 2)
    return total / len(fx_x)


class MarkLossFn:
    """Differentiable loss-to-target with the target's features precomputed.

    Callable on a (1, 3, H, W) tensor; returns a scalar tensor. One instance
    per (target, config) pair — reused across attack iterations and models.
    """

    def __init__(self, target: np.ndarray, cfg: LossConfig):
        self.cfg = cfg
        self.fx = cfg.build_extractor()
        self.target_t = to_tensor(ensure_image(target, "target"))
        with torch.no_grad():
            self._target_feats = [f.detach() for f in self.fx(self.target_t)]

    def __call__(self, x: torch.Tensor) -> torch.Tensor:
        feats = self.fx(x)
        per = x.new_zeros(())
        for a, b in zip(feats, self._target_feats):
            per = per + torch.mean((a - b) ** 2)
        per = per / len(feats)
        return per + self.cfg.alpha * mse_t(x, self.target_t)


def mse(x: np.ndarray, y: np.ndarray) -> float:
    """Mean over all pixels and channels of (x - y)^2."""
    x = ensure_image(x, "x")
    y = ensure_image(y, "y")
    ensure_same_shape(x, y, "images")
    return float(np.mean((x.astype(np.float64) - y.astype(np.float64)) ** 2))


def perceptual(x: np.ndarray, y: np.ndarray, fx: FeatureExtractor) -> float:
    """Mean squared feature difference, averaged over the extractor's taps."""
    x = ensure_image(x, "x")
    y = ensure_image(y, "y")
    ensure_same_shape(x, y, "images")
    with torch.no_grad():
        return float(perceptual_t(to_tensor(x), to_tensor(y), fx))


def mark_loss(x: np.ndarray, y: np.ndarray,
              cfg: LossConfig = LossConfig()) -> float:
    """perceptual(x, y) + alpha * mse(x, y); the attack objective."""
    fx = cfg.build_extractor()
    return perceptual(x, y, fx) + cfg.alpha * mse(x, y)
