"""The inpainter contract: fill the hole, pass known pixels through untouched.

Compositing is part of the contract, not the network: the returned image is
``img ⊙ M + raw ⊙ (1−M)``, so the known-pixel invariant holds for any weights.
Models expose a torch-level raw fill so attacks can differentiate through the
whole composite; the numpy-facing ops below wrap that.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import torch

from ..errors import ModelCapabilityError, ValidationError
from ..imaging import ensure_image, ensure_mask, ensure_same_shape
from ..loss import to_image, to_tensor


class InpainterModel:
    """Base class every inpainter (toy or external adapter) satisfies.

    Subclasses implement ``raw_fill`` on (1, 3, H, W) tensors and set
    ``identifier`` and ``differentiable``. Inference must be deterministic:
    stochastic layers stay disabled outside training.
    """

    identifier: str = "inpainter"
    differentiable: bool = False

    def raw_fill(self, masked: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Network output in [0, 1] for a hole-zeroed input and its mask plane."""
        raise NotImplementedError

    def supports_size(self, height: int, width: int) -> bool:
        return height >= 1 and width >= 1

    def composite(self, img_t: torch.Tensor, mask_t: torch.Tensor) -> torch.Tensor:
        """Differentiable full pipeline: mask out the hole, fill, composite."""
        masked = img_t * mask_t
        raw = self.raw_fill(masked, mask_t).clamp(0.0, 1.0)
        return img_t * mask_t + raw * (1.0 - mask_t)

    def craft_composite(self, img_t: torch.Tensor,
                        mask_t: torch.Tensor) -> torch.Tensor:
        """Composite whose known-pixel pass-through is held constant.

        Same values as `composite`, but gradients flow only through the
        network fill: the attack objective sees the network's output, so the
        known region contributes a constant, not a direct pull term.
        """
        masked = img_t * mask_t
        raw = self.raw_fill(masked, mask_t).clamp(0.0, 1.0)
        return img_t.detach() * mask_t + raw * (1.0 - mask_t)

    def _check_inputs(self, img: np.ndarray, mask: np.ndarray):
        img = ensure_image(img)
        mask = ensure_mask(mask)
        ensure_same_shape(img, mask, "image and mask")
        h, w = img.shape[:2]
        if not self.supports_size(h, w):
            raise ValidationError(f"model {self.identifier!r} does not support "
                                  f"{h}x{w} inputs")
        return img, mask

    def inpaint(self, img: np.ndarray, mask: np.ndarray) -> np.ndarray:
        img, mask = self._check_inputs(img, mask)
        img_t = to_tensor(img)
        mask_t = torch.from_numpy(mask).view(1, 1, *mask.shape)
        with torch.no_grad():
            out = self.composite(img_t, mask_t)
        return to_image(out)

    def input_gradient(self, img: np.ndarray, mask: np.ndarray,
                       loss_value_fn: Callable[[torch.Tensor], torch.Tensor],
                       ) -> np.ndarray:
        """d loss_value_fn(inpaint(img, mask)) / d img, shape (H, W, 3).

        ``loss_value_fn`` receives the composited (1, 3, H, W) tensor and must
        return a differentiable scalar. Hole pixels get exactly zero gradient:
        the model only sees them zeroed, and compositing passes none through.
        """
        if not self.differentiable:
            raise ModelCapabilityError(f"model {self.identifier!r} does not "
                                       f"expose input gradients")
        img, mask = self._check_inputs(img, mask)
        img_t = to_tensor(img).requires_grad_(True)
        mask_t = torch.from_numpy(mask).view(1, 1, *mask.shape)
        out = self.composite(img_t, mask_t)
        value = loss_value_fn(out)
        if value.dim() != 0:
            raise ValidationError("loss_value_fn must return a scalar")
        (grad,) = torch.autograd.grad(value, img_t)
        if not torch.isfinite(grad).all():
            raise ValidationError("input gradient overflowed to non-finite "
                                  "values; check the loss function scaling")
        return to_image(grad)


def inpaint(model: InpainterModel, img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Fill the hole of `img` with `model`; known pixels pass through exactly."""
    return model.inpaint(img, mask)


def input_gradient(model: InpainterModel, img: np.ndarray, mask: np.ndarray,
                   loss_value_fn: Callable[[torch.Tensor], torch.Tensor],
                   ) -> np.ndarray:
    """Gradient of a scalar loss of the inpainted output w.r.t. the input image."""
    return model.input_gradient(img, mask, loss_value_fn)
