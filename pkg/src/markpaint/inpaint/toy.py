"""A small trainable reference inpainter so experiments run at desk scale.

Encoder-decoder: `depth` stride-2 convolution blocks down, mirrored
nearest-neighbor-upsample + convolution blocks up, with a global-average
context branch at the bottleneck so the fill depends on the whole image,
not just the hole's surroundings. Input is the hole-zeroed image
concatenated with the mask plane; the head squashes to [0, 1] with a
sigmoid. Compositing happens in the base class.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ValidationError
from .model import InpainterModel

_MAX_CHANNELS = 256


@dataclass(frozen=True)
class ToyInpainterConfig:
    base_channels: int = 32
    depth: int = 3
    input_channels: int = 4  # RGB + mask plane

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError(f"depth must be >= 1, got {self.depth}")
        if self.base_channels < 1:
            raise ValidationError(f"base_channels must be >= 1, got "
                                  f"{self.base_channels}")
        if self.input_channels != 4:
            raise ValidationError("the toy inpainter takes RGB + mask plane "
                                  f"(4 channels), got {self.input_channels}")


def _norm(ch: int) -> nn.Module:
    return nn.GroupNorm(8 if ch % 8 == 0 else 1, ch)


class _ToyNet(nn.Module):
    def __init__(self, cfg: ToyInpainterConfig):
        super().__init__()
        ch = cfg.base_channels
        self.stem = nn.Sequential(
            nn.Conv2d(cfg.input_channels, ch, 3, padding=1), _norm(ch), nn.ReLU())
        downs, chans = [], [ch]
        for _ in range(cfg.depth):
            nxt = min(ch * 2, _MAX_CHANNELS)
            downs.append(nn.Sequential(
                nn.Conv2d(ch, nxt, 3, stride=2, padding=1), _norm(nxt), nn.ReLU()))
            ch = nxt
            chans.append(ch)
        self.downs = nn.ModuleList(downs)
        self.mid = nn.Sequential(
            nn.Conv2d(ch, ch, 3, padding=1), _norm(ch), nn.ReLU())
        # Global context: pooled bottleneck features broadcast back over space.
        self.global_fc = nn.Linear(ch, ch)
        ups = []
        for i in range(cfg.depth):
            nxt = chans[-2 - i]
            ups.append(nn.Sequential(
                nn.Conv2d(ch, nxt, 3, padding=1), _norm(nxt), nn.ReLU()))
            ch = nxt
        self.ups = nn.ModuleList(ups)
        self.head = nn.Conv2d(ch, 3, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.stem(x)
        for down in self.downs:
            h = down(h)
        h = self.mid(h)
        ctx = self.global_fc(h.mean(dim=(2, 3)))
        h = h + ctx[:, :, None, None]
        for up in self.ups:
            h = F.interpolate(h, scale_factor=2, mode="nearest")
            h = up(h)
        return torch.sigmoid(self.head(h))


class ToyInpainter(InpainterModel):
    """Reference differentiable inpainter; immutable after construction."""

    differentiable = True

    def __init__(self, config: ToyInpainterConfig = ToyInpainterConfig(),
                 identifier: str = "toy"):
        self.identifier = identifier
        self.config = config
        self.net = _ToyNet(config)
        self.net.eval()
        for p in self.net.parameters():
            p.requires_grad_(False)

    def supports_size(self, height: int, width: int) -> bool:
        # Anything the replicate padding can stretch to a stride multiple.
        mult = 2 ** self.config.depth
        return height >= 1 and width >= 1 and min(height, width) > mult // 2

    def raw_fill(self, masked: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        x = torch.cat([masked, mask.expand(-1, 1, -1, -1)], dim=1)
        h, w = x.shape[-2:]
        mult = 2 ** self.config.depth
        ph = (-h) % mult
        pw = (-w) % mult
        if ph or pw:
            x = F.pad(x, (0, pw, 0, ph), mode="replicate")
        out = self.net(x)
        return out[..., :h, :w]

    def state_dict(self):
        return self.net.state_dict()

    def load_state_dict(self, state):
        self.net.load_state_dict(state)
        self.net.eval()
        for p in self.net.parameters():
            p.requires_grad_(False)
