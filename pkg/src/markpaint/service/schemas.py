"""Request/response models for the HTTP service.

Images travel as base64-encoded 8-bit PNGs (RGB for images and targets,
bilevel grayscale for masks), so the wire is a file boundary: values are
quantized to 1/255 on the way out.
"""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str
    models: list[str]


class LoadModelRequest(BaseModel):
    spec: str = Field(description="checkpoint path, adapter name, or name:arg")
    alias: Optional[str] = None


class ModelInfo(BaseModel):
    alias: str
    identifier: str
    differentiable: bool


class ModelListResponse(BaseModel):
    models: list[ModelInfo]


class InpaintRequest(BaseModel):
    model: str
    image: str = Field(description="base64 PNG, 8-bit RGB")
    mask: str = Field(description="base64 PNG, 8-bit bilevel grayscale")


class ImageResponse(BaseModel):
    image: str


class AttackRequest(BaseModel):
    models: list[str] = Field(min_length=1)
    image: str
    mask: str
    target: str = Field(description="base64 PNG, or a color spec like 'red'")
    epsilon: float = Field(ge=0.0, le=1.0)
    step: Union[float, str, None] = None
    iterations: int = Field(default=100, ge=0)
    alpha: float = Field(default=4.0, ge=0.0)
    seed: int = 0
    include_trace: bool = False


class EoTAttackRequest(BaseModel):
    models: list[str] = Field(min_length=1)
    image: str
    target: str
    epsilon: float = Field(ge=0.0, le=1.0)
    step: Union[float, str, None] = None
    iterations: int = Field(default=1500, ge=0)
    alpha: float = Field(default=4.0, ge=0.0)
    seed: int = 0
    n_masks: int = Field(default=40, ge=1)
    coverage_min: float = Field(default=0.01, gt=0.0, lt=1.0)
    coverage_max: float = Field(default=0.1, gt=0.0, lt=1.0)
    include_trace: bool = False


class AttackResponse(BaseModel):
    adversarial_image: str
    final_linf: float
    iterations: int
    models: list[str]
    loss_trace: Optional[list[list[float]]] = None


class EvaluateRequest(BaseModel):
    model: str
    image: str
    adv: str
    mask: str
    target: str
    alpha: float = Field(default=4.0, ge=0.0)


class MetricsCell(BaseModel):
    loss: float
    l2: float
    psnr: Optional[float] = Field(description="null when the patch matches "
                                              "exactly (infinite PSNR)")
    ssim: float


class EvaluateResponse(BaseModel):
    original: MetricsCell
    target: MetricsCell
    benign: MetricsCell


class DefendRequest(BaseModel):
    image: str
    kind: str
    parameter: float
