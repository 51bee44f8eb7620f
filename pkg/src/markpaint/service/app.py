"""FastAPI app: inpaint, attack, evaluate, and defend over HTTP.

Loaded models live in app state keyed by alias, so repeated requests reuse
warm weights. Core-toolkit validation failures surface as 400s with the
original message; unknown model aliases as 404s.
"""

from __future__ import annotations

import base64
import binascii
import io
import math

import numpy as np
from fastapi import FastAPI, HTTPException
from PIL import Image as pil_image
from PIL import UnidentifiedImageError

from .. import __version__
from ..attack import AttackConfig, EoTConfig, markpaint, markpaint_eot, resolve_step
from ..defense import DefenseSpec, apply_defense
from ..errors import MarkpaintError
from ..harness.corpus import parse_color
from ..imaging import ensure_image, solid_target
from ..inpaint import InpainterModel, load_model_spec
from ..loss import LossConfig
from ..metrics import ComparisonReport, evaluate
from . import schemas


def _b64_to_bytes(data: str, field: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError):
        raise HTTPException(status_code=422,
                            detail=f"{field}: not valid base64") from None


def decode_image(data: str, field: str = "image") -> np.ndarray:
    raw = _b64_to_bytes(data, field)
    try:
        with pil_image.open(io.BytesIO(raw)) as im:
            if im.mode != "RGB":
                raise HTTPException(status_code=422,
                                    detail=f"{field}: expected an 8-bit RGB "
                                           f"PNG, got mode {im.mode!r}")
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError:
        raise HTTPException(status_code=422,
                            detail=f"{field}: not a decodable image") from None
    return arr.astype(np.float32) / 255.0


def decode_mask(data: str, field: str = "mask") -> np.ndarray:
    raw = _b64_to_bytes(data, field)
    try:
        with pil_image.open(io.BytesIO(raw)) as im:
            if im.mode == "1":
                im = im.convert("L")
            if im.mode != "L":
                raise HTTPException(status_code=422,
                                    detail=f"{field}: expected an 8-bit "
                                           f"grayscale PNG, got mode "
                                           f"{im.mode!r}")
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError:
        raise HTTPException(status_code=422,
                            detail=f"{field}: not a decodable image") from None
    bad = (arr != 0) & (arr != 255)
    if bad.any():
        raise HTTPException(status_code=422,
                            detail=f"{field}: mask pixels must be 0 or 255, "
                                   f"found {int(arr[bad].flat[0])}")
    return (arr == 255).astype(np.float32)


def decode_target(data: str, height: int, width: int) -> np.ndarray:
    color = parse_color(data)
    if color is not None:
        return solid_target(height, width, color)
    return decode_image(data, "target")


def encode_image(img: np.ndarray) -> str:
    arr = np.rint(ensure_image(img) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    pil_image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def _metrics_cell(m) -> schemas.MetricsCell:
    return schemas.MetricsCell(loss=m.loss, l2=m.l2,
                               psnr=None if math.isinf(m.psnr) else m.psnr,
                               ssim=m.ssim)


def _report_response(report: ComparisonReport) -> schemas.EvaluateResponse:
    return schemas.EvaluateResponse(original=_metrics_cell(report.original),
                                    target=_metrics_cell(report.target),
                                    benign=_metrics_cell(report.benign))


def create_app(preload: list[str] = ()) -> FastAPI:
    app = FastAPI(title="markpaint",
                  description="Budgeted perturbations that steer image "
                              "inpainters toward chosen content",
                  version=__version__)
    models: dict[str, InpainterModel] = {}

    def _load(spec: str, alias: str | None = None) -> str:
        if alias is None and "=" in spec:
            alias, spec = spec.split("=", 1)
        try:
            model = load_model_spec(spec)
        except MarkpaintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        name = alias or model.identifier
        models[name] = model
        return name

    for spec in preload:
        _load(spec)

    def _get_models(aliases: list[str]) -> list[InpainterModel]:
        out = []
        for alias in aliases:
            if alias not in models:
                known = ", ".join(sorted(models)) or "(none loaded)"
                raise HTTPException(status_code=404,
                                    detail=f"model {alias!r} not loaded; "
                                           f"loaded: {known}")
            out.append(models[alias])
        return out

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__,
                                      models=sorted(models))

    @app.get("/models", response_model=schemas.ModelListResponse)
    def list_models():
        return schemas.ModelListResponse(models=[
            schemas.ModelInfo(alias=a, identifier=m.identifier,
                              differentiable=m.differentiable)
            for a, m in sorted(models.items())])

    @app.post("/models", response_model=schemas.ModelListResponse)
    def load_model_endpoint(req: schemas.LoadModelRequest):
        _load(req.spec, req.alias)
        return list_models()

    @app.post("/inpaint", response_model=schemas.ImageResponse)
    def inpaint_endpoint(req: schemas.InpaintRequest):
        (model,) = _get_models([req.model])
        img = decode_image(req.image)
        mask = decode_mask(req.mask)
        try:
            out = model.inpaint(img, mask)
        except MarkpaintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return schemas.ImageResponse(image=encode_image(out))

    @app.post("/attack", response_model=schemas.AttackResponse)
    def attack_endpoint(req: schemas.AttackRequest):
        mods = _get_models(req.models)
        img = decode_image(req.image)
        mask = decode_mask(req.mask)
        target = decode_target(req.target, *img.shape[:2])
        try:
            cfg = AttackConfig(epsilon=req.epsilon,
                               step=resolve_step(req.step, req.epsilon),
                               iterations=req.iterations,
                               loss=LossConfig(alpha=req.alpha), seed=req.seed)
            result = markpaint(img, mask, target, mods, cfg)
        except MarkpaintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return schemas.AttackResponse(
            adversarial_image=encode_image(result.adv),
            final_linf=result.final_linf, iterations=result.iterations,
            models=list(result.model_ids),
            loss_trace=result.loss_trace.tolist() if req.include_trace else None)

    @app.post("/attack-eot", response_model=schemas.AttackResponse)
    def attack_eot_endpoint(req: schemas.EoTAttackRequest):
        mods = _get_models(req.models)
        img = decode_image(req.image)
        target = decode_target(req.target, *img.shape[:2])
        try:
            cfg = EoTConfig(epsilon=req.epsilon,
                            step=resolve_step(req.step, req.epsilon, 30.0),
                            iterations=req.iterations,
                            loss=LossConfig(alpha=req.alpha), seed=req.seed,
                            n_masks=req.n_masks,
                            coverage_min=req.coverage_min,
                            coverage_max=req.coverage_max)
            result = markpaint_eot(img, target, mods, cfg)
        except MarkpaintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return schemas.AttackResponse(
            adversarial_image=encode_image(result.adv),
            final_linf=result.final_linf, iterations=result.iterations,
            models=list(result.model_ids),
            loss_trace=result.loss_trace.tolist() if req.include_trace else None)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_endpoint(req: schemas.EvaluateRequest):
        (model,) = _get_models([req.model])
        img = decode_image(req.image)
        adv = decode_image(req.adv, "adv")
        mask = decode_mask(req.mask)
        target = decode_target(req.target, *img.shape[:2])
        try:
            report = evaluate(img, mask, target, model, adv,
                              LossConfig(alpha=req.alpha))
        except MarkpaintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return _report_response(report)

    @app.post("/defend", response_model=schemas.ImageResponse)
    def defend_endpoint(req: schemas.DefendRequest):
        img = decode_image(req.image)
        try:
            out = apply_defense(img, DefenseSpec(req.kind, req.parameter))
        except MarkpaintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return schemas.ImageResponse(image=encode_image(out))

    return app
