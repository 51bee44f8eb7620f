"""Command-line surface.

Single-image commands (attack, attack-eot, evaluate, make-mask, make-target,
train-toy) run directly on files; batch commands (grid, transfer, eot-eval,
defend, plot) are driven by a YAML experiment config; `serve` starts the HTTP
service. Exit codes: 0 success, 1 validation error, 2 partial failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .attack import AttackConfig, EoTConfig, markpaint, markpaint_eot, resolve_step
from .errors import ConfigError, MarkpaintError, ValidationError
from .harness import (emit_plots, load_config, run_attack_grid,
                      run_defense_sweep, run_eot_experiment,
                      run_transfer_matrix)
from .harness.corpus import parse_target
from .harness.runs import load_models, write_csv
from .imaging import (load_image, load_mask, random_rect_mask, save_image,
                      save_mask)
from .inpaint import ToyInpainterConfig, TrainingConfig, save_model, train_toy
from .loss import LossConfig
from .metrics import evaluate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARTIAL = 2
EXIT_INTERNAL = 3


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise ValidationError(f"size must look like HxW, got {text!r}") from None


def _parse_eps_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"bad epsilon list {text!r}") from None


def _add_attack_flags(sub, eot: bool):
    sub.add_argument("--image", required=True, help="input image (PNG/JPEG)")
    if not eot:
        sub.add_argument("--mask", required=True,
                         help="bilevel mask PNG (0=hole)")
    sub.add_argument("--target", required=True,
                     help="target: color name, #rrggbb, r,g,b, or image path")
    sub.add_argument("--models", required=True,
                     help="comma-separated model specs (path, name:arg, or "
                          "label=spec)")
    sub.add_argument("--epsilon", required=True, type=float)
    sub.add_argument("--step", default=None,
                     help='step size: a float or "eps/N"')
    sub.add_argument("--iterations", type=int,
                     default=1500 if eot else 100)
    sub.add_argument("--alpha", type=float, default=4.0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="output directory")
    if eot:
        sub.add_argument("--n-masks", type=int, default=40)
        sub.add_argument("--coverage-min", type=float, default=0.01)
        sub.add_argument("--coverage-max", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markpaint",
        description="Budgeted perturbations that steer image inpainters")
    parser.add_argument("--version", action="version",
                        version=f"markpaint {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train-toy", help="train the reference inpainter")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--crop", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-channels", type=int, default=32)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--identifier", default="toy")

    p = subs.add_parser("attack", help="craft a fixed-mask perturbation")
    _add_attack_flags(p, eot=False)

    p = subs.add_parser("attack-eot", help="craft a mask-agnostic perturbation")
    _add_attack_flags(p, eot=True)

    p = subs.add_parser("evaluate", help="patch metrics vs original/target/benign")
    p.add_argument("--image", required=True)
    p.add_argument("--adv", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--out", default=None, help="write the report CSV here")

    for name, help_text in (("grid", "attack/evaluate every combo"),
                            ("transfer", "cross-model transfer matrix"),
                            ("eot-eval", "EoT runs on held-out masks"),
                            ("defend", "defense sweep over the grid")):
        p = subs.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--models", default=None,
                       help="override models.attack (comma-separated)")
        p.add_argument("--epsilon", default=None, help="override epsilon list")
        p.add_argument("--iterations", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--step", default=None)
        p.add_argument("--jobs", type=int, default=None)

    p = subs.add_parser("plot", help="render curves from a run CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)

    p = subs.add_parser("make-mask", help="write a random rectangle mask PNG")
    p.add_argument("--size", required=True, help="HxW")
    p.add_argument("--coverage", required=True, type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = subs.add_parser("make-target", help="write a solid-color target PNG")
    p.add_argument("--size", required=True, help="HxW")
    p.add_argument("--color", required=True,
                   help="color name, #rrggbb, or r,g,b")
    p.add_argument("--out", required=True)

    p = subs.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--models", default=None,
                   help="model specs to preload (comma-separated)")
    return parser


def _cmd_train_toy(args) -> int:
    cfg = TrainingConfig(corpus=args.corpus, crop_size=args.crop,
                         epochs=args.epochs, learning_rate=args.lr,
                         batch_size=args.batch_size, seed=args.seed,
                         identifier=args.identifier)
    arch = ToyInpainterConfig(base_channels=args.base_channels,
                              depth=args.depth)
    model = train_toy(cfg, arch)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    print(f"trained {args.identifier!r} for {args.epochs} epochs; final loss "
          f"{model.train_history[-1]:.5f}; checkpoint: {out}")
    return EXIT_OK


def _write_attack_outputs(args, img, result) -> None:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_image(result.adv, out_dir / "adversarial.png")
    trace_rows = [[j] + list(map(float, row))
                  for j, row in enumerate(result.loss_trace)]
    write_csv(out_dir / "loss_trace.csv",
              ["iteration"] + list(result.model_ids), trace_rows)
    (out_dir / "attack.json").write_text(json.dumps({
        "final_linf": result.final_linf,
        "iterations": result.iterations,
        "models": list(result.model_ids),
    }, indent=2) + "\n")
    print(f"adversarial image written to {out_dir / 'adversarial.png'} "
          f"(final linf {result.final_linf:.5f})")


def _cmd_attack(args) -> int:
    img = load_image(args.image)
    mask = load_mask(args.mask)
    target = parse_target(args.target, *img.shape[:2])
    models = [m for _, m in load_models(args.models.split(","))]
    cfg = AttackConfig(epsilon=args.epsilon,
                       step=resolve_step(args.step, args.epsilon),
                       iterations=args.iterations,
                       loss=LossConfig(alpha=args.alpha), seed=args.seed)
    result = markpaint(img, mask, target, models, cfg)
    _write_attack_outputs(args, img, result)
    return EXIT_OK


def _cmd_attack_eot(args) -> int:
    img = load_image(args.image)
    target = parse_target(args.target, *img.shape[:2])
    models = [m for _, m in load_models(args.models.split(","))]
    cfg = EoTConfig(epsilon=args.epsilon,
                    step=resolve_step(args.step, args.epsilon, 30.0),
                    iterations=args.iterations,
                    loss=LossConfig(alpha=args.alpha), seed=args.seed,
                    n_masks=args.n_masks, coverage_min=args.coverage_min,
                    coverage_max=args.coverage_max)
    result = markpaint_eot(img, target, models, cfg)
    _write_attack_outputs(args, img, result)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    img = load_image(args.image)
    adv = load_image(args.adv)
    mask = load_mask(args.mask)
    target = parse_target(args.target, *img.shape[:2])
    loss_cfg = LossConfig(alpha=args.alpha)
    header = ["model", "reference", "loss", "l2", "psnr", "ssim"]
    rows = []
    for label, model in load_models(args.models.split(",")):
        report = evaluate(img, mask, target, model, adv, loss_cfg)
        for ref, cell in report.rows():
            rows.append([label, ref, cell.loss, cell.l2, cell.psnr, cell.ssim])
    print(",".join(header))
    for row in rows:
        print(",".join(str(v) for v in row))
    if args.out:
        write_csv(Path(args.out), header, rows)
    return EXIT_OK


def _config_overrides(args) -> dict:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.models is not None:
        overrides["models"] = {"attack": args.models.split(",")}
    if args.epsilon is not None:
        overrides["epsilons"] = _parse_eps_list(args.epsilon)
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    return overrides


def _cmd_batch(args, runner) -> int:
    cfg = load_config(args.config, _config_overrides(args))
    patch = {}
    if args.iterations is not None:
        patch["iterations"] = args.iterations
    if args.step is not None:
        patch["step"] = args.step
    if patch:
        cfg = cfg.model_copy(update={
            "attack": cfg.attack.model_copy(update=patch)})
    if args.alpha is not None:
        cfg = cfg.model_copy(update={
            "loss": cfg.loss.model_copy(update={"alpha": args.alpha})})
    record = runner(cfg)
    print(f"{record.row_count} rows -> {record.out_dir} "
          f"(config {record.config_hash}, {record.wall_clock:.1f}s, "
          f"{len(record.failures)} failures)")
    return EXIT_OK if record.ok else EXIT_PARTIAL


def _cmd_plot(args) -> int:
    paths = emit_plots(args.csv, args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_make_mask(args) -> int:
    h, w = _parse_size(args.size)
    mask = random_rect_mask(h, w, args.coverage, args.seed)
    save_mask(mask, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_make_target(args) -> int:
    h, w = _parse_size(args.size)
    target = parse_target(args.color, h, w)
    save_image(target, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    preload = args.models.split(",") if args.models else []
    app = create_app(preload=preload)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "train-toy": _cmd_train_toy,
    "attack": _cmd_attack,
    "attack-eot": _cmd_attack_eot,
    "evaluate": _cmd_evaluate,
    "grid": lambda a: _cmd_batch(a, run_attack_grid),
    "transfer": lambda a: _cmd_batch(a, run_transfer_matrix),
    "eot-eval": lambda a: _cmd_batch(a, run_eot_experiment),
    "defend": lambda a: _cmd_batch(a, run_defense_sweep),
    "plot": _cmd_plot,
    "make-mask": _cmd_make_mask,
    "make-target": _cmd_make_target,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MarkpaintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
