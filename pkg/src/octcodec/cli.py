"""Command-line entry points: train / encode / decode / eval / bdrate / ablate."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .errors import CodecError


def _load_curve(path) -> list:
    from .evaluation import RDPoint

    blob = json.loads(Path(path).read_text())
    points = blob["points"] if isinstance(blob, dict) else blob
    curve = []
    for p in points:
        if isinstance(p, dict):
            curve.append(RDPoint(float(p["bpp"]), float(p["psnr"])))
        else:
            curve.append(RDPoint(float(p[0]), float(p[1])))
    return sorted(curve, key=lambda q: q.bpp)


def _prepare_run_dir(path, force: bool) -> Path:
    run_dir = Path(path)
    if run_dir.exists() and any(run_dir.iterdir()):
        if not force:
            raise CodecError(
                f"run directory {run_dir} is not empty; pass --force to reuse it"
            )
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _train_config_from_args(args) -> TrainConfig:
    if args.config:
        cfg = TrainConfig.load(args.config)
    elif args.desk_scale:
        cfg = TrainConfig.desk_scale()
    else:
        cfg = TrainConfig()
    if args.desk_scale and args.config:
        desk = TrainConfig.desk_scale()
        cfg = TrainConfig(**{**json.loads(desk.to_json()), "lam": cfg.lam, "seed": cfg.seed})
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.lmbda is not None:
        overrides["lam"] = args.lmbda
    if args.channels is not None:
        overrides["channels"] = args.channels
    if args.steps is not None:
        overrides["steps_per_epoch"] = args.steps
        overrides["epochs"] = 1
    if overrides:
        cfg = TrainConfig(**{**json.loads(cfg.to_json()), **overrides})
    return cfg


def _training_images(args, cfg) -> list[np.ndarray]:
    from .data import ingest_dataset, load_image, synthetic_screen_dataset

    if args.data:
        manifest = ingest_dataset(args.data, args.manifest, min_size=cfg.patch_size)
        return [load_image(p) for p in manifest.paths()]
    size = max(cfg.patch_size, 64)
    return synthetic_screen_dataset(16, size, size, seed=cfg.seed)


def cmd_train(args) -> int:
    import torch

    from .network import ScreenContentCodec
    from .training import train_loop

    cfg = _train_config_from_args(args)
    run_dir = _prepare_run_dir(args.run_dir, args.force)
    cfg.save(run_dir / "config.json")
    images = _training_images(args, cfg)
    torch.manual_seed(cfg.seed)
    model = ScreenContentCodec(cfg.model_config())
    summary = train_loop(model, images, cfg, run_dir)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_encode(args) -> int:
    from .data import image_to_tensor, load_image
    from .evaluation import bpp
    from .network import load_checkpoint

    model = load_checkpoint(args.checkpoint)
    img = load_image(args.image)
    data, _ = model.compress(image_to_tensor(img))
    Path(args.output).write_bytes(data)
    rate = bpp(len(data), img.shape[:2])
    print(f"bpp={rate:.6f}", file=sys.stderr)
    return 0


def cmd_decode(args) -> int:
    from .data import save_image, tensor_to_image
    from .network import load_checkpoint

    model = load_checkpoint(args.checkpoint)
    data = Path(args.bitstream).read_bytes()
    decoded, _ = model.decompress(data)
    save_image(tensor_to_image(decoded), args.output)
    return 0


def cmd_eval(args) -> int:
    from .data import ingest_dataset, load_image
    from .evaluation import evaluate_model, plot_rd_curves, render_table, write_jsonl
    from .network import load_checkpoint

    model = load_checkpoint(args.checkpoint)
    source = Path(args.data)
    if source.is_dir():
        manifest = ingest_dataset(source, args.manifest, min_size=1)
        paths = manifest.paths()
    else:
        paths = [source]
    images = [load_image(p) for p in paths]
    names = [p.name for p in paths]
    out_dir = _prepare_run_dir(args.out_dir, args.force)
    result = evaluate_model(model, images, names)
    write_jsonl(result["records"], out_dir / "per_image.jsonl")
    table = render_table(result["records"], ["name", "bpp", "psnr"])
    (out_dir / "summary.txt").write_text(
        table + "\n\n" + json.dumps(result["summary"], indent=2, sort_keys=True) + "\n"
    )
    print(table)
    print(json.dumps(result["summary"], indent=2, sort_keys=True))
    if args.plot:
        from .evaluation import RDPoint

        pts = [RDPoint(r["bpp"], r["psnr"]) for r in result["records"]]
        plot_rd_curves({"model": pts}, out_dir / "rd_curve.png")
    return 0


def cmd_bdrate(args) -> int:
    from .evaluation import bd_rate

    anchor = _load_curve(args.anchor)
    test = _load_curve(args.test)
    value = bd_rate(anchor, test)
    print(f"{value:.2f}")
    return 0


def cmd_ablate(args) -> int:
    from .data import synthetic_screen_dataset
    from .evaluation import (
        ABLATION_VARIANTS,
        BLOCK_COMPARISON_VARIANTS,
        ablation_run,
        plot_rd_curves,
    )

    cfg = _train_config_from_args(args)
    out_dir = _prepare_run_dir(args.out_dir, args.force)
    size = max(cfg.patch_size, 64)
    train_images = synthetic_screen_dataset(8, size, size, seed=cfg.seed)
    eval_images = synthetic_screen_dataset(2, size, size, seed=cfg.seed + 1)
    variants = (
        BLOCK_COMPARISON_VARIANTS if args.blocks else ABLATION_VARIANTS
    )
    report = ablation_run(variants, cfg, train_images, eval_images, out_dir)
    print(report["table"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="octcodec",
        description="Screen-content image codec workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_train_flags(p):
        p.add_argument("--config", help="JSON training config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--lambda", dest="lmbda", type=float, default=None)
        p.add_argument("--channels", type=int, default=None)
        p.add_argument("--steps", type=int, default=None, help="total steps (one epoch)")
        p.add_argument("--desk-scale", action="store_true", help="small CPU-sized run")
        p.add_argument("--force", action="store_true", help="reuse a non-empty directory")

    p = sub.add_parser("train", help="train a model")
    add_train_flags(p)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--data", help="dataset directory (PNG); synthetic data if omitted")
    p.add_argument("--manifest", help="optional dataset manifest JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="compress an image to a bitstream")
    p.add_argument("image")
    p.add_argument("checkpoint")
    p.add_argument("output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress a bitstream to a PNG")
    p.add_argument("bitstream")
    p.add_argument("checkpoint")
    p.add_argument("output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="rate-distortion evaluation through the bitstream")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="image file or dataset directory")
    p.add_argument("--manifest", help="optional dataset manifest JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--plot", action="store_true", help="also write an RD plot image")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bdrate", help="BD-rate between two RD curves (JSON)")
    p.add_argument("anchor")
    p.add_argument("test")
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("ablate", help="train and compare ablation variants")
    add_train_flags(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--blocks",
        action="store_true",
        help="compare the multi-scale block family instead of the gdn/attention ladder",
    )
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
