"""Command-line entry point: render, build-dataset, train, apply, eval,
ablation.

Every subcommand takes --seed and produces identical artifacts across
repeated invocations with identical flags (train additionally wants
--deterministic for single-thread bit reproducibility).  Exit codes:
0 ok, 2 usage/parameter error, 3 data error, 4 numeric failure.
All train flags can also come from a JSON config (--config); explicit
flags override the file.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import training as tr
from .errors import ContractError, DataError, GrainkitError, NumericError, ParameterError
from .image_io import load_image, save_image
from .metrics import MetricReport, jsd_nss, psnr, ssim
from .renderer import DATASET_LEVELS, GrainParams, render_grain
from .rng import mix_int

_TRAIN_FIELDS = [f.name for f in dataclasses.fields(tr.TrainConfig)]


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file with training config fields; flags override it")
    p.add_argument(_flag("task"), choices=["synthesis", "removal"], default=None,
                   help="training task")
    p.add_argument(_flag("blind"), action=argparse.BooleanOptionalAction, default=None,
                   help="removal only: train without the level map input")
    p.add_argument(_flag("epochs"), type=int, default=None, help="training epochs")
    p.add_argument(_flag("seed"), type=int, default=None, help="run seed")
    p.add_argument(_flag("batch_size"), type=int, default=None,
                   help="batch size (default 1 synthesis / 16 removal)")
    p.add_argument(_flag("lr_generator"), type=float, default=None,
                   help="generator learning rate (default 3e-4)")
    p.add_argument(_flag("lr_discriminator"), type=float, default=None,
                   help="discriminator learning rate (default 1e-4)")
    p.add_argument(_flag("adam_beta1"), type=float, default=None,
                   help="Adam beta1 (default 0.5 synthesis / 0.9 removal)")
    p.add_argument(_flag("adam_beta2"), type=float, default=None, help="Adam beta2")
    p.add_argument(_flag("adam_eps"), type=float, default=None, help="Adam epsilon")
    p.add_argument(_flag("base_width"), type=int, default=None,
                   help="generator channel width at the finest scale")
    p.add_argument(_flag("residual"), action=argparse.BooleanOptionalAction, default=None,
                   help="use residual blocks (default on)")
    p.add_argument(_flag("global_skip"), action=argparse.BooleanOptionalAction, default=None,
                   help="add an input-to-output skip connection")
    p.add_argument(_flag("use_adversarial"), action=argparse.BooleanOptionalAction,
                   default=None, help="synthesis only: train against a discriminator")
    p.add_argument(_flag("removal_loss"), choices=["mix", "l1"], default=None,
                   help="removal objective")
    p.add_argument(_flag("lambda_l1"), type=float, default=None,
                   help="L1 weight in the synthesis objective")
    p.add_argument(_flag("gamma"), type=float, default=None,
                   help="multiscale-similarity weight in the removal mix loss")
    p.add_argument(_flag("ms_ssim_scales"), type=int, default=None,
                   help="multiscale similarity scale count")
    p.add_argument(_flag("deterministic"), action=argparse.BooleanOptionalAction,
                   default=None, help="single-thread deterministic mode")
    p.add_argument(_flag("checkpoint_every"), type=int, default=None,
                   help="epochs between periodic checkpoints (0 = final only)")
    p.add_argument(_flag("device"), default=None, help="torch device")


def _train_config(args: argparse.Namespace) -> tr.TrainConfig:
    values: dict = {}
    if args.config is not None:
        if not args.config.is_file():
            raise DataError(f"no such config file: {args.config}")
        loaded = json.loads(args.config.read_text())
        unknown = set(loaded) - set(_TRAIN_FIELDS)
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        values.update(loaded)
    for name in _TRAIN_FIELDS:
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            values[name] = flag_val
    return tr.TrainConfig(**values)


def _grain_params(args: argparse.Namespace, seed: int) -> GrainParams:
    return GrainParams(
        mu_r=args.mu_r, sigma_r=args.sigma_r, kernel_std=args.kernel_std,
        mc_samples=args.mc_samples, seed=seed, u_max=args.u_max,
        decorrelate_channels=args.decorrelate_channels)


def _add_grain_flags(p: argparse.ArgumentParser, with_mu: bool = True) -> None:
    if with_mu:
        p.add_argument("--mu-r", type=float, required=True,
                       help="mean grain radius in pixels, e.g. 0.05")
    p.add_argument("--sigma-r", type=float, default=0.0,
                   help="grain radius standard deviation (log-normal radii when > 0)")
    p.add_argument("--kernel-std", type=float, default=0.8,
                   help="Gaussian rendering kernel std in output pixels")
    p.add_argument("--mc-samples", type=int, default=800,
                   help="Monte Carlo samples per output pixel")
    p.add_argument("--u-max", type=float, default=0.9999,
                   help="gray-level clamp below 1")
    p.add_argument("--decorrelate-channels", action="store_true",
                   help="independent grain per RGB channel (default: shared geometry)")


def cmd_render(args) -> int:
    src = Path(args.input)
    out = Path(args.output)
    if src.is_dir():
        files = ds.list_source_images(src)
        out.mkdir(parents=True, exist_ok=True)
        for i, f in enumerate(files):
            params = _grain_params(args, mix_int(args.seed, i))
            grainy = render_grain(load_image(f), params)
            save_image(grainy, out / f.name, bit_depth=args.bit_depth)
            print(f"{f.name}: {params.to_dict()}")
    else:
        params = _grain_params(args, args.seed)
        grainy = render_grain(load_image(src), params)
        out.parent.mkdir(parents=True, exist_ok=True)
        save_image(grainy, out, bit_depth=args.bit_depth)
        print(f"{src.name}: {params.to_dict()}")
    return 0


def cmd_build_dataset(args) -> int:
    levels = [float(v) for v in args.levels.split(",")] if args.levels else list(DATASET_LEVELS)
    params = GrainParams(
        mu_r=levels[0], sigma_r=args.sigma_r, kernel_std=args.kernel_std,
        mc_samples=args.mc_samples, seed=args.seed, u_max=args.u_max,
        decorrelate_channels=args.decorrelate_channels)
    manifest = ds.build_dataset(
        args.src, args.out, levels, patch_size=args.patch_size,
        grain_params=params, seed=args.seed, workers=args.workers)
    print(f"wrote {len(manifest)} entries to {Path(args.out) / 'manifest.json'}")
    fractions = {"train": 1.0 - args.val_frac - args.test_frac}
    if args.val_frac > 0:
        fractions["val"] = args.val_frac
    if args.test_frac > 0:
        fractions["test"] = args.test_frac
    if len(fractions) > 1:
        for name, sub in ds.split_manifest(manifest, fractions, seed=args.seed).items():
            path = Path(args.out) / f"manifest_{name}.json"
            sub.save(path)
            print(f"  split {name}: {len(sub)} entries -> {path}")
    return 0


def cmd_train(args) -> int:
    cfg = _train_config(args)
    manifest = ds.DatasetManifest.load(args.manifest)
    val = ds.DatasetManifest.load(args.val_manifest) if args.val_manifest else None
    start = tr.Checkpoint.load(args.resume) if args.resume else None
    if cfg.task == "synthesis":
        ckpt, rows = tr.train_synthesis(cfg, manifest, val, ckpt_path=args.out,
                                        start_from=start)
    else:
        ckpt, rows = tr.train_removal(cfg, manifest, val, ckpt_path=args.out,
                                      start_from=start)
    if args.log:
        tr.write_log_csv(args.log, rows)
        print(f"log -> {args.log}")
    if args.plot:
        from .report import plot_training_log
        plot_training_log(rows, args.plot)
        print(f"plot -> {args.plot}")
    last = rows[-1] if rows else {}
    print(f"trained {cfg.task} for {cfg.epochs} epochs -> {args.out}  "
          f"(final: {', '.join(f'{k}={v:.4g}' for k, v in last.items())})")
    return 0


def cmd_apply(args) -> int:
    ckpt = tr.Checkpoint.load(args.ckpt)
    src = Path(args.input)
    out = Path(args.output)
    files = ds.list_source_images(src) if src.is_dir() else [src]
    if src.is_dir():
        out.mkdir(parents=True, exist_ok=True)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    for f in files:
        result = tr.apply_model(ckpt, load_image(f), args.level)
        save_image(result, out / f.name if src.is_dir() else out)
    print(f"applied {ckpt.task} model to {len(files)} image(s)")
    return 0


def cmd_eval(args) -> int:
    manifest = ds.DatasetManifest.load(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = MetricReport()
    ckpt = tr.Checkpoint.load(args.ckpt) if args.ckpt else None
    if args.candidate == "model" and ckpt is None:
        raise ParameterError("--candidate model requires --ckpt")

    plots_done: set[float] = set()
    for i in range(len(manifest)):
        pair = ds.load_pair(manifest, i)
        if args.candidate == "clean":
            reference, candidate = pair.clean, pair.clean
        elif args.candidate == "grainy":
            reference, candidate = pair.clean, pair.grainy
        elif ckpt.task == "removal":
            level = None if ckpt.cfg.blind else pair.level
            reference, candidate = pair.clean, tr.apply_model(ckpt, pair.grainy, level)
        else:
            reference, candidate = pair.grainy, tr.apply_model(ckpt, pair.clean, pair.level)
        report.add_row(args.dataset_name, pair.level, f"{i:04d}",
                       psnr_db=psnr(reference, candidate),
                       ssim=ssim(reference, candidate),
                       ms_ssim=tr._safe_ms_ssim(reference, candidate),
                       jsd_nss=jsd_nss(reference, candidate))
        if args.plots and pair.level not in plots_done:
            from .report import plot_nss_histograms
            images = {"clean": pair.clean, "reference": reference, "candidate": candidate}
            plot_nss_histograms(images,
                                out_dir / f"nss_level{pair.level:.3f}.png",
                                title=f"level {pair.level:.3f}")
            plots_done.add(pair.level)

    report.to_csv(out_dir / "metrics.csv")
    report.to_json(out_dir / "metrics.json")
    print(report.format_table())
    print(f"report -> {out_dir / 'metrics.csv'}")
    return 0


def cmd_ablation(args) -> int:
    if args.task is None:
        raise ParameterError("ablation requires --task {synthesis,removal}")
    cfg = _train_config(args)
    manifest = ds.DatasetManifest.load(args.manifest)
    val = ds.DatasetManifest.load(args.val_manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = tr.ABLATION_IDS if args.config_id == "all" else (int(args.config_id),)
    report = MetricReport()
    for config_id in ids:
        sub, _ = tr.run_ablation(args.task, config_id, manifest, val, cfg,
                                 ckpt_path=out_dir / f"config{config_id}.ckpt.zip")
        report.rows.extend(sub.rows)
    report.to_csv(out_dir / "ablation.csv")
    report.to_json(out_dir / "ablation.json")
    print(report.format_table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grainkit",
        description="Film grain rendering, learned synthesis/removal and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render film grain onto an image or folder")
    p.add_argument("--in", dest="input", required=True, help="input image or directory")
    p.add_argument("--out", dest="output", required=True, help="output image or directory")
    _add_grain_flags(p)
    p.add_argument("--seed", type=int, default=0, help="render seed")
    p.add_argument("--bit-depth", type=int, default=8, choices=[8, 16])
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("build-dataset", help="build a paired clean/grainy patch dataset")
    p.add_argument("--src", required=True, help="directory of source images")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--levels", default=None,
                   help="comma-separated grain levels (default: the five-standard sweep)")
    p.add_argument("--patch-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="parallel render processes")
    p.add_argument("--val-frac", type=float, default=0.0)
    p.add_argument("--test-frac", type=float, default=0.0)
    _add_grain_flags(p, with_mu=False)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train a synthesis or removal model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--val-manifest", default=None)
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--log", default=None, help="CSV log path")
    p.add_argument("--plot", default=None, help="optional loss-curve figure path")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("apply", help="apply a trained model to images")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--level", type=float, default=None,
                   help="grain level for conditioned models")
    p.add_argument("--seed", type=int, default=0, help="accepted for CLI uniformity")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("eval", help="evaluate a model or baseline over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ckpt", default=None)
    p.add_argument("--candidate", choices=["model", "grainy", "clean"], default="model",
                   help="what to score: model output, the grainy input, or clean itself")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dataset-name", default="eval")
    p.add_argument("--plots", action=argparse.BooleanOptionalAction, default=False,
                   help="write NSS histogram figures per level")
    p.add_argument("--seed", type=int, default=0, help="accepted for CLI uniformity")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablation", help="train + evaluate reduced configurations")
    p.add_argument("--config-id", default="all", choices=["1", "2", "3", "all"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--val-manifest", required=True)
    p.add_argument("--out-dir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_ablation)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except GrainkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
