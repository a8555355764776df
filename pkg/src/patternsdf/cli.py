"""Command-line entry points tying the pipeline together.

Exit codes: 0 success, 1 usage error (bad flags, missing files), 2 data
error (unreadable or inconsistent artifacts), 3 numeric failure (gradient
check failure, diverged training).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .camera import CameraError, CameraPose
from .geometry import GridError, MeshError, SceneError, VoxelizeError, save_obj
from .metrics import MetricsError, format_offset_table, pattern_offset_stats, write_offset_csv
from .model import ConfigError, ModelConfig, PatternConfig, full_encoder_config, mini_encoder_config
from .nn import CheckpointError, OptimizerError, check_gradients, op_gradient_cases
from .pipeline import (
    DatasetError,
    TrainConfig,
    TrainError,
    dataset_gen,
    evaluate,
    load_dataset,
    model_from_checkpoint,
    reconstruct,
    train,
)
from .render import RenderError, load_png
from .sampling import SamplingError

PATTERN_FLAGS = {
    "uniform6": "uniform-6p",
    "nonuniform6": "non-uniform-6p",
    "nonuniform3": "non-uniform-3p",
    "rigid3": "rigid-3p",
}

_DATA_ERRORS = (
    CameraError,
    CheckpointError,
    ConfigError,
    DatasetError,
    GridError,
    MeshError,
    MetricsError,
    RenderError,
    SamplingError,
    SceneError,
    VoxelizeError,
    json.JSONDecodeError,
)
_NUMERIC_ERRORS = (TrainError, OptimizerError)


class _Parser(argparse.ArgumentParser):
    # exit 2 is reserved for data errors; argparse defaults usage failures
    # to 2, so route them to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _model_config(args, image_size=None) -> ModelConfig:
    if getattr(args, "config", None):
        cfg = ModelConfig.load(args.config)
    else:
        make = full_encoder_config if args.encoder == "full" else mini_encoder_config
        cfg = ModelConfig(encoder=make() if image_size is None else make(image_size=image_size))
    if getattr(args, "pattern", None):
        cfg.pattern = PatternConfig(kind=PATTERN_FLAGS[args.pattern], l=cfg.pattern.l)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _require(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _cmd_dataset_gen(args) -> int:
    manifest = dataset_gen(
        args.out, scenes=args.scenes, views=args.views, seed=args.seed,
        sample_count=args.samples,
    )
    n_views = sum(len(s["views"]) for s in manifest["scenes"])
    print(f"wrote {len(manifest['scenes'])} scenes / {n_views} views to {args.out}")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(_require(args.dataset, "dataset"))
    model_config = _model_config(args, image_size=tuple(dataset.manifest["image_size"]))
    cfg = TrainConfig(
        lr=args.lr, epochs=args.epochs, batch_size=args.batch,
        points_per_step=args.points_per_step,
        seed=args.seed if args.seed is not None else 0, dtype=args.dtype,
    )
    _, rows = train(dataset, model_config=model_config, config=cfg, out_dir=args.out)
    print(f"trained {cfg.epochs} epochs ({len(rows)} steps); "
          f"final loss {rows[-1][3]:.6f}; checkpoints in {args.out}")
    return 0


def _cmd_reconstruct(args) -> int:
    model, _ = model_from_checkpoint(_require(args.checkpoint, "checkpoint"))
    image = load_png(_require(args.image, "image"))
    pose = CameraPose.load(_require(args.camera, "camera"))
    mesh, grid = reconstruct(model, image, pose, res=args.res)
    save_obj(mesh, args.out)
    if args.grid:
        from .geometry import save_grid

        save_grid(grid, args.grid)
    state = "empty" if mesh.is_empty else f"{len(mesh.vertices)} vertices"
    print(f"wrote {args.out} ({state})")
    return 0


def _cmd_eval(args) -> int:
    model, _ = model_from_checkpoint(_require(args.checkpoint, "checkpoint"))
    dataset = load_dataset(_require(args.dataset, "dataset"))
    result = evaluate(
        model, dataset, point_count=args.points, voxel_res=args.voxel_res,
        grid_res=args.grid_res, emd_mode=args.emd_mode, out_path=args.out,
    )
    mean = result["mean"]
    if mean is None:
        print(f"no sample evaluated cleanly ({result['failed']} failures)")
        return 2
    print(
        f"evaluated {result['evaluated']} views: "
        f"CD {mean['cd']:.3f}  EMD {mean['emd']:.3f}  IoU {mean['iou']:.1f}%"
    )
    return 0


def _cmd_pattern_stats(args) -> int:
    model, _ = model_from_checkpoint(_require(args.checkpoint, "checkpoint"))
    probes = np.random.default_rng(args.seed or 0).uniform(-0.9, 0.9, (args.probes, 3))
    stats = pattern_offset_stats(model, probes)
    print(format_offset_table(stats))
    if args.out:
        write_offset_csv(args.out, stats)
        print(f"wrote {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    seed = args.seed or 0
    runners = [
        (name, lambda fn=fn, tensors=tensors: check_gradients(fn, tensors, rng_seed=seed))
        for name, fn, tensors in op_gradient_cases(seed)
    ]
    runners.append(("full_graph_mini", lambda: _full_graph_check(seed)))
    failed = False
    for name, runner in runners:
        try:
            worst = runner()
            print(f"PASS {name:24s} max rel err {worst:.3g}")
        except AssertionError as exc:
            failed = True
            print(f"FAIL {name:24s} {exc}")
    return 3 if failed else 0


def _full_graph_check(seed: int) -> float:
    from .camera import look_at
    from .model import PatternSdfNetwork
    from .nn import Tensor, weighted_sdf_loss

    net = PatternSdfNetwork(
        ModelConfig(encoder=mini_encoder_config(image_size=(8, 8)), seed=seed)
    )
    pose = look_at((0.0, 0.0, -2.0), (0.0, 0.0, 0.0), focal=4.0, image_size=(8, 8))
    rng = np.random.default_rng(seed + 21)
    image = rng.uniform(0, 1, (8, 8, 3))
    query = rng.uniform(-0.35, 0.35, (3, 3))
    gt = rng.uniform(-0.2, 0.2, 3)

    def loss_fn():
        return weighted_sdf_loss(net.forward(image, pose, query), Tensor(gt))

    return check_gradients(loss_fn, net.parameters(), max_entries=2, h=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="patternsdf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_dataset = sub.add_parser("dataset", help="dataset tooling")
    dsub = p_dataset.add_subparsers(dest="dataset_command", required=True)
    p_gen = dsub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--scenes", type=int, default=8)
    p_gen.add_argument("--views", type=int, default=4)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--samples", type=int, default=2048)
    p_gen.set_defaults(func=_cmd_dataset_gen)

    p_train = sub.add_parser("train", help="train a model on a dataset")
    p_train.add_argument("--dataset", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--config", help="ModelConfig JSON path")
    p_train.add_argument("--pattern", choices=sorted(PATTERN_FLAGS))
    p_train.add_argument("--encoder", choices=("mini", "full"), default="mini")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--batch", type=int, default=4)
    p_train.add_argument("--lr", type=float, default=1e-4)
    p_train.add_argument("--points-per-step", type=int, default=512)
    p_train.add_argument("--dtype", choices=("f32", "f64"), default="f64")
    p_train.set_defaults(func=_cmd_train)

    p_rec = sub.add_parser("reconstruct", help="extract a mesh from a checkpoint")
    p_rec.add_argument("--checkpoint", required=True)
    p_rec.add_argument("--image", required=True)
    p_rec.add_argument("--camera", required=True)
    p_rec.add_argument("--out", required=True, help="output OBJ path")
    p_rec.add_argument("--grid", help="also write the raw SDF grid here")
    p_rec.add_argument("--res", type=int, default=65)
    p_rec.set_defaults(func=_cmd_reconstruct)

    p_eval = sub.add_parser("eval", help="score reconstructions against ground truth")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--out", help="write the JSON report here")
    p_eval.add_argument("--points", type=int, default=2048)
    p_eval.add_argument("--voxel-res", type=int, default=64)
    p_eval.add_argument("--grid-res", type=int, default=65)
    p_eval.add_argument("--emd-mode", choices=("auto", "exact", "approx"), default="auto")
    p_eval.set_defaults(func=_cmd_eval)

    p_stats = sub.add_parser("pattern-stats", help="mean learned offsets per pattern point")
    p_stats.add_argument("--checkpoint", required=True)
    p_stats.add_argument("--out", help="CSV output path")
    p_stats.add_argument("--probes", type=int, default=256)
    p_stats.add_argument("--seed", type=int, default=0)
    p_stats.set_defaults(func=_cmd_pattern_stats)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
