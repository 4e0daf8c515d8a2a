"""
Command-line entry points.

    cad-model gen-data --out DATA [--classes 5 --objects-per-class 8 --seed 7]
    cad-model train --data DATA --out RUN [--steps 3000]
    cad-model build-index --data DATA --checkpoint RUN/model.ckpt --out RUN
    cad-model eval --data DATA --checkpoint RUN/model.ckpt --split val [--ablation shape]
    cad-model retrieve --data DATA --checkpoint RUN/model.ckpt --sample val_00003 [--emit-obj]
    cad-model export-embeddings --data DATA --checkpoint RUN/model.ckpt --split val --out RUN

Every command also accepts --config FILE with key=value lines (config_version=1).
Built-in defaults < config file < explicit flags. Exit codes: 0 ok, 1 runtime
failure, 2 configuration error.
"""

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import torch

from find_your_cad_model import __version__
from find_your_cad_model.data import (
    DatasetSpec,
    Dataset,
    extract_region,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from find_your_cad_model.embedding import (
    EmbeddingIndex,
    index_build,
    read_embeddings,
    write_embeddings,
)
from find_your_cad_model.evaluation import (
    build_view_index,
    evaluate,
    parse_ablation,
    predict_sample,
    view_vectors,
)
from find_your_cad_model.exceptions import (
    CadModelError,
    ConfigError,
    DomainError,
    TrainingDivergedError,
)
from find_your_cad_model.geometry import apply_pose, save_obj
from find_your_cad_model.learner import (
    ShapePoseNet,
    encode_region,
    load_checkpoint,
    mask_features,
    save_checkpoint,
    train,
    write_trace,
)
from find_your_cad_model.metrics import validate_report
from find_your_cad_model.models import HyperParams, TrainConfig
from find_your_cad_model.parsers import parse_config_file
from find_your_cad_model.pose import RotationBins, load_bins, save_bins
from find_your_cad_model.utils import (
    ensure_directory,
    log_session_end,
    log_session_start,
    save_json,
    setup_logging,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

CHECKPOINT_FILE = "model.ckpt"
BINS_FILE = "bins.json"
TRACE_FILE = "trace.csv"
INDEX_FILE = "index.emb"

_BOOL_WORDS = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}
_SKIP_DESTS = {"help", "config", "command", "version"}


# ---------------------------------------------------------------------------
# argument parsing


def _common(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="key=value settings file")
    parser.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    parser.add_argument("--out", type=Path, required=out_required, help="output directory")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--quiet", action="store_true", help="log to file only")


def _model_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, required=True, help="dataset directory")
    parser.add_argument("--checkpoint", type=Path, required=True, help="trained model.ckpt")
    parser.add_argument("--bins", type=Path, help="rotation bins JSON (default: next to checkpoint)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cad-model",
        description="Retrieve CAD models and poses for object regions in images.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    defaults = DatasetSpec()
    gen = sub.add_parser("gen-data", help="generate a synthetic dataset")
    _common(gen)
    gen.add_argument("--classes", type=int, default=defaults.num_classes)
    gen.add_argument("--objects-per-class", type=int, default=defaults.objects_per_class)
    gen.add_argument("--unseen-per-class", type=int, default=defaults.unseen_objects_per_class)
    gen.add_argument("--train-images", type=int, default=defaults.train_images)
    gen.add_argument("--val-images", type=int, default=defaults.val_images)
    gen.add_argument("--unseen-images", type=int, default=defaults.unseen_images)
    gen.add_argument("--max-objects", type=int, default=defaults.max_objects_per_image)
    gen.add_argument("--image-size", type=int, default=defaults.image_size)
    gen.add_argument("--focal-length", type=float, default=defaults.focal_length)
    gen.add_argument("--views", type=int, default=defaults.canonical_views)
    gen.add_argument("--view-resolution", type=int, default=defaults.view_resolution)

    hyper = HyperParams()
    train_config = TrainConfig()
    tr = sub.add_parser("train", help="train the region and view encoders")
    _common(tr)
    tr.add_argument("--data", type=Path, required=True)
    tr.add_argument("--steps", type=int, default=train_config.steps)
    tr.add_argument("--images-per-step", type=int, default=train_config.images_per_step)
    tr.add_argument("--no-flip", action="store_true")
    tr.add_argument("--no-roi-jitter", action="store_true")
    tr.add_argument("--brightness-jitter", type=float, default=train_config.brightness_jitter)
    tr.add_argument("--grad-clip", type=float, default=train_config.grad_clip)
    tr.add_argument("--freeze-views", action="store_true")
    tr.add_argument("--distractor-objects", type=int, default=train_config.distractor_objects)
    tr.add_argument("--log-every", type=int, default=train_config.log_every)
    tr.add_argument("--temperature", type=float, default=hyper.temperature)
    tr.add_argument("--negative-weight", type=float, default=hyper.negative_weight)
    tr.add_argument("--huber-delta", type=float, default=hyper.huber_delta)
    tr.add_argument("--rotation-bins", type=int, default=hyper.rotation_bins)
    tr.add_argument("--regress-gate", type=float, default=hyper.regress_gate)
    tr.add_argument("--hard-positives", type=int, default=hyper.hard_positives)
    tr.add_argument("--hard-negatives", type=int, default=hyper.hard_negatives)
    tr.add_argument("--regions-per-image", type=int, default=hyper.regions_per_image)
    tr.add_argument("--repeat-threshold", type=float, default=hyper.repeat_threshold)
    tr.add_argument("--embed-weight", type=float, default=hyper.embed_weight)
    tr.add_argument("--pose-class-weight", type=float, default=hyper.pose_class_weight)
    tr.add_argument("--pose-reg-weight", type=float, default=hyper.pose_reg_weight)
    tr.add_argument("--lr", type=float, default=hyper.base_lr)
    tr.add_argument("--lr-decay", type=float, default=hyper.lr_decay)
    tr.add_argument("--momentum", type=float, default=hyper.momentum)

    idx = sub.add_parser("build-index", help="embed every CAD view into a retrieval index")
    _common(idx)
    _model_inputs(idx)
    idx.add_argument("--include-unseen", action="store_true", help="add held-out CAD models")

    ev = sub.add_parser("eval", help="evaluate retrieval, pose and 3D metrics on a split")
    _common(ev)
    _model_inputs(ev)
    ev.add_argument("--split", default="val")
    ev.add_argument("--ablation", default="none", help="none, all, or comma list of shape,rotation,translation,boxes")
    ev.add_argument("--include-unseen", action="store_true", help="add held-out CAD models to the index")
    ev.add_argument("--index", type=Path, help="prebuilt index from build-index")
    ev.add_argument("--f1-threshold", type=float, default=0.3, help="Mesh AP F1 distance (0.3, or 0.5)")
    ev.add_argument("--points", type=int, default=10000, help="surface samples per mesh")
    ev.add_argument("--jobs", type=int, default=1, help="worker threads for per-sample inference")

    rt = sub.add_parser("retrieve", help="retrieve CAD models and poses for one sample")
    _common(rt, out_required=False)
    _model_inputs(rt)
    rt.add_argument("--sample", required=True, help="sample id, e.g. val_00003")
    rt.add_argument("--index", type=Path)
    rt.add_argument("--include-unseen", action="store_true")
    rt.add_argument("--emit-obj", action="store_true", help="write one posed OBJ per region to --out")

    ex = sub.add_parser("export-embeddings", help="dump region and view embeddings")
    _common(ex)
    _model_inputs(ex)
    ex.add_argument("--split", default="val")
    ex.add_argument("--all-views", action="store_true", help="export views of every CAD model")
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # type: ignore[union-attr]
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise ConfigError(f"unknown command {command}")


def _convert(action: argparse.Action, key: str, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"config key '{key}' expects true/false, got '{raw}'")
        return _BOOL_WORDS[raw.lower()]
    try:
        value = action.type(raw) if action.type else raw
    except (TypeError, ValueError):
        raise ConfigError(f"config key '{key}' has an invalid value '{raw}'")
    if action.choices is not None and value not in action.choices:
        raise ConfigError(f"config key '{key}' must be one of {list(action.choices)}")
    return value


def _prescan(argv: List[str]) -> Tuple[Optional[str], Optional[Path]]:
    """Command name and --config path, before required flags are enforced."""
    command, config = None, None
    for i, token in enumerate(argv):
        if token.startswith("--config="):
            config = Path(token.split("=", 1)[1])
        elif token == "--config" and i + 1 < len(argv):
            config = Path(argv[i + 1])
        elif command is None and token in COMMANDS:
            command = token
    return command, config


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Flags over config file over defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command, config = _prescan(argv)
    if command is not None and config is not None:
        sub = _subparser(parser, command)
        actions = {a.dest: a for a in sub._actions if a.dest not in _SKIP_DESTS}
        values = parse_config_file(config, actions)
        sub.set_defaults(**{k: _convert(actions[k], k, v) for k, v in values.items()})
        for action in sub._actions:
            if action.dest in values:
                action.required = False
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# helpers


def _require_dir(path: Path, what: str) -> Path:
    if not path.is_dir():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_model(args) -> Tuple[ShapePoseNet, RotationBins, Dict]:
    _require_file(args.checkpoint, "checkpoint")
    bins_path = args.bins or args.checkpoint.parent / BINS_FILE
    _require_file(bins_path, "rotation bins")
    model, meta = load_checkpoint(args.checkpoint)
    model.eval()
    return model, load_bins(bins_path), meta


def _hyper_from_meta(meta: Dict) -> HyperParams:
    return HyperParams(**meta["hyper"]) if "hyper" in meta else HyperParams()


def _index(args, model: ShapePoseNet, dataset: Dataset) -> EmbeddingIndex:
    if getattr(args, "index", None) is not None:
        _, vectors = read_embeddings(_require_file(args.index, "index"))
        return index_build(vectors)
    return build_view_index(model, dataset, args.include_unseen)


def _dataset_spec(args) -> DatasetSpec:
    try:
        return DatasetSpec(
            num_classes=args.classes,
            objects_per_class=args.objects_per_class,
            unseen_objects_per_class=args.unseen_per_class,
            train_images=args.train_images,
            val_images=args.val_images,
            unseen_images=args.unseen_images,
            max_objects_per_image=args.max_objects,
            image_size=args.image_size,
            focal_length=args.focal_length,
            canonical_views=args.views,
            view_resolution=args.view_resolution,
            seed=args.seed,
        )
    except DomainError as e:
        raise ConfigError(str(e))


def train_config_from_args(args) -> TrainConfig:
    try:
        hyper = HyperParams(
            temperature=args.temperature,
            negative_weight=args.negative_weight,
            huber_delta=args.huber_delta,
            rotation_bins=args.rotation_bins,
            regress_gate=args.regress_gate,
            hard_positives=args.hard_positives,
            hard_negatives=args.hard_negatives,
            regions_per_image=args.regions_per_image,
            repeat_threshold=args.repeat_threshold,
            embed_weight=args.embed_weight,
            pose_class_weight=args.pose_class_weight,
            pose_reg_weight=args.pose_reg_weight,
            base_lr=args.lr,
            lr_decay=args.lr_decay,
            momentum=args.momentum,
        )
        return TrainConfig.scaled(
            args.steps,
            images_per_step=args.images_per_step,
            flip=not args.no_flip,
            roi_jitter=not args.no_roi_jitter,
            brightness_jitter=args.brightness_jitter,
            grad_clip=args.grad_clip,
            freeze_views=args.freeze_views,
            distractor_objects=args.distractor_objects,
            log_every=args.log_every,
            seed=args.seed,
            hyper=hyper,
        )
    except DomainError as e:
        raise ConfigError(str(e))


# ---------------------------------------------------------------------------
# commands


def cmd_gen_data(args) -> Dict:
    spec = _dataset_spec(args)
    dataset = generate_dataset(spec)
    save_dataset(dataset, args.out)
    return {
        "CAD models": len(dataset.cad),
        **{f"{split} images": len(samples) for split, samples in dataset.splits.items()},
        "Output directory": str(args.out),
    }


def cmd_train(args) -> Dict:
    config = train_config_from_args(args)
    dataset = load_dataset(_require_dir(args.data, "dataset"))
    result = train(config, dataset)
    meta = {
        "hyper": asdict(config.hyper),
        "steps": config.steps,
        "milestones": list(config.milestones),
        "seed": config.seed,
        "classes": dataset.classes,
    }
    save_checkpoint(args.out / CHECKPOINT_FILE, result.model, meta)
    if not save_bins(result.bins, args.out / BINS_FILE):
        raise OSError(f"could not write {args.out / BINS_FILE}")
    write_trace(args.out / TRACE_FILE, result.trace)
    stats = {"Steps": config.steps, "Checkpoint": str(args.out / CHECKPOINT_FILE)}
    if result.trace:
        stats["Final loss"] = f"{result.trace[-1]['total']:.4f}"
    return stats


def cmd_build_index(args) -> Dict:
    dataset = load_dataset(_require_dir(args.data, "dataset"))
    model, _, _ = _load_model(args)
    vectors = view_vectors(model, dataset, args.include_unseen)
    header = write_embeddings(args.out / INDEX_FILE, vectors, model.config.embedding_dim)
    return {"Indexed views": header["count"], "Index": str(args.out / INDEX_FILE)}


def cmd_eval(args) -> Dict:
    ablation = parse_ablation(args.ablation)
    dataset = load_dataset(_require_dir(args.data, "dataset"))
    if args.split not in dataset.splits:
        raise ConfigError(f"dataset has no split '{args.split}' (have {sorted(dataset.splits)})")
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    model, bins, meta = _load_model(args)
    report, _ = evaluate(
        model,
        dataset,
        bins,
        args.split,
        _hyper_from_meta(meta),
        ablation=ablation,
        include_unseen=args.include_unseen,
        f1_threshold=args.f1_threshold,
        seed=args.seed,
        jobs=args.jobs,
        index=_index(args, model, dataset),
        n_points=args.points,
    )
    doc = report.as_dict()
    validate_report(doc)
    tag = "-".join(sorted(ablation)) or "none"
    suffix = "_all_cad" if args.include_unseen else ""
    path = args.out / f"report_{args.split}_{tag}{suffix}.json"
    if not save_json(doc, path, sort_keys=True):
        raise OSError(f"could not write {path}")
    return {
        "Regions": report.num_regions,
        "AP mesh": f"{report.ap_mesh.ap:.4f}",
        "AP50 mesh": f"{report.ap_mesh.ap50:.4f}",
        "Retrieval accuracy": f"{report.retrieval_accuracy:.4f}",
        "Report": str(path),
    }


def format_prediction(prediction, class_names: List[str]) -> str:
    q = prediction.rotation
    t = prediction.translation
    name = class_names[prediction.class_id] if prediction.class_id < len(class_names) else prediction.class_id
    return (
        f"{prediction.region_index}\t{name}\tobject={prediction.object_id}\t"
        f"q=({q.w:.6f},{q.x:.6f},{q.y:.6f},{q.z:.6f})\t"
        f"t=({t[0]:.6f},{t[1]:.6f},{t[2]:.6f})\tsimilarity={prediction.similarity:.6f}"
    )


def cmd_retrieve(args, out=None) -> Dict:
    out = out or sys.stdout
    dataset = load_dataset(_require_dir(args.data, "dataset"))
    sample = dataset.find_sample(args.sample)
    model, bins, meta = _load_model(args)
    if args.emit_obj and args.out is None:
        raise ConfigError("--emit-obj needs --out")
    predictions = predict_sample(
        model, _index(args, model, dataset), bins, sample, _hyper_from_meta(meta), frozenset({"boxes"}), args.seed
    )
    for p in predictions:
        out.write(format_prediction(p, dataset.classes) + "\n")
        if args.emit_obj:
            save_obj(
                apply_pose(p.pose, dataset.cad[p.object_id].mesh),
                args.out / f"{sample.sample_id}_{p.region_index}.obj",
            )
    return {"Sample": sample.sample_id, "Regions": len(predictions)}


def cmd_export_embeddings(args) -> Dict:
    dataset = load_dataset(_require_dir(args.data, "dataset"))
    if args.split not in dataset.splits:
        raise ConfigError(f"dataset has no split '{args.split}'")
    model, _, _ = _load_model(args)
    vectors = []
    referenced = set()
    for sample in dataset.samples(args.split):
        for ann in sample.annotations:
            region = extract_region(sample.image, ann.mask, ann.box, ann.class_id)
            vectors.append(encode_region(model, mask_features(region), ann.class_id, ann.object_id))
            referenced.add(ann.object_id)
    views = view_vectors(model, dataset, include_unseen=True)
    vectors.extend(v for v in views if args.all_views or v.object_id in referenced)
    path = args.out / f"embeddings_{args.split}.emb"
    header = write_embeddings(path, vectors, model.config.embedding_dim)
    return {"Exported vectors": header["count"], "Export": str(path)}


COMMANDS: Dict[str, Callable] = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "build-index": cmd_build_index,
    "eval": cmd_eval,
    "retrieve": cmd_retrieve,
    "export-embeddings": cmd_export_embeddings,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as e:
        logging.basicConfig(level=logging.ERROR)
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG

    log_root = args.out if args.out is not None else Path(".")
    if args.out is not None and not ensure_directory(args.out):
        return EXIT_CONFIG
    setup_logging(
        log_dir=log_root / "logs",
        log_level=getattr(logging, args.log_level),
        console_output=not args.quiet,
    )
    torch.set_num_threads(1)

    log_session_start(
        {
            "Command": args.command,
            "Seed": args.seed,
            "Output directory": str(args.out),
            "Arguments": list(argv) if argv is not None else sys.argv[1:],
        }
    )
    try:
        stats = COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        log_session_end({"Error": str(e), "Status": "Failed"})
        return EXIT_CONFIG
    except TrainingDivergedError as e:
        logger.error(f"❌ Training diverged at step {e.step}; last finite losses {e.last_finite}")
        log_session_end({"Error": str(e), "Status": "Failed"})
        return EXIT_RUNTIME
    except (CadModelError, OSError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        log_session_end({"Error": str(e), "Status": "Failed"})
        return EXIT_RUNTIME

    logger.info(f"🎉 {args.command} complete")
    log_session_end({"Status": "OK", **stats})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
