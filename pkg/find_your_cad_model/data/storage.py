"""On-disk dataset layout.

    <root>/dataset.json                      header: classes, intrinsics, splits, views
    <root>/annotations.jsonl                 one object record per line
    <root>/meshes/<object>.obj
    <root>/renders/<object>/<view>.pgm       canonical view renders
    <root>/images/<split>/<sample>.pgm
    <root>/masks/<split>/<sample>_<i>.pgm
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from find_your_cad_model.exceptions import CadModelError, ConfigError, DatasetError, DomainError
from find_your_cad_model.geometry import load_obj, quat_normalize, save_obj
from find_your_cad_model.models import (
    CadEntry,
    CameraIntrinsics,
    ObjectAnnotation,
    Pose,
    Sample,
)
from find_your_cad_model.parsers import AnnotationParser, AnnotationRecord
from find_your_cad_model.pose import project_point
from find_your_cad_model.utils.file_io import load_json, load_pgm, save_json, save_pgm

from .dataset import SPLITS, Dataset
from .regions import extract_region

logger = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
HEADER_FILE = "dataset.json"
ANNOTATIONS_FILE = "annotations.jsonl"


def _records_for(sample: Sample, split: str) -> List[AnnotationRecord]:
    intr = sample.intrinsics
    records = []
    for i, ann in enumerate(sample.annotations):
        records.append(
            AnnotationRecord(
                image=f"images/{split}/{sample.sample_id}.pgm",
                class_id=ann.class_id,
                box=ann.box,
                mask=f"masks/{split}/{sample.sample_id}_{i}.pgm",
                model_id=ann.object_id,
                rotation=ann.pose.rotation,
                translation=ann.pose.translation,
                focal_length=(intr.fx, intr.fy),
                split=split,
                scale=ann.pose.scale,
                principal_point=(intr.cx, intr.cy),
                image_size=(sample.image.shape[1], sample.image.shape[0]),
            )
        )
    return records


def save_dataset(dataset: Dataset, root: Union[str, Path]) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    objects = []
    for oid, entry in sorted(dataset.cad.items()):
        save_obj(entry.mesh, root / "meshes" / f"{oid}.obj")
        for v, render in enumerate(entry.view_renders):
            save_pgm(root / "renders" / str(oid) / f"{v}.pgm", render)
        objects.append(
            {"object_id": oid, "class_id": entry.class_id, "family": entry.family,
             "mesh": f"meshes/{oid}.obj"}
        )

    lines = []
    for split in SPLITS:
        for sample in dataset.samples(split):
            save_pgm(root / "images" / split / f"{sample.sample_id}.pgm", sample.image)
            for i, ann in enumerate(sample.annotations):
                save_pgm(root / "masks" / split / f"{sample.sample_id}_{i}.pgm", ann.mask)
            for record in _records_for(sample, split):
                lines.append(json.dumps(record.to_dict(), sort_keys=True))
    (root / ANNOTATIONS_FILE).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    header = {
        "version": DATASET_FORMAT_VERSION,
        "classes": dataset.classes,
        "intrinsics": dataset.intrinsics.as_dict(),
        "image_size": list(dataset.image_size),
        "objects": objects,
        "unseen_objects": dataset.unseen_objects,
        "splits": {s: [x.sample_id for x in dataset.samples(s)] for s in SPLITS},
        "canonical_views": {
            str(c): [q.as_list() for q in views] for c, views in sorted(dataset.canonical_views.items())
        },
        "view_resolution": dataset.view_resolution,
        "seed": dataset.seed,
    }
    if not save_json(header, root / HEADER_FILE, sort_keys=True):
        raise OSError(f"could not write {root / HEADER_FILE}")
    logger.info(f"💾 Saved dataset to {root} ({len(lines)} annotation records)")


def _group_records(path: Path) -> List[Tuple[str, Optional[str], List[AnnotationRecord]]]:
    parser = AnnotationParser()
    groups: Dict[str, Tuple[Optional[str], List[AnnotationRecord]]] = {}
    for record in parser.parse_file(path):
        if record.image not in groups:
            groups[record.image] = (record.split, [])
        groups[record.image][1].append(record)
    return [(image, split, records) for image, (split, records) in groups.items()]


def _build_sample(root: Path, image_path: str, records: List[AnnotationRecord]) -> Sample:
    image = load_pgm(root / image_path)
    first = records[0]
    if first.principal_point is not None:
        cx, cy = first.principal_point
    else:
        cx, cy = image.shape[1] / 2.0, image.shape[0] / 2.0
    intrinsics = CameraIntrinsics(first.focal_length[0], first.focal_length[1], cx, cy)
    sample = Sample(sample_id=Path(image_path).stem, image=image, intrinsics=intrinsics)
    for record in records:
        mask = load_pgm(root / record.mask)
        if mask.shape != image.shape:
            raise DomainError(f"line {record.line_number}: mask size differs from image size")
        pose = Pose(record.rotation, record.translation, record.scale)
        sample.annotations.append(
            ObjectAnnotation(
                object_id=record.model_id,
                class_id=record.class_id,
                pose=pose,
                center_px=project_point(pose.translation, intrinsics),
                box=record.box,
                mask=mask,
            )
        )
        sample.regions.append(extract_region(image, mask, record.box, record.class_id))
    return sample


def load_annotations(path: Union[str, Path]) -> List[Sample]:
    """Samples from a JSON-lines file, grouped by image in first-appearance order.

    Image and mask paths are resolved relative to the file's directory.
    """
    path = Path(path)
    return [_build_sample(path.parent, image, records) for image, _, records in _group_records(path)]


def load_dataset(root: Union[str, Path]) -> Dataset:
    """Dataset saved by save_dataset.

    A missing header or an unknown format version is a configuration error; a
    header that is present but unparsable or missing fields is a DatasetError.
    """
    root = Path(root)
    if not (root / HEADER_FILE).is_file():
        raise ConfigError(f"no readable dataset at {root}")
    header = load_json(root / HEADER_FILE)
    if not isinstance(header, dict):
        raise DatasetError(f"{root / HEADER_FILE} is not a JSON object")
    if header.get("version") != DATASET_FORMAT_VERSION:
        raise ConfigError(f"unsupported dataset version {header.get('version')}")
    try:
        dataset = _dataset_from_header(root, header)
    except CadModelError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise DatasetError(f"malformed dataset at {root}: {type(e).__name__}: {e}") from e
    logger.info(
        f"📂 Loaded dataset {root}: {len(dataset.cad)} CAD models, "
        + ", ".join(f"{s}={len(v)}" for s, v in dataset.splits.items())
    )
    return dataset


def _dataset_from_header(root: Path, header: Dict) -> Dataset:
    canonical_views = {
        int(c): [quat_normalize(q) for q in views] for c, views in header["canonical_views"].items()
    }
    cad: Dict[int, CadEntry] = {}
    for obj in header["objects"]:
        oid, class_id = int(obj["object_id"]), int(obj["class_id"])
        views = canonical_views.get(class_id, [])
        cad[oid] = CadEntry(
            object_id=oid,
            class_id=class_id,
            family=obj["family"],
            mesh=load_obj(root / obj["mesh"]),
            view_rotations=list(views),
            view_renders=[load_pgm(root / "renders" / str(oid) / f"{v}.pgm") for v in range(len(views))],
        )

    by_split: Dict[str, Dict[str, Sample]] = {s: {} for s in SPLITS}
    annotations = root / ANNOTATIONS_FILE
    groups = _group_records(annotations) if annotations.exists() else []
    for image, split, records in groups:
        for record in records:
            if record.model_id not in cad:
                raise DomainError(f"line {record.line_number}: unknown model_id {record.model_id}")
        sample = _build_sample(root, image, records)
        by_split.setdefault(split or "", {})[sample.sample_id] = sample

    intr = header["intrinsics"]
    intrinsics = CameraIntrinsics(intr["fx"], intr["fy"], intr["cx"], intr["cy"])
    splits = {}
    for split, ids in header["splits"].items():
        samples = []
        for sample_id in ids:
            if sample_id in by_split.get(split, {}):
                samples.append(by_split[split][sample_id])
                continue
            # images whose objects were all dropped carry no annotation records
            image_path = root / "images" / split / f"{sample_id}.pgm"
            if not image_path.is_file():
                raise DomainError(f"split '{split}' lists unknown sample '{sample_id}'")
            samples.append(Sample(sample_id=sample_id, image=load_pgm(image_path), intrinsics=intrinsics))
        splits[split] = samples

    return Dataset(
        classes=list(header["classes"]),
        intrinsics=intrinsics,
        image_size=(int(header["image_size"][0]), int(header["image_size"][1])),
        cad=cad,
        splits=splits,
        canonical_views=canonical_views,
        unseen_objects=[int(o) for o in header.get("unseen_objects", [])],
        seed=int(header.get("seed", 0)),
        view_resolution=int(header.get("view_resolution", 64)),
    )
