"""
Synthetic data: primitive CAD models, rendering, canonical views and dataset storage.
"""

from .dataset import SPLITS, TRAIN_SPLIT, UNSEEN_SPLIT, VAL_SPLIT, Dataset
from .raster import amodal_box, rasterize, render_scene, render_view
from .regions import (
    extract_region,
    jitter_box,
    roi_features,
    roi_mask,
    silhouette_box,
    view_region,
)
from .shapes import FAMILIES, box_mesh, class_name, cylinder_mesh, random_shape
from .storage import load_annotations, load_dataset, save_dataset
from .synthetic import DatasetSpec, generate_dataset, make_sample, random_object_rotation
from .views import jittered_gt_view, select_canonical_views

__all__ = [
    "Dataset",
    "DatasetSpec",
    "FAMILIES",
    "SPLITS",
    "TRAIN_SPLIT",
    "UNSEEN_SPLIT",
    "VAL_SPLIT",
    "amodal_box",
    "box_mesh",
    "class_name",
    "cylinder_mesh",
    "extract_region",
    "generate_dataset",
    "jitter_box",
    "jittered_gt_view",
    "load_annotations",
    "load_dataset",
    "make_sample",
    "random_object_rotation",
    "random_shape",
    "rasterize",
    "render_scene",
    "render_view",
    "roi_features",
    "roi_mask",
    "save_dataset",
    "select_canonical_views",
    "silhouette_box",
    "view_region",
]
