from .dataset import (
    Dataset,
    DatasetError,
    MAX_VIEWS,
    TrainSample,
    dataset_gen,
    load_dataset,
    random_scene,
    view_poses,
)
from .evaluate import evaluate, evaluate_mesh_pair, gt_mesh, gt_points
from .train import (
    TrainConfig,
    TrainError,
    grid_pattern,
    model_from_checkpoint,
    reconstruct,
    train,
)

__all__ = [
    "Dataset",
    "DatasetError",
    "MAX_VIEWS",
    "TrainConfig",
    "TrainError",
    "TrainSample",
    "dataset_gen",
    "evaluate",
    "evaluate_mesh_pair",
    "grid_pattern",
    "gt_mesh",
    "gt_points",
    "load_dataset",
    "model_from_checkpoint",
    "random_scene",
    "reconstruct",
    "train",
    "view_poses",
]
