from .csg import (
    Box,
    Capsule,
    Intersection,
    Node,
    SceneError,
    SdfScene,
    Sphere,
    Subtraction,
    Union,
    eval_sdf,
    node_from_dict,
    normalize_scene,
)
from .grid import GridError, SdfGrid, grid_points, load_grid, sample_grid, save_grid
from .marching_cubes import extract_mesh
from .mesh import Mesh, MeshError, load_obj, sample_surface, save_obj
from .voxelize import (
    OccupancyGrid,
    VoxelizeError,
    solid_voxelize,
    voxelize_mesh,
    voxelize_scene,
)

__all__ = [
    "Box",
    "Capsule",
    "GridError",
    "Intersection",
    "Mesh",
    "MeshError",
    "Node",
    "OccupancyGrid",
    "SceneError",
    "SdfGrid",
    "SdfScene",
    "Sphere",
    "Subtraction",
    "Union",
    "VoxelizeError",
    "eval_sdf",
    "extract_mesh",
    "grid_points",
    "load_grid",
    "load_obj",
    "node_from_dict",
    "normalize_scene",
    "sample_grid",
    "sample_surface",
    "save_grid",
    "save_obj",
    "solid_voxelize",
    "voxelize_mesh",
    "voxelize_scene",
]
