"""patternsdf: single-image implicit 3D reconstruction with
spatial-pattern-guided feature gathering.

Subpackages
-----------
geometry   analytic CSG scenes, SDF grids, marching cubes, voxelization
camera     pinhole model and rigid poses
render     sphere-traced shaded renders
sampling   two-stage ground-truth point sampling
nn         array autodiff, optimizer, checkpoints
model      encoder, pattern generator, SDF network
metrics    Chamfer / EMD / IoU and pattern statistics
pipeline   dataset generation, training, evaluation
"""

__version__ = "0.1.0"
