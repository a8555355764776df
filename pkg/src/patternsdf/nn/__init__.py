from .adam import Adam, OptimizerError, step_lr
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import check_gradients, numeric_gradient, op_gradient_cases, op_gradient_suite
from .tensor import (
    LossConfig,
    ShapeError,
    Tensor,
    add,
    as_tensor,
    bilinear_sample,
    concat,
    conv2d,
    expand_rows,
    global_avg_pool,
    grad_enabled,
    linear,
    matmul,
    max_pool2d,
    mul,
    no_grad,
    parameter,
    project_pinhole,
    relu,
    reshape,
    tanh,
    tensor_sum,
    weighted_sdf_loss,
)

__all__ = [
    "Adam",
    "CheckpointError",
    "LossConfig",
    "OptimizerError",
    "ShapeError",
    "Tensor",
    "add",
    "as_tensor",
    "bilinear_sample",
    "check_gradients",
    "concat",
    "conv2d",
    "expand_rows",
    "global_avg_pool",
    "grad_enabled",
    "linear",
    "load_checkpoint",
    "matmul",
    "max_pool2d",
    "mul",
    "no_grad",
    "numeric_gradient",
    "op_gradient_cases",
    "op_gradient_suite",
    "parameter",
    "project_pinhole",
    "relu",
    "reshape",
    "save_checkpoint",
    "step_lr",
    "tanh",
    "tensor_sum",
    "weighted_sdf_loss",
]
