from .gradcheck import GradCheckReport, grad_check, relative_error
from .nn import attention, masked_mean, masked_softmax, mlp_forward, register_mlp
from .params import CheckpointError, ParamStore, init_store
from .rng import RngStream, gumbel_from_uniform, sample_gumbel
from .tensor import (
    DimensionError,
    NumericError,
    ParameterError,
    Tensor,
    backward,
    concat,
    log_softmax,
    softmax,
)

__all__ = [
    "CheckpointError", "DimensionError", "GradCheckReport", "NumericError", "ParamStore",
    "ParameterError", "RngStream", "Tensor", "attention", "backward", "concat", "grad_check",
    "gumbel_from_uniform", "init_store", "log_softmax", "masked_mean", "masked_softmax",
    "mlp_forward", "register_mlp", "relative_error", "sample_gumbel", "softmax",
]
