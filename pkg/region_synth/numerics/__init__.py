from region_synth.numerics.gradcheck import (
    finite_diff_check,
    finite_diff_check_params,
    numeric_gradient,
    relative_error,
)
from region_synth.numerics.tape import (
    Tape,
    TapeEntry,
    active_tape,
    check_finite,
    concat,
    grad,
    input_grad_norm,
    input_grad_norms,
    leaky_relu,
    linear,
    matmul,
    relu,
)

__all__ = [
    "Tape",
    "TapeEntry",
    "active_tape",
    "check_finite",
    "concat",
    "finite_diff_check",
    "finite_diff_check_params",
    "grad",
    "input_grad_norm",
    "input_grad_norms",
    "leaky_relu",
    "linear",
    "matmul",
    "numeric_gradient",
    "relative_error",
    "relu",
]
