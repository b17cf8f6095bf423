"""Minimal numerical core: tensors, reverse-mode AD, LSTM cell, Adam."""

from .gradcheck import grad_check
from .lstm import init_lstm_params, lstm_cell, run_lstm
from .optim import AdamState, GradientError, adam_step, clip_grads, global_grad_norm, zero_grads
from .tensor import (
    Node,
    ShapeError,
    Tape,
    Tensor,
    add,
    add_row,
    affine,
    element,
    log_softmax,
    log_sum_exp,
    matmul,
    mean_rows,
    mul,
    parameter,
    pick,
    row,
    rows,
    scale,
    sigmoid,
    slice1d,
    stack_rows,
    sum_all,
    sum_rows,
    tanh,
)

__all__ = [
    "AdamState",
    "GradientError",
    "Node",
    "ShapeError",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "add_row",
    "affine",
    "element",
    "clip_grads",
    "global_grad_norm",
    "grad_check",
    "init_lstm_params",
    "log_softmax",
    "log_sum_exp",
    "lstm_cell",
    "matmul",
    "mean_rows",
    "mul",
    "parameter",
    "pick",
    "row",
    "rows",
    "run_lstm",
    "scale",
    "sigmoid",
    "slice1d",
    "stack_rows",
    "sum_all",
    "sum_rows",
    "tanh",
    "zero_grads",
]
