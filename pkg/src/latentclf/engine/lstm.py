"""Single-layer unidirectional LSTM built from tape ops.

Gate layout in the fused pre-activation vector is [i, f, g, o].  There are
no peephole connections.  Weights are stored as two matrices (input and
recurrent) plus one bias vector so the cell needs no concatenation op.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


def init_lstm_params(d_in: int, d_h: int, rng: np.random.Generator, init_scale: float = 0.1,
                     forget_bias: float = 1.0) -> tuple[Tensor, Tensor, Tensor]:
    """Uniform [-init_scale, init_scale] weights; forget-gate bias preset.

    Returns (wx [d_in, 4*d_h], wh [d_h, 4*d_h], b [4*d_h]) as parameters.
    """
    wx = T.parameter(rng.uniform(-init_scale, init_scale, size=(d_in, 4 * d_h)))
    wh = T.parameter(rng.uniform(-init_scale, init_scale, size=(d_h, 4 * d_h)))
    b_data = np.zeros(4 * d_h)
    b_data[d_h:2 * d_h] = forget_bias
    b = T.parameter(b_data)
    return wx, wh, b


def lstm_cell(x_t: Tensor, h_prev: Tensor, c_prev: Tensor,
              wx: Tensor, wh: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM step on 1-D state vectors; returns (h_t, c_t)."""
    d_h = h_prev.data.shape[0]
    if wx.data.shape[1] != 4 * d_h or wh.data.shape != (d_h, 4 * d_h) or c_prev.data.shape != (d_h,):
        raise T.ShapeError(
            f"lstm_cell: wx={wx.data.shape} wh={wh.data.shape} do not match hidden size {d_h}"
        )
    z = T.affine(x_t, wx, b) + T.matmul(h_prev, wh)
    return _gates(z, c_prev, d_h)


def _gates(z: Tensor, c_prev: Tensor, d_h: int) -> tuple[Tensor, Tensor]:
    i = T.sigmoid(T.slice1d(z, 0, d_h))
    f = T.sigmoid(T.slice1d(z, d_h, 2 * d_h))
    g = T.tanh(T.slice1d(z, 2 * d_h, 3 * d_h))
    o = T.sigmoid(T.slice1d(z, 3 * d_h, 4 * d_h))
    c_t = f * c_prev + i * g
    h_t = o * T.tanh(c_t)
    return h_t, c_t


def run_lstm(x_seq: Tensor, wx: Tensor, wh: Tensor, b: Tensor) -> Tensor:
    """Run the cell over the rows of x_seq [T, d_in]; returns H [T, d_h].

    Initial h and c are zero.  The input projection for the whole sequence
    is computed in one matmul; the recurrence steps row by row.
    """
    if x_seq.data.ndim != 2:
        raise T.ShapeError(f"run_lstm: need [T, d_in] input, got shape {x_seq.data.shape}")
    d_h = wh.data.shape[0]
    zx = T.affine(x_seq, wx, b)  # [T, 4*d_h]
    h = Tensor(np.zeros(d_h))
    c = Tensor(np.zeros(d_h))
    hs = []
    for t in range(x_seq.data.shape[0]):
        z = T.row(zx, t) + T.matmul(h, wh)
        h, c = _gates(z, c, d_h)
        hs.append(h)
    return T.stack_rows(hs)
