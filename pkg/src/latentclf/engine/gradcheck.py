"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from . import optim
from .tensor import Tape, Tensor


def grad_check(f, params: dict[str, Tensor], h: float = 1e-5,
               max_coords_per_param: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` is a no-argument callable returning a scalar Tensor; it is
    re-evaluated under perturbed parameters, so it must read the live
    ``params`` tensors.  Error per coordinate is
    |analytic - numeric| / max(1, |analytic|).  When
    ``max_coords_per_param`` is given, that many coordinates are sampled
    per parameter (seeded via ``rng``); otherwise every coordinate is
    checked.
    """
    optim.zero_grads(params)
    with Tape() as tape:
        out = f()
    tape.backward(out)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}
    optim.zero_grads(params)

    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.shape[0]
        if max_coords_per_param is not None and n > max_coords_per_param:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        else:
            coords = range(n)
        a_flat = analytic[name].reshape(-1)
        for j in coords:
            orig = flat[j]
            flat[j] = orig + h
            f_plus = f().item()
            flat[j] = orig - h
            f_minus = f().item()
            flat[j] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(a_flat[j] - numeric) / max(1.0, abs(a_flat[j]))
            if err > worst:
                worst = err
    return worst
