"""Central finite-difference gradient checking shared across test files."""

from __future__ import annotations

from typing import Callable

import numpy as np


def finite_difference_grads(
    model, loss_fn: Callable[[], float], h: float = 1e-6
) -> list[np.ndarray]:
    """Central differences of loss_fn with respect to every model parameter."""
    grads = []
    for param in model.params:
        g = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            ix = it.multi_index
            orig = param[ix]
            param[ix] = orig + h
            up = loss_fn()
            param[ix] = orig - h
            down = loss_fn()
            param[ix] = orig
            g[ix] = (up - down) / (2 * h)
            it.iternext()
        grads.append(g)
    return grads


def max_relative_error(analytic: list[np.ndarray], numeric: list[np.ndarray]) -> float:
    """Worst element-wise relative error, denominators floored so that
    near-zero pairs compare absolutely."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-4)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def gradcheck(model, objective: Callable[[], tuple[float, list[np.ndarray]]]) -> float:
    """Run one check: returns the worst relative error between the analytic
    gradients reported by ``objective`` and central finite differences."""
    _, analytic = objective()
    numeric = finite_difference_grads(model, lambda: objective()[0])
    return max_relative_error(analytic, numeric)
