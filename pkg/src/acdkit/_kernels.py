"""JIT-compiled inner loops for the order-1 duration recursion."""

import numpy as np
from numba import njit


@njit(cache=False)
def recursion_path(e, omega, alpha, x0):
    """Durations x_i = (omega + alpha*x_{i-1}) * e_i, seeded with x0."""
    out = np.empty(len(e))
    prev = x0
    for i in range(len(e)):
        prev = (omega + alpha * prev) * e[i]
        out[i] = prev
    return out


@njit(cache=False)
def recursion_tail(e, omega, alpha, x0):
    """Last duration of the recursion, without storing the path."""
    prev = x0
    for i in range(len(e)):
        prev = (omega + alpha * prev) * e[i]
    return prev
