"""Interior time stencils and mixed space-time derivative jets.

Time derivatives of trajectory data are always taken with centered interior
stencils (never one-sided), so residual convergence orders are not polluted
by boundary formulas. Spatial parts are spectral; spatial and temporal
operators commute exactly, so mixed derivatives are order-independent.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .fields import Grid2D, deriv


class StencilError(ValueError):
    """Requested stencil does not fit inside the available slices."""


@lru_cache(maxsize=None)
def centered_weights(m: int, acc: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Centered finite-difference weights for the m-th derivative.

    Returns (offsets, weights) on a unit-spaced grid; divide by dt^m. The
    stencil uses the smallest symmetric point set achieving the accuracy
    (for even stencils the classical 4th-order interior formulas).
    """
    if m < 0 or acc % 2 != 0:
        raise StencilError(f"bad stencil request m={m}, acc={acc}")
    half = (m + acc - 1) // 2
    offsets = np.arange(-half, half + 1)
    n = len(offsets)
    A = np.vander(offsets.astype(np.float64), n, increasing=True).T
    b = np.zeros(n)
    b[m] = math.factorial(m)
    w = np.linalg.solve(A, b)
    w[np.abs(w) < 1e-14] = 0.0
    return offsets, w


def time_derivative(stack: np.ndarray, center: int, m: int, dt: float,
                    acc: int = 4) -> np.ndarray:
    """m-th time derivative of stack[(nt, ...)] at index `center`."""
    if m == 0:
        return stack[center]
    offsets, weights = centered_weights(m, acc)
    if center + offsets[0] < 0 or center + offsets[-1] >= stack.shape[0]:
        raise StencilError(
            f"interior stencil (order {m}, acc {acc}) needs slices "
            f"{center + offsets[0]}..{center + offsets[-1]}, have 0..{stack.shape[0] - 1}")
    out = np.zeros_like(stack[center])
    for off, wgt in zip(offsets, weights):
        if wgt != 0.0:
            out += wgt * stack[center + off]
    return out / dt ** m


class SpaceTimeJet:
    """Cached mixed derivatives of per-slice field stacks at one time slice.

    Greek indices follow (t, x1, x2) = (0, 1, 2). `d(name, *alphas)` returns
    the mixed partial d_{alphas} field at the center slice; repeated calls
    are cached. Time orders up to 3 are supported at 4th-order accuracy.
    """

    def __init__(self, grid: Grid2D, dt: float, center: int,
                 stacks: dict[str, np.ndarray], acc: int = 4):
        self.grid = grid
        self.dt = dt
        self.center = center
        self.acc = acc
        self._stacks = stacks
        self._cache: dict[tuple, np.ndarray] = {}

    def add(self, name: str, stack: np.ndarray):
        self._stacks[name] = stack

    def d(self, name: str, *alphas: int) -> np.ndarray:
        mt = sum(1 for a in alphas if a == 0)
        mx = sum(1 for a in alphas if a == 1)
        my = sum(1 for a in alphas if a == 2)
        key = (name, mt, mx, my)
        if key in self._cache:
            return self._cache[key]
        out = time_derivative(self._stacks[name], self.center, mt, self.dt, self.acc)
        for _ in range(mx):
            out = deriv(self.grid, out, 0)
        for _ in range(my):
            out = deriv(self.grid, out, 1)
        self._cache[key] = out
        return out
