"""Independent oracles for the test suite.

Everything here deliberately avoids the production code paths: derivatives by
finite differences, norms by brute-force DFT loops, EOS relations by
quadrature, tensor contractions by explicit index loops. Oracles stay
independent of what they check.
"""

import numpy as np
from scipy.integrate import quad

MINK = np.diag([-1.0, 1.0, 1.0])


def fd_derivative(values: np.ndarray, axis: int, spacing: float, order: int = 8) -> np.ndarray:
    """Centered finite-difference first derivative on a periodic grid."""
    if order == 8:
        offsets = [-4, -3, -2, -1, 1, 2, 3, 4]
        weights = [1 / 280, -4 / 105, 1 / 5, -4 / 5, 4 / 5, -1 / 5, 4 / 105, -1 / 280]
    elif order == 4:
        offsets = [-2, -1, 1, 2]
        weights = [1 / 12, -2 / 3, 2 / 3, -1 / 12]
    else:
        raise ValueError(order)
    out = np.zeros_like(values)
    for off, wgt in zip(offsets, weights):
        out += wgt * np.roll(values, -off, axis=axis)
    return out / spacing


def fd_time_weights(m: int, acc: int = 4):
    """Fornberg-style centered weights for the m-th derivative, given accuracy.

    Returns (offsets, weights) for a unit-spaced stencil; divide by dt^m.
    """
    half = (m + acc - 1) // 2
    offsets = np.arange(-half, half + 1)
    n = len(offsets)
    A = np.vander(offsets, n, increasing=True).T.astype(np.float64)
    b = np.zeros(n)
    b[m] = np.math.factorial(m) if hasattr(np.math, "factorial") else 1.0
    import math
    b[m] = math.factorial(m)
    w = np.linalg.solve(A, b)
    return offsets, w


def dft_sobolev_norm(values: np.ndarray, lx: float, ly: float, s: float) -> float:
    """Brute-force DFT summation for the Bessel H^s norm (slow, small grids)."""
    nx, ny = values.shape
    fh = np.zeros((nx, ny), dtype=complex)
    x = np.arange(nx)
    y = np.arange(ny)
    for p in range(nx):
        for q in range(ny):
            phase = np.exp(-2j * np.pi * (p * x[:, None] / nx + q * y[None, :] / ny))
            fh[p, q] = np.sum(values * phase) / (nx * ny)
    kx = np.fft.fftfreq(nx, d=1.0 / nx) * (2 * np.pi / lx)
    ky = np.fft.fftfreq(ny, d=1.0 / ny) * (2 * np.pi / ly)
    total = 0.0
    for p in range(nx):
        for q in range(ny):
            total += (1 + kx[p] ** 2 + ky[q] ** 2) ** s * abs(fh[p, q]) ** 2 * lx * ly
    return float(np.sqrt(total))


def quad_h_of_rho(rho_target: float, A: float) -> float:
    """h(rho) by numerical quadrature of dh/drho = c_s^2 / (p + rho)."""
    if A == 1.0:
        val, _ = quad(lambda r: 1.0 / (2.0 * r), 1.0, rho_target)
        return val
    integrand = lambda r: A * r ** (A - 2.0) / (1.0 + r ** (A - 1.0))
    val, _ = quad(integrand, 0.0, rho_target)
    return val


def dense_minors(Pmat: np.ndarray):
    """Leading principal minors of a 3x3 matrix via dense determinants."""
    return (np.linalg.det(Pmat[:1, :1]),
            np.linalg.det(Pmat[:2, :2]),
            np.linalg.det(Pmat[:3, :3]))


def perm_symbol() -> np.ndarray:
    """Plain permutation symbol, eps[0,1,2] = +1."""
    import itertools
    e = np.zeros((3, 3, 3))
    for p in itertools.permutations(range(3)):
        inv = sum(1 for i in range(3) for j in range(i + 1, 3) if p[i] > p[j])
        e[p] = 1.0 if inv % 2 == 0 else -1.0
    return e


def loop_vorticity(dv_lower: np.ndarray) -> np.ndarray:
    """w^a = eps^{abc} d_b v_c from the 3x3(xgrid) lowered-gradient stack.

    dv_lower[b, c] = d_b v_c. Explicit 6-term expansion, no einsum.
    """
    eps = perm_symbol()
    shape = dv_lower.shape[2:]
    w = np.zeros((3,) + shape)
    for a in range(3):
        for b in range(3):
            for c in range(3):
                if eps[a, b, c] != 0.0:
                    w[a] += eps[a, b, c] * dv_lower[b, c]
    return w


def richardson_order(err_coarse: float, err_fine: float, ratio: float = 2.0) -> float:
    """Observed convergence order from two errors under step halving."""
    return float(np.log(err_coarse / err_fine) / np.log(ratio))
