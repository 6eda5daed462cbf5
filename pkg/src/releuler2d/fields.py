"""Periodic-grid fields, spectral calculus, Littlewood-Paley bands, and norms.

All operators act on a doubly periodic torus of side lengths (lx, ly) sampled
on an nx-by-ny collocation grid. The forward FFT carries a 1/(nx*ny)
normalization so Parseval sums are grid-size independent; the L2 cell weight
is then lx*ly, which makes the s=0 Sobolev norm reproduce the continuum L2
norm exactly for trigonometric polynomials.

Everything here is pure: functions never mutate their inputs, so fields can be
shared freely between threads and independent field operations may run
concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson


class FieldError(ValueError):
    """Raised for invalid grids, non-finite data, or out-of-range requests."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on [0, lx) x [0, ly).

    nx, ny must be powers of two >= 16 so that dyadic band bookkeeping and
    FFT sizes stay exact.
    """

    nx: int
    ny: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi

    def __post_init__(self):
        if not (_is_pow2(self.nx) and self.nx >= 16):
            raise FieldError(f"nx must be a power of two >= 16, got {self.nx}")
        if not (_is_pow2(self.ny) and self.ny >= 16):
            raise FieldError(f"ny must be a power of two >= 16, got {self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise FieldError("side lengths must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Collocation coordinates X1, X2 with indexing='ij' (row-major)."""
        x1 = np.arange(self.nx) * self.dx
        x2 = np.arange(self.ny) * self.dy
        return np.meshgrid(x1, x2, indexing="ij")

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular wavenumber grids (k1, k2), integers when lx=ly=2*pi."""
        k1 = np.fft.fftfreq(self.nx, d=1.0 / self.nx) * (2.0 * np.pi / self.lx)
        k2 = np.fft.fftfreq(self.ny, d=1.0 / self.ny) * (2.0 * np.pi / self.ly)
        return np.meshgrid(k1, k2, indexing="ij")

    def kmag(self) -> np.ndarray:
        k1, k2 = self.wavenumbers()
        return np.sqrt(k1 * k1 + k2 * k2)

    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: True on retained modes (|k| <= N/3 per axis)."""
        k1, k2 = self.wavenumbers()
        c1 = (2.0 * np.pi / self.lx) * self.nx / 3.0
        c2 = (2.0 * np.pi / self.ly) * self.ny / 3.0
        return (np.abs(k1) <= c1 + 1e-12) & (np.abs(k2) <= c2 + 1e-12)

    def kmax_dealiased(self) -> float:
        """Largest |k| along an axis surviving the 2/3 filter."""
        return (2.0 * np.pi / self.lx) * self.nx / 3.0

    def band_range(self) -> tuple[int, int]:
        """(jmin, jmax): dyadic bands whose annulus is fully representable.

        Band j covers 2^{j-1} <= |k| <= 2^{j+1}; it is complete when
        2^{j+1} <= kmax_dealiased. jmin corresponds to the smallest nonzero
        wavenumber 2*pi/max(lx,ly).
        """
        kmin = 2.0 * np.pi / max(self.lx, self.ly)
        jmin = int(math.floor(math.log2(kmin)))
        jmax = int(math.floor(math.log2(self.kmax_dealiased()))) - 1
        return jmin, jmax


@dataclass
class ScalarField2D:
    """Real scalar samples on a Grid2D, row-major values[i, j] = f(x1_i, x2_j)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise FieldError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise FieldError("field contains non-finite values")


@dataclass
class DyadicBand:
    """A Littlewood-Paley projection P_j f; spectrum lives in 2^{j-1}<=|k|<=2^{j+1}."""

    j: int
    field: ScalarField2D


# ---------------------------------------------------------------------------
# spectral transforms and derivatives (array-level kernels)
# ---------------------------------------------------------------------------

def fft2_normalized(values: np.ndarray) -> np.ndarray:
    """Forward transform with 1/(nx*ny) normalization."""
    return np.fft.fft2(values) / values.size


def ifft2_normalized(coeffs: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft2(coeffs * coeffs.size))


def _check_finite(values: np.ndarray):
    if not np.all(np.isfinite(values)):
        raise FieldError("non-finite values in field")


def deriv(grid: Grid2D, values: np.ndarray, axis: int) -> np.ndarray:
    """Exact Fourier derivative along axis 0 (x1) or 1 (x2).

    The Nyquist column of the multiplier is zeroed (its odd derivative is not
    representable); under 2/3 dealiasing those modes are already absent.
    """
    _check_finite(values)
    n = grid.nx if axis == 0 else grid.ny
    length = grid.lx if axis == 0 else grid.ly
    k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
    k[n // 2] = 0.0
    shape = (n, 1) if axis == 0 else (1, n)
    fh = np.fft.fft2(values)
    fh *= 1j * k.reshape(shape)
    return np.real(np.fft.ifft2(fh))


def dealias(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    """Apply the 2/3-rule spectral truncation."""
    fh = np.fft.fft2(values)
    fh[~grid.dealias_mask()] = 0.0
    return np.real(np.fft.ifft2(fh))


def spectral_derivative(f: ScalarField2D, axis: str) -> ScalarField2D:
    """d f / d x1 or d f / d x2 of the represented trigonometric polynomial."""
    if axis not in ("x1", "x2"):
        raise FieldError(f"axis must be 'x1' or 'x2', got {axis!r}")
    out = deriv(f.grid, f.values, 0 if axis == "x1" else 1)
    return ScalarField2D(f.grid, out)


# ---------------------------------------------------------------------------
# Littlewood-Paley machinery
# ---------------------------------------------------------------------------

def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t<=0, 1 for t>=1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def lowpass_profile(r: np.ndarray) -> np.ndarray:
    """Radial cutoff Phi: 1 on [0,1], 0 on [2,inf), smooth monotone between."""
    return 1.0 - _smoothstep(np.asarray(r, dtype=np.float64) - 1.0)


def band_profile(r: np.ndarray) -> np.ndarray:
    """zeta(r) = Phi(r) - Phi(2r): supported in 1/2<=r<=2, telescopes to 1."""
    r = np.asarray(r, dtype=np.float64)
    return lowpass_profile(r) - lowpass_profile(2.0 * r)


def lp_multiplier(grid: Grid2D, j: int) -> np.ndarray:
    return band_profile(grid.kmag() / 2.0 ** j)


def lp_project(f: ScalarField2D, j: int) -> DyadicBand:
    """Littlewood-Paley band P_j f via the multiplier zeta(2^-j |k|)."""
    _check_finite(f.values)
    if 2.0 ** (j + 1) > f.grid.kmax_dealiased() + 1e-12:
        raise FieldError(
            f"band j={j} exceeds the representable range "
            f"(2^(j+1) must be <= {f.grid.kmax_dealiased():.6g})"
        )
    fh = fft2_normalized(f.values)
    out = ifft2_normalized(fh * lp_multiplier(f.grid, j))
    return DyadicBand(j, ScalarField2D(f.grid, out))


def lowpass_project(grid: Grid2D, values: np.ndarray, j: int) -> np.ndarray:
    """P_{<=j}: multiplier Phi(2^-j |k|); includes the zero mode."""
    fh = fft2_normalized(values)
    fh *= lowpass_profile(grid.kmag() / 2.0 ** j)
    return ifft2_normalized(fh)


def zero_mode(f: ScalarField2D) -> float:
    return float(np.mean(f.values))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def l2_norm(grid: Grid2D, values: np.ndarray) -> float:
    """Continuum L2 norm by grid quadrature (exact for trig polynomials)."""
    return float(np.sqrt(np.sum(values * values) * grid.cell_area))


def lp_norm(grid: Grid2D, values: np.ndarray, p: float) -> float:
    return float((np.sum(np.abs(values) ** p) * grid.cell_area) ** (1.0 / p))


def sup_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))


def sobolev_norm(f: ScalarField2D, s: float) -> float:
    """Bessel-potential H^s norm: (sum <k>^{2s} |fhat|^2 lx ly)^{1/2}.

    s=0 reproduces the continuum L2 norm. Equivalent (up to constants) to the
    L2 + homogeneous-H^s form; comparisons against paper-side constants must
    stay constant-free.
    """
    if not (-2.0 <= s <= 4.0):
        raise FieldError(f"s must lie in [-2, 4], got {s}")
    _check_finite(f.values)
    g = f.grid
    fh = fft2_normalized(f.values)
    k1, k2 = g.wavenumbers()
    bessel = (1.0 + k1 * k1 + k2 * k2) ** s
    total = np.sum(bessel * np.abs(fh) ** 2) * g.lx * g.ly
    return float(np.sqrt(total))


def homogeneous_sobolev_norm(f: ScalarField2D, s: float) -> float:
    """|f|_{Hdot^s} with the same cell weight; the zero mode is dropped."""
    g = f.grid
    fh = fft2_normalized(f.values)
    k1, k2 = g.wavenumbers()
    kk = k1 * k1 + k2 * k2
    weight = np.zeros_like(kk)
    nz = kk > 0
    weight[nz] = kk[nz] ** s
    total = np.sum(weight * np.abs(fh) ** 2) * g.lx * g.ly
    return float(np.sqrt(total))


def besov_b0_inf2_norm(f: ScalarField2D) -> float:
    """Bdot^0_{inf,2}: l2 over bands of the band sup-norms."""
    jmin, jmax = f.grid.band_range()
    total = 0.0
    for j in range(jmin, jmax + 1):
        total += sup_norm(lp_project(f, j).field.values) ** 2
    return float(np.sqrt(total))


def holder_proxy_norm(f: ScalarField2D, delta: float) -> float:
    """C^delta proxy: sup_j 2^{j delta} |P_j f|_inf + |f|_inf."""
    jmin, jmax = f.grid.band_range()
    peak = 0.0
    for j in range(jmin, jmax + 1):
        peak = max(peak, 2.0 ** (j * delta) * sup_norm(lp_project(f, j).field.values))
    return peak + sup_norm(f.values)


def mixed_norms(series: list[ScalarField2D], dt: float, delta: float = 0.25,
                s: float = 1.8) -> dict[str, float]:
    """Space-time norms of a uniformly sampled time series.

    L4-in-time norms integrate the 4th power of the spatial norm with
    composite Simpson quadrature. Returns L4tLinfx, L4tBesovd (the C^delta
    proxy), LinfHs, and L8x_at_t (spatial L8 at every sample, max reported).
    """
    if len(series) < 4:
        raise FieldError("mixed_norms needs at least 4 time samples")
    if dt <= 0:
        raise FieldError("dt must be positive")
    t = np.arange(len(series)) * dt
    sup_t = np.array([sup_norm(f.values) for f in series])
    bes_t = np.array([holder_proxy_norm(f, delta) for f in series])
    hs_t = np.array([sobolev_norm(f, s) for f in series])
    l8_t = np.array([lp_norm(f.grid, f.values, 8.0) for f in series])
    return {
        "L4tLinfx": float(simpson(sup_t ** 4, x=t) ** 0.25),
        "L4tBesovd": float(simpson(bes_t ** 4, x=t) ** 0.25),
        "LinfHs": float(np.max(hs_t)),
        "L8x_at_t": float(np.max(l8_t)),
    }


# ---------------------------------------------------------------------------
# snapshot format
# ---------------------------------------------------------------------------

def write_snapshot(path, f: ScalarField2D, name: str, time: float):
    """One-line JSON header + newline + little-endian float64 row-major."""
    header = {
        "nx": f.grid.nx, "ny": f.grid.ny,
        "lx": f.grid.lx, "ly": f.grid.ly,
        "name": name, "time": time,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[ScalarField2D, str, float]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    grid = Grid2D(header["nx"], header["ny"], header["lx"], header["ly"])
    values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape)
    return ScalarField2D(grid, values.copy()), header["name"], header["time"]
