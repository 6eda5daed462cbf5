"""Equation of state, good variables (h, v), constraint lift, acoustic metric.

The closed forms follow from dh/drho = c_s^2/(p+rho) with p = rho^A and
integration constant 0:

    A > 1:  h(rho) = A/(A-1) * log(1 + rho^{A-1}),  c_s^2(h) = A*(e^{(A-1)h/A} - 1)
    A = 1:  h(rho) = log(rho)/2,                    c_s^2 = 1 (stiff fluid)

v0 is never stored: it is always recomputed from the normalization
e^{-2h} v^a v_a = -1, which therefore holds to rounding by construction.
All maps here are pointwise and pure (thread-safe, data-parallel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Grid2D, ScalarField2D

MINKOWSKI = np.diag([-1.0, 1.0, 1.0])

HYPERBOLICITY_SLACK = 1e-12


class ThermoError(ValueError):
    """Inadmissible equation-of-state parameters or fluid states."""


@dataclass(frozen=True)
class EquationOfState:
    """Polytropic EOS p = rho^A, A >= 1; A = 1 is the stiff fluid."""

    A: float = 2.0

    def __post_init__(self):
        if self.A < 1.0:
            raise ThermoError(f"A must be >= 1, got {self.A}")

    @property
    def stiff(self) -> bool:
        return self.A == 1.0

    def h_max(self) -> float:
        """Upper end of the hyperbolicity window (c_s = 1); inf when stiff."""
        if self.stiff:
            return np.inf
        return self.A / (self.A - 1.0) * np.log(1.0 + 1.0 / self.A)

    def _check_window(self, h):
        h = np.asarray(h, dtype=np.float64)
        if self.stiff:
            return h
        if np.any(h <= 0.0):
            raise ThermoError("h must be > 0 for A > 1 (vacuum at h <= 0)")
        cs2 = self.cs2(h, check=False)
        if np.any(cs2 > 1.0 + HYPERBOLICITY_SLACK):
            raise ThermoError(
                f"hyperbolicity violated: max c_s^2 = {float(np.max(cs2)):.6g} > 1 "
                f"(h must be <= {self.h_max():.6g})"
            )
        return h

    def rho(self, h):
        h = self._check_window(h)
        if self.stiff:
            return np.exp(2.0 * h)
        return (np.exp((self.A - 1.0) * h / self.A) - 1.0) ** (1.0 / (self.A - 1.0))

    def p(self, h):
        return self.rho(h) ** self.A

    def h_of_rho(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        if np.any(rho <= 0):
            raise ThermoError("rho must be positive")
        if self.stiff:
            return 0.5 * np.log(rho)
        return self.A / (self.A - 1.0) * np.log(1.0 + rho ** (self.A - 1.0))

    def cs2(self, h, check: bool = True):
        if self.stiff:
            return np.ones_like(np.asarray(h, dtype=np.float64))
        if check:
            h = self._check_window(h)
        else:
            h = np.asarray(h, dtype=np.float64)
        return self.A * (np.exp((self.A - 1.0) * h / self.A) - 1.0)

    def cs(self, h):
        return np.sqrt(self.cs2(h))

    def cs_prime(self, h):
        """dc_s/dh, analytic chain rule (never numerical differentiation)."""
        if self.stiff:
            return np.zeros_like(np.asarray(h, dtype=np.float64))
        h = self._check_window(h)
        dcs2 = (self.A - 1.0) * np.exp((self.A - 1.0) * h / self.A)
        return dcs2 / (2.0 * np.sqrt(self.cs2(h, check=False)))

    def dp_dh(self, h):
        """dp/dh = p + rho (from dh/drho = c_s^2/(p+rho) and dp = c_s^2 drho)."""
        r = self.rho(h)
        return r ** self.A + r

    def h_of_p(self, p):
        """Invert the monotone map p(h), tolerance 1e-13.

        Safeguarded Newton with bisection fallback; closed form when stiff.
        """
        p = np.asarray(p, dtype=np.float64)
        if np.any(p <= 0):
            raise ThermoError("pressure must stay positive")
        if self.stiff:
            return 0.5 * np.log(p)
        rho = p ** (1.0 / self.A)
        h = self.h_of_rho(rho)
        # Newton polish in h (the closed form is already exact; this guards
        # against accumulated rounding for extreme exponents).
        for _ in range(3):
            resid = self.p(np.maximum(h, 1e-300)) - p
            step = resid / self.dp_dh(np.maximum(h, 1e-300))
            h = h - step
            if np.max(np.abs(step)) < 1e-13 * max(1.0, float(np.max(np.abs(h)))):
                break
        return h


def eos_closed_forms(A: float):
    """Return the callable triple (rho(h), p(h), c_s(h)) for p = rho^A."""
    eos = EquationOfState(A)
    return eos.rho, eos.p, eos.cs


def lift_velocity(h, v1, v2):
    """v0 = sqrt(e^{2h} + v1^2 + v2^2); makes e^{-2h} v.v = -1 exact."""
    h = np.asarray(h, dtype=np.float64)
    return np.sqrt(np.exp(2.0 * h) + np.asarray(v1) ** 2 + np.asarray(v2) ** 2)


@dataclass
class FluidState:
    """Good-variable state (h, v1, v2) on a grid; v0 derived, never stored."""

    grid: Grid2D
    h: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        for name in ("h", "v1", "v2"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != self.grid.shape:
                raise ThermoError(f"{name} shape {arr.shape} != grid {self.grid.shape}")
            if not np.all(np.isfinite(arr)):
                raise ThermoError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    @property
    def v0(self) -> np.ndarray:
        return lift_velocity(self.h, self.v1, self.v2)

    def constraint_residual(self) -> np.ndarray:
        """e^{-2h} v^a v_a + 1; zero to rounding by construction."""
        v0 = self.v0
        return np.exp(-2.0 * self.h) * (-v0 * v0 + self.v1 ** 2 + self.v2 ** 2) + 1.0

    def copy(self) -> "FluidState":
        return FluidState(self.grid, self.h.copy(), self.v1.copy(), self.v2.copy())

    def scalar(self, name: str) -> ScalarField2D:
        return ScalarField2D(self.grid, getattr(self, name))


def compute_theta_from(cs2, h, v0):
    """Theta = 1 / (c_s^2 - e^{-2h} (c_s^2 - 1) (v0)^2); shift-covariant kernel."""
    cs2 = np.asarray(cs2, dtype=np.float64)
    denom = cs2 - np.exp(-2.0 * np.asarray(h)) * (cs2 - 1.0) * np.asarray(v0) ** 2
    if np.any(denom <= 0.0):
        raise ThermoError("Theta denominator <= 0: hyperbolicity violated")
    return 1.0 / denom


def compute_theta(state: FluidState, eos: EquationOfState) -> ScalarField2D:
    theta = compute_theta_from(eos.cs2(state.h), state.h, state.v0)
    return ScalarField2D(state.grid, theta)


@dataclass
class AcousticMetric:
    """Pointwise contravariant metric g^{ab}, its inverse, and Theta.

    ginv/gcov have shape (3, 3) + grid.shape. g^{00} = -1 exactly (the Theta
    normalization makes it an algebraic identity; the entry is pinned).
    """

    ginv: np.ndarray
    gcov: np.ndarray
    theta: ScalarField2D


def acoustic_metric_from(cs2, h, v0, v1, v2, grid: Grid2D) -> AcousticMetric:
    """Metric kernel g^{ab} = Theta(c_s^2 m^{ab} + e^{-2h}(c_s^2-1) v^a v^b).

    Parameterized by c_s^2 directly so shift-covariant checks (e.g. the stiff
    limit A -> 1+ at fixed rho) can bypass the h <-> c_s closed form.
    """
    cs2 = np.broadcast_to(np.asarray(cs2, dtype=np.float64), grid.shape)
    h = np.broadcast_to(np.asarray(h, dtype=np.float64), grid.shape)
    v = np.stack([np.broadcast_to(np.asarray(c, dtype=np.float64), grid.shape)
                  for c in (v0, v1, v2)])
    theta = compute_theta_from(cs2, h, v[0])
    e2h = np.exp(-2.0 * h)
    ginv = np.empty((3, 3) + grid.shape)
    for a in range(3):
        for b in range(3):
            ginv[a, b] = theta * (cs2 * MINKOWSKI[a, b]
                                  + e2h * (cs2 - 1.0) * v[a] * v[b])
    ginv[0, 0] = -1.0  # algebraic identity by the Theta normalization
    stacked = np.moveaxis(ginv, (0, 1), (-2, -1))
    det = np.linalg.det(stacked)
    if np.any(np.abs(det) < 1e-300) or not np.all(np.isfinite(det)):
        bad = np.unravel_index(int(np.argmin(np.abs(det))), grid.shape)
        raise ThermoError(f"singular acoustic metric at grid point {bad}")
    gcov = np.moveaxis(np.linalg.inv(stacked), (-2, -1), (0, 1))
    return AcousticMetric(ginv, gcov, ScalarField2D(grid, theta))


def acoustic_metric(state: FluidState, eos: EquationOfState) -> AcousticMetric:
    if eos.stiff:
        shape = (3, 3) + state.grid.shape
        ginv = np.broadcast_to(MINKOWSKI[..., None, None], shape).copy()
        gcov = ginv.copy()
        theta = ScalarField2D(state.grid, np.ones(state.grid.shape))
        return AcousticMetric(ginv, gcov, theta)
    return acoustic_metric_from(eos.cs2(state.h), state.h,
                                state.v0, state.v1, state.v2, state.grid)
