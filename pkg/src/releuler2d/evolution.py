"""Time integration of the symmetric hyperbolic form of the equations.

The evolved unknowns are U = (p(h), e^{-h} v1, e^{-h} v2): exactly the
variables in which the system A^0(U) dt U + A^i(U) di U = 0 is symmetric
hyperbolic with positive definite A^0. After every RK4 stage U is mapped back
to (h, v1, v2) by inverting the monotone map p(h) and re-lifting v0, so the
normalization constraint is exact on every slice.

Spatial derivatives are spectral with 2/3 dealiasing after nonlinear products;
an optional exponential filter (order 36, amplitude 36, acting on the top
third of retained modes) is available for rough runs. Matrix assembly and the
stage arithmetic are pointwise data-parallel; the time loop is sequential.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import Grid2D, dealias, deriv
from .thermo import EquationOfState, FluidState, ThermoError

ADMISSIBILITY_FLOOR = 0.1  # min over grid of (v0)^2 - |v|^2 = e^{2h}


class EvolutionError(RuntimeError):
    """NaN/Inf blow-up or loss of admissibility during a run."""

    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial


def assemble_matrices(state: FluidState, eos: EquationOfState) -> np.ndarray:
    """Pointwise A^0, A^1, A^2 stacked as shape (3, 3, 3, nx, ny).

    Entries exactly as printed for the unknowns (p, e^{-h}v^1, e^{-h}v^2),
    with rho'(p) = 1/c_s^2 and index lowering v_0 = -v^0. All three matrices
    are symmetric; A^0 is positive definite on admissible states.
    """
    cs2 = eos.cs2(state.h)
    if np.any(cs2 <= 0.0):
        raise ThermoError("c_s = 0: matrix assembly undefined")
    rho = eos.rho(state.h)
    p = rho ** eos.A
    emh = np.exp(-state.h)
    v0 = state.v0
    v = (v0, state.v1, state.v2)
    rp = rho + p
    rp_inv = 1.0 / rp
    drho_dp = 1.0 / cs2

    A = np.zeros((3, 3, 3) + state.grid.shape)
    for k in range(3):
        A[k, 0, 0] = rp_inv ** 2 * drho_dp * emh * v[k]
        for i in (1, 2):
            for j in (1, 2):
                # 1 + v^i v_j / (v^0 v_0) = delta_ij - v^i v^j / (v^0)^2
                A[k, i, j] = emh * v[k] * ((1.0 if i == j else 0.0)
                                           - v[i] * v[j] / (v0 * v0))
    # A^0 couplings: -(rho+p)^{-1} v^i / v_0 = +(rho+p)^{-1} v^i / v^0
    for i in (1, 2):
        A[0, 0, i] = A[0, i, 0] = rp_inv * v[i] / v0
    # A^k couplings carry +(rho+p)^{-1}: with this sign the eigenvalues of
    # (A^0)^{-1} A^i n_i are exactly the acoustic-cone speeds (subluminal);
    # the opposite sign is the same symmetric form written for -p and gives
    # spurious superluminal characteristics.
    A[1, 0, 1] = A[1, 1, 0] = rp_inv
    A[2, 0, 2] = A[2, 2, 0] = rp_inv
    return A


def state_to_U(state: FluidState, eos: EquationOfState) -> np.ndarray:
    emh = np.exp(-state.h)
    return np.stack([eos.p(state.h), emh * state.v1, emh * state.v2])


def U_to_state(U: np.ndarray, grid: Grid2D, eos: EquationOfState) -> FluidState:
    h = eos.h_of_p(U[0])
    eh = np.exp(h)
    return FluidState(grid, h, eh * U[1], eh * U[2])


def rhs_U(state: FluidState, eos: EquationOfState) -> np.ndarray:
    """dt U = -(A^0)^{-1} (A^1 d1 U + A^2 d2 U), spectral and dealiased."""
    g = state.grid
    A = assemble_matrices(state, eos)
    U = state_to_U(state, eos)
    dU1 = np.stack([deriv(g, U[c], 0) for c in range(3)])
    dU2 = np.stack([deriv(g, U[c], 1) for c in range(3)])
    flux = np.einsum('ij...,j...->i...', A[1], dU1)
    flux += np.einsum('ij...,j...->i...', A[2], dU2)
    A0 = np.moveaxis(A[0], (0, 1), (-2, -1))
    try:
        dtU = -np.linalg.solve(A0, np.moveaxis(flux, 0, -1)[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise EvolutionError(f"singular A^0 in rhs: {exc}") from exc
    dtU = np.moveaxis(dtU, -1, 0)
    return np.stack([dealias(g, dtU[c]) for c in range(3)])


def rhs_state(state: FluidState, eos: EquationOfState) -> dict[str, np.ndarray]:
    """Time derivatives of the primitive fields (h, v1, v2) at this instant.

    Chain rule through U: dt h = dt p / (dp/dh); dt v^i = e^h (dt U_i + U_i dt h).
    Used for initial-time vorticity and linearization diagnostics.
    """
    dtU = rhs_U(state, eos)
    dth = dtU[0] / eos.dp_dh(state.h)
    eh = np.exp(state.h)
    emh = np.exp(-state.h)
    dtv1 = eh * (dtU[1] + emh * state.v1 * dth)
    dtv2 = eh * (dtU[2] + emh * state.v2 * dth)
    return {"h": dth, "v1": dtv1, "v2": dtv2}


def cfl_dt(state: FluidState, grid: Grid2D, c_cfl: float = 0.4) -> float:
    """dt = C_cfl * dx: characteristic speeds are bounded by light speed 1."""
    return c_cfl * min(grid.dx, grid.dy)


def exponential_filter_mask(grid: Grid2D, order: int = 36, amplitude: float = 36.0) -> np.ndarray:
    """Damping profile on the top third of retained modes, 1 elsewhere."""
    k1, k2 = grid.wavenumbers()
    kcut1 = (2 * np.pi / grid.lx) * grid.nx / 3.0
    kcut2 = (2 * np.pi / grid.ly) * grid.ny / 3.0
    mask = np.ones(grid.shape)
    for k, kcut in ((np.abs(k1), kcut1), (np.abs(k2), kcut2)):
        start = 2.0 * kcut / 3.0
        frac = np.clip((k - start) / (kcut - start), 0.0, 1.0)
        mask *= np.exp(-amplitude * frac ** order)
    return mask


def _apply_filter(grid: Grid2D, U: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.empty_like(U)
    for c in range(3):
        out[c] = np.real(np.fft.ifft2(np.fft.fft2(U[c]) * mask))
    return out


def step_rk4(state: FluidState, dt: float, eos: EquationOfState,
             filter_mask: np.ndarray | None = None) -> FluidState:
    """One classical RK4 step; stages reconstruct (h, v) via p -> h inversion."""
    g = state.grid
    U0 = state_to_U(state, eos)
    k1 = rhs_U(state, eos)
    k2 = rhs_U(U_to_state(U0 + 0.5 * dt * k1, g, eos), eos)
    k3 = rhs_U(U_to_state(U0 + 0.5 * dt * k2, g, eos), eos)
    k4 = rhs_U(U_to_state(U0 + dt * k3, g, eos), eos)
    U = U0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if filter_mask is not None:
        U = _apply_filter(g, U, filter_mask)
    return U_to_state(U, g, eos)


@dataclass
class Trajectory:
    """Uniformly sampled time slab of constraint-lifted states."""

    t0: float
    dt: float
    states: list[FluidState] = field(default_factory=list)

    def __len__(self):
        return len(self.states)

    def time(self, n: int) -> float:
        return self.t0 + n * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.states))

    def stack(self, name: str) -> np.ndarray:
        """(nt, nx, ny) array of one primitive field over the slab."""
        if name == "v0":
            return np.stack([s.v0 for s in self.states])
        return np.stack([getattr(s, name) for s in self.states])

    @property
    def grid(self) -> Grid2D:
        return self.states[0].grid


def evolve(state: FluidState, T: float, eos: EquationOfState,
           observers=(), dt: float | None = None, c_cfl: float = 0.4,
           use_filter: bool = False, n_steps: int | None = None) -> Trajectory:
    """Advance to time T (or for n_steps) recording every accepted slice.

    Observers are reentrant callables (step, t, state) -> bool; returning
    False aborts the run cleanly. dt is uniform: T is divided evenly so the
    final slice lands exactly on T.
    """
    g = state.grid
    if n_steps is None:
        base = dt if dt is not None else cfl_dt(state, g, c_cfl)
        n_steps = max(1, int(np.ceil(T / base - 1e-12)))
    dt_eff = T / n_steps
    if dt_eff > cfl_dt(state, g, c_cfl) * (1.0 + 1e-9):
        raise EvolutionError(
            f"dt = {dt_eff:.6g} exceeds the CFL bound {cfl_dt(state, g, c_cfl):.6g}")
    mask = exponential_filter_mask(g) if use_filter else None
    traj = Trajectory(t0=0.0, dt=dt_eff, states=[state.copy()])
    current = state
    for n in range(1, n_steps + 1):
        try:
            current = step_rk4(current, dt_eff, eos, mask)
        except (ThermoError, FloatingPointError) as exc:
            raise EvolutionError(f"state left the admissible set: {exc}",
                                 time=traj.time(n - 1), partial=traj) from exc
        bad = ~(np.isfinite(current.h) & np.isfinite(current.v1)
                & np.isfinite(current.v2))
        if np.any(bad):
            raise EvolutionError(
                f"non-finite state at t = {traj.time(n):.6g}",
                time=traj.time(n), partial=traj)
        floor = np.min(np.exp(2.0 * current.h))
        if floor < ADMISSIBILITY_FLOOR:
            raise EvolutionError(
                f"admissibility floor violated (min e^(2h) = {floor:.3g}) "
                f"at t = {traj.time(n):.6g}", time=traj.time(n), partial=traj)
        traj.states.append(current.copy())
        for obs in observers:
            if obs(n, traj.time(n), current) is False:
                return traj
    return traj
