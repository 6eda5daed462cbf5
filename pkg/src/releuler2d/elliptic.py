"""Space-time elliptic operator P, ellipticity certificates, v = v+ + v- split.

The operator (Id - P) with P = (m^{bg} + 2 e^{-2h} v^b v^g) d2_{bg} is solved
on a taper-extended, time-periodized slab: the evolved slab [0, T] is
reflected with linear ramps onto [-T, 0) and (T, 2T) (the paper's device for
avoiding boundary conditions) and made 3T-periodic. Coefficients are extended
by ramping the primitive fields (h, v1, v2) and re-lifting v0, which keeps
every leading principal minor >= 1 on the whole extended slab (ramping the
velocity vector literally would destroy ellipticity at the ends; see the
decisions ledger).

Discretization: Fourier in space, 2nd-order centered differences in
(periodic) time, coefficients outside the second differences (non-divergence
form as printed). The Krylov iteration is GMRES preconditioned by the
constant-coefficient symbol of the same discretization with slab-averaged
coefficients; the symbol is >= 1 on every discrete mode for admissible
states, so the preconditioner is always invertible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .evolution import Trajectory
from .fields import Grid2D
from .stencil import SpaceTimeJet
from .thermo import FluidState, MINKOWSKI
from .vorticity import EPSILON_UPPER, _NONZERO, trajectory_jet, _w_from_jet


class EllipticError(RuntimeError):
    """Solver failed to meet the residual contract within the iteration cap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def ellipticity_minors(state: FluidState):
    """Leading principal minors of P^{bg} = m^{bg} + 2 e^{-2h} v^b v^g.

    Closed forms: p1 = -1 + 2e^{-2h}(v0)^2, p2 = -1 + 2e^{-2h}((v0)^2-(v1)^2),
    p3 = -1 + 2e^{-2h}((v0)^2-|v|^2), and p3 == 1 identically under the
    normalization constraint.
    """
    e2h = np.exp(-2.0 * state.h)
    v0sq = state.v0 ** 2
    p1 = -1.0 + 2.0 * e2h * v0sq
    p2 = -1.0 + 2.0 * e2h * (v0sq - state.v1 ** 2)
    p3 = -1.0 + 2.0 * e2h * (v0sq - state.v1 ** 2 - state.v2 ** 2)
    return p1, p2, p3


def p_coefficients(h: np.ndarray, v0: np.ndarray, v1: np.ndarray,
                   v2: np.ndarray) -> dict[str, np.ndarray]:
    """The six independent components of P^{bg} as pointwise fields."""
    e2h = np.exp(-2.0 * h)
    v = (v0, v1, v2)
    out = {}
    for b in range(3):
        for g in range(b, 3):
            out[f"P{b}{g}"] = MINKOWSKI[b, g] + 2.0 * e2h * v[b] * v[g]
    return out


def vminus_rhs(traj: Trajectory, slab: tuple[int, int]) -> np.ndarray:
    """Data of the v- equation on slab slices, 4th-order interior stencils.

    F^a = -eps^{abg} d_b w_g in the pinned permutation-symbol convention:
    this is d_k(d^a v^k - d^k v^a), the combination the wave equation for v
    actually produces, so the v+ equation closes with the (1+c_s^2)
    coefficient (see the decisions ledger). Needs trajectory slices
    slab[0]-2 .. slab[1]+2.
    """
    a0, a1 = slab
    out = np.zeros((3, a1 - a0 + 1) + traj.grid.shape)
    for k, n in enumerate(range(a0, a1 + 1)):
        jet = trajectory_jet(traj, n)
        dw = np.stack([_w_from_jet(jet, b) for b in range(3)])  # d_b w^g
        for a, b, g in _NONZERO:
            out[a, k] -= EPSILON_UPPER[a, b, g] * MINKOWSKI[g, g] * dw[b, g]
    return out


@dataclass
class ExtendedSlabSystem:
    """(Id - P) on the taper-extended periodic slab, plus its preconditioner."""

    grid: Grid2D
    dt: float
    coeffs: dict[str, np.ndarray]  # each (M, nx, ny)
    rtol: float = 1e-9
    iteration_cap: int | None = None
    residual_history: list = field(default_factory=list)

    def __post_init__(self):
        self.M = self.coeffs["P00"].shape[0]
        k1, k2 = self.grid.wavenumbers()
        self._ik1 = 1j * k1
        self._ik2 = 1j * k2
        omega = 2.0 * np.pi * np.fft.fftfreq(self.M, d=self.dt)
        self._tau_sq = (2.0 * np.sin(omega * self.dt / 2.0) / self.dt) ** 2
        self._tau_c = np.sin(omega * self.dt) / self.dt
        if self.iteration_cap is None:
            self.iteration_cap = 10 * (self.M + self.grid.nx)
        self._symbol = self._build_symbol()

    # -- discrete derivative blocks (periodic time axis 0) ------------------
    def _dt1(self, f):
        return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * self.dt)

    def _dt2(self, f):
        return (np.roll(f, -1, axis=0) - 2.0 * f + np.roll(f, 1, axis=0)) / self.dt ** 2

    def _dx(self, f, axis):
        ik = self._ik1 if axis == 0 else self._ik2
        return np.real(np.fft.ifft2(np.fft.fft2(f, axes=(1, 2)) * ik, axes=(1, 2)))

    def apply_P(self, f: np.ndarray) -> np.ndarray:
        c = self.coeffs
        d1 = self._dx(f, 0)
        d2 = self._dx(f, 1)
        out = c["P00"] * self._dt2(f)
        out += 2.0 * c["P01"] * self._dt1(d1)
        out += 2.0 * c["P02"] * self._dt1(d2)
        out += c["P11"] * self._dx(d1, 0)
        out += 2.0 * c["P12"] * self._dx(d1, 1)
        out += c["P22"] * self._dx(d2, 1)
        return out

    def apply(self, f: np.ndarray) -> np.ndarray:
        return f - self.apply_P(f)

    # -- constant-coefficient symbol preconditioner -------------------------
    def _mean_coeffs(self) -> dict[str, float]:
        return {k: float(np.mean(v)) for k, v in self.coeffs.items()}

    def symbol(self, mean: dict[str, float] | None = None) -> np.ndarray:
        """Discrete symbol of (Id - Pbar) over (omega, k) modes, shape (M, nx, ny)."""
        m = mean if mean is not None else self._mean_coeffs()
        k1, k2 = self.grid.wavenumbers()
        tau_sq = self._tau_sq[:, None, None]
        tau_c = self._tau_c[:, None, None]
        sym = (1.0 + m["P00"] * tau_sq
               + 2.0 * m["P01"] * tau_c * k1[None]
               + 2.0 * m["P02"] * tau_c * k2[None]
               + m["P11"] * k1[None] ** 2
               + 2.0 * m["P12"] * (k1 * k2)[None]
               + m["P22"] * k2[None] ** 2)
        return sym

    def _build_symbol(self) -> np.ndarray:
        return self.symbol()

    def precondition(self, r: np.ndarray) -> np.ndarray:
        rh = np.fft.fftn(r, axes=(0, 1, 2))
        return np.real(np.fft.ifftn(rh / self._symbol, axes=(0, 1, 2)))

    # -- solve ---------------------------------------------------------------
    def solve(self, F: np.ndarray) -> np.ndarray:
        """GMRES solve of (Id - P) f = F to relative residual <= rtol."""
        shape = F.shape
        n = F.size
        op = LinearOperator((n, n), matvec=lambda x: self.apply(x.reshape(shape)).ravel())
        pre = LinearOperator((n, n), matvec=lambda x: self.precondition(x.reshape(shape)).ravel())
        self.residual_history = []
        sol, info = gmres(op, F.ravel(), M=pre, rtol=self.rtol * 0.1, atol=0.0,
                          restart=80, maxiter=max(2, self.iteration_cap // 80),
                          callback=lambda pr: self.residual_history.append(float(pr)),
                          callback_type="pr_norm")
        sol = sol.reshape(shape)
        res = float(np.linalg.norm(self.apply(sol) - F) / max(np.linalg.norm(F), 1e-300))
        if res > self.rtol:
            raise EllipticError(
                f"elliptic solve stalled: relative residual {res:.3e} > {self.rtol:.1e}",
                diagnostics=self.diagnostics(res))
        return sol

    def diagnostics(self, final_residual: float) -> dict:
        return {
            "iterations": len(self.residual_history),
            "final_residual": final_residual,
            "slab_extent": self.M * self.dt,
            "preconditioner_symbol_min": float(np.min(self._symbol)),
        }


def _extend_index_map(N: int):
    """Extended length M=3(N-1), physical offsets, source indices, ramps."""
    M = 3 * (N - 1)
    phys = np.arange(M) - (N - 1)
    src = np.empty(M, dtype=int)
    ramp = np.empty(M)
    for k, p in enumerate(phys):
        if 0 <= p <= N - 1:
            src[k], ramp[k] = p, 1.0
        elif p < 0:
            src[k], ramp[k] = -p, 1.0 + p / (N - 1)
        else:
            src[k], ramp[k] = 2 * (N - 1) - p, 2.0 - p / (N - 1)
    return M, src, ramp


def taper_extend(stack: np.ndarray, ramp_values: bool = True) -> np.ndarray:
    """Reflect-ramp a slab stack (N, ...) to the periodic extension (M, ...)."""
    N = stack.shape[0]
    M, src, ramp = _extend_index_map(N)
    out = stack[src].copy()
    if ramp_values:
        out *= ramp.reshape((M,) + (1,) * (stack.ndim - 1))
    return out


def extended_system_from_trajectory(traj: Trajectory, slab: tuple[int, int],
                                    rtol: float = 1e-9) -> ExtendedSlabSystem:
    """Taper-extend the primitive fields, re-lift v0, assemble the system."""
    a0, a1 = slab
    h = taper_extend(traj.stack("h")[a0:a1 + 1])
    v1 = taper_extend(traj.stack("v1")[a0:a1 + 1])
    v2 = taper_extend(traj.stack("v2")[a0:a1 + 1])
    v0 = np.sqrt(np.exp(2.0 * h) + v1 ** 2 + v2 ** 2)
    coeffs = p_coefficients(h, v0, v1, v2)
    return ExtendedSlabSystem(traj.grid, traj.dt, coeffs, rtol=rtol)


@dataclass
class VminusResult:
    """v- on the original slab plus solver bookkeeping."""

    slab: tuple[int, int]
    vminus: np.ndarray            # (3, N, nx, ny)
    rhs: np.ndarray               # (3, N, nx, ny) curl w used as data
    interior_residual: float      # relative residual restricted to the slab
    diagnostics: dict

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics, sort_keys=True)


def solve_vminus(traj: Trajectory, slab: tuple[int, int],
                 rhs: np.ndarray | None = None, rtol: float = 1e-9) -> VminusResult:
    """Solve (Id - P) v-^a = eps^{abg} d_b w_g on the taper-extended slab.

    `slab` = (first, last) trajectory slice indices, inclusive; needs >= 8
    slices and two extra trajectory slices on each side for the rhs stencils.
    """
    a0, a1 = slab
    N = a1 - a0 + 1
    if N < 8:
        raise EllipticError(f"slab needs >= 8 slices, got {N}")
    if a0 < 2 or a1 > len(traj) - 3:
        raise EllipticError("slab must leave 2 trajectory slices on each side")
    if rhs is None:
        rhs = vminus_rhs(traj, slab)
    system = extended_system_from_trajectory(traj, slab, rtol=rtol)
    M, src, ramp = _extend_index_map(N)
    sol = np.zeros((3,) + (M,) + traj.grid.shape)
    iters = 0
    for a in range(3):
        F = taper_extend(rhs[a])
        if np.max(np.abs(F)) == 0.0:
            continue
        sol[a] = system.solve(F)
        iters += len(system.residual_history)
    # restrict to the original slab (physical indices 0..N-1)
    keep = slice(N - 1, 2 * (N - 1) + 1)
    vminus = sol[:, keep]
    # interior relative residual: original rows only
    num = den = 0.0
    for a in range(3):
        F = taper_extend(rhs[a])
        r = system.apply(sol[a]) - F
        num += float(np.sum(r[keep] ** 2))
        den += float(np.sum(F[keep] ** 2))
    interior = float(np.sqrt(num / max(den, 1e-300)))
    diag = system.diagnostics(interior)
    diag["iterations"] = iters
    return VminusResult(slab=slab, vminus=vminus, rhs=rhs,
                        interior_residual=interior, diagnostics=diag)


def slab_sobolev_l2t(grid: Grid2D, stack: np.ndarray, s: float, dt: float) -> float:
    """( sum_t ||f(t)||_{H^s}^2 dt )^{1/2} over a slab stack (N, nx, ny)."""
    from .fields import ScalarField2D, sobolev_norm
    total = sum(sobolev_norm(ScalarField2D(grid, stack[k]), s) ** 2
                for k in range(stack.shape[0]))
    return float(np.sqrt(total * dt))


def decompose(traj: Trajectory, result: VminusResult,
              exponents=(0.0, 0.25, 0.5)) -> dict:
    """v+ = v - v- on the slab and the elliptic-estimate ratio report.

    Ratios ||v-||_{L2 H^{2+a}} / ||w||_{L2 H^{1+a}} and
    ||dt v-||_{L2 H^{1+a}} / ||w||_{L2 H^{1+a}} for a in `exponents`;
    constants are fitted by measurement, never assumed.
    """
    a0, a1 = result.slab
    g = traj.grid
    dt = traj.dt
    v_stack = np.stack([traj.stack("v0")[a0:a1 + 1],
                        traj.stack("v1")[a0:a1 + 1],
                        traj.stack("v2")[a0:a1 + 1]])
    vplus = v_stack - result.vminus
    # w on the slab for the ratio denominators
    from .vorticity import compute_vorticity
    w_stack = np.stack([compute_vorticity(traj, n) for n in range(a0, a1 + 1)], axis=1)
    # dt v- by the solver-consistent 2nd-order stencil (interior slices)
    dtv = (result.vminus[:, 2:] - result.vminus[:, :-2]) / (2.0 * dt)
    report = {"slab": result.slab, "ratios": {}}
    for a in exponents:
        den = np.sqrt(sum(slab_sobolev_l2t(g, w_stack[c], 1.0 + a, dt) ** 2
                          for c in range(3)))
        num2 = np.sqrt(sum(slab_sobolev_l2t(g, result.vminus[c], 2.0 + a, dt) ** 2
                           for c in range(3)))
        num1 = np.sqrt(sum(slab_sobolev_l2t(g, dtv[c], 1.0 + a, dt) ** 2
                           for c in range(3)))
        report["ratios"][f"a={a:g}"] = {
            "vminus_H2a_over_w_H1a": num2 / den if den > 0 else 0.0,
            "dt_vminus_H1a_over_w_H1a": num1 / den if den > 0 else 0.0,
        }
    return {"vplus": vplus, "report": report}
