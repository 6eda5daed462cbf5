"""Quadratic sources D, Q; box_g residual oracles; stiff-case specialization.

The residuals here certify the wave-transport reformulation on evolved
trajectories: they are assembled from trajectory stencils (never by
substituting the evolution equations), so a vanishing residual is an
independent check of the derived equations, not a tautology.

Sign conventions adjudicated against the derivations (see decisions ledger):
  - the improved v+ equation carries coefficient (1 + c_s^2) on the
    v^b v^g d2_{bg} v- term (the printed (1 - 3 c_s^2) fails the stiff
    cross-check and is reported as a variant only);
  - the stiff three-term form of D carries a minus on e^{-2h} w.w.

Second derivatives of v- use the elliptic solver's own 2nd-order centered
time stencil, so the Lemma-level algebra cancels down to the solver residual.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .evolution import Trajectory
from .fields import Grid2D, deriv, l2_norm
from .stencil import SpaceTimeJet, StencilError
from .thermo import EquationOfState, FluidState, MINKOWSKI, acoustic_metric
from .vorticity import (EPSILON_UPPER, _NONZERO, _w_from_jet, trajectory_jet)


@dataclass
class QuadraticSources:
    """Right-side quadratic sources at one slice."""

    D: np.ndarray
    Q: np.ndarray  # shape (3, nx, ny)


def _first_derivs(jet: SpaceTimeJet):
    """dh[b] = d_b h and dv[b, c] = d_b v_c (lowered c) at the jet's slice."""
    dh = np.stack([jet.d("h", b) for b in range(3)])
    dv = np.stack([np.stack([jet.d(f"v_{c}", b) for c in range(3)])
                   for b in range(3)])
    return dh, dv


def quadratic_sources(traj: Trajectory, n: int, eos: EquationOfState) -> QuadraticSources:
    """D and Q^a exactly as printed, with analytic c_s'(h) from the EOS."""
    if not (2 <= n <= len(traj) - 3):
        raise StencilError(f"slice {n} is not interior")
    jet = trajectory_jet(traj, n)
    st = traj.states[n]
    dh, dv = _first_derivs(jet)
    cs2 = eos.cs2(st.h)
    cs = np.sqrt(cs2)
    csp = eos.cs_prime(st.h)
    theta = 1.0 / (cs2 - np.exp(-2.0 * st.h) * (cs2 - 1.0) * st.v0 ** 2)
    e2h = np.exp(-2.0 * st.h)
    v_up = np.stack([st.v0, st.v1, st.v2])
    m = MINKOWSKI

    # d_b v^k (raised second index), d^a h, div v, dh.dh
    dv_up = np.stack([np.stack([m[k, k] * dv[b, k] for k in range(3)])
                      for b in range(3)])
    dh_up = np.stack([m[a, a] * dh[a] for a in range(3)])
    div_v = sum(dv_up[k, k] for k in range(3))
    dhdh = sum(dh[k] * dh_up[k] for k in range(3))

    vdh = sum(v_up[b] * dh[b] for b in range(3))
    cross = sum(dv_up[k, b] * dv_up[b, k] for b in range(3) for k in range(3))

    D = (-2.0 * e2h * theta * csp / cs * vdh * vdh
         - e2h * theta * cs2 * cross
         - theta * (1.0 + cs2) * dhdh)

    Q = np.zeros((3,) + traj.grid.shape)
    vdv = np.stack([sum(v_up[b] * dv_up[b, k] for b in range(3))
                    for k in range(3)])  # v^b d_b v^k
    for a in range(3):
        q = -e2h * (cs2 - 1.0) * theta * sum(vdv[k] * dv_up[k, a] for k in range(3))
        q += -2.0 * (cs2 - 1.0) * theta * vdh * dh_up[a]
        q += -2.0 * theta * cs * csp * dh_up[a] * div_v
        q += (cs2 - 1.0) * theta * sum(m[a, a] * dv[a, k] * m[k, k] * dh[k]
                                       for k in range(3))
        q += 2.0 * theta * cs * csp * vdh * dh_up[a]
        Q[a] = q
    return QuadraticSources(D, Q)


def box_g_jet(jet: SpaceTimeJet, name: str, ginv_slice: np.ndarray) -> np.ndarray:
    """g^{bg} d2_{bg} f with 4th-order time stencils, spectral space."""
    out = np.zeros(jet.grid.shape)
    for b in range(3):
        for g in range(3):
            out += ginv_slice[b, g] * jet.d(name, b, g)
    return out


def box_g(stack: np.ndarray, ginv_slice: np.ndarray, n: int, dt: float,
          grid: Grid2D) -> np.ndarray:
    """box_g of a field stack at interior slice n (>= 5 slices)."""
    if stack.shape[0] < 5 or not (2 <= n <= stack.shape[0] - 3):
        raise StencilError("box_g needs an interior slice of a >= 5-slice stack")
    jet = SpaceTimeJet(grid, dt, n, {"f": stack})
    return box_g_jet(jet, "f", ginv_slice)


def _second_derivs_2nd_order(stack: np.ndarray, m: int, dt: float,
                             grid: Grid2D) -> np.ndarray:
    """d2[b, g] of a slab stack at index m, solver-consistent discretization.

    Time: 2nd-order centered (the elliptic solver's stencil); space: spectral.
    """
    if not (1 <= m <= stack.shape[0] - 2):
        raise StencilError("2nd-order second derivatives need one slice margin")
    d2 = np.empty((3, 3) + grid.shape)
    d2[0, 0] = (stack[m + 1] - 2.0 * stack[m] + stack[m - 1]) / dt ** 2
    dtf = (stack[m + 1] - stack[m - 1]) / (2.0 * dt)
    for i in (1, 2):
        d2[0, i] = d2[i, 0] = deriv(grid, dtf, i - 1)
        for j in (1, 2):
            d2[i, j] = deriv(grid, deriv(grid, stack[m], i - 1), j - 1)
    return d2


@dataclass
class WaveResiduals:
    """Residual fields and norms of the wave-transport system at one slice."""

    res_h: np.ndarray
    res_v: np.ndarray                  # (3, nx, ny)
    res_vplus: np.ndarray | None       # (3, nx, ny) or None if v- not given
    l2: dict
    variants: dict


def wave_residuals(traj: Trajectory, n: int, eos: EquationOfState,
                   vminus_result=None) -> WaveResiduals:
    """res_h = box_g h - D;  res_v = box_g v + c_s^2 Theta curl w - Q;
    res_vplus = box_g v+ - [Theta e^{-2h}(1+c_s^2) vv d2 v- - c_s^2 Theta v- + Q].
    """
    if not (2 <= n <= len(traj) - 3):
        raise StencilError(f"slice {n} is not interior")
    jet = trajectory_jet(traj, n)
    st = traj.states[n]
    grid = traj.grid
    met = acoustic_metric(st, eos)
    ginv = met.ginv
    theta = met.theta.values
    cs2 = eos.cs2(st.h)
    src = quadratic_sources(traj, n, eos)

    res_h = box_g_jet(jet, "h", ginv) - src.D

    # curl w term from the same jet stencils used everywhere else
    dw = np.stack([_w_from_jet(jet, b) for b in range(3)])
    curl_w = np.zeros((3,) + grid.shape)
    for a, b, g in _NONZERO:
        curl_w[a] += EPSILON_UPPER[a, b, g] * MINKOWSKI[g, g] * dw[b, g]

    res_v = np.empty((3,) + grid.shape)
    box_v = np.empty((3,) + grid.shape)
    for a in range(3):
        sgn = MINKOWSKI[a, a]  # v^a = m^{aa} v_a from the lowered jet fields
        box_v[a] = sgn * box_g_jet(jet, f"v_{a}", ginv)
        # box_g v = +c_s^2 Theta eps dw + Q in the pinned convention: the
        # curl-of-curl identity d_k(d^a v^k - d^k v^a) = -eps^{abg} d_b w_g
        # carries a minus for w = eps dv with any single epsilon table
        # (verified on random Hessians; the printed identity is sign-slipped)
        res_v[a] = box_v[a] - cs2 * theta * curl_w[a] - src.Q[a]

    l2 = {
        "res_h": l2_norm(grid, res_h),
        "res_v": float(np.sqrt(sum(l2_norm(grid, res_v[a]) ** 2 for a in range(3)))),
    }
    variants = {}
    res_vplus = None
    if vminus_result is not None:
        a0, a1 = vminus_result.slab
        m_idx = n - a0
        if not (1 <= m_idx <= (a1 - a0) - 1):
            raise StencilError("slice n must be interior to the v- slab")
        e2h = np.exp(-2.0 * st.h)
        v_up = np.stack([st.v0, st.v1, st.v2])
        vm = vminus_result.vminus
        res_vplus = np.empty((3,) + grid.shape)
        tt_1p = np.empty((3,) + grid.shape)
        tt_printed = np.empty((3,) + grid.shape)
        for a in range(3):
            d2m = _second_derivs_2nd_order(vm[a], m_idx, traj.dt, grid)
            box_vm = sum(ginv[b, g] * d2m[b, g] for b in range(3) for g in range(3))
            vvd2 = sum(v_up[b] * v_up[g] * d2m[b, g]
                       for b in range(3) for g in range(3))
            rhs_exact = (theta * e2h * (1.0 + cs2) * vvd2
                         - cs2 * theta * vm[a, m_idx] + src.Q[a])
            res_vplus[a] = box_v[a] - box_vm - rhs_exact
            # TT variants: (v^0)^2 T T v- with T = dt + (v0)^{-1} v^i d_i
            dt1 = (vm[a, m_idx + 1] - vm[a, m_idx - 1]) / (2.0 * traj.dt)
            Tvm = dt1 + (v_up[1] * deriv(grid, vm[a, m_idx], 0)
                         + v_up[2] * deriv(grid, vm[a, m_idx], 1)) / v_up[0]
            # second application needs T vm on neighboring slices
            Tstack = []
            for mm in (m_idx - 1, m_idx, m_idx + 1):
                if mm - 1 < 0 or mm + 1 >= vm.shape[1]:
                    Tstack = None
                    break
                d1 = (vm[a, mm + 1] - vm[a, mm - 1]) / (2.0 * traj.dt)
                Tstack.append(d1 + (v_up[1] * deriv(grid, vm[a, mm], 0)
                                    + v_up[2] * deriv(grid, vm[a, mm], 1)) / v_up[0])
            if Tstack is not None:
                dtT = (Tstack[2] - Tstack[0]) / (2.0 * traj.dt)
                TTvm = dtT + (v_up[1] * deriv(grid, Tstack[1], 0)
                              + v_up[2] * deriv(grid, Tstack[1], 1)) / v_up[0]
                v0sq_TT = v_up[0] ** 2 * TTvm
                tt_1p[a] = box_v[a] - box_vm - (
                    theta * e2h * (1.0 + cs2) * v0sq_TT
                    - cs2 * theta * vm[a, m_idx] + src.Q[a])
                tt_printed[a] = box_v[a] - box_vm - (
                    theta * e2h * (1.0 - 3.0 * cs2) * v0sq_TT
                    - cs2 * theta * vm[a, m_idx] + src.Q[a])
            else:
                tt_1p[a] = np.nan
                tt_printed[a] = np.nan
        l2["res_vplus"] = float(np.sqrt(sum(l2_norm(grid, res_vplus[a]) ** 2
                                            for a in range(3))))
        if np.all(np.isfinite(tt_1p)):
            variants["res_vplus_TT_1pcs2"] = float(
                np.sqrt(sum(l2_norm(grid, tt_1p[a]) ** 2 for a in range(3))))
            variants["res_vplus_TT_printed_1m3cs2"] = float(
                np.sqrt(sum(l2_norm(grid, tt_printed[a]) ** 2 for a in range(3))))
    return WaveResiduals(res_h, res_v, res_vplus, l2, variants)


def stiff_three_term_D(traj: Trajectory, n: int) -> np.ndarray:
    """Stiff D via vorticity: -e^{-2h} w.w - e^{-2h} dv.dv - 2 dh.dh.

    Independent of quadratic_sources: evaluated from w = curl v and the raised
    gradient contractions (minus sign on w.w per the ledger; it is the unique
    sign under which this equals the specialized printed D as pure algebra).
    """
    jet = trajectory_jet(traj, n)
    st = traj.states[n]
    dh, dv = _first_derivs(jet)
    w = _w_from_jet(jet)
    m = MINKOWSKI
    e2h = np.exp(-2.0 * st.h)
    ww = sum(m[a, a] * w[a] ** 2 for a in range(3))
    # d_a v^b d^a v_b = m^{aa} m^{bb} (d_a v_b)^2 for diagonal m
    dvdv = sum(m[b, b] * m[k, k] * dv[b, k] ** 2 for b in range(3) for k in range(3))
    dhdh = sum(m[b, b] * dh[b] ** 2 for b in range(3))
    return -e2h * ww - e2h * dvdv - 2.0 * dhdh


def divergence_v(traj: Trajectory, n: int) -> np.ndarray:
    """d_k v^k at slice n (vanishes dynamically in the stiff case)."""
    jet = trajectory_jet(traj, n)
    return sum(MINKOWSKI[k, k] * jet.d(f"v_{k}", k) for k in range(3))


def stiff_checks(traj: Trajectory, eos: EquationOfState,
                 slices=None) -> dict:
    """Stiff-case certificate: div v, two-formula D identity, Q = 0, g = m.

    Rejects non-stiff equations of state.
    """
    if not eos.stiff:
        raise ValueError("stiff_checks requires the stiff EOS (A = 1)")
    grid = traj.grid
    if slices is None:
        slices = [len(traj) // 2]
    report = {"per_slice": []}
    for n in slices:
        src = quadratic_sources(traj, n, eos)
        D_alg = stiff_three_term_D(traj, n)
        scaleD = max(float(np.max(np.abs(src.D))), 1e-30)
        entry = {
            "slice": n,
            "div_v_l2": l2_norm(grid, divergence_v(traj, n)),
            "D_identity_max": float(np.max(np.abs(src.D - D_alg))),
            "D_scale": scaleD,
            "Q_max": float(np.max(np.abs(src.Q))),
        }
        report["per_slice"].append(entry)
    met = acoustic_metric(traj.states[slices[0]], eos)
    mink = MINKOWSKI[..., None, None]
    report["metric_is_minkowski"] = bool(
        np.all(met.ginv == np.broadcast_to(mink, met.ginv.shape)))
    report["Q_max"] = max(e["Q_max"] for e in report["per_slice"])
    report["D_identity_max"] = max(e["D_identity_max"] for e in report["per_slice"])
    return report


def box_minkowski_v(traj: Trajectory, n: int) -> np.ndarray:
    """box v^a with the flat metric (the stiff irrotational wave operator)."""
    jet = trajectory_jet(traj, n)
    mink = np.zeros((3, 3) + traj.grid.shape)
    for a in range(3):
        mink[a, a] = MINKOWSKI[a, a]
    out = np.empty((3,) + traj.grid.shape)
    for a in range(3):
        out[a] = MINKOWSKI[a, a] * box_g_jet(jet, f"v_{a}", mink)
    return out


def write_convergence_csv(path, rows):
    """scenario, nx, dt, equation, L2_residual, observed_order table."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "nx", "dt", "equation",
                         "L2_residual", "observed_order"])
        for row in rows:
            writer.writerow([row["scenario"], row["nx"],
                             np.format_float_scientific(row["dt"], precision=17),
                             row["equation"],
                             np.format_float_scientific(row["L2_residual"], precision=17),
                             "" if row.get("observed_order") is None
                             else f"{row['observed_order']:.3f}"])
