"""Vorticity w, modified vorticity W, their transport laws, index identities.

Index convention (pinned by the contraction-identity check): both epsilon
tables are plain permutation symbols with value +1 at (0,1,2). This is the
unique pairing under which

    eps_{alpha i 0} eps^{alpha beta gamma}
        = delta^beta_i delta^gamma_0 - delta^beta_0 delta^gamma_i

holds entrywise as printed; obtaining the lower table by honest metric
lowering flips the sign (det m = -1) and fails the check. Vector indices are
still raised/lowered with Minkowski m = diag(-1, 1, 1): v_0 = -v^0, w_0 = -w^0.

All time derivatives are interior 4th-order stencils applied to mixed
derivatives of the velocity itself, so every quantity at slice n needs at
most slices n-3..n+3.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .evolution import Trajectory
from .fields import ScalarField2D, l2_norm
from .stencil import SpaceTimeJet, StencilError
from .thermo import EquationOfState, MINKOWSKI


def _perm_symbol() -> np.ndarray:
    e = np.zeros((3, 3, 3))
    for p in itertools.permutations(range(3)):
        inv = sum(1 for i in range(3) for j in range(i + 1, 3) if p[i] > p[j])
        e[p] = 1.0 if inv % 2 == 0 else -1.0
    return e


#: eps^{abc}: permutation symbol with eps^{012} = +1
EPSILON_UPPER = _perm_symbol()
#: eps_{abc}: same symbol (see module docstring; NOT the metric lowering)
EPSILON_LOWER = _perm_symbol()

_NONZERO = [(a, b, c) for a in range(3) for b in range(3) for c in range(3)
            if EPSILON_UPPER[a, b, c] != 0.0]


@dataclass
class VorticityPair:
    """w = (w^0, w^1, w^2) and W = (W^0, W^1, W^2) at one slice."""

    w: np.ndarray  # shape (3, nx, ny)
    W: np.ndarray


def contraction_identity_table(epsilon_lower: np.ndarray = EPSILON_LOWER,
                               epsilon_upper: np.ndarray = EPSILON_UPPER) -> np.ndarray:
    """C[i, b, c] = eps_{a i 0} eps^{a b c}, exact integers."""
    return np.einsum('ai,abc->ibc', epsilon_lower[:, :, 0], epsilon_upper)


def contraction_identity_holds(epsilon_lower: np.ndarray = EPSILON_LOWER) -> bool:
    """Entrywise check of eps_{a i 0} eps^{a b c} = d^b_i d^c_0 - d^b_0 d^c_i."""
    C = contraction_identity_table(epsilon_lower)
    delta = np.eye(3)
    ok = True
    for i in (1, 2):
        for b in range(3):
            for c in range(3):
                target = delta[b, i] * delta[c, 0] - delta[b, 0] * delta[c, i]
                ok &= C[i, b, c] == target
    return bool(ok)


def trajectory_jet(traj: Trajectory, n: int) -> SpaceTimeJet:
    """Jet of the lowered velocity (v_0, v_1, v_2) and h around slice n."""
    stacks = {
        "h": traj.stack("h"),
        "v_0": -traj.stack("v0"),
        "v_1": traj.stack("v1"),
        "v_2": traj.stack("v2"),
    }
    return SpaceTimeJet(traj.grid, traj.dt, n, stacks)


def _w_from_jet(jet: SpaceTimeJet, *extra: int) -> np.ndarray:
    """w^a (optionally differentiated by the extra Greek indices) at the slice."""
    out = np.zeros((3,) + jet.grid.shape)
    for a, b, c in _NONZERO:
        out[a] += EPSILON_UPPER[a, b, c] * jet.d(f"v_{c}", b, *extra)
    return out


def compute_vorticity(traj: Trajectory, n: int) -> np.ndarray:
    """w^a = eps^{abc} d_b v_c at slice n; needs 2 <= n <= len-3."""
    if not (2 <= n <= len(traj) - 3):
        raise StencilError(f"slice {n} is not interior (need 2 <= n <= {len(traj) - 3})")
    return _w_from_jet(trajectory_jet(traj, n))


def compute_W_from(w: np.ndarray, dw: np.ndarray, dh: np.ndarray,
                   cs2: np.ndarray) -> np.ndarray:
    """W^a = eps^{abc} d_b w_c + (1 - c_s^{-2}) eps^{abc} w_c d_b h.

    dw[b, a] = d_b w^a (upper index); dh[b] = d_b h. The lowering w_c uses
    Minkowski. In the stiff case the coefficient is exactly zero and W is the
    pure curl.
    """
    coeff = 1.0 - 1.0 / cs2
    W = np.zeros_like(w)
    for a, b, c in _NONZERO:
        sgn = MINKOWSKI[c, c]
        W[a] += EPSILON_UPPER[a, b, c] * (sgn * dw[b, c] + coeff * sgn * w[c] * dh[b])
    return W


def compute_W(traj: Trajectory, n: int, eos: EquationOfState) -> VorticityPair:
    """Vorticity pair (w, W) at slice n from the trajectory jet."""
    if not (2 <= n <= len(traj) - 3):
        raise StencilError(f"slice {n} is not interior (need 2 <= n <= {len(traj) - 3})")
    jet = trajectory_jet(traj, n)
    w = _w_from_jet(jet)
    dw = np.stack([_w_from_jet(jet, b) for b in range(3)])  # dw[b, a] = d_b w^a
    dh = np.stack([jet.d("h", b) for b in range(3)])
    cs2 = eos.cs2(traj.states[n].h)
    return VorticityPair(w, compute_W_from(w, dw, dh, cs2))


def divergence_residual(traj: Trajectory, n: int) -> np.ndarray:
    """d_a w^a at slice n; vanishes to stencil/rounding order by antisymmetry."""
    jet = trajectory_jet(traj, n)
    dw = np.stack([_w_from_jet(jet, b) for b in range(3)])
    return dw[0, 0] + dw[1, 1] + dw[2, 2]


def _raise_greek(d_lower: np.ndarray) -> np.ndarray:
    """Flip the 0-component: d^a f from d_a f stacks (first axis Greek)."""
    out = d_lower.copy()
    out[0] = -out[0]
    return out


def transport_residual_w(traj: Trajectory, n: int) -> np.ndarray:
    """Residual of v^k d_k w^a - w^k d^a v_k + w^a d_k v^k at slice n.

    Vanishes (to discretization order) on solutions of the evolution system;
    O(1) on arbitrary fields.
    """
    if not (2 <= n <= len(traj) - 3):
        raise StencilError(f"slice {n} is not interior (need 2 <= n <= {len(traj) - 3})")
    jet = trajectory_jet(traj, n)
    st = traj.states[n]
    v_up = np.stack([st.v0, st.v1, st.v2])
    w = _w_from_jet(jet)
    dw = np.stack([_w_from_jet(jet, b) for b in range(3)])  # d_b w^a
    # dv[b, c] = d_b v_c (lowered second index)
    dv = np.stack([np.stack([jet.d(f"v_{c}", b) for c in range(3)]) for b in range(3)])
    div_v = sum(MINKOWSKI[k, k] * dv[k, k] for k in range(3))  # d_k v^k = m^{kc} d_k v_c
    res = np.zeros((3,) + jet.grid.shape)
    for a in range(3):
        adv = sum(v_up[k] * dw[k, a] for k in range(3))
        # w^k d^a v_k with m diagonal: d^a = m^{aa} d_a
        stretch = MINKOWSKI[a, a] * sum(w[k] * dv[a, k] for k in range(3))
        res[a] = adv - stretch + w[a] * div_v
    return res


def transport_residual_W(traj: Trajectory, n: int, eos: EquationOfState,
                         stiff_two_term: bool = False) -> np.ndarray:
    """Residual of the modified-vorticity transport law at slice n.

        v^k d_k W^a  -  [ -eps^{abg} d_b v^k d_k w_g - eps^{abg} d_b w_g d^k v_k
                          + eps^{abg} d_b w^k d_g v_k
                          + eps^{abg} w_g d_b{(c_s^{-2}-1) v^k} d_k h
                          - eps^{abg} (c_s^{-2}-1) v^k d_k w_g d_b h
                          + 2 eps^{abg} c_s^{-3} c_s' v^k w_g d_k h d_b h ]

    With stiff_two_term=True only the two epsilon-gradient terms are kept
    (the stiff reduction, where div v = 0 dynamically and c_s' = 0).
    Needs 3 <= n <= len-4 (third time derivatives).
    """
    if not (3 <= n <= len(traj) - 4):
        raise StencilError(f"slice {n} needs 3 <= n <= {len(traj) - 4}")
    jet = trajectory_jet(traj, n)
    st = traj.states[n]
    grid = traj.grid
    v_up = np.stack([st.v0, st.v1, st.v2])
    h = st.h
    cs2 = eos.cs2(h)
    cs = np.sqrt(cs2)
    csp = eos.cs_prime(h)

    w = _w_from_jet(jet)
    dw_up = np.stack([_w_from_jet(jet, b) for b in range(3)])        # d_b w^a
    d2w_up = np.stack([np.stack([_w_from_jet(jet, b, k) for k in range(3)])
                       for b in range(3)])                            # d_b d_k w^a
    dh = np.stack([jet.d("h", b) for b in range(3)])
    dv = np.stack([np.stack([jet.d(f"v_{c}", b) for c in range(3)]) for b in range(3)])
    div_v_up = sum(MINKOWSKI[k, k] * dv[k, k] for k in range(3))

    # W stack is not materialized; v^k d_k W^a expands through the jet:
    # W^a = eps^{abg}[ m_gg d_b w^g + coeff * m_gg w^g d_b h ], coeff = 1-cs^{-2}
    coeff = 1.0 - 1.0 / cs2
    # d_k coeff = 2 c_s^{-3} c_s' d_k h
    dcoeff = np.stack([2.0 * cs ** -3 * csp * dh[k] for k in range(3)])

    lhs = np.zeros((3,) + grid.shape)
    for a, b, g in _NONZERO:
        sgn = MINKOWSKI[g, g]
        e = EPSILON_UPPER[a, b, g]
        for k in range(3):
            # v^k d_k [ eps m_gg d_b w^g ]
            lhs[a] += e * sgn * v_up[k] * d2w_up[b, k, g]
            # v^k d_k [ eps coeff m_gg w^g d_b h ]
            lhs[a] += e * sgn * v_up[k] * (
                dcoeff[k] * w[g] * dh[b]
                + coeff * dw_up[k, g] * dh[b]
                + coeff * w[g] * jet.d("h", b, k))

    rhs = np.zeros((3,) + grid.shape)
    cm1 = 1.0 / cs2 - 1.0  # (c_s^{-2} - 1)
    dcm1 = np.stack([-dcoeff[k] for k in range(3)])  # d_b (c_s^{-2}-1) = -d_b coeff
    for a, b, g in _NONZERO:
        e = EPSILON_UPPER[a, b, g]
        sgn_g = MINKOWSKI[g, g]
        t1 = t2 = t3 = t4 = t5 = t6 = 0.0
        for k in range(3):
            # -eps d_b v^k d_k w_g
            t1 = t1 - MINKOWSKI[k, k] * dv[b, k] * sgn_g * dw_up[k, g]
            # +eps d_b w^k d_g v_k
            t3 = t3 + dw_up[b, k] * dv[g, k]
            if not stiff_two_term:
                # +eps w_g d_b{(cs^{-2}-1) v^k} d_k h
                dbvk_up = MINKOWSKI[k, k] * dv[b, k]
                t4 = t4 + sgn_g * w[g] * (dcm1[b] * v_up[k] + cm1 * dbvk_up) * dh[k]
                # -eps (cs^{-2}-1) v^k d_k w_g d_b h
                t5 = t5 - cm1 * v_up[k] * sgn_g * dw_up[k, g] * dh[b]
                # +2 eps cs^{-3} cs' v^k w_g d_k h d_b h
                t6 = t6 + 2.0 * cs ** -3 * csp * v_up[k] * sgn_g * w[g] * dh[k] * dh[b]
        if not stiff_two_term:
            # -eps d_b w_g d^k v_k
            t2 = -sgn_g * dw_up[b, g] * div_v_up
        rhs[a] += e * (t1 + t2 + t3 + t4 + t5 + t6)
    return lhs - rhs


def hodge_identity_checks(traj: Trajectory, n: int, eos: EquationOfState,
                          epsilon_lower: np.ndarray = EPSILON_LOWER) -> dict:
    """Contraction identity plus the div/grad reconstructions of w from W.

    Reconstructions substitute the transport law, so they hold (to stencil
    order) on evolved trajectories only. `epsilon_lower` is a test hook: a
    flipped table must fail the identity check.
    """
    report = {"contraction_identity_ok": contraction_identity_holds(epsilon_lower)}

    jet = trajectory_jet(traj, n)
    st = traj.states[n]
    grid = traj.grid
    v_up = np.stack([st.v0, st.v1, st.v2])
    v0 = v_up[0]
    pair = compute_W(traj, n, eos)
    w_up, W_up = pair.w, pair.W
    w_low = np.stack([MINKOWSKI[a, a] * w_up[a] for a in range(3)])
    dw_up = np.stack([_w_from_jet(jet, b) for b in range(3)])
    dh = np.stack([jet.d("h", b) for b in range(3)])
    dv = np.stack([np.stack([jet.d(f"v_{c}", b) for c in range(3)]) for b in range(3)])
    div_v_up = sum(MINKOWSKI[k, k] * dv[k, k] for k in range(3))
    cm1 = 1.0 / eos.cs2(st.h) - 1.0

    # (ew13): div w = (v0)^{-1} v^i d_i w^0 + (v0)^{-1} w^k d_t v_k
    #                 + (v0)^{-1} w^0 d^k v_k
    div_w = dw_up[1, 1] + dw_up[2, 2]
    rhs13 = (v_up[1] * dw_up[1, 0] + v_up[2] * dw_up[2, 0]) / v0
    rhs13 += sum(w_up[k] * dv[0, k] for k in range(3)) / v0
    rhs13 += w_up[0] * div_v_up / v0
    res13 = div_w - rhs13

    # (ew16): d_i w_0 = eps_{a i 0} W^a + (1-c_s^{-2})(w_i d_t h - w_0 d_i h)
    #   - (v0)^{-1} v^j d_j w_i + (v0)^{-1} w^k d_i v_k - (v0)^{-1} w_i d^k v_k
    # (sign of the (1-c_s^{-2}) bracket re-derived; see decisions ledger)
    res16 = []
    for i in (1, 2):
        # d_i w_0 = m_{00} d_i w^0
        lhs = -dw_up[i, 0]
        contr = sum(epsilon_lower[a, i, 0] * W_up[a] for a in range(3))
        rhs = contr + (-cm1) * (w_low[i] * dh[0] - w_low[0] * dh[i])
        rhs += (-v_up[1] * _w_from_jet(jet, 1)[i] - v_up[2] * _w_from_jet(jet, 2)[i]) / v0
        rhs += sum(w_up[k] * dv[i, k] for k in range(3)) / v0
        rhs -= w_low[i] * div_v_up / v0
        res16.append(lhs - rhs)

    scale = max(l2_norm(grid, w_up[0]), l2_norm(grid, w_up[1]),
                l2_norm(grid, w_up[2]), 1e-30)
    report["ew13_residual_l2"] = l2_norm(grid, res13)
    report["ew16_residual_l2"] = float(np.sqrt(sum(l2_norm(grid, r) ** 2 for r in res16)))
    report["w_scale_l2"] = scale
    return report


def residual_report_json(scenario: str, traj: Trajectory, n: int,
                         residuals: dict[str, float]) -> str:
    """Serialize residual L2 norms per equation, spec wire format."""
    payload = {
        "scenario": scenario,
        "nx": traj.grid.nx,
        "dt": traj.dt,
        "slice": n,
        "residual_L2": residuals,
    }
    return json.dumps(payload, sort_keys=True)
