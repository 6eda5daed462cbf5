"""Acoustic null foliations, null frames, and connection-coefficient audits.

A foliation graph x_theta = phi(t, x') is advanced with the eikonal equation
g^{ab} u_a u_b = 0 for the conormal u = (-dt phi, -dx' phi, 1): since
g^{00} = -1 the equation is monic in dt phi and the branch continuous with
the flat outgoing one is

    dt phi = -g^{0i} u_i + sqrt((g^{0i} u_i)^2 + g^{ij} u_i u_j).

theta is axis-aligned ((0,1), (0,-1), (1,0), (-1,0)): the transverse
coordinate must stay periodic on the torus. The foliation steps with RK4 at
h = 2*dt so every stage lands on a stored trajectory slice (no metric
interpolation in time); the metric is evaluated at off-grid x_theta positions
by trigonometric interpolation, which is exact up to the analytic spectral
tail. At stored samples dt phi is recomputed from the eikonal root, so the
null-conormal contract holds to rounding there.

The frame: l = V/sigma with V = (dr)^sharp, sigma = dt(V) (so dt(l) = 1
exactly); e1 normalizes the slice tangent d_x' + dphi d_theta; lbar is the
exact null completion in span{l, P_e1 d_t} with <l, lbar> = 2 (the printed
l + 2 d_t is not null even in the flat case; the exact completion reduces to
-d_t + d_theta there). Independent (theta, r) foliations may run concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .evolution import Trajectory
from .thermo import EquationOfState, acoustic_metric

AXIS_THETAS = {
    (0.0, 1.0): (2, 1, +1.0),   # x_theta = +x2, x' = x1
    (0.0, -1.0): (2, 1, -1.0),
    (1.0, 0.0): (1, 2, +1.0),   # x_theta = +x1, x' = x2
    (-1.0, 0.0): (1, 2, -1.0),
}


class GeometryError(RuntimeError):
    """Degenerate foliation (causality or ordering violated)."""


@dataclass
class NullFoliation:
    """Graph function phi(t, x') of one characteristic hypersurface."""

    theta: tuple[float, float]
    r: float
    times: np.ndarray           # (nt,)
    phi: np.ndarray             # (nt, nperp)
    phi_t: np.ndarray           # (nt, nperp), eikonal root at each sample
    phi_p: np.ndarray           # (nt, nperp), transverse derivative
    slice_indices: np.ndarray   # trajectory slice index per sample
    axis_theta: int             # 1 or 2: which grid axis is x_theta
    axis_perp: int
    orientation: float


@dataclass
class NullFrame:
    """Frame fields l, lbar, e1 (components in the (t, x1, x2) basis)."""

    l: np.ndarray      # (nt, nperp, 3)
    lbar: np.ndarray
    e1: np.ndarray
    sigma: np.ndarray  # (nt, nperp), dt(V) before normalization
    foliation: NullFoliation


def _perp_deriv(grid, axis_perp: int, values: np.ndarray) -> np.ndarray:
    """Spectral derivative along the (periodic) transverse coordinate."""
    n = grid.nx if axis_perp == 1 else grid.ny
    length = grid.lx if axis_perp == 1 else grid.ly
    k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
    k[n // 2] = 0.0
    return np.real(np.fft.ifft(np.fft.fft(values, axis=-1) * (1j * k), axis=-1))


class _MetricInterpolator:
    """Trigonometric evaluation of per-slice metric fields at offsets x_theta."""

    def __init__(self, grid, axis_theta: int):
        self.grid = grid
        self.axis_theta = axis_theta
        n = grid.nx if axis_theta == 1 else grid.ny
        length = grid.lx if axis_theta == 1 else grid.ly
        self.k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
        self.n = n

    def at(self, field: np.ndarray, x_theta: np.ndarray) -> np.ndarray:
        """field (nx, ny) sampled at (x'_j, x_theta_j) for each transverse j."""
        # move theta axis last: rows indexed by x'
        f = field if self.axis_theta == 2 else field.T
        fh = np.fft.fft(f, axis=-1) / self.n
        phase = np.exp(1j * np.outer(x_theta, self.k))
        return np.real(np.einsum('jk,jk->j', fh, phase))


def _metric_cache(traj: Trajectory, eos: EquationOfState):
    cache: dict[int, np.ndarray] = {}

    def ginv_at(n: int) -> np.ndarray:
        if n not in cache:
            cache[n] = acoustic_metric(traj.states[n], eos).ginv
        return cache[n]

    return ginv_at


def _eikonal_phi_t(ginv_pts: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Outgoing root of the monic null quadratic; ginv_pts shape (npts, 3, 3)."""
    g0u = ginv_pts[:, 0, 1] * u1 + ginv_pts[:, 0, 2] * u2
    quad = (ginv_pts[:, 1, 1] * u1 ** 2 + 2.0 * ginv_pts[:, 1, 2] * u1 * u2
            + ginv_pts[:, 2, 2] * u2 ** 2)
    disc = g0u ** 2 + quad
    if np.any(disc <= 0.0):
        j = int(np.argmin(disc))
        raise GeometryError(f"causality violated: eikonal discriminant <= 0 "
                            f"at transverse index {j}")
    return -g0u + np.sqrt(disc)


def evolve_foliation(traj: Trajectory, theta, r: float,
                     eos: EquationOfState) -> NullFoliation:
    """Flow the graph x_theta = phi(t, x') along the outgoing acoustic cone.

    Initializes phi(t0, x') = r (exact plane) and advances with RK4 at
    h = 2*dt; samples land on even trajectory slices.
    """
    key = (float(theta[0]), float(theta[1]))
    if key not in AXIS_THETAS:
        raise GeometryError(f"theta must be axis-aligned, got {theta}")
    axis_theta, axis_perp, orient = AXIS_THETAS[key]
    grid = traj.grid
    nperp = grid.nx if axis_perp == 1 else grid.ny
    interp = _MetricInterpolator(grid, axis_theta)
    ginv_at = _metric_cache(traj, eos)

    def conormal_components(phi, phi_p):
        """(u1, u2) in the grid basis for the given orientation."""
        # u = d(orient * x_theta - phi):  u_theta = orient, u_perp = -phi_p
        u = {axis_theta: np.full_like(phi, orient), axis_perp: -phi_p}
        return u[1], u[2]

    def phi_t_at(n, phi):
        phi_p = _perp_deriv(grid, axis_perp, phi)
        u1, u2 = conormal_components(phi, phi_p)
        comps = np.empty((nperp, 3, 3))
        g = ginv_at(n)
        x_theta = orient * phi
        for a in range(3):
            for b in range(a, 3):
                comps[:, a, b] = comps[:, b, a] = interp.at(g[a, b], x_theta)
        return _eikonal_phi_t(comps, u1, u2), phi_p

    n_samples = (len(traj) - 1) // 2 + 1
    times = np.empty(n_samples)
    phis = np.empty((n_samples, nperp))
    phi_ts = np.empty((n_samples, nperp))
    phi_ps = np.empty((n_samples, nperp))
    slice_idx = np.empty(n_samples, dtype=int)

    phi = np.full(nperp, float(r))
    h = 2.0 * traj.dt
    for s in range(n_samples):
        n = 2 * s
        times[s] = traj.time(n)
        slice_idx[s] = n
        pt, pp = phi_t_at(n, phi)
        phis[s], phi_ts[s], phi_ps[s] = phi, pt, pp
        if s == n_samples - 1:
            break
        k1, _ = pt, pp
        k2, _ = phi_t_at(n + 1, phi + 0.5 * h * k1)
        k3, _ = phi_t_at(n + 1, phi + 0.5 * h * k2)
        k4, _ = phi_t_at(n + 2, phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return NullFoliation(key, r, times, phis, phi_ts, phi_ps, slice_idx,
                         axis_theta, axis_perp, orient)


def foliation_conormal_null_defect(traj: Trajectory, fol: NullFoliation,
                                   eos: EquationOfState) -> float:
    """max |g^{ab} u_a u_b| over samples; construction contract <= 1e-8."""
    grid = traj.grid
    interp = _MetricInterpolator(grid, fol.axis_theta)
    ginv_at = _metric_cache(traj, eos)
    worst = 0.0
    for s, n in enumerate(fol.slice_indices):
        u = np.empty((fol.phi.shape[1], 3))
        u[:, 0] = -fol.phi_t[s]
        u[:, fol.axis_perp] = -fol.phi_p[s]
        u[:, fol.axis_theta] = fol.orientation
        g = ginv_at(int(n))
        x_theta = fol.orientation * fol.phi[s]
        comps = np.empty((fol.phi.shape[1], 3, 3))
        for a in range(3):
            for b in range(a, 3):
                comps[:, a, b] = comps[:, b, a] = interp.at(g[a, b], x_theta)
        val = np.einsum('jab,ja,jb->j', comps, u, u)
        worst = max(worst, float(np.max(np.abs(val))))
    return worst


def build_null_frame(traj: Trajectory, fol: NullFoliation,
                     eos: EquationOfState) -> NullFrame:
    """Frame l, lbar, e1 along the foliation with the exact Gram contract."""
    grid = traj.grid
    interp = _MetricInterpolator(grid, fol.axis_theta)
    ginv_at = _metric_cache(traj, eos)
    nt, nperp = fol.phi.shape
    l = np.empty((nt, nperp, 3))
    lbar = np.empty((nt, nperp, 3))
    e1 = np.empty((nt, nperp, 3))
    sigma = np.empty((nt, nperp))
    for s, n in enumerate(fol.slice_indices):
        g = ginv_at(int(n))
        x_theta = fol.orientation * fol.phi[s]
        ginv_pts = np.empty((nperp, 3, 3))
        for a in range(3):
            for b in range(a, 3):
                ginv_pts[:, a, b] = ginv_pts[:, b, a] = interp.at(g[a, b], x_theta)
        gcov_pts = np.linalg.inv(ginv_pts)
        u = np.zeros((nperp, 3))
        u[:, 0] = -fol.phi_t[s]
        u[:, fol.axis_perp] = -fol.phi_p[s]
        u[:, fol.axis_theta] = fol.orientation
        V = np.einsum('jab,jb->ja', ginv_pts, u)
        sig = V[:, 0]
        if np.any(sig <= 0.0):
            raise GeometryError(f"sigma <= 0 at sample {s}: foliation degenerate")
        sigma[s] = sig
        l[s] = V / sig[:, None]
        # e1: normalize the slice tangent (0, dx'=1, dtheta = phi_p)
        t1 = np.zeros((nperp, 3))
        t1[:, fol.axis_perp] = 1.0
        t1[:, fol.axis_theta] = fol.orientation * fol.phi_p[s]
        nrm = np.einsum('jab,ja,jb->j', gcov_pts, t1, t1)
        e1[s] = t1 / np.sqrt(nrm)[:, None]
        # lbar: exact null completion in span{l, N'} with N' = P_e1 d_t
        N = np.zeros((nperp, 3))
        N[:, 0] = 1.0
        g_Ne = np.einsum('jab,ja,jb->j', gcov_pts, N, e1[s])
        Np = N - g_Ne[:, None] * e1[s]
        g_lN = np.einsum('jab,ja,jb->j', gcov_pts, l[s], Np)
        g_NN = np.einsum('jab,ja,jb->j', gcov_pts, Np, Np)
        beta = 2.0 / g_lN
        lbar[s] = beta[:, None] * (Np - (g_NN / (2.0 * g_lN))[:, None] * l[s])
    return NullFrame(l, lbar, e1, sigma, fol)


def frame_gram_defect(traj: Trajectory, frame: NullFrame,
                      eos: EquationOfState) -> float:
    """max deviation of the frame Gram matrix from [[0,2,0],[2,0,0],[0,0,1]]."""
    fol = frame.foliation
    grid = traj.grid
    interp = _MetricInterpolator(grid, fol.axis_theta)
    ginv_at = _metric_cache(traj, eos)
    target = np.array([[0.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    worst = 0.0
    for s, n in enumerate(fol.slice_indices):
        g = ginv_at(int(n))
        x_theta = fol.orientation * fol.phi[s]
        ginv_pts = np.empty((fol.phi.shape[1], 3, 3))
        for a in range(3):
            for b in range(a, 3):
                ginv_pts[:, a, b] = ginv_pts[:, b, a] = interp.at(g[a, b], x_theta)
        gcov_pts = np.linalg.inv(ginv_pts)
        vecs = [frame.l[s], frame.lbar[s], frame.e1[s]]
        for i in range(3):
            for j in range(3):
                val = np.einsum('jab,ja,jb->j', gcov_pts, vecs[i], vecs[j])
                worst = max(worst, float(np.max(np.abs(val - target[i, j]))))
    return worst


# ---------------------------------------------------------------------------
# connection coefficient chi and the transport audit
# ---------------------------------------------------------------------------

def _perp_wavenumbers(grid, axis_perp: int) -> np.ndarray:
    n = grid.nx if axis_perp == 1 else grid.ny
    length = grid.lx if axis_perp == 1 else grid.ly
    k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
    k[n // 2] = 0.0
    return k


def _perp_deriv_1d(grid, axis_perp: int, values: np.ndarray) -> np.ndarray:
    """Spectral d/dx' of a 1D on-foliation array."""
    k = _perp_wavenumbers(grid, axis_perp)
    return np.real(np.fft.ifft(np.fft.fft(values) * (1j * k)))


def _interp_sym33(interp: _MetricInterpolator, field: np.ndarray,
                  x_theta: np.ndarray) -> np.ndarray:
    out = np.empty((x_theta.shape[0], 3, 3))
    for a in range(3):
        for b in range(a, 3):
            out[:, a, b] = out[:, b, a] = interp.at(field[a, b], x_theta)
    return out


def metric_time_stack(traj: Trajectory, eos: EquationOfState, n: int):
    """gcov at slices n-1, n, n+1 plus ginv at n (2nd-order time stencils)."""
    if not (1 <= n <= len(traj) - 2):
        raise GeometryError("metric stencils need one interior slice margin")
    mets = [acoustic_metric(traj.states[k], eos) for k in (n - 1, n, n + 1)]
    return mets[0].gcov, mets[1], mets[2].gcov


def christoffel(traj: Trajectory, eos: EquationOfState,
                n: int) -> tuple[np.ndarray, np.ndarray]:
    """(Gamma^l_{mn}, dg[c,a,b] = d_c g_{ab}) on the grid at slice n."""
    from .fields import deriv as sderiv
    gm1, met, gp1 = metric_time_stack(traj, eos, n)
    gcov, ginv = met.gcov, met.ginv
    dg = np.empty((3, 3, 3) + traj.grid.shape)
    for a in range(3):
        for b in range(3):
            dg[0, a, b] = (gp1[a, b] - gm1[a, b]) / (2.0 * traj.dt)
            dg[1, a, b] = sderiv(traj.grid, gcov[a, b], 0)
            dg[2, a, b] = sderiv(traj.grid, gcov[a, b], 1)
    gamma = np.empty((3, 3, 3) + traj.grid.shape)
    for lam in range(3):
        for mu in range(3):
            for nu in range(3):
                acc = np.zeros(traj.grid.shape)
                for kap in range(3):
                    acc += ginv[lam, kap] * (dg[mu, kap, nu] + dg[nu, kap, mu]
                                             - dg[kap, mu, nu])
                gamma[lam, mu, nu] = 0.5 * acc
    return gamma, dg


def riemann_lower(traj: Trajectory, eos: EquationOfState, n: int) -> np.ndarray:
    """R_{abmn} on the grid at slice n from second differences of gcov.

    R_{abmn} = (d2_{am} g_{bn} + d2_{bn} g_{am} - d2_{bm} g_{an} - d2_{an} g_{bm})/2
               + g_{kl} (G^k_{am} G^l_{bn} - G^k_{an} G^l_{bm}).
    Time parts use 2nd-order centered differences (coarse-tolerance audit).
    """
    from .fields import deriv as sderiv
    gm1, met, gp1 = metric_time_stack(traj, eos, n)
    gcov = met.gcov
    dt = traj.dt
    grid = traj.grid
    d2 = np.empty((3, 3, 3, 3) + grid.shape)  # d2[c, d, a, b] = d_c d_d g_{ab}
    for a in range(3):
        for b in range(3):
            d2[0, 0, a, b] = (gp1[a, b] - 2.0 * gcov[a, b] + gm1[a, b]) / dt ** 2
            dtg = (gp1[a, b] - gm1[a, b]) / (2.0 * dt)
            for i in (1, 2):
                d2[0, i, a, b] = d2[i, 0, a, b] = sderiv(grid, dtg, i - 1)
                for j in (1, 2):
                    d2[i, j, a, b] = sderiv(grid, sderiv(grid, gcov[a, b], i - 1), j - 1)
    gamma, _ = christoffel(traj, eos, n)
    R = np.empty((3, 3, 3, 3) + grid.shape)
    for a in range(3):
        for b in range(3):
            for m in range(3):
                for nn in range(3):
                    term = 0.5 * (d2[a, m, b, nn] + d2[b, nn, a, m]
                                  - d2[b, m, a, nn] - d2[a, nn, b, m])
                    quad = np.zeros(grid.shape)
                    for k in range(3):
                        for lam in range(3):
                            quad += gcov[k, lam] * (gamma[k, a, m] * gamma[lam, b, nn]
                                                    - gamma[k, a, nn] * gamma[lam, b, m])
                    R[a, b, m, nn] = term + quad
    return R


def connection_chi(traj: Trajectory, frame: NullFrame,
                   eos: EquationOfState) -> dict:
    """chi, l(ln sigma), and the Raychaudhuri-type transport audit.

    chi = <D_{e1} l, e1>_g; the audit residual is
    l(chi) + chi^2 + l(ln sigma) chi - <R(l, e1) l, e1>_g, reported at coarse
    tolerance (curvature from second differences of gcov, 2nd-order chart
    stencils on the foliation).
    """
    fol = frame.foliation
    grid = traj.grid
    interp = _MetricInterpolator(grid, fol.axis_theta)
    nt, nperp = fol.phi.shape
    usable = [s for s in range(nt)
              if 1 <= int(fol.slice_indices[s]) <= len(traj) - 2]
    chi = np.empty((len(usable), nperp))
    riem = np.empty((len(usable), nperp))
    e1_perp_scale = np.empty((len(usable), nperp))
    for row, s in enumerate(usable):
        n = int(fol.slice_indices[s])
        gamma, _ = christoffel(traj, eos, n)
        met = acoustic_metric(traj.states[n], eos)
        x_theta = fol.orientation * fol.phi[s]
        gcov_pts = np.linalg.inv(_interp_sym33(interp, met.ginv, x_theta))
        lv, e1v = frame.l[s], frame.e1[s]
        # tangential derivative of l along e1 = (e1 . dx'/ds) d/dx' restricted
        dl_dxp = np.stack([_perp_deriv_1d(grid, fol.axis_perp, lv[:, a])
                           for a in range(3)], axis=-1)
        scale = e1v[:, fol.axis_perp]  # e1 = t1/|t1|, t1 has unit x' component
        De1_l = scale[:, None] * dl_dxp
        gam_pts = np.empty((nperp, 3, 3, 3))
        for lam in range(3):
            for mu in range(3):
                for nu in range(mu, 3):
                    vals = interp.at(gamma[lam, mu, nu], x_theta)
                    gam_pts[:, lam, mu, nu] = vals
                    gam_pts[:, lam, nu, mu] = vals
        De1_l += np.einsum('jamn,jm,jn->ja', gam_pts, e1v, lv)
        chi[row] = np.einsum('jab,ja,jb->j', gcov_pts, De1_l, e1v)
        e1_perp_scale[row] = scale
        Rg = riemann_lower(traj, eos, n)
        R_pts = np.empty((nperp, 3, 3, 3, 3))
        for a in range(3):
            for b in range(3):
                for m in range(3):
                    for nn in range(3):
                        R_pts[:, a, b, m, nn] = interp.at(Rg[a, b, m, nn], x_theta)
        riem[row] = np.einsum('jabmn,ja,jb,jm,jn->j', R_pts, lv, e1v, lv, e1v)

    # chart derivative along l: l(q) = d_t q + l^{x'} d_x' q on (t, x') charts
    dt_fol = fol.times[1] - fol.times[0] if nt > 1 else traj.dt
    lnsig = np.log(frame.sigma)

    def l_of(rows: np.ndarray, row: int) -> np.ndarray:
        s = usable[row]
        dts = (rows[row + 1] - rows[row - 1]) / (2.0 * dt_fol)
        dxs = _perp_deriv_1d(grid, fol.axis_perp, rows[row])
        return dts + frame.l[s][:, fol.axis_perp] * dxs

    lnsig_rows = np.stack([lnsig[s] for s in usable])
    lnsig_l = np.full((len(usable), nperp), np.nan)
    audit = np.full((len(usable), nperp), np.nan)
    for row in range(1, len(usable) - 1):
        if usable[row + 1] - usable[row] != 1 or usable[row] - usable[row - 1] != 1:
            continue
        lnsig_l[row] = l_of(lnsig_rows, row)
        lchi = l_of(chi, row)
        audit[row] = lchi + chi[row] ** 2 + lnsig_l[row] * chi[row] - riem[row]
    interior = ~np.isnan(audit[:, 0]) if audit.size else np.array([], dtype=bool)
    return {
        "slices": [int(fol.slice_indices[s]) for s in usable],
        "chi": chi,
        "l_ln_sigma": lnsig_l,
        "riemann_term": riem,
        "audit_residual": audit,
        "chi_sup": float(np.max(np.abs(chi))) if chi.size else np.nan,
        "audit_sup": float(np.nanmax(np.abs(audit[interior])))
        if np.any(interior) else np.nan,
        "sigma_rel": frame.sigma / frame.sigma[0],
    }


# ---------------------------------------------------------------------------
# foliation norms (the functional-R proxy)
# ---------------------------------------------------------------------------

def foliation_norms(traj: Trajectory, fol: NullFoliation,
                    exponents=(1.8, 1.85)) -> dict:
    """Slab norm of d phi - dt along the foliation, for s0 in `exponents`.

    Realizes ||| d phi - dt |||_{s0 - 1/4, 2} with the 1D transverse spectral
    Sobolev norm and trapezoid time quadrature over the components
    (phi_t - 1, phi_{x'}); the time-derivative branch (j = 1 in the slab
    norm) uses 2nd-order interior stencils over foliation samples.
    """
    grid = traj.grid
    k = _perp_wavenumbers(grid, fol.axis_perp)
    nt, nperp = fol.phi.shape
    length = grid.lx if fol.axis_perp == 1 else grid.ly
    dt_fol = fol.times[1] - fol.times[0] if nt > 1 else traj.dt

    def h_norm_1d(vals: np.ndarray, s: float) -> float:
        vh = np.fft.fft(vals) / nperp
        weights = (1.0 + k ** 2) ** s
        return float(np.sqrt(np.sum(weights * np.abs(vh) ** 2) * length))

    comps = {"phi_t_minus_1": fol.phi_t - 1.0, "phi_perp": fol.phi_p}
    report = {}
    for s0 in exponents:
        a = s0 - 0.25
        j0 = 0.0
        for vals in comps.values():
            j0 += np.trapezoid([h_norm_1d(vals[s], a) ** 2 for s in range(nt)],
                               dx=dt_fol)
        j1 = 0.0
        if nt >= 3:
            for vals in comps.values():
                dtv = np.empty((nt - 2, nperp))
                for s in range(1, nt - 1):
                    dtv[s - 1] = (vals[s + 1] - vals[s - 1]) / (2.0 * dt_fol)
                j1 += np.trapezoid([h_norm_1d(dtv[s], a - 1.0) ** 2
                                    for s in range(nt - 2)], dx=dt_fol)
        report[f"s0={s0:g}"] = float(np.sqrt(max(j0, j1)))
    return report


def foliation_ordering_defect(fols: list[NullFoliation]) -> float:
    """min over time of the gap between consecutive-r foliations (no crossing)."""
    ordered = sorted(fols, key=lambda f: f.r)
    worst = np.inf
    for lo, hi in zip(ordered, ordered[1:]):
        worst = min(worst, float(np.min(hi.phi - lo.phi)))
    return worst


def export_foliation_csv(path, fols_with_chi):
    """Per-(theta, r) rows of (t, min/max/mean of phi_t - 1, chi sup-norm)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "r", "t", "phi_t_minus_1_min",
                         "phi_t_minus_1_max", "phi_t_minus_1_mean", "chi_sup"])
        for fol, chi_sup in fols_with_chi:
            dev = fol.phi_t - 1.0
            for s in range(fol.phi.shape[0]):
                writer.writerow([
                    f"({fol.theta[0]:g},{fol.theta[1]:g})",
                    np.format_float_scientific(fol.r, precision=17),
                    np.format_float_scientific(fol.times[s], precision=17),
                    np.format_float_scientific(float(np.min(dev[s])), precision=17),
                    np.format_float_scientific(float(np.max(dev[s])), precision=17),
                    np.format_float_scientific(float(np.mean(dev[s])), precision=17),
                    "" if chi_sup is None else
                    np.format_float_scientific(chi_sup, precision=17),
                ])
