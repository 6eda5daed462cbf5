"""elliptic-decomposition: minors, taper, symbol oracle, Krylov contract."""

import numpy as np
import pytest

from releuler2d import elliptic as el
from releuler2d import evolution as ev
from releuler2d import thermo as th
from releuler2d.fields import Grid2D

from oracles import dense_minors


def uniform_background(grid, eos):
    hbg = 0.0 if eos.stiff else float(eos.h_of_rho(0.25))
    return th.FluidState(grid, np.full(grid.shape, hbg),
                         np.zeros(grid.shape), np.zeros(grid.shape))


def vortex_run(nx=32, n_steps=16, amplitude=0.02):
    eos = th.EquationOfState(2.0)
    grid = Grid2D(nx, nx)
    x1, x2 = grid.coords()
    hbg = float(eos.h_of_rho(0.25))
    psi = amplitude * np.exp(4.0 * (np.cos(x1 - np.pi) - 1.0)) \
        * np.exp(4.0 * (np.cos(x2 - np.pi) - 1.0))
    v1 = -ev.deriv(grid, psi, 1)
    v2 = ev.deriv(grid, psi, 0)
    st = th.FluidState(grid, np.full(grid.shape, hbg), v1, v2)
    T = n_steps * 0.4 * (2 * np.pi / 128)
    return ev.evolve(st, T, eos, n_steps=n_steps), eos


class TestMinors:
    def test_background(self):
        g = Grid2D(16, 16)
        st = th.FluidState(g, np.zeros(g.shape), np.zeros(g.shape), np.zeros(g.shape))
        p1, p2, p3 = el.ellipticity_minors(st)
        for p in (p1, p2, p3):
            assert np.allclose(p, 1.0, atol=1e-14)

    def test_boosted_closed_form(self):
        g = Grid2D(16, 16)
        st = th.FluidState(g, np.zeros(g.shape),
                           np.full(g.shape, 3.0), np.full(g.shape, 4.0))
        p1, p2, p3 = el.ellipticity_minors(st)
        assert np.allclose(p1, 51.0, rtol=1e-13)
        assert np.allclose(p3, 1.0, atol=1e-12)

    def test_thousand_random_states_against_dense_oracle(self):
        rng = np.random.default_rng(77)
        n = 1000
        h = rng.uniform(-1.0, 1.0, n)
        v1 = rng.uniform(-5.0, 5.0, n)
        v2 = rng.uniform(-5.0, 5.0, n)
        v0 = th.lift_velocity(h, v1, v2)
        e2h = np.exp(-2.0 * h)
        p1 = -1.0 + 2.0 * e2h * v0 ** 2
        p2 = -1.0 + 2.0 * e2h * (v0 ** 2 - v1 ** 2)
        p3 = -1.0 + 2.0 * e2h * (v0 ** 2 - v1 ** 2 - v2 ** 2)
        assert np.min(p1) >= 1.0 - 1e-12
        assert np.min(p2) >= 1.0 - 1e-12
        assert np.max(np.abs(p3 - 1.0)) <= 1e-12
        # dense determinant oracle on a subsample
        v = np.stack([v0, v1, v2])
        for idx in rng.integers(0, n, 40):
            P = np.diag([-1.0, 1.0, 1.0]) + 2.0 * e2h[idx] * np.outer(v[:, idx], v[:, idx])
            d1, d2, d3 = dense_minors(P)
            assert d1 == pytest.approx(p1[idx], rel=1e-10)
            assert d2 == pytest.approx(p2[idx], rel=1e-10)
            assert d3 == pytest.approx(p3[idx], rel=1e-8, abs=1e-8)


class TestTaper:
    def test_extension_vanishes_at_period_boundary(self):
        N = 9
        stack = np.random.default_rng(1).normal(size=(N, 4, 4))
        ext = el.taper_extend(stack)
        assert ext.shape[0] == 3 * (N - 1)
        assert np.max(np.abs(ext[0])) == 0.0  # physical t = -T

    def test_interior_unchanged(self):
        N = 9
        stack = np.random.default_rng(2).normal(size=(N, 4, 4))
        ext = el.taper_extend(stack)
        keep = slice(N - 1, 2 * (N - 1) + 1)
        assert np.array_equal(ext[keep], stack)

    def test_coefficients_stay_elliptic(self):
        traj, eos = vortex_run(nx=32, n_steps=12)
        system = el.extended_system_from_trajectory(traj, (2, 10))
        c = system.coeffs
        # p1 = P00 >= 1 everywhere on the extended slab
        assert np.min(c["P00"]) >= 1.0 - 1e-12
        det3 = (c["P00"] * (c["P11"] * c["P22"] - c["P12"] ** 2)
                - c["P01"] * (c["P01"] * c["P22"] - c["P12"] * c["P02"])
                + c["P02"] * (c["P01"] * c["P12"] - c["P11"] * c["P02"]))
        assert np.min(det3) >= 1.0 - 1e-10


class TestSymbolOracle:
    def test_symbol_at_background_is_one_plus_quadratic(self):
        g = Grid2D(16, 16)
        eos = th.EquationOfState(2.0)
        st = uniform_background(g, eos)
        coeffs = el.p_coefficients(
            np.broadcast_to(st.h, (12,) + g.shape).copy(),
            np.broadcast_to(st.v0, (12,) + g.shape).copy(),
            np.broadcast_to(st.v1, (12,) + g.shape).copy(),
            np.broadcast_to(st.v2, (12,) + g.shape).copy())
        system = el.ExtendedSlabSystem(g, 0.05, coeffs)
        sym = system.symbol()
        assert np.min(sym) >= 1.0 - 1e-12
        assert sym[0, 0, 0] == pytest.approx(1.0)

    def test_single_mode_matches_symbol_inverse(self):
        # frozen background coefficients, one space-time Fourier mode
        g = Grid2D(32, 32)
        eos = th.EquationOfState(2.0)
        st = uniform_background(g, eos)
        Mt, dt = 18, 0.05
        coeffs = el.p_coefficients(
            np.broadcast_to(st.h, (Mt,) + g.shape).copy(),
            np.broadcast_to(st.v0, (Mt,) + g.shape).copy(),
            np.broadcast_to(st.v1, (Mt,) + g.shape).copy(),
            np.broadcast_to(st.v2, (Mt,) + g.shape).copy())
        system = el.ExtendedSlabSystem(g, dt, coeffs)
        t = np.arange(Mt) * dt
        x1, x2 = g.coords()
        m_t, k1, k2 = 2, 3, 1
        tau = 2 * np.pi * m_t / (Mt * dt)
        phase = tau * t[:, None, None] + k1 * x1[None] + k2 * x2[None]
        F = np.cos(phase)
        sol = system.solve(F)
        sym = system.symbol()
        # the discrete symbol at the excited modes (real, cos maps to itself
        # only when the odd cross-terms vanish; at v=0 they do)
        idx = (m_t, k1, k2)
        expect = F / sym[idx]
        assert np.max(np.abs(sol - expect)) <= 1e-9 * np.max(np.abs(expect))

    def test_solver_linearity(self):
        traj, eos = vortex_run(nx=32, n_steps=14)
        slab = (2, 11)
        r1 = el.solve_vminus(traj, slab)
        r2 = el.solve_vminus(traj, slab, rhs=2.0 * r1.rhs)
        scale = np.max(np.abs(r2.vminus)) + 1e-30
        assert np.max(np.abs(r2.vminus - 2.0 * r1.vminus)) <= 1e-6 * scale


class TestSolveVminus:
    def test_zero_w_gives_zero(self):
        eos = th.EquationOfState(2.0)
        g = Grid2D(16, 16)
        st = uniform_background(g, eos)
        traj = ev.evolve(st, 0.5, eos, n_steps=14)
        res = el.solve_vminus(traj, (2, 11))
        assert np.max(np.abs(res.vminus)) <= 1e-12

    def test_residual_contract_on_evolved_slab(self):
        traj, eos = vortex_run(nx=32, n_steps=16)
        res = el.solve_vminus(traj, (2, 13))
        assert res.interior_residual <= 1e-8
        assert res.diagnostics["final_residual"] <= 1e-8
        assert "preconditioner_symbol_min" in res.diagnostics

    def test_monotone_residual_decrease(self):
        traj, eos = vortex_run(nx=32, n_steps=14)
        system = el.extended_system_from_trajectory(traj, (2, 11))
        rhs = el.vminus_rhs(traj, (2, 11))
        system.solve(el.taper_extend(rhs[0]))
        hist = system.residual_history
        assert len(hist) >= 1
        assert all(hist[i + 1] <= hist[i] * (1 + 1e-10) for i in range(len(hist) - 1))

    def test_short_slab_rejected(self):
        traj, eos = vortex_run(nx=32, n_steps=10)
        with pytest.raises(el.EllipticError):
            el.solve_vminus(traj, (2, 6))


class TestDecompose:
    def test_vplus_plus_vminus_reconstructs_v(self):
        traj, eos = vortex_run(nx=32, n_steps=16)
        res = el.solve_vminus(traj, (2, 13))
        out = el.decompose(traj, res)
        a0, a1 = res.slab
        v0 = traj.stack("v0")[a0:a1 + 1]
        assert np.allclose(out["vplus"][0] + res.vminus[0], v0, atol=1e-13)

    def test_ratio_report_finite_and_refinement_stable(self):
        vals = {}
        for nx, steps in ((32, 16), (64, 32)):
            traj, eos = vortex_run(nx=nx, n_steps=steps)
            mid = len(traj) // 2
            slab = (mid - 5, mid + 5)
            res = el.solve_vminus(traj, slab)
            out = el.decompose(traj, res)
            r = out["report"]["ratios"]["a=0.25"]["vminus_H2a_over_w_H1a"]
            assert np.isfinite(r) and r > 0
            vals[nx] = r
        assert abs(vals[64] - vals[32]) <= 0.2 * vals[32]
