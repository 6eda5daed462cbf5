"""Shared scenario builders for the test suite."""

import numpy as np

from releuler2d import evolution as ev
from releuler2d import thermo as th
from releuler2d.fields import Grid2D, deriv


def periodic_bump(grid, center=(np.pi, np.pi), kappa=4.0):
    """Exactly periodic von Mises bump, analytic on the torus."""
    x1, x2 = grid.coords()
    return (np.exp(kappa * (np.cos(x1 - center[0]) - 1.0))
            * np.exp(kappa * (np.cos(x2 - center[1]) - 1.0)))


def background_h(eos):
    return 0.0 if eos.stiff else float(eos.h_of_rho(0.25))


def bump_state(grid, eos, amplitude, vortex=False):
    """h-bump (irrotational) or divergence-free velocity bump (vortex)."""
    hbg = background_h(eos)
    bump = periodic_bump(grid)
    if vortex:
        psi = amplitude * bump
        v1 = -deriv(grid, psi, 1)
        v2 = deriv(grid, psi, 0)
        return th.FluidState(grid, np.full(grid.shape, hbg), v1, v2)
    return th.FluidState(grid, hbg + amplitude * bump,
                         np.zeros(grid.shape), np.zeros(grid.shape))


def bump_run(nx, eos, amplitude=0.02, n_steps=14, vortex=False):
    """Evolve the bump over a fixed physical span (dt tied to 1/nx pairing)."""
    grid = Grid2D(nx, nx)
    st = bump_state(grid, eos, amplitude, vortex=vortex)
    T = n_steps * 0.4 * (2 * np.pi / 128)
    return ev.evolve(st, T, eos, n_steps=n_steps)


def paired_runs(eos, pairs=((32, 8), (64, 16)), amplitude=0.02, vortex=False):
    """Refinement pair with dt halved alongside dx (same physical span)."""
    base_steps = pairs[0][1]
    base_T = base_steps * 0.4 * (2 * np.pi / 128)
    out = {}
    for nx, steps in pairs:
        grid = Grid2D(nx, nx)
        st = bump_state(grid, eos, amplitude, vortex=vortex)
        out[nx] = ev.evolve(st, base_T, eos, n_steps=steps)
    return out


def analytic_trajectory(grid, nt, dt, amp=0.1, time_dep=True, h_shift=0.0):
    """Synthetic smooth non-solution trajectory (for oracles and controls)."""
    x1, x2 = grid.coords()
    states = []
    for k in range(nt):
        t = k * dt if time_dep else 0.0
        h = h_shift + amp * np.sin(x1) * np.cos(x2) + 0.5 * amp * np.cos(2 * x2 + t)
        v1 = (2 * amp * np.sin(x1 + x2) + amp * t) * np.ones(grid.shape)
        v2 = (1.5 * amp * np.cos(x1) * np.sin(x2) - 0.5 * amp * t) * np.ones(grid.shape)
        states.append(th.FluidState(grid, h, v1, v2))
    return ev.Trajectory(t0=0.0, dt=dt, states=states)


def constant_trajectory(grid, eos, nt=9, dt=0.05):
    st = th.FluidState(grid, np.full(grid.shape, background_h(eos)),
                       np.zeros(grid.shape), np.zeros(grid.shape))
    return ev.Trajectory(t0=0.0, dt=dt, states=[st.copy() for _ in range(nt)])
