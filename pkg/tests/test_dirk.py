"""DIRK tableaus, stage forms, relaxation solve, stiff limits."""

import numpy as np
import pytest

from slbgk import dirk
from slbgk.kinetics import MacroFields, VelocityGrid, maxwellian, moments, phase_space_totals
from slbgk.limiter import LmppLimiter
from slbgk.mesh import build_mesh


def test_tableau_registry():
    for name, stages in (("backward_euler", 1), ("dirk2", 2), ("dirk3_4stage", 4)):
        tab = dirk.tableau(name)
        assert tab.s == stages
        tab.validate()
    with pytest.raises(ValueError):
        dirk.tableau("rk4")


def test_tableau_row_sums_match_abscissae():
    for name in ("backward_euler", "dirk2", "dirk3_4stage"):
        tab = dirk.tableau(name)
        assert np.allclose(tab.A.sum(axis=1), tab.c, atol=1e-15)


def test_dirk2_coefficients():
    tab = dirk.tableau("dirk2")
    nu = 1.0 - np.sqrt(2.0) / 2.0
    assert tab.A[0, 0] == pytest.approx(nu)
    assert tab.A[1, 0] == pytest.approx(1.0 - nu)
    assert tab.c[1] == 1.0


def test_dirk3_third_row_sum():
    tab = dirk.tableau("dirk3_4stage")
    assert 61.0 / 144.0 - 49.0 / 144.0 + 0.25 == pytest.approx(1.0 / 3.0)
    assert tab.c[2] == pytest.approx(1.0 / 3.0)
    # signed stage shifts: c_3 - c_2 < 0
    assert tab.c[2] - tab.c[1] < 0.0


def test_stiffly_accurate():
    for name in ("backward_euler", "dirk2", "dirk3_4stage"):
        tab = dirk.tableau(name)
        assert tab.c[-1] == 1.0
        assert np.allclose(tab.A[-1], tab.b, atol=1e-15)


def test_shu_osher_b21():
    tab = dirk.tableau("dirk2")
    so = dirk.shu_osher_coeffs(tab)
    nu = 1.0 - np.sqrt(2.0) / 2.0
    assert so.b[1, 0] == pytest.approx((1.0 - nu) / nu)
    assert so.b[1, 0] == pytest.approx(1.0 + np.sqrt(2.0))


def test_relax_solve_limits():
    f = np.array([1.0, 2.0])
    M = np.array([3.0, 3.0])
    # eps -> 0: result -> M; eps -> inf: result -> f
    near_fluid = dirk.relax_solve(f, M, 0.25, 0.1, 1e-14)
    assert np.allclose(near_fluid, M, atol=1e-10)
    near_free = dirk.relax_solve(f, M, 0.25, 0.1, 1e14)
    assert np.allclose(near_free, f, atol=1e-10)


def test_relax_solve_fixed_point_equation():
    # the returned f solves f = fstar + (a dt / eps)(M - f) exactly
    rng = np.random.default_rng(31)
    fstar = rng.uniform(0.5, 2.0, size=7)
    M = rng.uniform(0.5, 2.0, size=7)
    a, dt, eps = 0.25, 0.03, 0.7
    f = dirk.relax_solve(fstar, M, a, dt, eps)
    assert np.allclose(f, fstar + (a * dt / eps) * (M - f), atol=1e-13)


def _setup(nx=16, nv=60, vmax=8.0, k=2):
    mesh = build_mesh(-1.0, 1.0, nx, k)
    grid = VelocityGrid.uniform(vmax, nv)
    x = mesh.nodes
    rho = 1.0 + 0.1 * np.sin(np.pi * x)
    u = np.full_like(x, 0.05)
    T = np.ones_like(x)
    U = MacroFields(rho=rho, mom=rho * u, E=0.5 * rho * u**2 + 0.5 * rho * T)
    return mesh, grid, maxwellian(U, grid)


def test_schemes_agree_for_backward_euler():
    mesh, grid, f0 = _setup()
    tab = dirk.tableau("backward_euler")
    dt = 4.0 * mesh.dx / grid.vmax
    out1 = dirk.step_scheme1(f0, dt, tab, 1e-2, mesh, grid)
    out2 = dirk.step_scheme2(f0, dt, tab, 1e-2, mesh, grid)
    assert np.array_equal(out1, out2)


def test_schemes_agree_moderate_epsilon():
    # the stage forms are algebraically equivalent only up to the cell
    # projection (shift operators do not compose exactly across a
    # projection), so agreement is at truncation level, not round-off
    mesh, grid, f0 = _setup()
    tab = dirk.tableau("dirk2")
    dt = 2.0 * mesh.dx / grid.vmax
    out1 = dirk.step_scheme1(f0, dt, tab, 1.0, mesh, grid)
    out2 = dirk.step_scheme2(f0, dt, tab, 1.0, mesh, grid)
    assert np.abs(out1 - out2).max() < 1e-4


def test_global_equilibrium_fixed_point():
    mesh = build_mesh(-1.0, 1.0, 12, 2)
    grid = VelocityGrid.uniform(10.0, 80)
    shape = (mesh.nx, mesh.k + 1)
    U = MacroFields(rho=np.ones(shape), mom=np.zeros(shape), E=np.full(shape, 0.5))
    f0 = maxwellian(U, grid)
    for name in ("backward_euler", "dirk2", "dirk3_4stage"):
        res = dirk.run(f0, 10 * 4.0 * mesh.dx / grid.vmax, 4.0, dirk.tableau(name),
                       1e-3, mesh, grid, limiter=LmppLimiter())
        assert np.abs(res.values - f0).max() < 1e-11, name


def test_conservation_over_steps():
    mesh, grid, f0 = _setup(nx=20, nv=100, vmax=15.0)
    tab = dirk.tableau("dirk3_4stage")
    res = dirk.run(f0, 0.02, 4.0, tab, 1e-6, mesh, grid, limiter=LmppLimiter(), record=True)
    q0 = res.totals[0]
    drift = np.abs(res.totals - q0).max(axis=0) / (1.0 + np.abs(q0))
    assert drift.max() < 1e-11


def test_ap_collapse_to_maxwellian():
    # after one stiffly accurate step at tiny eps, f is driven to M(U)
    mesh, grid, f0 = _setup(nx=16, nv=100, vmax=15.0)
    rng = np.random.default_rng(32)
    f0 = f0 * (1.0 + 0.2 * rng.uniform(-1.0, 1.0, size=f0.shape))
    tab = dirk.tableau("dirk2")
    dt = 2.0 * mesh.dx / grid.vmax
    out = dirk.step_scheme1(f0, dt, tab, 1e-12, mesh, grid)
    U = moments(out, grid)
    assert np.abs(out - maxwellian(U, grid)).max() < 1e-5


def test_backward_euler_positivity():
    # nonnegative data stays (essentially) nonnegative with the limiter
    mesh, grid, f0 = _setup(nx=16, nv=60)
    tab = dirk.tableau("backward_euler")
    res = dirk.run(f0, 0.05, 2.0, tab, 1e-6, mesh, grid, limiter=LmppLimiter())
    assert res.values.min() >= -1e-13


def test_collisionless_mode_is_pure_advection():
    # eps=None runs the stage structure without relaxation; scheme 1
    # composes to the exact single-shift transport operator
    mesh = build_mesh(0.0, 1.0, 32, 2)
    grid = VelocityGrid.single(1.0)
    u0 = np.sin(2.0 * np.pi * mesh.nodes)[..., None]
    tab = dirk.tableau("dirk2")
    dt = 3.7 * mesh.dx
    out = dirk.step_scheme1(u0, dt, tab, None, mesh, grid)
    from slbgk.transport import advect_nodal_batch

    direct = advect_nodal_batch(u0, np.array([dt / mesh.dx]), mesh)
    assert np.abs(out - direct).max() < 1e-11


def test_temporal_order_homogeneous_relaxation():
    # spatially uniform data makes every SL shift exact, and homogeneous BGK
    # has the closed form f(t) = M + exp(-t/eps)(f0 - M) with M fixed, so this
    # isolates the time integrator's order from any transport error
    mesh = build_mesh(0.0, 2.0, 4, 2)
    grid = VelocityGrid.uniform(15.0, 100)
    v = grid.nodes[None, None, :]
    f0 = np.broadcast_to(
        0.6 / np.sqrt(2 * np.pi * 0.8) * np.exp(-((v - 1.2) ** 2) / (2 * 0.8))
        + 0.5 / np.sqrt(2 * np.pi * 0.5) * np.exp(-((v + 0.9) ** 2) / (2 * 0.5)),
        (mesh.nx, mesh.k + 1, grid.nv)).copy()
    M = maxwellian(moments(f0, grid), grid)
    eps, t_end = 1e-2, 0.05
    exact = M + np.exp(-t_end / eps) * (f0 - M)

    slopes = {}
    for name in ("backward_euler", "dirk2", "dirk3_4stage"):
        tab = dirk.tableau(name)
        errs = []
        for nsteps in (4, 8, 16, 32):
            vals = f0.copy()
            for _ in range(nsteps):
                vals = dirk.step_scheme1(vals, t_end / nsteps, tab, eps, mesh, grid)
            errs.append(np.abs(vals - exact).max())
        # last dyadic slope; the early ones are preasymptotic for dirk3
        slopes[name] = np.log2(errs[-2] / errs[-1])
    assert abs(slopes["backward_euler"] - 1.0) < 0.4, slopes
    assert abs(slopes["dirk2"] - 2.0) < 0.25, slopes
    assert slopes["dirk3_4stage"] >= 2.5, slopes


def test_run_lands_exactly_on_t_end():
    mesh, grid, f0 = _setup(nx=8, nv=30, vmax=8.0)
    res = dirk.run(f0, 0.013, 3.0, dirk.tableau("dirk2"), 1e-2, mesh, grid, record=True)
    assert res.times[-1] == pytest.approx(0.013, abs=1e-14)
    assert res.n_steps == len(res.times) - 1
