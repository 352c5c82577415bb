"""Shared test fixtures and independent reference implementations.

The helpers here deliberately avoid the package's own quadrature/update code
paths: dense-sampling projections and a first-order finite-volume gas solver
serve as slow-but-simple cross-checks.
"""

import numpy as np
import pytest

from slbgk.mesh import build_mesh


@pytest.fixture
def mesh_p2():
    return build_mesh(0.0, 1.0, 8, 2)


def dense_l2_project(fn, lo, hi, k, n=4001):
    """Monomial-basis least-squares fit on [lo, hi] from dense samples,
    returned as coefficients in xi = 2(x - mid)/(hi - lo)."""
    x = np.linspace(lo, hi, n)
    xi = 2.0 * (x - 0.5 * (lo + hi)) / (hi - lo)
    A = np.vander(xi, k + 1, increasing=True)
    coeffs, *_ = np.linalg.lstsq(A, fn(x), rcond=None)
    return coeffs


def lax_friedrichs_gas_run(rho0, mom0, E0, dx, t_end, cfl=0.45, gamma=3.0):
    """First-order finite-volume solver for the 1D gas dynamics equations
    with a local Lax-Friedrichs flux and outflow boundaries.

    Independent oracle for the fluid-limit shock tube: no DG, no
    semi-Lagrangian machinery, just cell averages.
    """
    U = np.stack([rho0, mom0, E0], axis=0).astype(float)

    def flux(U):
        rho, mom, E = U
        u = mom / rho
        p = (gamma - 1.0) * (E - 0.5 * mom * u)
        return np.stack([mom, mom * u + p, (E + p) * u], axis=0)

    def max_speed(U):
        rho, mom, E = U
        u = mom / rho
        p = (gamma - 1.0) * (E - 0.5 * mom * u)
        return np.abs(u) + np.sqrt(gamma * p / rho)

    t = 0.0
    while t < t_end - 1e-14:
        a = max_speed(U)
        dt = min(cfl * dx / a.max(), t_end - t)
        Ug = np.concatenate([U[:, :1], U, U[:, -1:]], axis=1)
        F = flux(Ug)
        ag = np.concatenate([a[:1], a, a[-1:]])
        amax = np.maximum(ag[:-1], ag[1:])
        Fhat = 0.5 * (F[:, :-1] + F[:, 1:]) - 0.5 * amax * (Ug[:, 1:] - Ug[:, :-1])
        U = U - dt / dx * (Fhat[:, 1:] - Fhat[:, :-1])
        t += dt
    return U
