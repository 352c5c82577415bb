"""Exact Riemann solver for the 1D compressible Euler equations.

Used as the fluid-limit oracle for the shock tube: the d = 1 BGK closure gives
E = rho u^2/2 + rho T/2 and p = rho T, i.e. a gamma-law gas with
gamma = (d+2)/d = 3. The solver follows the classical two-branch pressure
function with a Newton iteration (Toro's book, ch. 4); sampling covers the
full wave fan including sonic rarefactions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAMMA_1D = 3.0


@dataclass(frozen=True)
class EulerState:
    rho: float
    u: float
    p: float

    def __post_init__(self):
        if self.rho <= 0.0 or self.p <= 0.0:
            raise ValueError(f"non-physical state: rho={self.rho}, p={self.p}")

    def sound_speed(self, gamma: float = GAMMA_1D) -> float:
        return np.sqrt(gamma * self.p / self.rho)

    def mirrored(self) -> "EulerState":
        return EulerState(rho=self.rho, u=-self.u, p=self.p)


def _pressure_fn(p: float, s: EulerState, gamma: float) -> tuple[float, float]:
    """f_K(p) and its derivative for one side of the pressure equation."""
    if p > s.p:  # shock branch
        A = 2.0 / ((gamma + 1.0) * s.rho)
        B = (gamma - 1.0) / (gamma + 1.0) * s.p
        root = np.sqrt(A / (p + B))
        f = (p - s.p) * root
        df = root * (1.0 - 0.5 * (p - s.p) / (p + B))
    else:  # rarefaction branch
        a = s.sound_speed(gamma)
        pr = p / s.p
        f = 2.0 * a / (gamma - 1.0) * (pr ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
        df = 1.0 / (s.rho * a) * pr ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def _star_state(
    left: EulerState, right: EulerState, gamma: float, tol: float = 1e-12, max_iter: int = 100
) -> tuple[float, float]:
    """Pressure and velocity in the star region."""
    du = right.u - left.u
    a_l, a_r = left.sound_speed(gamma), right.sound_speed(gamma)
    if 2.0 * a_l / (gamma - 1.0) + 2.0 * a_r / (gamma - 1.0) <= du:
        raise ValueError("pressure positivity violated: vacuum forms between the waves")

    # two-rarefaction guess, positive by construction
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((a_l + a_r - 0.5 * (gamma - 1.0) * du) / (a_l / left.p**z + a_r / right.p**z)) ** (1.0 / z)
    p = max(p, 1e-14)
    for _ in range(max_iter):
        f_l, df_l = _pressure_fn(p, left, gamma)
        f_r, df_r = _pressure_fn(p, right, gamma)
        g = f_l + f_r + du
        step = g / (df_l + df_r)
        p_new = max(p - step, 1e-14)
        if abs(p_new - p) <= tol * max(p, 1.0):
            p = p_new
            break
        p = p_new
    f_l, _ = _pressure_fn(p, left, gamma)
    f_r, _ = _pressure_fn(p, right, gamma)
    u = 0.5 * (left.u + right.u) + 0.5 * (f_r - f_l)
    return p, u


def _sample_side(xi, s: EulerState, p_star: float, u_star: float, sign: float, gamma: float):
    """Solution inside the left (sign=+1) or right (sign=-1) wave for xi = x/t.

    Works on scalars or arrays; returns (rho, u, p)."""
    xi = np.asarray(xi, dtype=float)
    a = s.sound_speed(gamma)
    gm, gp = gamma - 1.0, gamma + 1.0

    if p_star > s.p:  # shock
        ms = a * np.sqrt(gp / (2.0 * gamma) * p_star / s.p + gm / (2.0 * gamma))
        speed = s.u - sign * ms
        behind = sign * xi > sign * speed
        rho_star = s.rho * (p_star / s.p + gm / gp) / (gm / gp * p_star / s.p + 1.0)
        rho = np.where(behind, rho_star, s.rho)
        u = np.where(behind, u_star, s.u)
        p = np.where(behind, p_star, s.p)
    else:  # rarefaction
        a_star = a * (p_star / s.p) ** (gm / (2.0 * gamma))
        head = s.u - sign * a
        tail = u_star - sign * a_star
        # fan value
        a_fan = 2.0 / gp * (a + sign * gm / 2.0 * (s.u - xi))
        u_fan = 2.0 / gp * (sign * a + gm / 2.0 * s.u + xi)
        rho_fan = s.rho * (a_fan / a) ** (2.0 / gm)
        p_fan = s.p * (a_fan / a) ** (2.0 * gamma / gm)
        outside = sign * xi < sign * head
        inside_star = sign * xi > sign * tail
        rho_star = s.rho * (p_star / s.p) ** (1.0 / gamma)
        rho = np.where(outside, s.rho, np.where(inside_star, rho_star, rho_fan))
        u = np.where(outside, s.u, np.where(inside_star, u_star, u_fan))
        p = np.where(outside, s.p, np.where(inside_star, p_star, p_fan))
    return rho, u, p


def exact_euler_riemann(
    left: EulerState, right: EulerState, xi, gamma: float = GAMMA_1D
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact solution (rho, u, p) of the Riemann problem at xi = x/t.

    xi may be a scalar or an array.
    """
    p_star, u_star = _star_state(left, right, gamma)
    xi = np.asarray(xi, dtype=float)
    rho_l, u_l, p_l = _sample_side(xi, left, p_star, u_star, +1.0, gamma)
    rho_r, u_r, p_r = _sample_side(xi, right, p_star, u_star, -1.0, gamma)
    on_left = xi <= u_star
    rho = np.where(on_left, rho_l, rho_r)
    u = np.where(on_left, u_l, u_r)
    p = np.where(on_left, p_l, p_r)
    return rho, u, p


def riemann_profile(
    left: EulerState,
    right: EulerState,
    x: np.ndarray,
    t: float,
    x0: float = 0.5,
    gamma: float = GAMMA_1D,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Profile (rho, u, p) at positions x and time t > 0, jump initially at x0."""
    if t <= 0.0:
        raise ValueError("profile needs t > 0")
    return exact_euler_riemann(left, right, (np.asarray(x, dtype=float) - x0) / t, gamma)
