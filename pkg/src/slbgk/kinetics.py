"""Velocity grid, moments, and Maxwellian construction (1D in x and v).

Moments use the midpoint rule on a uniform velocity grid,

    U_{p,i} = sum_q f_{p,i}(v_q) phi(v_q) dv,   phi = (1, v, v^2/2),

which is spectrally accurate for smooth distributions; with V = 15 and
Nv = 100 the Maxwellian moment defect sits at round-off level. Macroscopic
fields follow d = 1 relations E = rho u^2 / 2 + rho T / 2, i.e.
T = (2E - rho u^2) / rho.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh1D


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform midpoint nodes v_q = -vmax + (q - 1/2) dv, q = 1..nv."""

    vmax: float
    nv: int
    nodes: np.ndarray
    dv: float

    @classmethod
    def uniform(cls, vmax: float, nv: int) -> "VelocityGrid":
        if vmax <= 0 or nv < 1:
            raise ValueError(f"bad velocity grid: vmax={vmax}, nv={nv}")
        dv = 2.0 * vmax / nv
        nodes = -vmax + (np.arange(nv) + 0.5) * dv
        return cls(vmax=float(vmax), nv=nv, nodes=nodes, dv=dv)

    @classmethod
    def single(cls, v: float) -> "VelocityGrid":
        """One-node grid for scalar advection runs through the kinetic stepper."""
        if v == 0.0:
            raise ValueError("single-velocity grid needs v != 0")
        return cls(vmax=abs(float(v)), nv=1, nodes=np.array([float(v)]), dv=2.0 * abs(float(v)))


def velocity_grid(vmax: float, nv: int) -> VelocityGrid:
    return VelocityGrid.uniform(vmax, nv)


class RealizabilityError(RuntimeError):
    """Raised when a macroscopic state has rho <= 0 or T <= 0."""


@dataclass
class MacroFields:
    """Conserved fields per spatial node: density, momentum, energy (nx, k+1)."""

    rho: np.ndarray
    mom: np.ndarray
    E: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.mom / self.rho

    @property
    def T(self) -> np.ndarray:
        u = self.u
        return (2.0 * self.E - self.rho * u * u) / self.rho

    def check_realizable(self, context: str = "") -> None:
        for name, arr in (("rho", self.rho), ("T", self.T)):
            bad = ~(arr > 0.0)
            if bad.any():
                p, i = np.unravel_index(np.argmax(bad), arr.shape)
                raise RealizabilityError(
                    f"{name} <= 0 at cell {p}, node {i} "
                    f"({name}={arr[p, i]:.6e}){' in ' + context if context else ''}"
                )


@dataclass
class DistributionField:
    """Phase-space nodal values f[p, i, q] with the grids they live on."""

    values: np.ndarray  # (nx, k+1, nv)
    mesh: Mesh1D
    grid: VelocityGrid

    def __post_init__(self):
        expect = (self.mesh.nx, self.mesh.k + 1, self.grid.nv)
        if self.values.shape != expect:
            raise ValueError(f"expected shape {expect}, got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError("non-finite distribution values")


def moments(f, grid: VelocityGrid | None = None) -> MacroFields:
    """Collision-invariant moments by the midpoint rule in v."""
    if isinstance(f, DistributionField):
        values, grid = f.values, f.grid
    else:
        values = f
    v = grid.nodes
    rho = values.sum(axis=-1) * grid.dv
    mom = values @ v * grid.dv
    E = values @ (0.5 * v * v) * grid.dv
    return MacroFields(rho=rho, mom=mom, E=E)


def maxwellian(
    U: MacroFields,
    grid: VelocityGrid,
    t_floor: float | None = None,
) -> np.ndarray:
    """M[p, i, q] = rho/sqrt(2 pi T) exp(-(v_q - u)^2 / (2 T)).

    Raises RealizabilityError on rho <= 0 or T <= 0 (under-resolution or an
    oscillatory stage value); t_floor, if given, clips T from below instead,
    for exploratory runs only.
    """
    rho = U.rho
    T = U.T
    if t_floor is not None:
        T = np.maximum(T, t_floor)
    else:
        U.check_realizable("maxwellian")
    u = U.u
    dv2 = (grid.nodes[None, None, :] - u[..., None]) ** 2
    return (rho / np.sqrt(2.0 * np.pi * T))[..., None] * np.exp(-dv2 / (2.0 * T[..., None]))


def collision_invariant_residual(f, U: MacroFields, grid: VelocityGrid | None = None) -> np.ndarray:
    """<(M_U - f) phi> per spatial node, shape (nx, k+1, 3).

    Zero in exact arithmetic when U = moments(f); the discrete value measures
    the Maxwellian moment defect of the velocity grid (drives conservation
    drift at coarse Nv).
    """
    if isinstance(f, DistributionField):
        values, grid = f.values, f.grid
    else:
        values = f
    diff = maxwellian(U, grid) - values
    res = moments(diff, grid)
    return np.stack([res.rho, res.mom, res.E], axis=-1)


def phase_space_totals(values: np.ndarray, mesh: Mesh1D, grid: VelocityGrid) -> np.ndarray:
    """Domain totals of (rho, rho u, E): sum_p dx_p sum_i w_i U_{p,i}."""
    U = moments(values, grid)
    w = mesh.widths[:, None] * mesh.ref_weights[None, :]
    return np.array(
        [float((w * U.rho).sum()), float((w * U.mom).sum()), float((w * U.E).sum())]
    )


def entropy_residual(values: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    """Optional diagnostic <(M_U - f) log f> per node (no gate attached)."""
    U = moments(values, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = np.where(values > 0.0, np.log(np.maximum(values, 1e-300)), 0.0)
    return ((maxwellian(U, grid) - values) * logf).sum(axis=-1) * grid.dv
