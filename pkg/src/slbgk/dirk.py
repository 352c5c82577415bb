"""DIRK time stepping along characteristics for the BGK equation.

One stage of the default formulation (Scheme 1) is

    f* = SL(v, c_k dt){f^n} + dt * sum_{j<k} a_kj SL(v, (c_k - c_j) dt){g_j}
    U  = moments(f*)                       # relaxation moments vanish
    M  = maxwellian(U)
    f_k = (eps f* + a_kk dt M) / (eps + a_kk dt)   # pointwise implicit solve
    g_k = (M - f_k)/eps = (M - f*)/(eps + a_kk dt)

with SL the mass-conservative semi-Lagrangian transport. The last form of g_k
avoids the f_k - M cancellation when eps << a_kk dt. Stiffly accurate tableaus
make the final stage the step output.

Scheme 2 is the Shu-Osher rewrite with a single relaxation term per stage; it
loses stability at large eps / large CFL and is kept only for that comparison.

eps=None runs the same stage structure with the collision term absent (the
pure-advection limit used by the stability study).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .kinetics import (
    MacroFields,
    RealizabilityError,
    VelocityGrid,
    maxwellian,
    moments,
    phase_space_totals,
)
from .limiter import LmppLimiter
from .mesh import Mesh1D, modal_to_nodal_array, nodal_to_modal_array
from .transport import advect_batch


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def s(self) -> int:
        return len(self.b)

    def validate(self) -> None:
        A, b, c = self.A, self.b, self.c
        if not np.allclose(A.sum(axis=1), c, atol=1e-14):
            raise ValueError(f"{self.name}: row sums do not match c")
        if np.any(np.triu(A, 1) != 0.0):
            raise ValueError(f"{self.name}: not lower triangular")
        if np.any(np.diag(A) <= 0.0):
            raise ValueError(f"{self.name}: diagonal must be positive")
        if c[-1] != 1.0 or not np.allclose(A[-1], b, atol=1e-15):
            raise ValueError(f"{self.name}: not stiffly accurate")


_NU = 1.0 - sqrt(2.0) / 2.0

_TABLEAUS = {
    "backward_euler": dict(
        A=[[1.0]],
        b=[1.0],
        c=[1.0],
    ),
    "dirk2": dict(
        A=[[_NU, 0.0], [1.0 - _NU, _NU]],
        b=[1.0 - _NU, _NU],
        c=[_NU, 1.0],
    ),
    "dirk3_4stage": dict(
        A=[
            [1.0 / 4.0, 0.0, 0.0, 0.0],
            [1.0 / 7.0, 1.0 / 4.0, 0.0, 0.0],
            [61.0 / 144.0, -49.0 / 144.0, 1.0 / 4.0, 0.0],
            [0.0, 0.0, 3.0 / 4.0, 1.0 / 4.0],
        ],
        b=[0.0, 0.0, 3.0 / 4.0, 1.0 / 4.0],
        c=[1.0 / 4.0, 11.0 / 28.0, 1.0 / 3.0, 1.0],
    ),
}


def tableau(name: str) -> ButcherTableau:
    """Stiffly accurate DIRK tableaus: backward_euler, dirk2, dirk3_4stage."""
    try:
        data = _TABLEAUS[name]
    except KeyError:
        raise ValueError(f"unknown tableau {name!r}; known: {sorted(_TABLEAUS)}") from None
    tab = ButcherTableau(
        name=name,
        A=np.array(data["A"], dtype=float),
        b=np.array(data["b"], dtype=float),
        c=np.array(data["c"], dtype=float),
    )
    tab.validate()
    return tab


@dataclass(frozen=True)
class ShuOsherCoefficients:
    """b_kj of the Shu-Osher rewrite, strict lower triangle of a (s, s) matrix."""

    b: np.ndarray

    def row_sum(self, k: int) -> float:
        return float(self.b[k, :k].sum())


def shu_osher_coeffs(tab: ButcherTableau) -> ShuOsherCoefficients:
    """b_kj = a_kj/a_jj - sum_{l=j+1}^{k-1} a_kl b_lj / a_ll."""
    A = tab.A
    s = tab.s
    if np.any(np.diag(A) == 0.0):
        raise ValueError("Shu-Osher rewrite needs a nonzero diagonal")
    b = np.zeros((s, s))
    for k in range(s):
        for j in range(k):
            acc = A[k, j] / A[j, j]
            for l in range(j + 1, k):
                acc -= A[k, l] * b[l, j] / A[l, l]
            b[k, j] = acc
    return ShuOsherCoefficients(b=b)


def relax_solve(fstar: np.ndarray, M: np.ndarray, a_kk: float, dt: float, eps) -> np.ndarray:
    """Pointwise implicit BGK solve: convex combination of f* and M with weight
    a_kk dt / (eps + a_kk dt) on M."""
    e = np.asarray(eps, dtype=float)
    if e.ndim:
        e = e[..., None]
    w = (a_kk * dt) / (e + a_kk * dt)
    return fstar + w * (M - fstar)


@dataclass
class StageWorkspace:
    """Per-stage fields kept across a step (modal where they feed transports)."""

    g_modal: list
    f_stage_modal: list
    macro: list


def _relax_denominator(eps, a_kk: float, dt: float):
    e = np.asarray(eps, dtype=float)
    if e.ndim:
        e = e[..., None]
    return e + a_kk * dt


def step_scheme1(
    values: np.ndarray,
    dt: float,
    tab: ButcherTableau,
    eps,
    mesh: Mesh1D,
    grid: VelocityGrid,
    limiter: LmppLimiter | None = None,
    t_floor: float | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """One step of the default formulation. `values` is nodal (nx, k+1, nv)."""
    A, c = tab.A, tab.c
    h = dt / mesh.dx
    fn_modal = nodal_to_modal_array(values, mesh)
    relax_limiter = limiter if (limiter is None or limiter.limit_relaxation_terms) else None
    ws = StageWorkspace(g_modal=[], f_stage_modal=[], macro=[])

    f_k = values
    for k in range(tab.s):
        term = advect_batch(fn_modal, grid.nodes * (c[k] * h), mesh, limiter=limiter, workers=workers)
        for j in range(k):
            if A[k, j] == 0.0:
                continue
            shifted = advect_batch(
                ws.g_modal[j], grid.nodes * ((c[k] - c[j]) * h), mesh,
                limiter=relax_limiter, workers=workers,
            )
            term = term + dt * A[k, j] * shifted
        fstar = modal_to_nodal_array(term, mesh)

        if eps is None:
            f_k = fstar
            ws.g_modal.append(np.zeros_like(fn_modal))
            continue

        if not np.isfinite(fstar).all():
            raise FloatingPointError(f"non-finite stage value at stage {k}")
        U = moments(fstar, grid)
        try:
            M = maxwellian(U, grid, t_floor=t_floor)
        except RealizabilityError as err:
            raise RealizabilityError(f"stage {k}: {err}") from err
        f_k = relax_solve(fstar, M, A[k, k], dt, eps)
        g_k = (M - fstar) / _relax_denominator(eps, A[k, k], dt)
        ws.g_modal.append(nodal_to_modal_array(g_k, mesh))
        ws.macro.append(U)
    if limiter is not None and eps is not None:
        # the relax solve is pointwise, so the stored polynomials can dip
        # below zero between nodes; repair before the next step sees them
        f_k = limiter.enforce_nonnegative(f_k, mesh)
    return f_k


def step_scheme2(
    values: np.ndarray,
    dt: float,
    tab: ButcherTableau,
    eps,
    mesh: Mesh1D,
    grid: VelocityGrid,
    limiter: LmppLimiter | None = None,
    t_floor: float | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """One step of the Shu-Osher formulation (kept for the stability study)."""
    A, c = tab.A, tab.c
    so = shu_osher_coeffs(tab).b
    h = dt / mesh.dx
    fn_modal = nodal_to_modal_array(values, mesh)
    stage_modal = []

    f_k = values
    for k in range(tab.s):
        term = (1.0 - so[k, :k].sum()) * advect_batch(
            fn_modal, grid.nodes * (c[k] * h), mesh, limiter=limiter, workers=workers
        )
        for j in range(k):
            if so[k, j] == 0.0:
                continue
            term = term + so[k, j] * advect_batch(
                stage_modal[j], grid.nodes * ((c[k] - c[j]) * h), mesh,
                limiter=limiter, workers=workers,
            )
        fstar = modal_to_nodal_array(term, mesh)

        if eps is None:
            f_k = fstar
        else:
            if not np.isfinite(fstar).all():
                raise FloatingPointError(f"non-finite stage value at stage {k}")
            U = moments(fstar, grid)
            try:
                M = maxwellian(U, grid, t_floor=t_floor)
            except RealizabilityError as err:
                raise RealizabilityError(f"stage {k}: {err}") from err
            f_k = relax_solve(fstar, M, A[k, k], dt, eps)
        stage_modal.append(nodal_to_modal_array(f_k, mesh))
    if limiter is not None and eps is not None:
        f_k = limiter.enforce_nonnegative(f_k, mesh)
    return f_k


@dataclass
class RunResult:
    values: np.ndarray
    times: np.ndarray
    totals: np.ndarray  # (n_records, 3): total rho, rho u, E
    n_steps: int
    dt: float


def run(
    values: np.ndarray,
    t_end: float,
    cfl: float,
    tab: ButcherTableau,
    eps,
    mesh: Mesh1D,
    grid: VelocityGrid,
    limiter: LmppLimiter | None = None,
    scheme: int = 1,
    t_floor: float | None = None,
    workers: int | None = None,
    record: bool = True,
) -> RunResult:
    """March to t_end with dt = CFL dx / vmax, shortening the final step to
    land on t_end exactly. Records conservation totals each step."""
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if scheme not in (1, 2):
        raise ValueError(f"scheme must be 1 or 2, got {scheme}")
    step = step_scheme1 if scheme == 1 else step_scheme2

    dt = cfl * mesh.dx / grid.vmax
    t = 0.0
    times = [0.0]
    totals = [phase_space_totals(values, mesh, grid)] if record else []
    n_steps = 0
    # guard: fold a vanishing remainder into the last full step
    while t < t_end - 1e-12 * t_end:
        h = min(dt, t_end - t)
        values = step(values, h, tab, eps, mesh, grid,
                      limiter=limiter, t_floor=t_floor, workers=workers)
        t += h
        n_steps += 1
        if record:
            times.append(t)
            totals.append(phase_space_totals(values, mesh, grid))
    return RunResult(
        values=values,
        times=np.array(times if record else [0.0, t_end]),
        totals=np.array(totals) if record else np.zeros((0, 3)),
        n_steps=n_steps,
        dt=dt,
    )
