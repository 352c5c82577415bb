"""Semi-Lagrangian nodal DG transport for f_t + v f_x = 0 over one step.

The update is the weak form on each target cell I_p:

    int_{I_p} f_new psi dx = int_{I_p - s} f_old(x) psi(x + s) dx,   s = v dt,

with the upstream interval decomposed into sub-segments owned by single
Eulerian cells, each integrated with (k+1)-point Gauss (the integrand is a
degree <= 2k polynomial per segment, so the quadrature is exact). The cell
average is therefore transported exactly and total mass is conserved to
round-off for periodic boundaries.

Two implementations are provided:

* `sl_ndg_step`: per-velocity, segment-by-segment, works on any mesh and
  handles arbitrarily large shifts and free-flow boundaries; this is the
  reference path.
* `advect_batch`: vectorized over a whole velocity grid at once for the
  uniform meshes built by `build_mesh`; used by the time stepper. Both paths
  evaluate the same quadrature and agree to round-off.

Shifts are signed: s < 0 (backwards-in-time stage couplings or v < 0) traces
downstream, which is the same geometry mirrored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import (
    FREE_FLOW,
    PERIODIC,
    CellPolynomial,
    Mesh1D,
    cell_of,
    modal_to_nodal_array,
    nodal_to_modal_array,
    wrap_position,
)

# cells outside the domain under free flow are tagged with these owners
LEFT_GHOST = -1


@dataclass(frozen=True)
class UpstreamInterval:
    """Upstream image of a target cell and its single-cell decomposition.

    Attributes:
        target: target cell index p.
        s: shift v*dt (signed).
        a, b: unwrapped upstream endpoints x_{p -/+ 1/2} - s.
        segments: ordered (lo, hi, owner) with owner an Eulerian cell index,
            LEFT_GHOST, or nx (right ghost) for free-flow overhangs; lo/hi are
            domain coordinates except in ghost segments.
        arc_starts: distance from the upstream left endpoint to each segment's
            lo, used to map quadrature points onto the target cell.
    """

    target: int
    s: float
    a: float
    b: float
    segments: list = field(default_factory=list)
    arc_starts: np.ndarray = None

    def lengths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi, _ in self.segments])

    def covering_cells(self) -> list:
        return sorted({q for _, _, q in self.segments})


def _walk_interior(lo: float, length: float, mesh: Mesh1D, wrap: bool) -> list:
    """Split [lo, lo+length] (wrapped coordinates) at Eulerian cell interfaces."""
    segments = []
    pos = wrap_position(lo, mesh) if wrap else lo
    q = cell_of(pos, mesh)
    remaining = length
    tiny = 1e-13 * mesh.length
    while remaining > tiny:
        room = mesh.boundaries[q + 1] - pos
        take = remaining if remaining <= room + tiny else room
        segments.append((pos, pos + take, q))
        remaining -= take
        if remaining > tiny:
            q += 1
            if q == mesh.nx:
                if not wrap:
                    raise RuntimeError("interior walk left the domain")
                q = 0
                pos = mesh.x_a
            else:
                pos = mesh.boundaries[q]
    return segments


def trace_upstream(p: int, v: float, dt: float, mesh: Mesh1D) -> UpstreamInterval:
    """Trace cell p back along characteristics by s = v*dt and decompose the
    upstream interval [x_{p-1/2} - s, x_{p+1/2} - s] into cell-owned segments."""
    s = v * dt
    a = mesh.boundaries[p] - s
    b = mesh.boundaries[p + 1] - s

    segments = []
    if mesh.bc == PERIODIC:
        segments = _walk_interior(a, b - a, mesh, wrap=True)
    elif mesh.bc == FREE_FLOW:
        if a < mesh.x_a:
            segments.append((a, min(b, mesh.x_a), LEFT_GHOST))
        lo, hi = max(a, mesh.x_a), min(b, mesh.x_b)
        if hi - lo > 1e-13 * mesh.length:
            segments.extend(_walk_interior(lo, hi - lo, mesh, wrap=False))
        if b > mesh.x_b:
            segments.append((max(a, mesh.x_b), b, mesh.nx))
    else:
        raise ValueError(f"unknown boundary kind: {mesh.bc!r}")

    lengths = np.array([hi - lo for lo, hi, _ in segments])
    arc_starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    return UpstreamInterval(target=p, s=s, a=a, b=b, segments=segments, arc_starts=arc_starts)


def _gram(k: int) -> np.ndarray:
    """G[j,m] = int_{-1}^{1} xi^(j+m) dxi."""
    j = np.arange(k + 1)
    tot = j[:, None] + j[None, :]
    return np.where(tot % 2 == 0, 2.0 / (tot + 1.0), 0.0)


def _ghost_value(coeffs: np.ndarray, side: str) -> float:
    # constant extension of the boundary cell's endpoint value
    c = coeffs[0] if side == "left" else coeffs[-1]
    xi = -1.0 if side == "left" else 1.0
    return float(np.polynomial.polynomial.polyval(xi, c))


def updated_coefficients(
    coeffs: np.ndarray, upstream: UpstreamInterval, mesh: Mesh1D
) -> CellPolynomial:
    """Solve the weak form for the target cell's new coefficients from the old
    field (modal coefficients, shape (nx, k+1))."""
    k = mesh.k
    p = upstream.target
    dxp = mesh.widths[p]
    rhs = np.zeros(k + 1)
    for (lo, hi, q), t0 in zip(upstream.segments, upstream.arc_starts):
        half = 0.5 * (hi - lo)
        xg = 0.5 * (lo + hi) + half * mesh.ref_nodes
        wg = (hi - lo) * mesh.ref_weights
        if q == LEFT_GHOST:
            fg = np.full(k + 1, _ghost_value(coeffs, "left"))
        elif q == mesh.nx:
            fg = np.full(k + 1, _ghost_value(coeffs, "right"))
        else:
            xi_src = 2.0 * (xg - mesh.centers[q]) / mesh.widths[q]
            fg = np.polynomial.polynomial.polyval(xi_src, coeffs[q])
        # image of xg in the target cell, by arc length from the upstream left end
        xi_tgt = -1.0 + 2.0 * (t0 + (xg - lo)) / dxp
        rhs += (wg * fg) @ np.vander(xi_tgt, k + 1, increasing=True)
    new_coeffs = np.linalg.solve(_gram(k), 2.0 * rhs / dxp)
    return CellPolynomial(cell=p, coeffs=new_coeffs)


def sl_ndg_step(
    field: np.ndarray,
    v: float,
    dt: float,
    mesh: Mesh1D,
    limiter=None,
) -> np.ndarray:
    """One SL NDG transport step for nodal values (nx, k+1) at one velocity.

    `limiter` is an LmppLimiter (or None); it is given the upstream interval so
    its bounds come from the Eulerian cells covering it.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (mesh.nx, mesh.k + 1):
        raise ValueError(f"expected shape {(mesh.nx, mesh.k + 1)}, got {field.shape}")
    if v * dt == 0.0:
        return field.copy()

    coeffs = nodal_to_modal_array(field, mesh)
    out = np.empty_like(field)
    for p in range(mesh.nx):
        upstream = trace_upstream(p, v, dt, mesh)
        poly = updated_coefficients(coeffs, upstream, mesh)
        if limiter is not None:
            poly = limiter.limit_cell(poly, upstream, coeffs, mesh)
        out[p] = mesh.vandermonde @ poly.coeffs
    return out


def total_mass(field: np.ndarray, mesh: Mesh1D) -> float:
    """sum_p dx_p sum_i w_i f_{p,i} (exact integral of the nodal field)."""
    return float(np.einsum("p,i,pi->", mesh.widths, mesh.ref_weights, field))


# ---------------------------------------------------------------------------
# vectorized path over a whole velocity batch (uniform meshes)
# ---------------------------------------------------------------------------

def _shift_matrices(alpha: np.ndarray, k: int, ref_nodes: np.ndarray, ref_weights: np.ndarray):
    """Reference-cell quadrature blocks for a fractional shift alpha in [0,1).

    With z = s/dx = m + alpha, the upstream of target p covers the xi ranges
    [1-2a, 1] of cell q0 = p-m-1 and [-1, 1-2a] of cell q1 = p-m. A source
    point xi maps to target coordinate xi + 2a - 2 (q0 part) or xi + 2a (q1
    part). Returns P[q,j,m], Q[q,j,m] with

        P = int_{1-2a}^{1} xi^m (xi + 2a - 2)^j dxi
        Q = int_{-1}^{1-2a} xi^m (xi + 2a)^j dxi

    evaluated by (k+1)-point Gauss per range (exact, degree <= 2k).
    """
    a = alpha[:, None]  # (nv, 1)
    deg = np.arange(k + 1)

    # q0 range: center 1-a, half-width a
    xg = (1.0 - a) + a * ref_nodes[None, :]
    wg = 2.0 * a * ref_weights[None, :]
    src = xg[:, :, None] ** deg
    tgt = (xg + 2.0 * a - 2.0)[:, :, None] ** deg
    P = np.einsum("vg,vgm,vgj->vjm", wg, src, tgt)

    # q1 range: center -a, half-width 1-a
    xg = -a + (1.0 - a) * ref_nodes[None, :]
    wg = 2.0 * (1.0 - a) * ref_weights[None, :]
    src = xg[:, :, None] ** deg
    tgt = (xg + 2.0 * a)[:, :, None] ** deg
    Q = np.einsum("vg,vgm,vgj->vjm", wg, src, tgt)
    return P, Q


def _pad_free_flow(coeffs: np.ndarray, n_ghost: int) -> np.ndarray:
    """Extend (nx, k+1, nv) coefficients with constant ghost cells holding the
    boundary endpoint values."""
    nx, kp1, nv = coeffs.shape
    left_val = np.einsum("m,mv->v", (-1.0) ** np.arange(kp1), coeffs[0])
    right_val = coeffs[-1].sum(axis=0)
    left = np.zeros((n_ghost, kp1, nv))
    right = np.zeros((n_ghost, kp1, nv))
    left[:, 0, :] = left_val[None, :]
    right[:, 0, :] = right_val[None, :]
    return np.concatenate([left, coeffs, right], axis=0)


class _AdvectionPlan:
    """Shift-dependent pieces of the batch update, cached across steps (the
    same shifts recur every uniform step)."""

    __slots__ = ("m", "alpha", "idx0", "idx1", "PT", "QT", "n_ghost", "exact")

    def __init__(self, z: np.ndarray, mesh: Mesh1D):
        nx, k = mesh.nx, mesh.k
        m = np.floor(z).astype(int)
        self.m = m
        self.alpha = z - m
        self.exact = self.alpha == 0.0
        periodic = mesh.bc == PERIODIC
        self.n_ghost = 0 if periodic else int(np.ceil(np.abs(z).max())) + 1
        p = np.arange(nx)[:, None]
        idx0 = p - m[None, :] - 1 + self.n_ghost
        idx1 = p - m[None, :] + self.n_ghost
        if periodic:
            idx0 %= nx
            idx1 %= nx
        self.idx0 = idx0
        self.idx1 = idx1
        P, Q = _shift_matrices(self.alpha, k, mesh.ref_nodes, mesh.ref_weights)
        # fold the mass-matrix solve into the quadrature blocks, stored
        # transposed for the batched matmul in _advect_columns
        gram_inv = np.linalg.inv(_gram(k))
        self.PT = np.ascontiguousarray(np.einsum("ij,vjm->vmi", gram_inv, P))
        self.QT = np.ascontiguousarray(np.einsum("ij,vjm->vmi", gram_inv, Q))


_PLAN_CACHE: dict = {}


def _plan_for(z: np.ndarray, mesh: Mesh1D) -> _AdvectionPlan:
    key = (mesh.nx, mesh.k, mesh.bc, z.tobytes())
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        if len(_PLAN_CACHE) > 128:
            _PLAN_CACHE.clear()
        plan = _AdvectionPlan(z, mesh)
        _PLAN_CACHE[key] = plan
    return plan


def _advect_columns(work: np.ndarray, plan: _AdvectionPlan, cols: slice) -> np.ndarray:
    idx0 = plan.idx0[:, cols]
    idx1 = plan.idx1[:, cols]
    sub = work[:, :, cols]
    c0 = np.take_along_axis(sub, idx0[:, None, :], axis=0)
    c1 = np.take_along_axis(sub, idx1[:, None, :], axis=0)
    new_v = c0.transpose(2, 0, 1) @ plan.PT[cols] + c1.transpose(2, 0, 1) @ plan.QT[cols]
    new = np.ascontiguousarray(new_v.transpose(1, 2, 0))
    exact = plan.exact[cols]
    if exact.any():
        # whole-number shifts are exact gathers; keep them bitwise
        new = np.where(exact[None, None, :], c1, new)
    return new


def advect_batch(
    coeffs: np.ndarray,
    z: np.ndarray,
    mesh: Mesh1D,
    limiter=None,
    workers: int | None = None,
) -> np.ndarray:
    """Shift modal coefficients (nx, k+1, nv) by z[v] cell widths along x.

    Equivalent to `sl_ndg_step` per velocity (same quadrature) on the uniform
    meshes produced by `build_mesh`. A whole-number shift reduces to an exact
    integer gather. Returns new modal coefficients; limiting, if requested, is
    applied to the updated polynomials before return. `workers` splits the
    velocity axis over a thread pool; results are identical to the serial path
    because no reduction crosses the velocity axis.
    """
    nx, kp1, nv = coeffs.shape
    z = np.ascontiguousarray(z, dtype=float)
    if not np.any(z):
        return coeffs.copy()
    plan = _plan_for(z, mesh)
    work = coeffs if plan.n_ghost == 0 else _pad_free_flow(coeffs, plan.n_ghost)

    if workers and workers > 1 and nv >= 2 * workers:
        from concurrent.futures import ThreadPoolExecutor

        edges = np.linspace(0, nv, workers + 1).astype(int)
        chunks = [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _advect_columns(work, plan, s), chunks))
        new = np.concatenate(parts, axis=2)
    else:
        new = _advect_columns(work, plan, slice(0, nv))

    if limiter is not None:
        new = limiter.limit_batch(new, work, plan.idx0, plan.idx1, plan.alpha)
    return new


def advect_nodal_batch(
    values: np.ndarray, z: np.ndarray, mesh: Mesh1D, limiter=None, workers: int | None = None
) -> np.ndarray:
    """Nodal-value wrapper around `advect_batch` (Algorithm steps 1 and 4)."""
    coeffs = nodal_to_modal_array(values, mesh)
    out = advect_batch(coeffs, z, mesh, limiter=limiter, workers=workers)
    return modal_to_nodal_array(out, mesh)
