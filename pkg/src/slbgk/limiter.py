"""Local maximum-principle-preserving limiter.

After an SL transport update, each new cell polynomial p is rescaled about its
average pbar by

    theta = min{ |(M - pbar)/(M' - pbar)|, |(m - pbar)/(m' - pbar)|, 1 }
    p~ = theta * (p - pbar) + pbar

where [m, M] are the exact extrema of the pre-step piecewise polynomial over
the Eulerian cells covering the upstream interval, and m', M' are the exact
extrema of p over its own cell. The cell average (hence conservation) is
untouched; the rescaled polynomial lies in [m, M] pointwise. Bounds must be
the polynomial extrema, not the range of nodal values: Gauss nodes miss
smooth extrema by O(dx^2), so nodal bounds clip legitimate extrema every
step and wreck the convergence order.

For a transported field pbar is the average of the pre-step function over
the upstream interval, which lies inside [m, M] by construction; only
roundoff can push it out, in which case the cell is left alone and counted.

Positivity needs one extra ingredient. The pointwise relaxation solve of the
kinetic step keeps nodal values nonnegative but not the polynomials through
them, and once a stored polynomial dips below zero its upstream averages and
extrema go negative, after which the bounds admit negative values forever.
`enforce_nonnegative` repairs the stored solution after each relaxation so
the limiter's m stays >= 0 and transport preserves positivity on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import CellPolynomial, Mesh1D, nodal_to_modal_array
from .transport import LEFT_GHOST, UpstreamInterval

# even-degree average weights: cell average = sum_m even coeffs[m]/(m+1)
_AVG = {k: np.array([1.0 / (m + 1) if m % 2 == 0 else 0.0 for m in range(k + 1)]) for k in range(8)}



def _polyval_pts(coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """coeffs (N, k+1), pts (N, ncand) -> values (N, ncand)."""
    vals = np.zeros_like(pts)
    for m in range(coeffs.shape[1] - 1, -1, -1):
        vals = vals * pts + coeffs[:, m][:, None]
    return vals


def extrema_batch(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact (min, max) over xi in [-1, 1] of each row of (N, k+1) coefficients.

    Closed form for k <= 3: endpoints plus the real roots of the derivative.
    Degrees above 3 fall back to dense sampling (not used by the solver core).
    """
    n, kp1 = coeffs.shape
    if kp1 > 4:
        xi = np.cos(np.linspace(0.0, np.pi, 129))
        vals = _polyval_pts(coeffs, np.broadcast_to(xi, (n, xi.size)))
        return vals.min(axis=1), vals.max(axis=1)

    c = np.zeros((n, 4))
    c[:, :kp1] = coeffs
    # derivative 3*c3*xi^2 + 2*c2*xi + c1 = a xi^2 + b xi + cc
    a = 3.0 * c[:, 3]
    b = 2.0 * c[:, 2]
    cc = c[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4.0 * a * cc
        sq = np.sqrt(np.maximum(disc, 0.0))
        sgn = np.where(b >= 0.0, 1.0, -1.0)
        qq = -0.5 * (b + sgn * sq)
        r1 = np.where(a != 0.0, qq / a, np.where(b != 0.0, -cc / b, np.inf))
        r2 = np.where(qq != 0.0, cc / qq, r1)
        r2 = np.where(a != 0.0, r2, r1)
    bad = ~np.isfinite(r1) | (disc < 0.0) | (np.abs(r1) >= 1.0)
    r1 = np.where(bad, 1.0, r1)
    bad = ~np.isfinite(r2) | (disc < 0.0) | (np.abs(r2) >= 1.0)
    r2 = np.where(bad, 1.0, r2)

    pts = np.stack([np.full(n, -1.0), np.ones(n), r1, r2], axis=1)
    vals = _polyval_pts(c, pts)
    return vals.min(axis=1), vals.max(axis=1)


def polynomial_extrema(coeffs: np.ndarray) -> tuple[float, float]:
    lo, hi = extrema_batch(np.asarray(coeffs, dtype=float)[None, :])
    return float(lo[0]), float(hi[0])


def _extrema_cube(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(min, max) over xi in [-1, 1] per cell and velocity, (nx, k+1, nv) in,
    (nx, nv) out. Same closed forms as extrema_batch, evaluated in the native
    layout so the hot path avoids the transpose/reshape copies."""
    nx, kp1, nv = coeffs.shape
    if kp1 > 4:
        flat = coeffs.transpose(0, 2, 1).reshape(nx * nv, kp1)
        lo, hi = extrema_batch(flat)
        return lo.reshape(nx, nv), hi.reshape(nx, nv)

    c0 = coeffs[:, 0]
    if kp1 == 1:
        return c0.copy(), c0.copy()
    c1 = coeffs[:, 1]
    if kp1 == 2:
        vm = c0 - c1
        vp = c0 + c1
        return np.minimum(vm, vp), np.maximum(vm, vp)
    c2 = coeffs[:, 2]
    if kp1 == 3:
        # derivative 2*c2*xi + c1: one stationary point, clamped into range
        # (a clamped point duplicates an endpoint candidate, which is harmless)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = -0.5 * c1 / c2
        r = np.clip(np.nan_to_num(r, nan=1.0, posinf=1.0, neginf=-1.0), -1.0, 1.0)
        vm = c0 + (c2 - c1)
        vp = c0 + (c2 + c1)
        vr = c0 + r * (c1 + r * c2)
        lo = np.minimum(np.minimum(vm, vp), vr)
        hi = np.maximum(np.maximum(vm, vp), vr)
        return lo, hi

    c3 = coeffs[:, 3]
    a = 3.0 * c3
    b = 2.0 * c2
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4.0 * a * c1
        sq = np.sqrt(np.maximum(disc, 0.0))
        sgn = np.where(b >= 0.0, 1.0, -1.0)
        qq = -0.5 * (b + sgn * sq)
        r1 = np.where(a != 0.0, qq / a, np.where(b != 0.0, -c1 / b, np.inf))
        r2 = np.where(qq != 0.0, c1 / qq, r1)
        r2 = np.where(a != 0.0, r2, r1)
    bad = ~np.isfinite(r1) | (disc < 0.0) | (np.abs(r1) >= 1.0)
    r1 = np.where(bad, 1.0, r1)
    bad = ~np.isfinite(r2) | (disc < 0.0) | (np.abs(r2) >= 1.0)
    r2 = np.where(bad, 1.0, r2)

    vm = ((-c3 + c2) - c1) + c0
    vp = ((c3 + c2) + c1) + c0
    v1 = ((c3 * r1 + c2) * r1 + c1) * r1 + c0
    v2 = ((c3 * r2 + c2) * r2 + c1) * r2 + c0
    lo = np.minimum(np.minimum(vm, vp), np.minimum(v1, v2))
    hi = np.maximum(np.maximum(vm, vp), np.maximum(v1, v2))
    return lo, hi


@dataclass(frozen=True)
class LocalBounds:
    m: float
    M: float
    source_cells: tuple

    def __post_init__(self):
        if self.m > self.M:
            raise ValueError(f"inverted bounds: m={self.m} > M={self.M}")


def local_bounds(upstream: UpstreamInterval, old_coeffs: np.ndarray, mesh: Mesh1D) -> LocalBounds:
    """Extrema of the old piecewise polynomial over all Eulerian cells covering
    the upstream interval (full cells, not just the covered fraction)."""
    lo = np.inf
    hi = -np.inf
    cells = upstream.covering_cells()
    for q in cells:
        if q == LEFT_GHOST:
            v = float(np.polynomial.polynomial.polyval(-1.0, old_coeffs[0]))
            clo = chi = v
        elif q == mesh.nx:
            v = float(np.polynomial.polynomial.polyval(1.0, old_coeffs[-1]))
            clo = chi = v
        else:
            clo, chi = polynomial_extrema(old_coeffs[q])
        lo = min(lo, clo)
        hi = max(hi, chi)
    return LocalBounds(m=lo, M=hi, source_cells=tuple(cells))


@dataclass
class LimiterDiagnostics:
    cells_limited: int = 0
    out_of_range_skips: int = 0

    def reset(self):
        self.cells_limited = 0
        self.out_of_range_skips = 0


def apply_lmpp(
    poly: CellPolynomial,
    bounds: LocalBounds,
    mesh: Mesh1D | None = None,
    diagnostics: LimiterDiagnostics | None = None,
) -> CellPolynomial:
    """Linear scaling of one cell polynomial into [bounds.m, bounds.M]."""
    pbar = poly.average()
    slack = 1e-12 * (1.0 + abs(bounds.m) + abs(bounds.M))
    if pbar < bounds.m - slack or pbar > bounds.M + slack:
        if diagnostics is not None:
            diagnostics.out_of_range_skips += 1
        return poly

    lo, hi = polynomial_extrema(poly.coeffs)
    theta = 1.0
    if hi > bounds.M and hi - pbar > 0.0:
        theta = min(theta, abs(bounds.M - pbar) / (hi - pbar))
    if lo < bounds.m and pbar - lo > 0.0:
        theta = min(theta, abs(bounds.m - pbar) / (pbar - lo))
    if theta >= 1.0:
        return poly

    if diagnostics is not None:
        diagnostics.cells_limited += 1
    coeffs = theta * poly.coeffs
    coeffs[0] = theta * poly.coeffs[0] + (1.0 - theta) * pbar
    return CellPolynomial(cell=poly.cell, coeffs=coeffs)


@dataclass
class LmppLimiter:
    """Limiter handle passed into the transport kernels.

    enabled=False turns every call into the identity (kept so callers can hold
    one object and flip policy); limit_relaxation_terms controls whether the
    SL-transported relaxation fields inside DIRK stages are limited too
    (default) or only the transported solution.
    """

    enabled: bool = True
    limit_relaxation_terms: bool = True
    diagnostics: LimiterDiagnostics = field(default_factory=LimiterDiagnostics)

    def limit_cell(
        self,
        poly: CellPolynomial,
        upstream: UpstreamInterval,
        old_coeffs: np.ndarray,
        mesh: Mesh1D,
    ) -> CellPolynomial:
        if not self.enabled:
            return poly
        bounds = local_bounds(upstream, old_coeffs, mesh)
        return apply_lmpp(poly, bounds, mesh, self.diagnostics)

    def limit_batch(
        self,
        new: np.ndarray,
        old: np.ndarray,
        idx0: np.ndarray,
        idx1: np.ndarray,
        alpha: np.ndarray,
    ) -> np.ndarray:
        """Vectorized limiting of updated coefficients (nx, k+1, nv).

        `old` are the pre-step coefficients (ghost-padded under free flow);
        idx0/idx1 (nx, nv) are the covering-cell rows of `old` per target.
        """
        if not self.enabled:
            return new
        kp1 = old.shape[1]

        clo, chi = _extrema_cube(old)
        m = np.minimum(np.take_along_axis(clo, idx0, axis=0), np.take_along_axis(clo, idx1, axis=0))
        M = np.maximum(np.take_along_axis(chi, idx0, axis=0), np.take_along_axis(chi, idx1, axis=0))

        nlo, nhi = _extrema_cube(new)

        # a cell whose average left [m, M] also violates the extrema bounds
        # (pbar sits between nlo and nhi), so this mask misses no skip cell
        viol = (nhi > M) | (nlo < m)
        if not viol.any():
            return new

        rows, cols = np.nonzero(viol)
        mg, Mg = m[rows, cols], M[rows, cols]
        log, hig = nlo[rows, cols], nhi[rows, cols]
        sub = new[rows, :, cols]
        pbg = sub @ _AVG[kp1 - 1]
        slack = 1e-12 * (1.0 + np.abs(mg) + np.abs(Mg))
        skip = (pbg < mg - slack) | (pbg > Mg + slack)

        with np.errstate(divide="ignore", invalid="ignore"):
            up = hig - pbg
            th_hi = np.where((hig > Mg) & (up > 0.0), np.abs(Mg - pbg) / up, 1.0)
            dn = pbg - log
            th_lo = np.where((log < mg) & (dn > 0.0), np.abs(mg - pbg) / dn, 1.0)
        theta = np.minimum(np.minimum(th_hi, th_lo), 1.0)
        theta = np.where(skip, 1.0, theta)

        self.diagnostics.out_of_range_skips += int(skip.sum())
        limited = theta < 1.0
        self.diagnostics.cells_limited += int(limited.sum())
        if not limited.any():
            return new

        out = new.copy()
        lt = theta[limited]
        scaled = lt[:, None] * sub[limited]
        scaled[:, 0] += (1.0 - lt) * pbg[limited]
        out[rows[limited], :, cols[limited]] = scaled
        return out

    def enforce_nonnegative(self, values: np.ndarray, mesh: Mesh1D) -> np.ndarray:
        """Average-preserving rescale of cells whose interpolant dips below
        zero; nodal values (nx, k+1, nv) in and out.

        The pointwise relaxation solve keeps nodal values nonnegative but not
        the polynomials through them, and a dipping polynomial hands the next
        transport step a negative upstream average that no average-conserving
        limiter can repair. Rescaling about the (nonnegative) cell average
        restores nonnegativity of the whole curve while moving nodal values by
        at most the dip size. Cells whose average is already negative are left
        alone.
        """
        if not self.enabled:
            return values
        nlo, _ = _extrema_cube(nodal_to_modal_array(values, mesh))
        # ref_weights sum to one, so this is the cell average per velocity
        pbar = np.einsum("i,piv->pv", mesh.ref_weights, values)
        need = (nlo < 0.0) & (pbar >= 0.0)
        if not need.any():
            return values
        rows, cols = np.nonzero(need)
        pb = pbar[rows, cols]
        theta = pb / (pb - nlo[rows, cols])
        out = values.copy()
        out[rows, :, cols] = theta[:, None] * values[rows, :, cols] + ((1.0 - theta) * pb)[:, None]
        return out
