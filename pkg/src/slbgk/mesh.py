"""1D DG mesh: Gauss-Legendre nodes per cell and nodal/modal transforms.

Each cell I_p = [x_{p-1/2}, x_{p+1/2}] carries k+1 Gauss-Legendre nodes.
Modal coefficients are monomial coefficients in the reference coordinate
xi = 2(x - x_p)/dx_p in [-1, 1]; monomials are well conditioned for the
low degrees (k <= 4) used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PERIODIC = "periodic"
FREE_FLOW = "free_flow"


@dataclass(frozen=True)
class Mesh1D:
    """Uniformly spaced DG mesh. Immutable; safe to share across workers.

    Attributes:
        x_a, x_b: domain bounds.
        nx: number of cells.
        k: polynomial degree per cell.
        bc: "periodic" or "free_flow".
        boundaries: cell interfaces, shape (nx+1,), strictly increasing.
        widths: cell widths, shape (nx,).
        centers: cell midpoints, shape (nx,).
        ref_nodes: Gauss-Legendre nodes on [-1, 1], shape (k+1,).
        ref_weights: Gauss weights normalized to sum to 1, shape (k+1,),
            so that integral over I_p = widths[p] * sum(ref_weights * values).
        nodes: physical Gauss nodes, shape (nx, k+1).
        vandermonde: V[i, j] = ref_nodes[i]**j, shape (k+1, k+1).
        vandermonde_inv: inverse of V (nodal -> modal).
    """

    x_a: float
    x_b: float
    nx: int
    k: int
    bc: str
    boundaries: np.ndarray
    widths: np.ndarray
    centers: np.ndarray
    ref_nodes: np.ndarray
    ref_weights: np.ndarray
    nodes: np.ndarray
    vandermonde: np.ndarray
    vandermonde_inv: np.ndarray

    @property
    def length(self) -> float:
        return self.x_b - self.x_a

    @property
    def dx(self) -> float:
        # uniform by construction; widths kept per cell for downstream code
        return float(self.widths[0])


@dataclass(frozen=True)
class CellPolynomial:
    """Degree-k polynomial on one cell, monomial coefficients in xi."""

    cell: int
    coeffs: np.ndarray  # (k+1,), p(xi) = sum_m coeffs[m] * xi**m

    def __call__(self, xi):
        return np.polynomial.polynomial.polyval(xi, self.coeffs)

    def average(self) -> float:
        """Exact cell average (1/2) int_{-1}^{1} p(xi) dxi."""
        c = self.coeffs
        return float(sum(c[m] / (m + 1) for m in range(0, len(c), 2)))


def build_mesh(x_a: float, x_b: float, nx: int, k: int, bc: str = PERIODIC) -> Mesh1D:
    """Build a uniform mesh with (k+1)-point Gauss-Legendre nodes per cell."""
    if not x_a < x_b:
        raise ValueError(f"invalid bounds: [{x_a}, {x_b}]")
    if nx < 1:
        raise ValueError(f"need at least one cell, got nx={nx}")
    if k < 0:
        raise ValueError(f"degree must be >= 0, got k={k}")
    if bc not in (PERIODIC, FREE_FLOW):
        raise ValueError(f"unknown boundary kind: {bc!r}")

    boundaries = np.linspace(x_a, x_b, nx + 1)
    widths = np.diff(boundaries)
    centers = 0.5 * (boundaries[:-1] + boundaries[1:])

    ref_nodes, gw = np.polynomial.legendre.leggauss(k + 1)
    ref_weights = gw / 2.0  # leggauss weights sum to 2 on [-1,1]
    nodes = centers[:, None] + 0.5 * widths[:, None] * ref_nodes[None, :]

    vandermonde = np.vander(ref_nodes, k + 1, increasing=True)
    vandermonde_inv = np.linalg.inv(vandermonde)

    return Mesh1D(
        x_a=float(x_a),
        x_b=float(x_b),
        nx=nx,
        k=k,
        bc=bc,
        boundaries=boundaries,
        widths=widths,
        centers=centers,
        ref_nodes=ref_nodes,
        ref_weights=ref_weights,
        nodes=nodes,
        vandermonde=vandermonde,
        vandermonde_inv=vandermonde_inv,
    )


def nodal_to_modal(values: np.ndarray, cell: int, mesh: Mesh1D) -> CellPolynomial:
    """Interpolate k+1 nodal values into monomial coefficients in xi."""
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.k + 1,):
        raise ValueError(f"expected {mesh.k + 1} values, got shape {values.shape}")
    return CellPolynomial(cell=cell, coeffs=mesh.vandermonde_inv @ values)


def modal_to_nodal(poly: CellPolynomial, mesh: Mesh1D) -> np.ndarray:
    """Evaluate a cell polynomial at the cell's Gauss nodes."""
    return mesh.vandermonde @ poly.coeffs


def nodal_to_modal_array(values: np.ndarray, mesh: Mesh1D) -> np.ndarray:
    """Vectorized transform: values (nx, k+1, ...) -> coefficients, same shape."""
    return np.einsum("mi,pi...->pm...", mesh.vandermonde_inv, values)


def modal_to_nodal_array(coeffs: np.ndarray, mesh: Mesh1D) -> np.ndarray:
    return np.einsum("im,pm...->pi...", mesh.vandermonde, coeffs)


def cell_of(x: float, mesh: Mesh1D) -> int:
    """Owning cell under the half-open convention [x_{p-1/2}, x_{p+1/2});
    the last cell is closed at x_b."""
    p = int(np.searchsorted(mesh.boundaries, x, side="right")) - 1
    return min(max(p, 0), mesh.nx - 1)


def wrap_position(x: float, mesh: Mesh1D) -> float:
    """Map x into [x_a, x_b) by periodicity."""
    y = mesh.x_a + (x - mesh.x_a) % mesh.length
    if y >= mesh.x_b:  # float mod can land exactly on the upper bound
        y = mesh.x_a
    return y


def local_coord(x: float, cell: int, mesh: Mesh1D) -> float:
    return 2.0 * (x - mesh.centers[cell]) / mesh.widths[cell]


def eval_piecewise(coeffs: np.ndarray, x, mesh: Mesh1D):
    """Evaluate the piecewise polynomial field (coeffs shape (nx, k+1)) at x
    (scalar or array).

    Periodic meshes wrap x; free-flow meshes extend the boundary cells by
    their constant endpoint values outside the domain.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if mesh.bc == PERIODIC:
        y = mesh.x_a + (x - mesh.x_a) % mesh.length
        y = np.where(y >= mesh.x_b, mesh.x_a, y)  # float mod can hit the upper bound
    else:
        y = np.clip(x, mesh.x_a, mesh.x_b)
    p = np.clip(np.searchsorted(mesh.boundaries, y, side="right") - 1, 0, mesh.nx - 1)
    xi = 2.0 * (y - mesh.centers[p]) / mesh.widths[p]
    if mesh.bc != PERIODIC:
        # clamp to the endpoint values of the edge cells outside the domain
        xi = np.where(x <= mesh.x_a, -1.0, np.where(x >= mesh.x_b, 1.0, xi))
    vand = xi[:, None] ** np.arange(mesh.k + 1)
    out = np.einsum("tm,tm->t", coeffs[p], vand)
    return float(out[0]) if scalar else out
