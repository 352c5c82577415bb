"""Mass-conservative semi-Lagrangian nodal DG solver for the 1D BGK equation.

Core pieces: `mesh` (Gauss-node DG mesh and modal/nodal transforms),
`transport` (exact-integration semi-Lagrangian update), `limiter` (local
maximum-principle scaling), `kinetics` (velocity grid, moments, Maxwellian),
`dirk` (stiffly accurate implicit-explicit time stepping along
characteristics), and `harness` (experiment drivers and CLI).
"""

from .dirk import ButcherTableau, RunResult, relax_solve, run, shu_osher_coeffs, step_scheme1, step_scheme2, tableau
from .kinetics import (
    DistributionField,
    MacroFields,
    RealizabilityError,
    VelocityGrid,
    collision_invariant_residual,
    maxwellian,
    moments,
    phase_space_totals,
    velocity_grid,
)
from .limiter import LmppLimiter, apply_lmpp, local_bounds, polynomial_extrema
from .mesh import (
    FREE_FLOW,
    PERIODIC,
    CellPolynomial,
    Mesh1D,
    build_mesh,
    eval_piecewise,
    modal_to_nodal,
    nodal_to_modal,
)
from .transport import advect_batch, advect_nodal_batch, sl_ndg_step, total_mass, trace_upstream

__version__ = "0.1.0"

__all__ = [
    "ButcherTableau",
    "CellPolynomial",
    "DistributionField",
    "FREE_FLOW",
    "LmppLimiter",
    "MacroFields",
    "Mesh1D",
    "PERIODIC",
    "RealizabilityError",
    "RunResult",
    "VelocityGrid",
    "advect_batch",
    "advect_nodal_batch",
    "apply_lmpp",
    "build_mesh",
    "collision_invariant_residual",
    "eval_piecewise",
    "local_bounds",
    "maxwellian",
    "modal_to_nodal",
    "moments",
    "nodal_to_modal",
    "phase_space_totals",
    "polynomial_extrema",
    "relax_solve",
    "run",
    "shu_osher_coeffs",
    "sl_ndg_step",
    "step_scheme1",
    "step_scheme2",
    "tableau",
    "total_mass",
    "trace_upstream",
    "velocity_grid",
]
