"""Experiment driver: initial data, error norms, and the named experiments.

Each experiment mirrors one of the solver studies: smooth/step scalar
transport for the limiter, consistent/inconsistent BGK accuracy, a temporal
CFL scan, conservation audits, the Sod-type shock tube against the exact
Euler solution, a mixed-regime variable-epsilon problem, and the
Scheme 1 / Scheme 2 stability comparison. Self-convergence errors follow

    error_Nx = || f_Nx - f_{Nx/2} ||,

both fields evaluated at the coarser run's six-point Gauss quadrature
locations; all reported norms use six-point Gauss per cell.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .. import dirk
from ..kinetics import MacroFields, VelocityGrid, maxwellian, moments, phase_space_totals
from ..limiter import LmppLimiter
from ..mesh import FREE_FLOW, PERIODIC, Mesh1D, build_mesh, nodal_to_modal_array
from ..transport import advect_nodal_batch
from . import report
from .riemann_exact import EulerState, riemann_profile

EXPERIMENTS = (
    "transport_convergence",
    "step_advection",
    "bgk_consistent",
    "bgk_inconsistent",
    "temporal_scan",
    "conservation_audit",
    "riemann_sod",
    "mixed_regime",
    "scheme_stability",
)

CFL_SCAN_GRID = (0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0)
CFL_SCAN_REFERENCE = 0.01
STABILITY_CFL_GRID = tuple(np.arange(0.5, 10.6, 0.5))


@dataclass
class ExperimentSpec:
    """Parameters of one experiment run; mirrored by the manifest/config file."""

    name: str
    nx: int
    nv: int
    vmax: float
    cfl: float
    order: int
    tableau: str
    scheme: int
    epsilon: str
    t_end: float
    limiter: str
    out_dir: str
    parallel: int = 0
    seed: int | None = None
    resolutions: tuple | None = None
    plots: bool = True

    def params(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "name", "nx", "nv", "vmax", "cfl", "order", "tableau", "scheme",
            "epsilon", "t_end", "limiter", "parallel", "seed", "plots",
        )}
        d["resolutions"] = list(self.resolutions) if self.resolutions else None
        return d


DEFAULTS = {
    "transport_convergence": dict(nx=320, nv=1, vmax=1.0, cfl=2.2, order=2,
                                  tableau="backward_euler", scheme=1, epsilon="none",
                                  t_end=10.0, limiter="lmpp",
                                  resolutions=(10, 20, 40, 80, 160, 320)),
    "step_advection": dict(nx=200, nv=1, vmax=1.0, cfl=2.2, order=2,
                           tableau="backward_euler", scheme=1, epsilon="none",
                           t_end=100.0, limiter="lmpp"),
    "bgk_consistent": dict(nx=160, nv=100, vmax=15.0, cfl=0.1, order=2,
                           tableau="dirk3_4stage", scheme=1, epsilon="1e-6",
                           t_end=0.04, limiter="lmpp",
                           resolutions=(20, 40, 80, 160)),
    "bgk_inconsistent": dict(nx=160, nv=100, vmax=15.0, cfl=4.0, order=2,
                             tableau="dirk3_4stage", scheme=1, epsilon="1e-6",
                             t_end=0.1, limiter="lmpp",
                             resolutions=(20, 40, 80, 160)),
    "temporal_scan": dict(nx=640, nv=100, vmax=15.0, cfl=0.0, order=2,
                          tableau="dirk3_4stage", scheme=1, epsilon="1e-6",
                          t_end=0.04, limiter="lmpp"),
    "conservation_audit": dict(nx=80, nv=100, vmax=15.0, cfl=4.0, order=2,
                               tableau="dirk3_4stage", scheme=1, epsilon="1e-6",
                               t_end=0.04, limiter="lmpp"),
    "riemann_sod": dict(nx=200, nv=100, vmax=15.0, cfl=2.3, order=2,
                        tableau="dirk3_4stage", scheme=1, epsilon="1e-6",
                        t_end=0.16, limiter="lmpp"),
    "mixed_regime": dict(nx=40, nv=100, vmax=10.0, cfl=4.0, order=2,
                         tableau="dirk3_4stage", scheme=1, epsilon="tanh:11",
                         t_end=0.45, limiter="lmpp"),
    "scheme_stability": dict(nx=640, nv=1, vmax=1.0, cfl=0.0, order=0,
                             tableau="dirk2", scheme=1, epsilon="none",
                             t_end=2.0, limiter="off"),
}

DOMAINS = {
    "transport_convergence": (0.0, 2.0 * np.pi, PERIODIC),
    "step_advection": (-1.0, 1.0, PERIODIC),
    "bgk_consistent": (-1.0, 1.0, PERIODIC),
    "bgk_inconsistent": (-1.0, 1.0, PERIODIC),
    "temporal_scan": (-1.0, 1.0, PERIODIC),
    "conservation_audit": (-1.0, 1.0, PERIODIC),
    "riemann_sod": (0.0, 1.0, FREE_FLOW),
    "mixed_regime": (-0.5, 0.5, PERIODIC),
    "scheme_stability": (0.0, 1.0, PERIODIC),
}


def make_spec(name: str, out_dir: str, **overrides) -> ExperimentSpec:
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; known: {EXPERIMENTS}")
    params = dict(DEFAULTS[name])
    params.update({k: v for k, v in overrides.items() if v is not None})
    if params.get("resolutions") is not None:
        params["resolutions"] = tuple(int(n) for n in params["resolutions"])
    return ExperimentSpec(name=name, out_dir=out_dir, **params)


def mesh_for(spec: ExperimentSpec, nx: int | None = None) -> Mesh1D:
    x_a, x_b, bc = DOMAINS[spec.name]
    return build_mesh(x_a, x_b, nx or spec.nx, spec.order, bc)


def limiter_for(spec: ExperimentSpec) -> LmppLimiter | None:
    if spec.limiter == "off":
        return None
    if spec.limiter == "lmpp":
        return LmppLimiter()
    raise ValueError(f"unknown limiter {spec.limiter!r} (use 'lmpp' or 'off')")


def parse_epsilon(text: str):
    """Epsilon specification: a number, 'tanh:a0' for the variable profile,
    or 'none' for collisionless transport."""
    text = str(text).strip()
    if text == "none":
        return None
    if text.startswith("tanh:"):
        return ("tanh", float(text.split(":", 1)[1]))
    return float(text)


def epsilon_field(spec: ExperimentSpec, mesh: Mesh1D):
    parsed = parse_epsilon(spec.epsilon)
    if isinstance(parsed, tuple):
        return epsilon_profile(parsed[1], mesh)
    return parsed


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def init_consistent(mesh: Mesh1D, grid: VelocityGrid) -> np.ndarray:
    """Maxwellian data with rho = T = 1 and a two-bump velocity perturbation."""
    x = mesh.nodes
    u0 = 0.1 * (np.exp(-((10.0 * x - 1.0) ** 2)) - 2.0 * np.exp(-((10.0 * x + 3.0) ** 2)))
    rho = np.ones_like(x)
    T = np.ones_like(x)
    U = MacroFields(rho=rho, mom=rho * u0, E=0.5 * rho * u0**2 + 0.5 * rho * T)
    return maxwellian(U, grid)


def init_inconsistent(mesh: Mesh1D, grid: VelocityGrid) -> np.ndarray:
    """Non-equilibrium data: 0.5/0.3-weighted Maxwellian bumps at u~ and -u~/2."""
    x = mesh.nodes[..., None]
    v = grid.nodes[None, None, :]
    ut = 1.0
    rho_t = 1.0 + 0.2 * np.sin(np.pi * x)
    T_t = 1.0 / rho_t
    pref = rho_t / np.sqrt(2.0 * np.pi * T_t)
    return pref * (
        0.5 * np.exp(-((v - ut) ** 2) / (2.0 * T_t))
        + 0.3 * np.exp(-((v + 0.5 * ut) ** 2) / (2.0 * T_t))
    )


def init_riemann(mesh: Mesh1D, grid: VelocityGrid) -> np.ndarray:
    """Sod-type data: side Maxwellians (2.25, 0, 1.125) / (3/7, 0, 1/6), jump at 0.5."""
    x = mesh.nodes
    left = x <= 0.5
    rho = np.where(left, 2.25, 3.0 / 7.0)
    T = np.where(left, 1.125, 1.0 / 6.0)
    u = np.zeros_like(x)
    U = MacroFields(rho=rho, mom=rho * u, E=0.5 * rho * u**2 + 0.5 * rho * T)
    return maxwellian(U, grid)


def init_mixed_regime(mesh: Mesh1D, grid: VelocityGrid) -> np.ndarray:
    """Equal-weight Maxwellian bumps at u~ and -u~/2 with sinusoidal rho~, T~."""
    x = mesh.nodes[..., None]
    v = grid.nodes[None, None, :]
    ut = 0.75
    rho_t = 1.0 + 0.875 * np.sin(2.0 * np.pi * x)
    T_t = 0.5 + 0.4 * np.sin(2.0 * np.pi * x)
    pref = rho_t / (2.0 * np.sqrt(2.0 * np.pi * T_t))
    return pref * (
        np.exp(-((v - ut) ** 2) / (2.0 * T_t))
        + np.exp(-((v + 0.5 * ut) ** 2) / (2.0 * T_t))
    )


def epsilon_profile(a0: float, mesh: Mesh1D) -> np.ndarray:
    """eps(x) = 1e-6 + (tanh(1 - a0 x) + tanh(1 + a0 x))/2 at the Gauss nodes."""
    x = mesh.nodes
    return 1e-6 + 0.5 * (np.tanh(1.0 - a0 * x) + np.tanh(1.0 + a0 * x))


def sample_nodal(fn, mesh: Mesh1D) -> np.ndarray:
    return fn(mesh.nodes)


def step_initial(x):
    """Piecewise-constant data {1, 0.5, -0.5, -1} with jumps at -0.5, 0, 0.5."""
    x = np.asarray(x, dtype=float)
    return np.where(x < -0.5, 1.0, np.where(x < 0.0, 0.5, np.where(x < 0.5, -0.5, -1.0)))


def project_l2(fn, mesh: Mesh1D, jumps=()) -> np.ndarray:
    """Cellwise L2 projection with six-point Gauss, splitting at given jump
    abscissae so discontinuous data is integrated exactly per smooth piece."""
    xi6, w6 = np.polynomial.legendre.leggauss(6)
    k = mesh.k
    j = np.arange(k + 1)
    tot = j[:, None] + j[None, :]
    gram = np.where(tot % 2 == 0, 2.0 / (tot + 1.0), 0.0)
    gram_inv = np.linalg.inv(gram)

    coeffs = np.zeros((mesh.nx, k + 1))
    for p in range(mesh.nx):
        lo, hi = mesh.boundaries[p], mesh.boundaries[p + 1]
        cuts = sorted({lo, hi} | {j_ for j_ in jumps if lo < j_ < hi})
        rhs = np.zeros(k + 1)
        for a, b in zip(cuts[:-1], cuts[1:]):
            xg = 0.5 * (a + b) + 0.5 * (b - a) * xi6
            wg = 0.5 * (b - a) * w6
            xi_t = 2.0 * (xg - mesh.centers[p]) / mesh.widths[p]
            rhs += (wg * fn(xg)) @ np.vander(xi_t, k + 1, increasing=True)
        coeffs[p] = gram_inv @ (2.0 * rhs / mesh.widths[p])
    return np.einsum("im,pm->pi", mesh.vandermonde, coeffs)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

_XI6, _W6 = np.polynomial.legendre.leggauss(6)


def norm_grid(mesh: Mesh1D) -> tuple[np.ndarray, np.ndarray]:
    """Six-point Gauss abscissae and physical weights per cell, flattened."""
    x = mesh.centers[:, None] + 0.5 * mesh.widths[:, None] * _XI6[None, :]
    w = 0.5 * mesh.widths[:, None] * np.broadcast_to(_W6, (mesh.nx, 6))
    return x.ravel(), w.ravel()


def eval_field_at(values_nodal: np.ndarray, x: np.ndarray, mesh: Mesh1D) -> np.ndarray:
    """Evaluate a nodal DG field ((nx, k+1) or (nx, k+1, nv)) at points x
    inside the domain; returns (npts,) or (npts, nv)."""
    coeffs = nodal_to_modal_array(values_nodal, mesh)
    p = np.clip(np.floor((x - mesh.x_a) / mesh.dx).astype(int), 0, mesh.nx - 1)
    xi = 2.0 * (x - mesh.centers[p]) / mesh.dx
    vand = xi[:, None] ** np.arange(mesh.k + 1)
    return np.einsum("tm...,tm->t...", coeffs[p], vand)


def _norms_from_diff(diff: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    """Domain-averaged L1 and L2 plus pointwise Linf.

    Averaging (dividing by the measure of the domain, velocity included)
    makes the values comparable across domain sizes and velocity counts and
    cancels in convergence-order ratios.
    """
    if not np.isfinite(diff).all():
        return float("inf"), float("inf"), float("inf")
    if diff.ndim == 1:
        diff = diff[:, None]
    wsum = w.sum() * diff.shape[1]
    absd = np.abs(diff)
    l1 = float(np.einsum("t,tv->", w, absd) / wsum)
    l2 = float(np.sqrt(np.einsum("t,tv->", w, absd**2) / wsum))
    linf = float(absd.max())
    return l1, l2, linf


def norms_vs_exact(values, mesh: Mesh1D, exact_fn):
    x, w = norm_grid(mesh)
    diff = eval_field_at(values, x, mesh) - exact_fn(x)
    return _norms_from_diff(np.asarray(diff), w)


def norms_between(values_fine, mesh_fine: Mesh1D, values_coarse, mesh_coarse: Mesh1D):
    """Difference of two DG fields at the coarser mesh's quadrature points."""
    x, w = norm_grid(mesh_coarse)
    diff = eval_field_at(values_fine, x, mesh_fine) - eval_field_at(values_coarse, x, mesh_coarse)
    return _norms_from_diff(diff, w)


@dataclass
class ErrorReport:
    resolutions: list
    l1: list
    l2: list
    linf: list

    @property
    def orders_l1(self):
        return observed_orders(self.l1)

    @property
    def orders_l2(self):
        return observed_orders(self.l2)

    @property
    def orders_linf(self):
        return observed_orders(self.linf)

    def rows(self):
        o1, o2, oi = self.orders_l1, self.orders_l2, self.orders_linf
        return [
            (n, e1, o1[i], e2, o2[i], ei, oi[i])
            for i, (n, e1, e2, ei) in enumerate(
                zip(self.resolutions, self.l1, self.l2, self.linf)
            )
        ]


def observed_orders(errors) -> list:
    """log2 ratios of successive errors; first entry has no predecessor."""
    out = [float("nan")]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(float(np.log2(a / b)) if a > 0 and b > 0 else float("nan"))
    return out


def max_drift(totals: np.ndarray) -> np.ndarray:
    """max_t |Q(t) - Q(0)| / (1 + |Q(0)|) per conserved component."""
    q0 = totals[0]
    return np.abs(totals - q0[None, :]).max(axis=0) / (1.0 + np.abs(q0))


# ---------------------------------------------------------------------------
# scalar transport runs
# ---------------------------------------------------------------------------

def scalar_transport_run(u, v, t_end, cfl, mesh, limiter=None):
    """March u_t + v u_x = 0 with one SL step per dt = CFL dx / |v|."""
    dt = cfl * mesh.dx / abs(v)
    t = 0.0
    u = u[..., None] if u.ndim == 2 else u
    while t < t_end - 1e-12 * t_end:
        h = min(dt, t_end - t)
        u = advect_nodal_batch(u, np.array([v * h / mesh.dx]), mesh, limiter=limiter)
        t += h
    return u[..., 0]


def bgk_chain_run(spec: ExperimentSpec, nx: int, nv: int | None = None,
                  cfl: float | None = None, t_end: float | None = None,
                  tableau: str | None = None, record: bool = False) -> dirk.RunResult:
    """One BGK run with the spec's initial data at the given resolution."""
    mesh = mesh_for(spec, nx)
    grid = VelocityGrid.uniform(spec.vmax, nv or spec.nv)
    f0 = INITIAL_DATA[spec.name](mesh, grid)
    eps = epsilon_field(spec, mesh)
    tab = dirk.tableau(tableau or spec.tableau)
    return dirk.run(
        f0, t_end if t_end is not None else spec.t_end, cfl if cfl is not None else spec.cfl,
        tab, eps, mesh, grid,
        limiter=limiter_for(spec), scheme=spec.scheme,
        workers=spec.parallel or None, record=record,
    )


INITIAL_DATA = {
    "bgk_consistent": init_consistent,
    "bgk_inconsistent": init_inconsistent,
    "temporal_scan": init_consistent,
    "conservation_audit": init_consistent,
    "riemann_sod": init_riemann,
    "mixed_regime": init_mixed_regime,
}


# ---------------------------------------------------------------------------
# error reports
# ---------------------------------------------------------------------------

def error_report(spec: ExperimentSpec, resolutions=None) -> ErrorReport:
    """Convergence table for the spec's experiment over nested resolutions."""
    resolutions = tuple(resolutions or spec.resolutions)
    if spec.name == "transport_convergence":
        rows, l1s, l2s, lis = [], [], [], []
        for nx in resolutions:
            mesh = mesh_for(spec, nx)
            u0 = sample_nodal(np.sin, mesh)
            u = scalar_transport_run(u0, 1.0, spec.t_end, spec.cfl, mesh, limiter_for(spec))
            e1, e2, ei = norms_vs_exact(u, mesh, lambda x: np.sin(x - spec.t_end))
            rows.append(nx)
            l1s.append(e1)
            l2s.append(e2)
            lis.append(ei)
        return ErrorReport(rows, l1s, l2s, lis)

    if spec.name not in INITIAL_DATA:
        raise ValueError(f"no convergence study defined for {spec.name!r}")
    runs = {}
    meshes = {}
    need = sorted(set(resolutions) | {n // 2 for n in resolutions})
    for nx in need:
        if nx not in resolutions and 2 * nx not in resolutions:
            continue
        runs[nx] = bgk_chain_run(spec, nx).values
        meshes[nx] = mesh_for(spec, nx)
    rows, l1s, l2s, lis = [], [], [], []
    for nx in resolutions:
        coarse = nx // 2
        if coarse not in runs:
            continue
        e1, e2, ei = norms_between(runs[nx], meshes[nx], runs[coarse], meshes[coarse])
        rows.append(nx)
        l1s.append(e1)
        l2s.append(e2)
        lis.append(ei)
    return ErrorReport(rows, l1s, l2s, lis)


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------

def _macro_profile(values, mesh, grid):
    U = moments(values, grid)
    x = mesh.nodes.ravel()
    order = np.argsort(x, kind="stable")
    cols = (x, U.rho.ravel(), U.u.ravel(), U.T.ravel(), U.E.ravel())
    return [c[order] for c in cols]


def _run_transport_convergence(spec, out):
    rep = error_report(spec)
    path = out.table_csv("transport_table", rep)
    out.table_figure(path, rep, title="smooth transport convergence")
    return rep


def _run_step_advection(spec, out):
    mesh = mesh_for(spec)
    jumps = (-0.5, 0.0, 0.5)
    u0 = project_l2(step_initial, mesh, jumps=jumps)
    results = {}
    for tag, lim in (("lmpp", limiter_for(replace(spec, limiter="lmpp"))), ("unlimited", None)):
        u = scalar_transport_run(u0.copy(), 1.0, spec.t_end, spec.cfl, mesh, lim)
        x = mesh.nodes.ravel()
        out.scalar_profile_csv(f"profile_{tag}", x, u.ravel())
        results[tag] = u
    out.step_profiles_figure(mesh, results, step_initial)
    return results


def _run_bgk_convergence(spec, out):
    rep = error_report(spec)
    path = out.table_csv("bgk_table", rep)
    out.table_figure(path, rep, title=f"{spec.name} self-convergence")
    res = bgk_chain_run(spec, spec.nx, record=True)
    mesh = mesh_for(spec)
    grid = VelocityGrid.uniform(spec.vmax, spec.nv)
    out.profile_csv("profile", *_macro_profile(res.values, mesh, grid))
    out.conservation_csv("conservation", res.times, res.totals)
    return rep


def _run_temporal_scan(spec, out):
    tableaus = ("backward_euler", "dirk2", "dirk3_4stage")
    ref = bgk_chain_run(spec, spec.nx, cfl=CFL_SCAN_REFERENCE, tableau="dirk3_4stage")
    mesh = mesh_for(spec)
    errors = {name: [] for name in tableaus}
    for name in tableaus:
        for cfl in CFL_SCAN_GRID:
            res = bgk_chain_run(spec, spec.nx, cfl=cfl, tableau=name)
            e1, _, _ = norms_between(res.values, mesh, ref.values, mesh)
            errors[name].append(e1)
    out.sweep_csv("cfl_scan", "cfl", CFL_SCAN_GRID,
                  {f"L1_{n}": errors[n] for n in tableaus})
    out.sweep_figure("cfl_scan", "CFL", CFL_SCAN_GRID,
                     {n: errors[n] for n in tableaus}, loglog=True)
    return errors


def _run_conservation_audit(spec, out):
    summary = []
    for tab in ("dirk2", "dirk3_4stage"):
        for nv in (100, 30):
            res = bgk_chain_run(spec, spec.nx, nv=nv, tableau=tab, record=True)
            out.conservation_csv(f"conservation_{tab}_nv{nv}", res.times, res.totals)
            drift = max_drift(res.totals)
            summary.append((tab, nv, *drift))
    out.audit_csv("audit_summary", summary)
    out.audit_figure(summary)
    return summary


def _run_riemann_sod(spec, out):
    res = bgk_chain_run(spec, spec.nx, record=True)
    mesh = mesh_for(spec)
    grid = VelocityGrid.uniform(spec.vmax, spec.nv)
    x, rho, u, T, E = _macro_profile(res.values, mesh, grid)
    out.profile_csv("profile", x, rho, u, T, E)

    left = EulerState(rho=2.25, u=0.0, p=2.25 * 1.125)
    right = EulerState(rho=3.0 / 7.0, u=0.0, p=(3.0 / 7.0) * (1.0 / 6.0))
    rho_e, u_e, p_e = riemann_profile(left, right, x, spec.t_end, x0=0.5)
    T_e = p_e / rho_e
    E_e = 0.5 * rho_e * u_e**2 + 0.5 * rho_e * T_e
    out.profile_csv("profile_exact", x, rho_e, u_e, T_e, E_e)

    xq, w = norm_grid(mesh)
    U = moments(res.values, grid)
    l1 = {}
    for name, num, exa in (
        ("rho", U.rho, lambda xs: riemann_profile(left, right, xs, spec.t_end)[0]),
        ("u", U.u, lambda xs: riemann_profile(left, right, xs, spec.t_end)[1]),
        ("T", U.T, lambda xs: (lambda r, uu, p: p / r)(*riemann_profile(left, right, xs, spec.t_end))),
    ):
        diff = eval_field_at(num, xq, mesh) - exa(xq)
        l1[name] = float((w * np.abs(diff)).sum())
    out.sweep_csv("euler_limit_l1", "field", list(l1), {"L1": list(l1.values())})
    out.conservation_csv("conservation", res.times, res.totals)
    out.riemann_figure(x, (rho, u, T), (rho_e, u_e, T_e))
    return l1


def _run_mixed_regime(spec, out):
    mesh = mesh_for(spec)
    grid = VelocityGrid.uniform(spec.vmax, spec.nv)
    eps = epsilon_field(spec, mesh)
    tab = dirk.tableau(spec.tableau)
    lim = limiter_for(spec)
    snapshots = [t for t in (0.1, 0.3, 0.45) if t <= spec.t_end + 1e-12]
    if not snapshots or abs(snapshots[-1] - spec.t_end) > 1e-12:
        snapshots = [t for t in snapshots if t < spec.t_end] + [spec.t_end]
    values = INITIAL_DATA[spec.name](mesh, grid)
    t_prev = 0.0
    times_all = [np.array([0.0])]
    totals_all = [phase_space_totals(values, mesh, grid)[None, :]]
    profiles = {}
    for t_snap in snapshots:
        res = dirk.run(values, t_snap - t_prev, spec.cfl, tab, eps, mesh, grid,
                       limiter=lim, scheme=spec.scheme, workers=spec.parallel or None)
        values = res.values
        times_all.append(res.times[1:] + t_prev)
        totals_all.append(res.totals[1:])
        t_prev = t_snap
        tag = f"t{t_snap:g}".replace(".", "p")
        profiles[t_snap] = _macro_profile(values, mesh, grid)
        out.profile_csv(f"profile_{tag}", *profiles[t_snap])
    out.conservation_csv("conservation", np.concatenate(times_all), np.vstack(totals_all))
    out.mixed_profiles_figure(profiles)

    rep = None
    if spec.resolutions:
        conv_spec = replace(spec, cfl=0.1, t_end=0.001)
        rep = error_report(conv_spec)
        path = out.table_csv("bgk_table", rep)
        out.table_figure(path, rep, title="mixed regime short-time self-convergence")
    return rep


def _run_scheme_stability(spec, out):
    mesh = mesh_for(spec)
    grid = VelocityGrid.single(1.0)
    u0 = sample_nodal(lambda x: np.sin(2.0 * np.pi * x), mesh)[..., None]
    tab = dirk.tableau(spec.tableau)
    lim = limiter_for(spec)
    exact = lambda x: np.sin(2.0 * np.pi * (x - spec.t_end))
    errors = {1: [], 2: []}
    for scheme in (1, 2):
        for cfl in STABILITY_CFL_GRID:
            with np.errstate(over="ignore", invalid="ignore"):
                res = dirk.run(u0.copy(), spec.t_end, cfl, tab, None, mesh, grid,
                               limiter=lim, scheme=scheme, record=False)
                e1, _, _ = norms_vs_exact(res.values[..., 0], mesh, exact)
            errors[scheme].append(e1)
    out.sweep_csv("stability_sweep", "cfl", STABILITY_CFL_GRID,
                  {"L1_scheme1": errors[1], "L1_scheme2": errors[2]})
    out.sweep_figure("stability_sweep", "CFL", STABILITY_CFL_GRID,
                     {"scheme 1": errors[1], "scheme 2": errors[2]}, logy=True)
    return errors


_DRIVERS = {
    "transport_convergence": _run_transport_convergence,
    "step_advection": _run_step_advection,
    "bgk_consistent": _run_bgk_convergence,
    "bgk_inconsistent": _run_bgk_convergence,
    "temporal_scan": _run_temporal_scan,
    "conservation_audit": _run_conservation_audit,
    "riemann_sod": _run_riemann_sod,
    "mixed_regime": _run_mixed_regime,
    "scheme_stability": _run_scheme_stability,
}


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run one named experiment; writes CSVs, figures, and a manifest into
    spec.out_dir and returns {output name: path}."""
    t0 = time.perf_counter()
    out = report.Reporter(spec.out_dir, plots=spec.plots)
    _DRIVERS[spec.name](spec, out)
    wall = time.perf_counter() - t0
    out.manifest(spec.params(), wall)
    return out.outputs
