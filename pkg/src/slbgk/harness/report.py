"""Output side of the harness: delimited text files, run manifests, figures.

Every experiment writes CSVs with fixed column orders and %.17g floats so
repeated runs with identical parameters produce byte-identical files; figures
are rendered next to the CSVs with the Agg backend and are presentation only.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Reporter:
    """Collects experiment outputs under one directory and records their paths."""

    def __init__(self, out_dir, plots: bool = True):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.plots = plots
        self.outputs: dict[str, str] = {}

    def _register(self, name: str, ext: str) -> Path:
        path = self.dir / f"{name}.{ext}"
        self.outputs[f"{name}.{ext}"] = str(path)
        return path

    def _write_csv(self, name: str, header, rows) -> Path:
        path = self._register(name, "csv")
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n")
        return path

    # ---- delimited outputs ----

    def table_csv(self, name: str, rep) -> Path:
        header = ("nx", "L1", "order_L1", "L2", "order_L2", "Linf", "order_Linf")
        return self._write_csv(name, header, rep.rows())

    def scalar_profile_csv(self, name: str, x, u) -> Path:
        return self._write_csv(name, ("x", "u"), zip(x, u))

    def profile_csv(self, name: str, x, rho, u, T, E) -> Path:
        return self._write_csv(name, ("x", "rho", "u", "T", "E"), zip(x, rho, u, T, E))

    def conservation_csv(self, name: str, times, totals) -> Path:
        rows = ((t, q[0], q[1], q[2]) for t, q in zip(times, totals))
        return self._write_csv(name, ("t", "mass", "momentum", "energy"), rows)

    def sweep_csv(self, name: str, key_name: str, keys, columns: dict) -> Path:
        header = (key_name, *columns)
        rows = zip(keys, *columns.values())
        return self._write_csv(name, header, rows)

    def audit_csv(self, name: str, rows) -> Path:
        header = ("tableau", "nv", "drift_mass", "drift_momentum", "drift_energy")
        return self._write_csv(name, header, rows)

    def manifest(self, params: dict, wall_clock_s: float) -> Path:
        path = self._register("manifest", "json")
        doc = {
            "experiment": params,
            "outputs": sorted(self.outputs),
            "wall_clock_s": wall_clock_s,
            "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path

    # ---- figures ----

    def _save(self, fig, name: str):
        path = self._register(name, "png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)

    def table_figure(self, table_path, rep, title: str = ""):
        if not self.plots:
            return
        fig, ax = plt.subplots(figsize=(5, 4))
        nxs = np.asarray(rep.resolutions, dtype=float)
        for label, errs in (("L1", rep.l1), ("L2", rep.l2), ("Linf", rep.linf)):
            ax.loglog(nxs, errs, "o-", label=label)
        if len(nxs) > 1 and rep.l1[-1] > 0:
            # slope guide anchored at the last point
            p = np.log2(rep.l1[0] / rep.l1[-1]) / np.log2(nxs[-1] / nxs[0])
            ax.loglog(nxs, rep.l1[-1] * (nxs / nxs[-1]) ** (-round(p)),
                      "k--", lw=0.8, label=f"slope {round(p)}")
        ax.set_xlabel("nx")
        ax.set_ylabel("error")
        ax.set_title(title)
        ax.legend()
        self._save(fig, Path(table_path).stem)

    def step_profiles_figure(self, mesh, results: dict, exact_fn):
        if not self.plots:
            return
        fig, axes = plt.subplots(1, len(results), figsize=(5 * len(results), 4), sharey=True)
        axes = np.atleast_1d(axes)
        xd = np.linspace(mesh.x_a, mesh.x_b, 2001)
        for ax, (tag, u) in zip(axes, results.items()):
            ax.plot(xd, exact_fn(xd), "k-", lw=0.8, label="exact")
            ax.plot(mesh.nodes.ravel(), u.ravel(), ".", ms=3, label=tag)
            ax.set_title(tag)
            ax.set_xlabel("x")
            ax.legend()
        self._save(fig, "step_profiles")

    def sweep_figure(self, name: str, xlabel: str, xs, series: dict,
                     loglog: bool = False, logy: bool = False):
        if not self.plots:
            return
        fig, ax = plt.subplots(figsize=(5, 4))
        xs = np.asarray(xs, dtype=float)
        for label, ys in series.items():
            ys = np.asarray(ys, dtype=float)
            ys = np.where(np.isfinite(ys), ys, np.nan)
            ax.plot(xs, ys, "o-", label=label)
        if loglog:
            ax.set_xscale("log")
        if loglog or logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("L1 error")
        ax.legend()
        self._save(fig, name)

    def audit_figure(self, summary):
        if not self.plots:
            return
        fig, ax = plt.subplots(figsize=(6, 4))
        labels = [f"{tab}\nnv={nv}" for tab, nv, *_ in summary]
        width = 0.25
        pos = np.arange(len(summary))
        for i, comp in enumerate(("mass", "momentum", "energy")):
            vals = [max(row[2 + i], 1e-17) for row in summary]
            ax.bar(pos + (i - 1) * width, vals, width, label=comp)
        ax.set_yscale("log")
        ax.set_xticks(pos, labels)
        ax.set_ylabel("max relative drift")
        ax.legend()
        self._save(fig, "audit_summary")

    def riemann_figure(self, x, numeric, exact):
        if not self.plots:
            return
        fig, axes = plt.subplots(1, 3, figsize=(13, 4))
        for ax, label, num, exa in zip(axes, ("rho", "u", "T"), numeric, exact):
            ax.plot(x, exa, "k-", lw=0.8, label="exact")
            ax.plot(x, num, ".", ms=3, label="numeric")
            ax.set_title(label)
            ax.set_xlabel("x")
            ax.legend()
        self._save(fig, "riemann_profiles")

    def mixed_profiles_figure(self, profiles: dict):
        if not self.plots:
            return
        fig, axes = plt.subplots(1, 3, figsize=(13, 4))
        for t_snap, (x, rho, u, T, _E) in sorted(profiles.items()):
            for ax, vals in zip(axes, (rho, u, T)):
                ax.plot(x, vals, label=f"t={t_snap:g}")
        for ax, label in zip(axes, ("rho", "u", "T")):
            ax.set_title(label)
            ax.set_xlabel("x")
            ax.legend()
        self._save(fig, "mixed_profiles")
