"""Command line front end: one subcommand per experiment.

Flags default to each experiment's published setup; --config replays the
parameters stored in a previous run's manifest.json so the CSV outputs can be
reproduced byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import experiments


def _common_options(fn):
    options = [
        click.option("--nx", type=int, default=None, help="number of spatial cells"),
        click.option("--nv", type=int, default=None, help="number of velocity nodes"),
        click.option("--vmax", type=float, default=None, help="velocity domain half-width"),
        click.option("--cfl", type=float, default=None, help="CFL number (dt = CFL dx / vmax)"),
        click.option("--order", type=int, default=None, help="polynomial degree k"),
        click.option("--tableau", default=None,
                     type=click.Choice(["backward_euler", "dirk2", "dirk3_4stage"]),
                     help="DIRK tableau"),
        click.option("--scheme", type=click.IntRange(1, 2), default=None,
                     help="1: standard stages, 2: Shu-Osher form"),
        click.option("--epsilon", default=None,
                     help="relaxation time: number, 'tanh:A0', or 'none'"),
        click.option("--tend", "t_end", type=float, default=None, help="final time"),
        click.option("--limiter", default=None, type=click.Choice(["lmpp", "off"]),
                     help="local maximum-principle limiter"),
        click.option("--resolutions", default=None,
                     help="comma-separated nx list for convergence tables"),
        click.option("--out-dir", default=None, help="output directory"),
        click.option("--parallel", type=int, default=None,
                     help="worker threads for the velocity sweep"),
        click.option("--seed", type=int, default=None, help="reserved; runs are deterministic"),
        click.option("--config", "config_path", default=None,
                     type=click.Path(exists=True, dir_okay=False),
                     help="manifest.json (or bare parameter JSON) to replay"),
        click.option("--plots/--no-plots", "plots", default=None,
                     help="render figures next to the CSV output"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Semi-Lagrangian DG solver for the BGK equation: experiment runner."""


def _load_config(path: str) -> dict:
    doc = json.loads(Path(path).read_text())
    params = doc.get("experiment", doc)
    params = dict(params)
    for key in ("name", "out_dir", "outputs", "wall_clock_s", "written_at"):
        params.pop(key, None)
    if params.get("resolutions"):
        params["resolutions"] = tuple(params["resolutions"])
    return params


def _dispatch(name: str, config_path: str | None, out_dir: str | None,
              resolutions: str | None, **cli_params):
    overrides: dict = {}
    if config_path:
        overrides.update(_load_config(config_path))
    if resolutions is not None:
        cli_params["resolutions"] = tuple(int(s) for s in resolutions.split(","))
    overrides.update({k: v for k, v in cli_params.items() if v is not None})
    out_dir = out_dir or f"results/{name}"
    spec = experiments.make_spec(name, out_dir, **overrides)
    outputs = experiments.run_experiment(spec)
    for fname in sorted(outputs):
        click.echo(f"wrote {outputs[fname]}")


def _register(name: str):
    @main.command(name=name.replace("_", "-"),
                  short_help=f"run the {name.replace('_', ' ')} experiment")
    @_common_options
    def _cmd(config_path, out_dir, resolutions, **cli_params):
        _dispatch(name, config_path, out_dir, resolutions, **cli_params)

    _cmd.__name__ = name
    return _cmd


for _name in experiments.EXPERIMENTS:
    _register(_name)


if __name__ == "__main__":
    main()
