"""
Copyright (C) 2025 Narendra S

This file is a part of the Lewisw project

Lewisw is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

Lewisw is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with Lewisw.  If not, see <https://www.gnu.org/licenses/>.
"""

import os
import sys
from pathlib import Path

import click
from click_default_group import DefaultGroup
from platformdirs import user_config_path
from pydantic import ValidationError
from rich import print
from rich.markup import escape

from . import config as conf
from . import runner
from .log import setup_logging
from .matrix_io import lint_report

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}
VARIANTS = ["parallel", "sequential", "one-step", "cohen-peng"]


@click.group(
    cls=DefaultGroup,
    default="solve",
    context_settings=CONTEXT_SETTINGS,
)
@click.version_option(
    "0.0.1",
    "--version",
    "-v",
)
@click.option(
    "-c",
    "--config",
    help=f"Path to the configuration file (defaults to {user_config_path('lewisw') / 'config.toml'})",
)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.pass_context
def cli(ctx, config, log_level):
    """Compute lp Lewis weights of a tall matrix for p > 2"""
    ctx.ensure_object(dict)

    if config is not None:
        # The settings source reads the file named by this variable
        os.environ[conf.CONFIG_ENV] = str(Path(config).resolve())
    try:
        settings = conf.Settings()
        if log_level is not None:
            settings.log_level = log_level.upper()
    except ValidationError as e:
        print(f"[red]Invalid configuration:[/red] {escape(str(e))}", file=sys.stderr)
        ctx.exit(1)
    setup_logging(settings.log_level)
    ctx.obj["settings"] = settings


@cli.command(context_settings=CONTEXT_SETTINGS)
@click.option("--input", "input_path", required=True, help="Matrix file, CSV or Matrix Market")
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv", "mm", "matrix-market"]),
    help="Input format (inferred from the extension)",
)
@click.option("-p", type=float, required=True, help="Exponent, p > 2")
@click.option("--eps", type=float, default=1e-6, show_default=True, help="Target accuracy")
@click.option("--variant", type=click.Choice(VARIANTS), default="parallel", show_default=True)
@click.option("--out", default="report.json", show_default=True, help="Where to write the JSON report")
@click.option("--trace", help="Where to write the per-iteration CSV trace")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the ellipsoid containment check")
@click.option("--max-iters-scale", type=float, help="Multiplier on the iteration budget")
@click.option("--threads", type=int, help="Worker threads for leverage scores (defaults to all cores)")
@click.pass_context
def solve(ctx, input_path, fmt, p, eps, variant, out, trace, seed, max_iters_scale, threads):
    """Solve for the Lewis weights and write a report"""
    settings: conf.Settings = ctx.obj["settings"]

    overrides = {"workers": threads or os.cpu_count() or 1}
    if max_iters_scale is not None:
        overrides["max_iters_scale"] = max_iters_scale
    try:
        settings.solver = conf.SolverSettings.model_validate(settings.solver.model_dump() | overrides)
        manifest = runner.RunManifest(
            input=input_path, format=fmt, p=p, eps=eps, variant=variant, out=out, trace=trace, seed=seed
        )
    except ValidationError as e:
        print(f"[red]Invalid arguments:[/red] {escape(str(e))}", file=sys.stderr)
        ctx.exit(1)
    ctx.exit(runner.run(manifest, settings))


@cli.command("lint-report", context_settings=CONTEXT_SETTINGS)
@click.argument("report", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def lint(ctx, report):
    """Check a report for missing keys and an objective that increases"""
    problems = lint_report(report)
    for problem in problems:
        print(f"[red]{escape(problem)}[/red]", file=sys.stderr)
    if problems:
        ctx.exit(3)
    print("[green]OK[/green]")


@cli.command("config", context_settings=CONTEXT_SETTINGS)
@click.pass_context
def show_config(ctx):
    """Print the effective settings"""
    click.echo(ctx.obj["settings"].model_dump_json(indent=2))
