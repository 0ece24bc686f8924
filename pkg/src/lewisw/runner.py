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

from __future__ import annotations

import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, FilePath, ValidationError, field_validator
from rich.console import Console
from rich.markup import escape

from .config import Settings, Variant
from .errors import LewisError
from .matrix_io import MatrixFormat, RunReport, load_matrix, write_report, write_trace
from .solver import schedule, solve
from .verify import ellipsoid_containment

logger = logging.getLogger(__name__)

stderr = Console(stderr=True)


class RunManifest(BaseModel):
    """One solver invocation as given on the command line."""

    model_config = ConfigDict(frozen=True)

    input: FilePath
    format: MatrixFormat | None = None
    p: float = Field(gt=2)
    eps: float = Field(default=1e-6, gt=0, lt=1)
    variant: Variant = Variant.PARALLEL
    out: Path = Path("report.json")
    trace: Path | None = None
    seed: int = 0

    @field_validator("variant", mode="before")
    @classmethod
    def parse_variant(cls, value: object) -> object:
        return Variant.parse(value) if isinstance(value, str) else value

    @field_validator("out", "trace")
    @classmethod
    def parent_exists(cls, path: Path | None) -> Path | None:
        if path is not None and not path.resolve().parent.is_dir():
            raise ValueError(f"Directory of {path} does not exist")
        return path


def run(manifest: RunManifest, settings: Settings | None = None) -> int:
    """Solve, write the report (and trace) and return the process exit code.

    0 when the reported Lewis residual is within eps, 2 when it is not or a budget ran out,
    1 for bad input and 3 for a broken internal invariant.
    """
    settings = settings or Settings()
    try:
        A = load_matrix(manifest.input, manifest.format)
        m, n = A.shape
        cfg = schedule(manifest.p, m, n, manifest.eps, manifest.variant, settings.solver)
        report = solve(A, cfg)
        containment = None
        if settings.containment_trials > 0:
            containment = ellipsoid_containment(
                A, report.final_iterate, cfg.params, settings.containment_trials, seed=manifest.seed
            )
        if manifest.trace is not None:
            write_trace(report, manifest.trace)
        write_report(RunReport.from_solver(report, manifest.trace, containment), manifest.out)
    except ValidationError as e:
        stderr.print(f"[red]Invalid solver settings:[/red] {escape(str(e))}")
        return 1
    except LewisError as e:
        stderr.print(f"[red]{type(e).__name__}:[/red] {escape(str(e))}")
        return e.exit_code
    except OSError as e:
        stderr.print(f"[red]I/O error:[/red] {escape(str(e))}")
        return 1

    residual = report.residuals.max_relative_fixed_point_residual
    logger.info("Wrote %s (residual %.3e, %.1f ms)", manifest.out, residual, report.wall_time * 1000.0)
    if residual > manifest.eps:
        stderr.print(f"[yellow]Lewis residual {residual:.3e} exceeds eps = {manifest.eps:g}[/yellow]")
        return 2
    return 0
