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

import csv
import json
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.io
import scipy.sparse
from pydantic import BaseModel

from .errors import ParseError
from .linalg import FloatArray, validate_matrix
from .solver import IterationCounts, SolverConfig, SolverReport
from .verify import ResidualReport

MatrixFormat = Literal["csv", "mm", "matrix-market"]

REPORT_KEYS = frozenset(
    {"weights_optimizer", "weights_definition", "residuals", "iterations", "trace_path", "wall_ms", "config"}
)
TRACE_COLUMNS = ("iter", "step_type", "F", "rho_max", "opt_residual")
MONOTONE_SLACK = 1e-9


def infer_format(path: Path) -> MatrixFormat:
    return "mm" if path.suffix.lower() in {".mtx", ".mm"} else "csv"


def _read_csv(path: Path) -> FloatArray:
    rows: list[list[float]] = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for fields in reader:
            if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
                continue
            row = []
            for column, token in enumerate(fields, start=1):
                try:
                    row.append(float(token))
                except ValueError:
                    raise ParseError(f"Not a number: {token!r}", reader.line_num, column) from None
            if rows and len(row) != len(rows[0]):
                raise ParseError(f"Expected {len(rows[0])} columns, found {len(row)}", reader.line_num)
            rows.append(row)
    if not rows:
        raise ParseError(f"No matrix rows in {path}")
    return np.array(rows, dtype=np.float64)


def _read_matrix_market(path: Path) -> FloatArray:
    try:
        *_, field, _ = scipy.io.mminfo(path)
        if field == "complex":
            raise ParseError("Complex Matrix Market files are not supported")
        data = scipy.io.mmread(path)
    except (ValueError, RuntimeError, OSError) as e:
        raise ParseError(f"Unreadable Matrix Market file: {e}") from e
    if scipy.sparse.issparse(data):
        data = data.toarray()
    return np.asarray(data, dtype=np.float64)


def load_matrix(path: str | Path, format: MatrixFormat | None = None) -> FloatArray:
    """Read a dense matrix from CSV (one row per line) or Matrix Market and check it is a valid instance."""
    path = Path(path)
    match format or infer_format(path):
        case "mm" | "matrix-market":
            A = _read_matrix_market(path)
        case _:
            A = _read_csv(path)
    return validate_matrix(A)


class RunReport(BaseModel):
    weights_optimizer: list[float]
    weights_definition: list[float]
    residuals: ResidualReport
    iterations: IterationCounts
    trace_path: str | None
    wall_ms: float
    config: SolverConfig
    converged: bool
    ellipsoid_containment: bool | None = None

    @classmethod
    def from_solver(
        cls, report: SolverReport, trace_path: Path | None, containment: bool | None = None
    ) -> RunReport:
        return cls(
            weights_optimizer=report.weights_optimizer.values.tolist(),
            weights_definition=report.weights_definition.values.tolist(),
            residuals=report.residuals,
            iterations=report.iterations,
            trace_path=str(trace_path) if trace_path is not None else None,
            wall_ms=report.wall_time * 1000.0,
            config=report.config,
            converged=report.converged,
            ellipsoid_containment=containment,
        )


def write_report(report: RunReport, path: Path) -> None:
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")


def write_trace(report: SolverReport, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for row in report.trace:
            writer.writerow([row.iteration, row.step_type, repr(row.value), repr(row.rho_max), repr(row.opt_residual)])


def lint_report(path: str | Path) -> list[str]:
    """Problems found in a report: missing keys, or an objective that goes up along the trace.

    Fixed-point rows are skipped since that iteration is not a descent method.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        return [f"Cannot read report: {e}"]

    problems = [f"Missing key {key!r}" for key in sorted(REPORT_KEYS - data.keys())]
    trace_path = data.get("trace_path")
    if not trace_path:
        return problems
    trace_file = Path(trace_path)
    if not trace_file.is_absolute() and not trace_file.exists():
        trace_file = path.parent / trace_file
    try:
        with trace_file.open(newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            rows = list(reader)
    except OSError as e:
        return [*problems, f"Cannot read trace: {e}"]
    missing = [column for column in ("step_type", "F") if column not in (reader.fieldnames or ())]
    if missing:
        return [*problems, f"Trace {trace_file} lacks column(s) {', '.join(missing)}"]

    previous: float | None = None
    for row in rows:
        if row["step_type"] == "fixed_point":
            continue
        try:
            value = float(row["F"])
        except (TypeError, ValueError):
            problems.append(f"Unreadable F at iteration {row.get('iter')}: {row['F']!r}")
            continue
        if previous is not None and value > previous + MONOTONE_SLACK:
            step = f"{row.get('iter')} ({row['step_type']})"
            problems.append(f"F increases at iteration {step}: {previous!r} -> {value!r}")
        previous = value
    return problems
