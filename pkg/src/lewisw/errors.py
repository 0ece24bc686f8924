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


class LewisError(Exception):
    """Base class for every error raised by lewisw."""

    exit_code: int = 3


class InputError(LewisError):
    """The problem instance or its parameters are unusable."""

    exit_code = 1


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{where}")


class DimensionError(InputError):
    pass


class ZeroRowError(InputError):
    def __init__(self, row: int) -> None:
        self.row = row
        super().__init__(f"Row {row} of the matrix is identically zero")


class NonFiniteInput(InputError):
    pass


class UnsupportedP(InputError):
    pass


class NumericalError(LewisError):
    """A linear algebra or scalar solve could not be carried out."""


class NotPositiveDefinite(NumericalError):
    exit_code = 1


class DowndateSingular(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class DomainError(NumericalError):
    pass


class InvalidStepSize(NumericalError):
    pass


class IndexOutOfRange(NumericalError, IndexError):
    pass


class ConvergenceError(LewisError):
    exit_code = 2


class IterationCapExceeded(ConvergenceError):
    pass


class OracleStalled(ConvergenceError):
    pass


class InvariantViolated(LewisError):
    """A proved invariant failed at runtime, which means a bug rather than bad input."""

    exit_code = 3


class PreconditionViolated(LewisError):
    exit_code = 3
