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
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionError,
    DomainError,
    DowndateSingular,
    IndexOutOfRange,
    NonFiniteInput,
    NotPositiveDefinite,
    ZeroRowError,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Method = Literal["cholesky", "qr"]

# rows per task when leverage scores fan out over threads
_CHUNK_ROWS = 4096

# raw LAPACK routines; the scipy wrappers cost more than the n x n work on small problems
_potrf, _trtrs = scipy.linalg.get_lapack_funcs(("potrf", "trtrs"), dtype=np.float64)


class Normalization(StrEnum):
    OPTIMIZER = "optimizer"
    """w: the minimizer of the log-det objective."""

    DEFINITION = "definition"
    """w-bar: the fixed point of the Lewis weight equation, summing to n."""


@dataclass(frozen=True)
class WeightVector:
    """A strictly positive weight per row of A, tagged with its normalization."""

    values: FloatArray
    normalization: Normalization = Normalization.OPTIMIZER

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise DimensionError(f"Weights must be a vector, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("Weights contain NaN or Inf")
        if np.any(values <= 0):
            raise DomainError("Weights must be strictly positive")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __array__(self, dtype: np.dtype | None = None, copy: bool | None = None) -> FloatArray:
        return np.asarray(self.values, dtype=dtype)


def as_weights(w: ArrayLike | WeightVector, m: int) -> FloatArray:
    """Coerce and validate a weight vector of length m."""
    values = np.asarray(w, dtype=np.float64)
    if values.shape != (m,):
        raise DimensionError(f"Expected {m} weights, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("Weights contain NaN or Inf")
    if np.any(values <= 0):
        raise DomainError("Weights must be strictly positive")
    return values


def validate_matrix(A: ArrayLike) -> FloatArray:
    """Check the invariants of a problem instance: 2-D, finite, m >= n and no zero rows."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] == 0:
        raise DimensionError(f"Expected a non-empty 2-D matrix, got shape {A.shape}")
    m, n = A.shape
    if m < n:
        raise DimensionError(f"Matrix must be tall (m >= n), got {m}x{n}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput("Matrix contains NaN or Inf")
    zero_rows = np.flatnonzero(~A.any(axis=1))
    if zero_rows.size:
        raise ZeroRowError(int(zero_rows[0]) + 1)
    return A


@dataclass(frozen=True)
class SpdState:
    """(A^T W A)^-1 for the weights it was built from.

    A fresh state carries the lower Cholesky factor L with A^T W A = L L^T. After a rank-one update the
    factor is stale and only the explicit inverse is kept; ``updates`` counts the updates since the last
    full factorization.
    """

    weights: FloatArray
    factor: FloatArray | None
    logdet: float
    period: int
    updates: int = 0
    inverse: FloatArray | None = field(default=None, repr=False)

    @cached_property
    def inverse_matrix(self) -> FloatArray:
        if self.inverse is not None:
            return self.inverse
        assert self.factor is not None
        eye = np.eye(self.factor.shape[0])
        return scipy.linalg.cho_solve((self.factor, True), eye, check_finite=False)

    def solve(self, b: ArrayLike) -> FloatArray:
        b = np.asarray(b, dtype=np.float64)
        if self.factor is not None:
            return scipy.linalg.cho_solve((self.factor, True), b, check_finite=False)
        return self.inverse_matrix @ b

    def whiten(self, A: FloatArray) -> FloatArray:
        """L^-1 A^T, so that column i has squared norm a_i^T (A^T W A)^-1 a_i."""
        if self.factor is None:
            raise ValueError("State has been updated since it was factored")
        return _triangular_solve(self.factor, A.T)

    def quadforms(self, A: FloatArray) -> FloatArray:
        """a_i^T (A^T W A)^-1 a_i for every row of A."""
        if self.factor is not None:
            B = self.whiten(A)
            return np.einsum("ij,ij->j", B, B)
        return np.einsum("ij,jk,ik->i", A, self.inverse_matrix, A)


def _triangular_solve(L: FloatArray, B: FloatArray) -> FloatArray:
    X, info = _trtrs(L, B, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"Triangular solve failed (LAPACK info {info})")
    return X


def _gram(A: FloatArray, w: FloatArray) -> FloatArray:
    # potrf only reads the lower triangle
    return (A * w[:, None]).T @ A


def spd_factorize(
    A: ArrayLike,
    w: ArrayLike | WeightVector,
    *,
    method: Method = "cholesky",
    period: int | None = None,
    check_finite: bool = True,
) -> SpdState:
    """Factor A^T W A.

    Raises NotPositiveDefinite when a pivot falls below n * machine epsilon * the largest diagonal entry.
    ``check_finite=False`` skips validating A and w, for callers that produce them from already checked data.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError(f"Expected a 2-D matrix, got shape {A.shape}")
    m, n = A.shape
    if check_finite:
        if not np.all(np.isfinite(A)):
            raise NonFiniteInput("Matrix contains NaN or Inf")
        w = as_weights(w, m)
    else:
        w = np.asarray(w, dtype=np.float64)

    if method == "qr":
        (R,) = scipy.linalg.qr(np.sqrt(w)[:, None] * A, mode="r", check_finite=False)
        R = R[:n]
        L = R.T * np.where(np.diag(R) < 0, -1.0, 1.0)
        scale = float(np.max(np.einsum("i,ij,ij->j", w, A, A), initial=0.0))
    else:
        G = _gram(A, w)
        scale = float(np.max(np.diag(G), initial=0.0))
        L, info = _potrf(G, lower=1, clean=1)
        if info != 0:
            raise NotPositiveDefinite(f"A^T W A is not positive definite (LAPACK info {info})")

    pivots = np.diag(L) ** 2
    threshold = n * np.finfo(np.float64).eps * scale
    if scale <= 0 or np.any(~np.isfinite(pivots)) or np.any(pivots <= threshold):
        raise NotPositiveDefinite(f"A is column-rank deficient (smallest pivot {pivots.min():.3e})")

    return SpdState(
        weights=w.copy(),
        factor=L,
        logdet=float(2.0 * np.sum(np.log(np.diag(L)))),
        period=period or m,
    )


def _check_row(A: FloatArray, i: int) -> None:
    if not 0 <= i < A.shape[0]:
        raise IndexOutOfRange(f"Row index {i} out of range for {A.shape[0]} rows")


def row_quadform(A: ArrayLike, s: SpdState, i: int) -> float:
    """a_i^T (A^T W A)^-1 a_i."""
    A = np.asarray(A, dtype=np.float64)
    _check_row(A, i)
    a = A[i]
    if s.factor is not None:
        b = _triangular_solve(s.factor, a)
        return float(b @ b)
    return float(a @ s.inverse_matrix @ a)


def row_quadforms(A: FloatArray, s: SpdState, workers: int = 1) -> FloatArray:
    """All row quadratic forms, optionally split over a thread pool sharing the read-only state."""
    m = A.shape[0]
    if workers <= 1 or m <= _CHUNK_ROWS:
        return s.quadforms(A)
    chunks = [A[start : start + _CHUNK_ROWS] for start in range(0, m, _CHUNK_ROWS)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(s.quadforms, chunks)))


def leverage_scores(
    A: ArrayLike,
    w: ArrayLike | WeightVector,
    *,
    state: SpdState | None = None,
    method: Method = "cholesky",
    workers: int = 1,
) -> FloatArray:
    """sigma_i(w) = w_i * a_i^T (A^T W A)^-1 a_i."""
    A = np.asarray(A, dtype=np.float64)
    w = as_weights(w, A.shape[0])
    if state is None:
        state = spd_factorize(A, w, method=method)
    return w * row_quadforms(A, state, workers)


def rank_one_update(
    s: SpdState,
    A: ArrayLike,
    i: int,
    delta: float,
    *,
    tolerance: float = 1e-8,
    method: Method = "cholesky",
) -> SpdState:
    """Return the state for weights w + delta * e_i via Sherman-Morrison.

    Refactors from scratch once the update counter reaches the state's period.
    """
    A = np.asarray(A, dtype=np.float64)
    _check_row(A, i)
    if delta == 0:
        return s

    weights = s.weights.copy()
    weights[i] += delta
    if not weights[i] > 0:
        raise DomainError(f"Update would make weight {i} non-positive ({weights[i]:.3e})")

    a = A[i]
    inverse = s.inverse_matrix
    u = inverse @ a
    denominator = 1.0 + delta * float(a @ u)
    if not np.isfinite(denominator) or denominator <= tolerance:
        raise DowndateSingular(f"Sherman-Morrison denominator {denominator:.3e} for row {i}")

    if s.updates + 1 >= s.period:
        logger.debug("Refactoring after %d rank-one updates", s.updates + 1)
        return spd_factorize(A, weights, method=method, period=s.period)

    return replace(
        s,
        weights=weights,
        factor=None,
        logdet=s.logdet + float(np.log(denominator)),
        updates=s.updates + 1,
        inverse=inverse - (delta / denominator) * np.outer(u, u),
    )
