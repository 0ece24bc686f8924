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

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike

from .errors import UnsupportedP
from .linalg import FloatArray, Method, SpdState, WeightVector, as_weights, row_quadforms, spd_factorize


@dataclass(frozen=True)
class AlphaParams:
    """p > 2 reparameterized as alpha = 2 / (p - 2), with alpha_bar = max(1, alpha) capping step sizes."""

    p: float
    alpha: float = field(init=False)
    alpha_bar: float = field(init=False)

    def __post_init__(self) -> None:
        if not np.isfinite(self.p) or self.p <= 2:
            raise UnsupportedP(f"p must be a finite number greater than 2, got {self.p}")
        alpha = 2.0 / (self.p - 2.0)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_bar", max(1.0, alpha))

    @classmethod
    def from_p(cls, p: float) -> AlphaParams:
        return cls(float(p))

    @property
    def rounding_bound(self) -> float:
        """1 + alpha, the largest rho allowed by the rounding condition."""
        return 1.0 + self.alpha


def power(w: FloatArray, exponent: float) -> FloatArray:
    return np.exp(exponent * np.log(w))


@dataclass(frozen=True)
class RhoVector:
    """rho_i(w) = sigma_i(w) / w_i^(1 + alpha)."""

    values: FloatArray

    @cached_property
    def max(self) -> float:
        return float(np.max(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Snapshot:
    """Everything the algorithms need at one weight vector, built from a single factorization."""

    weights: FloatArray
    state: SpdState
    sigma: FloatArray
    rho: RhoVector
    value: float
    params: AlphaParams
    powered: FloatArray
    """w^(1 + alpha)."""

    @property
    def quadforms(self) -> FloatArray:
        return self.sigma / self.weights

    @cached_property
    def optimality_residual(self) -> float:
        return float(np.max(np.abs(self.sigma - self.powered)))


def evaluate(
    A: FloatArray,
    w: ArrayLike | WeightVector,
    params: AlphaParams,
    *,
    state: SpdState | None = None,
    method: Method = "cholesky",
    workers: int = 1,
    check_finite: bool = True,
) -> Snapshot:
    A = np.asarray(A, dtype=np.float64)
    w = as_weights(w, A.shape[0]) if check_finite else np.asarray(w, dtype=np.float64)
    if state is None:
        state = spd_factorize(A, w, method=method, check_finite=check_finite)
    sigma = w * row_quadforms(A, state, workers)
    powered = power(w, 1.0 + params.alpha)
    value = -state.logdet + float(np.sum(powered)) / (1.0 + params.alpha)
    return Snapshot(
        weights=w,
        state=state,
        sigma=sigma,
        rho=RhoVector(sigma / powered),
        value=value,
        params=params,
        powered=powered,
    )


def objective_value(A: ArrayLike, w: ArrayLike | WeightVector, params: AlphaParams) -> float:
    """F(w) = -log det(A^T W A) + 1^T w^(1 + alpha) / (1 + alpha)."""
    return evaluate(np.asarray(A, dtype=np.float64), w, params).value


def gradient(A: ArrayLike, w: ArrayLike | WeightVector, params: AlphaParams) -> FloatArray:
    """[grad F(w)]_i = (w_i^(1 + alpha) - sigma_i(w)) / w_i."""
    snap = evaluate(np.asarray(A, dtype=np.float64), w, params)
    return (snap.powered - snap.sigma) / snap.weights


def hessian_quadform(A: ArrayLike, w: ArrayLike | WeightVector, params: AlphaParams, h: ArrayLike) -> float:
    """h^T grad^2 F(w) h without forming the m x m projection.

    With b_i = L^-1 a_i the Schur-squared projection term is sum_ij h_i h_j (b_i^T b_j)^2, which equals
    ||B diag(h) B^T||_F^2 and only needs an n x n contraction.
    """
    A = np.asarray(A, dtype=np.float64)
    w = as_weights(w, A.shape[0])
    h = np.asarray(h, dtype=np.float64)
    state = spd_factorize(A, w)
    B = state.whiten(A)
    M = (B * h) @ B.T
    return float(np.sum(M * M) + params.alpha * np.sum(h * h * power(w, params.alpha - 1.0)))


def rho(A: ArrayLike, w: ArrayLike | WeightVector, params: AlphaParams) -> RhoVector:
    return evaluate(np.asarray(A, dtype=np.float64), w, params).rho


def initial_gap_bound(m: int, n: int) -> float:
    """Upper bound n log(m/n) on F(n/m * 1) - F(w*)."""
    return n * float(np.log(m / n))
