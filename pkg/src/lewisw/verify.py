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
import math

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, NonNegativeFloat

from .errors import NotPositiveDefinite, OracleStalled, PreconditionViolated
from .linalg import FloatArray, Normalization, WeightVector, as_weights, spd_factorize
from .objective import AlphaParams, Snapshot, evaluate, power
from .steps import rounding_condition

logger = logging.getLogger(__name__)

ARMIJO_SLOPE = 1e-4
CONTAINMENT_SLACK = 1e-9


class ResidualReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_relative_fixed_point_residual: NonNegativeFloat
    """max_i |w_i^(2/p) - a_i^T (A^T W^(1-2/p) A)^-1 a_i| / w_i^(2/p) for the definition-normalized weights."""

    optimality_residual: NonNegativeFloat
    """||sigma(w) - w^(1+alpha)||_inf at the optimizer-normalized iterate."""

    rho_max: NonNegativeFloat
    suboptimality_certificate: NonNegativeFloat


def lewis_residual(A: ArrayLike, w_bar: ArrayLike | WeightVector, p: float) -> float:
    """Largest relative violation of w_i^(2/p) = a_i^T (A^T W^(1-2/p) A)^-1 a_i."""
    A = np.asarray(A, dtype=np.float64)
    w_bar = as_weights(w_bar, A.shape[0])
    state = spd_factorize(A, power(w_bar, 1.0 - 2.0 / p))
    lhs = power(w_bar, 2.0 / p)
    return float(np.max(np.abs(lhs - state.quadforms(A)) / lhs))


def optimality_residual(A: ArrayLike, w: ArrayLike | WeightVector, params: AlphaParams) -> float:
    """||sigma(w) - w^(1+alpha)||_inf, zero exactly at the optimizer."""
    return evaluate(np.asarray(A, dtype=np.float64), w, params).optimality_residual


def certificate_from(snap: Snapshot, *, tight: bool = False) -> float:
    if not rounding_condition(snap.rho, snap.params):
        raise PreconditionViolated(
            f"Sub-optimality bound needs rho_max <= {snap.params.rounding_bound:.6g}, got {snap.rho.max:.6g}"
        )
    alpha = snap.params.alpha
    r = snap.rho.values
    if tight:
        return float(np.sum(snap.powered / (1.0 + alpha) * (1.0 + r / alpha) * (r - 1.0) ** 2))
    return float(5.0 * max(1.0, 1.0 / alpha) * np.sum(snap.powered * (r - 1.0) ** 2 / (r + 1.0)))


def suboptimality_certificate(
    A: ArrayLike, w: ArrayLike | WeightVector, params: AlphaParams, *, tight: bool = False
) -> float:
    """Upper bound on F(w) - F(w*), valid under the rounding condition.

    ``tight`` returns sum_i w_i^(1+alpha) / (1+alpha) * (1 + rho_i / alpha) * (rho_i - 1)^2, which the default
    5 max(1, 1/alpha) sum_i w_i^(1+alpha) (rho_i - 1)^2 / (rho_i + 1) dominates.
    """
    return certificate_from(evaluate(np.asarray(A, dtype=np.float64), w, params), tight=tight)


def ellipsoid_containment(
    A: ArrayLike,
    w: ArrayLike | WeightVector,
    params: AlphaParams,
    trials: int = 100,
    *,
    seed: int = 0,
    include_extremal: bool = True,
) -> bool:
    """Check that boundary points x = (A^T W A)^(-1/2) u of E(w) satisfy ||W^(-alpha/2) A x||_inf <= sqrt(1+alpha).

    Besides ``trials`` random unit directions, the row-aligned directions where the slab constraint is tight are
    checked when ``include_extremal`` is set.
    """
    A = np.asarray(A, dtype=np.float64)
    w = as_weights(w, A.shape[0])
    n = A.shape[1]
    G = (A * w[:, None]).T @ A
    eigvals, V = scipy.linalg.eigh((G + G.T) / 2, check_finite=False)
    if eigvals[0] <= 0:
        raise NotPositiveDefinite("A^T W A is not positive definite")
    inv_sqrt = (V / np.sqrt(eigvals)) @ V.T

    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, trials))
    if include_extremal:
        U = np.hstack([U, inv_sqrt @ A.T])
    U = U / np.linalg.norm(U, axis=0)

    X = inv_sqrt @ U
    slab = np.abs(power(w, -params.alpha / 2.0)[:, None] * (A @ X))
    return bool(np.all(slab.max(axis=0, initial=0.0) <= math.sqrt(params.rounding_bound) * (1.0 + CONTAINMENT_SLACK)))


def residual_report(A: FloatArray, snap: Snapshot, w_bar: ArrayLike | WeightVector) -> ResidualReport:
    """Residuals of a finished run: ``snap`` at the final optimizer-normalized iterate, ``w_bar`` the output."""
    return ResidualReport(
        max_relative_fixed_point_residual=lewis_residual(A, w_bar, snap.params.p),
        optimality_residual=snap.optimality_residual,
        rho_max=snap.rho.max,
        suboptimality_certificate=certificate_from(snap),
    )


def oracle_solve(
    A: ArrayLike, p: float, tol: float = 1e-10, *, max_iter: int = 1_000_000
) -> tuple[WeightVector, float]:
    """Minimize F by plain gradient descent in u = log w, independently of the solver's step rules.

    The u-gradient is w^(1+alpha) - sigma(w), so the stopping rule is the optimality residual itself. Steps use
    Armijo backtracking (slope factor 1e-4, halving) and are clipped entrywise so that w+ >= w/2 (and w+ <= 2w).
    """
    A = np.asarray(A, dtype=np.float64)
    params = AlphaParams.from_p(p)
    clip = math.log(2.0)

    snap = evaluate(A, np.ones(A.shape[0]), params)
    t = 1.0
    for _ in range(max_iter):
        g = snap.powered - snap.sigma
        if np.max(np.abs(g)) <= tol:
            return WeightVector(snap.weights, Normalization.OPTIMIZER), snap.value

        B = snap.state.whiten(A)
        while True:
            d = np.clip(-t * g, -clip, clip)
            change = _objective_change(snap, B, d)
            if change is not None and change <= ARMIJO_SLOPE * float(g @ d):
                break
            t /= 2.0
            if t < 1e-30:
                raise OracleStalled("Line search could not find a decreasing step")
        snap = evaluate(A, snap.weights * np.exp(d), params)
        t = min(1.0, 2.0 * t)

    raise OracleStalled(f"Oracle did not reach residual {tol:g} in {max_iter} iterations")


def _objective_change(snap: Snapshot, B: FloatArray, d: FloatArray) -> float | None:
    """F(w * exp(d)) - F(w) evaluated from the increments, so it keeps full relative precision near the optimum.

    With B = L^-1 A^T the log-det term changes by log det(I + B diag(w (e^d - 1)) B^T). Returns None when the
    step leaves the positive definite cone.
    """
    dw = snap.weights * np.expm1(d)
    E = (B * dw) @ B.T
    lam = scipy.linalg.eigvalsh((E + E.T) / 2, check_finite=False)
    if lam[0] <= -1.0:
        return None
    a1 = 1.0 + snap.params.alpha
    return float(-np.sum(np.log1p(lam)) + np.sum(snap.powered * np.expm1(a1 * d)) / a1)
