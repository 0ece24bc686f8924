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
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from numpy.typing import ArrayLike, NDArray

from .errors import BracketFailure, DomainError, DowndateSingular, InvalidStepSize, IterationCapExceeded
from .linalg import FloatArray, Method, SpdState, WeightVector, as_weights, rank_one_update, row_quadform, spd_factorize
from .objective import AlphaParams, RhoVector, Snapshot, evaluate

logger = logging.getLogger(__name__)

ROUNDING_SLACK = 1e-12
MEMBERSHIP_SLACK = 1e-14
DELTA_RTOL = 1e-12


@dataclass(frozen=True)
class StepSizes:
    """Per-coordinate step sizes eta, each within [0, 1 / (3 alpha_bar)]."""

    values: FloatArray

    @classmethod
    def uniform(cls, m: int, params: AlphaParams, scale: float = 1.0) -> StepSizes:
        return cls(np.full(m, scale / (3.0 * params.alpha_bar)))

    def check(self, params: AlphaParams) -> None:
        upper = 1.0 / (3.0 * params.alpha_bar)
        values = np.asarray(self.values)
        if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > upper * (1 + 1e-15)):
            raise InvalidStepSize(f"Step sizes must lie in [0, {upper:.6g}]")


@dataclass
class RoundResult:
    weights: FloatArray
    snapshot: Snapshot
    steps: int = 0
    """While-passes for parallel rounding, coordinate steps for sequential rounding."""

    rho_max_history: list[float] = field(default_factory=list)


def _mask(C: ArrayLike | None, m: int) -> NDArray[np.bool_]:
    if C is None:
        return np.ones(m, dtype=bool)
    C = np.asarray(C)
    if C.dtype == bool:
        if C.shape != (m,):
            raise IndexError(f"Mask of shape {C.shape} does not match {m} coordinates")
        return C
    mask = np.zeros(m, dtype=bool)
    mask[C] = True
    return mask


def descent_step(
    w: ArrayLike | WeightVector,
    rho: RhoVector,
    C: ArrayLike | None,
    eta: StepSizes,
    params: AlphaParams,
) -> FloatArray:
    """w_i <- w_i * (1 + eta_i * (rho_i - 1) / (rho_i + 1)) for i in C; other coordinates are untouched.

    ``C`` is an index array, a boolean mask, or None for every coordinate.
    """
    w = as_weights(w, len(rho))
    eta.check(params)
    mask = _mask(C, len(w))
    r = rho.values
    out = w.copy()
    out[mask] = w[mask] * (1.0 + eta.values[mask] * (r[mask] - 1.0) / (r[mask] + 1.0))
    return out


def rounding_condition(rho: RhoVector, params: AlphaParams) -> bool:
    """rho_max <= 1 + alpha."""
    return rho.max <= params.rounding_bound * (1.0 + ROUNDING_SLACK)


def parallel_contraction(params: AlphaParams) -> float:
    """Factor by which one while-pass of parallel rounding shrinks rho_max."""
    a, ab = params.alpha, params.alpha_bar
    return (1.0 + a / (3.0 * ab * (2.0 + a))) ** a


def parallel_pass_bound(rho_max: float, params: AlphaParams) -> float:
    """Number of while-passes after which the per-pass contraction certifies the rounding condition."""
    if rho_max <= params.rounding_bound:
        return 0.0
    return math.log(rho_max / params.rounding_bound) / math.log(parallel_contraction(params))


def round_parallel(
    A: FloatArray,
    w: ArrayLike | WeightVector,
    params: AlphaParams,
    *,
    snapshot: Snapshot | None = None,
    cap_factor: float = 10.0,
    method: Method = "cholesky",
    workers: int = 1,
) -> RoundResult:
    """Descend on the coordinates violating the rounding condition until none are left.

    Only violating coordinates change and they only increase, so F never goes up.
    """
    A = np.asarray(A, dtype=np.float64)
    snap = snapshot or evaluate(A, w, params, method=method, workers=workers)
    eta = StepSizes.uniform(A.shape[0], params)
    cap = math.ceil(cap_factor * (parallel_pass_bound(snap.rho.max, params) + 1.0))

    result = RoundResult(weights=snap.weights, snapshot=snap)
    while not rounding_condition(snap.rho, params):
        if result.steps >= cap:
            raise IterationCapExceeded(
                f"Parallel rounding did not reach rho_max <= {params.rounding_bound:.6g} in {cap} passes "
                f"(rho_max = {snap.rho.max:.6g})"
            )
        violating = snap.rho.values > params.rounding_bound
        weights = descent_step(snap.weights, snap.rho, violating, eta, params)
        snap = evaluate(A, weights, params, method=method, workers=workers)
        result.steps += 1
        result.rho_max_history.append(snap.rho.max)

    result.weights = snap.weights
    result.snapshot = snap
    return result


def _delta_bracket(rho_i: float, sigma_i: float, alpha: float) -> float:
    # g(d) >= 1 + d * sigma and g(d) >= (1 + d)^alpha, so either bound overshoots rho
    by_sigma = (rho_i - 1.0) / sigma_i
    exponent = math.log(rho_i) / alpha
    by_alpha = math.expm1(exponent) if exponent < 700 else math.inf
    return min(by_sigma, by_alpha)


def solve_coordinate_delta(rho_i: float, sigma_i: float, params: AlphaParams) -> float:
    """The delta >= 0 with (1 + delta * sigma_i) * (1 + delta)^alpha = rho_i."""
    if not rho_i >= 1.0 - MEMBERSHIP_SLACK:
        raise DomainError(f"Coordinate steps need rho_i >= 1, got {rho_i}")
    if not 0.0 < sigma_i <= 1.0 + 1e-12:
        raise DomainError(f"Leverage score must lie in (0, 1], got {sigma_i}")
    if rho_i <= 1.0:
        return 0.0

    alpha = params.alpha
    if alpha == 1.0:
        # sigma d^2 + (1 + sigma) d + (1 - rho) = 0, written to avoid cancellation
        b = 1.0 + sigma_i
        return 2.0 * (rho_i - 1.0) / (b + math.sqrt(b * b + 4.0 * sigma_i * (rho_i - 1.0)))

    target = math.log(rho_i)
    upper = _delta_bracket(rho_i, sigma_i, alpha)

    def h(d: float) -> float:
        return math.log1p(d * sigma_i) + alpha * math.log1p(d) - target

    # h is increasing and concave, so Newton from 0 climbs to the root without overshooting
    delta = 0.0
    for _ in range(100):
        slope = sigma_i / (1.0 + delta * sigma_i) + alpha / (1.0 + delta)
        step = -h(delta) / slope
        delta = min(max(delta + step, 0.0), upper)
        if abs(step) <= 4 * np.finfo(float).eps * max(delta, 1.0):
            break

    if _delta_residual(delta, rho_i, sigma_i, alpha) > DELTA_RTOL:
        try:
            delta = scipy.optimize.brentq(h, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        except ValueError as e:
            raise BracketFailure(f"No root of the coordinate equation in [0, {upper:.3e}]") from e
        if _delta_residual(delta, rho_i, sigma_i, alpha) > DELTA_RTOL:
            raise BracketFailure(f"Coordinate equation unresolved for rho={rho_i}, sigma={sigma_i}")
    return float(delta)


def _delta_residual(delta: float, rho_i: float, sigma_i: float, alpha: float) -> float:
    g = (1.0 + delta * sigma_i) * math.exp(alpha * math.log1p(delta))
    return abs(g - rho_i) / rho_i


def coordinate_objective_delta(w_i: float, sigma_i: float, delta: float, params: AlphaParams) -> float:
    """F(w + delta * w_i * e_i) - F(w), by the matrix determinant lemma."""
    if not 1.0 + delta * sigma_i > 0.0:
        raise DomainError(f"1 + delta * sigma_i must be positive, got {1.0 + delta * sigma_i}")
    a1 = 1.0 + params.alpha
    return -math.log1p(delta * sigma_i) + (w_i**a1 / a1) * math.expm1(a1 * math.log1p(delta))


def round_sequential(
    A: FloatArray,
    w: ArrayLike | WeightVector,
    params: AlphaParams,
    *,
    state: SpdState | None = None,
    refactor_period: int | None = None,
    sm_tolerance: float = 1e-8,
    method: Method = "cholesky",
    workers: int = 1,
    callback: Callable[[int, SpdState], None] | None = None,
) -> RoundResult:
    """Exact coordinate minimization over C = {i : rho_i >= 1}, largest violation first.

    Each step sets rho_i to 1 and, by Sherman-Morrison, can only lower rho_j for the other rows. ``callback``
    receives the row index and the updated state after every step.
    """
    A = np.asarray(A, dtype=np.float64)
    if state is None:
        state = spd_factorize(A, as_weights(w, A.shape[0]), method=method, period=refactor_period)
    w = state.weights
    rho = state.quadforms(A) / np.exp(params.alpha * np.log(w))

    members = np.flatnonzero(rho >= 1.0 - MEMBERSHIP_SLACK)
    order = members[np.argsort(-rho[members], kind="stable")]

    steps = 0
    for i in order:
        w_i = state.weights[i]
        q_i = row_quadform(A, state, int(i))
        rho_i = q_i / w_i**params.alpha
        if rho_i <= 1.0:
            continue
        delta = solve_coordinate_delta(rho_i, w_i * q_i, params)
        if delta == 0.0:
            continue
        try:
            state = rank_one_update(state, A, int(i), delta * w_i, tolerance=sm_tolerance, method=method)
        except DowndateSingular:
            logger.warning("Refactoring after an ill-conditioned update on row %d", i)
            weights = state.weights.copy()
            weights[i] *= 1.0 + delta
            state = spd_factorize(A, weights, method=method, period=state.period)
        steps += 1
        if callback is not None:
            callback(int(i), state)

    snap = evaluate(A, state.weights, params, method=method, workers=workers)
    return RoundResult(weights=snap.weights, snapshot=snap, steps=steps)
