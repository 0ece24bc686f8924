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
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field

from .config import SolverSettings, Variant
from .errors import DimensionError, InputError, InvariantViolated, IterationCapExceeded, UnsupportedP
from .linalg import FloatArray, Normalization, WeightVector, as_weights, validate_matrix
from .objective import AlphaParams, Snapshot, evaluate, initial_gap_bound, power
from .steps import RoundResult, StepSizes, descent_step, round_parallel, round_sequential, rounding_condition
from .verify import ResidualReport, lewis_residual, residual_report

logger = logging.getLogger(__name__)

INVARIANT_SLACK = 1e-9


class SolverConfig(BaseModel):
    """Problem parameters plus the schedule derived from them by :func:`schedule`."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(gt=2)
    eps: float = Field(gt=0, lt=1)
    variant: Variant
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    alpha: float
    alpha_bar: float
    eps_tilde: float
    """Additive objective accuracy that implies eps-accurate weights."""

    t_total: int
    """Outer iteration budget (fixed-point iterations for cohen_peng)."""

    beta: float
    """Small step multiplier of the one-step variant."""

    stop_tolerance: float
    certify_tolerance: float
    settings: SolverSettings

    @property
    def params(self) -> AlphaParams:
        return AlphaParams.from_p(self.p)


class IterationCounts(BaseModel):
    descent: int = 0
    parallel_passes: int = 0
    coordinate_steps: int = 0
    fixed_point: int = 0


class TraceRow(NamedTuple):
    iteration: int
    step_type: str
    value: float
    rho_max: float
    opt_residual: float


@dataclass
class SolverReport:
    weights_optimizer: WeightVector
    weights_definition: WeightVector
    residuals: ResidualReport
    config: SolverConfig
    final_iterate: WeightVector
    """The last rounded iterate w_R the weights were extracted from."""

    iterations: IterationCounts = field(default_factory=IterationCounts)
    trace: list[TraceRow] = field(default_factory=list)
    converged: bool = False
    """Whether the stop rule fired before the iteration budget ran out."""

    wall_time: float = 0.0
    """Seconds."""


def eps_tilde_for(alpha: float, eps: float, m: int, n: int, form: str = "strict") -> float:
    spread = (math.sqrt(n) + alpha) * (alpha + 1.0 / alpha)
    if form == "relaxed":
        return alpha**4 * eps**4 / (2.0 * m * spread) ** 4
    return alpha**8 * eps**4 / (25.0 * m * spread) ** 4


def schedule(
    p: float,
    m: int,
    n: int,
    eps: float,
    variant: Variant | str = Variant.PARALLEL,
    settings: SolverSettings | None = None,
) -> SolverConfig:
    """Derive alpha, eps_tilde, T_total and beta for a run."""
    settings = settings or SolverSettings()
    variant = Variant.parse(variant) if isinstance(variant, str) else variant
    if not p > 2:
        raise UnsupportedP(f"p must be greater than 2, got {p}")
    if variant is Variant.COHEN_PENG and not p < 4:
        raise UnsupportedP(f"The fixed-point iteration only contracts for p in (2, 4), got {p}")
    if not 0 < eps < 1:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    if not m >= n >= 1:
        raise DimensionError(f"Need m >= n >= 1, got m={m}, n={n}")

    params = AlphaParams.from_p(p)
    alpha, alpha_bar = params.alpha, params.alpha_bar
    eps_tilde = settings.eps_tilde or eps_tilde_for(alpha, eps, m, n, settings.eps_tilde_form)
    beta = min(alpha**2, 1.0) / 1000.0
    K = settings.iteration_constant

    match variant:
        case Variant.ONE_STEP:
            rate = alpha_bar * max(1.0, 1.0 / alpha) / beta
            budget = K * rate * math.log(m * p / eps_tilde)
        case Variant.COHEN_PENG:
            budget = settings.cap_factor * (
                math.log(max(math.log(m), 1.0)) + math.log(1.0 / eps)
            ) / -math.log(abs(p / 2.0 - 1.0))
        case _:
            budget = K * max(alpha, 1.0 / alpha) * math.log(m / eps_tilde)

    t_total = max(1, math.ceil(budget * settings.max_iters_scale))
    if t_total > settings.iteration_limit:
        hint = " Use the parallel or sequential variant." if variant is Variant.ONE_STEP else ""
        raise IterationCapExceeded(
            f"The {variant} schedule needs {t_total} iterations for p={p:g}, eps={eps:g}, "
            f"over the iteration limit of {settings.iteration_limit}.{hint}"
        )

    return SolverConfig(
        p=p,
        eps=eps,
        variant=variant,
        m=m,
        n=n,
        alpha=alpha,
        alpha_bar=alpha_bar,
        eps_tilde=eps_tilde,
        t_total=t_total,
        beta=beta,
        stop_tolerance=settings.stop_tolerance or math.sqrt(eps_tilde) / 4.0,
        certify_tolerance=settings.certify_fraction * eps * min(1.0, alpha),
        settings=settings,
    )


def extract_weights(
    A: ArrayLike, w_R: ArrayLike | WeightVector, params: AlphaParams, *, snapshot: Snapshot | None = None
) -> WeightVector:
    """w-hat_i = (a_i^T (A^T W_R A)^-1 a_i)^(1/alpha), in the optimizer normalization."""
    A = np.asarray(A, dtype=np.float64)
    if snapshot is None:
        snapshot = evaluate(A, as_weights(w_R, A.shape[0]), params)
    return WeightVector(power(snapshot.quadforms, 1.0 / params.alpha), Normalization.OPTIMIZER)


def to_definition_normalization(w_hat: ArrayLike | WeightVector, params: AlphaParams) -> WeightVector:
    """w-bar = w-hat^(1 + alpha), the weights of the Lewis fixed-point equation."""
    values = as_weights(w_hat, len(np.asarray(w_hat)))
    return WeightVector(power(values, 1.0 + params.alpha), Normalization.DEFINITION)


class _Run:
    """Bookkeeping shared by the solver variants: trace, counters, budgets and the stop rule."""

    def __init__(self, A: FloatArray, cfg: SolverConfig) -> None:
        m, n = A.shape
        if (m, n) != (cfg.m, cfg.n):
            raise DimensionError(f"Config was scheduled for {cfg.m}x{cfg.n}, matrix is {m}x{n}")
        self.A = A
        self.cfg = cfg
        self.params = cfg.params
        self.settings = cfg.settings
        self.counts = IterationCounts()
        self.trace: list[TraceRow] = []
        self.opening_passes: int | None = None
        # the extracted weights are only certified again once max |rho - 1| has shrunk below this
        self.next_certify = cfg.eps
        self.started = time.perf_counter()

        alpha, cap = cfg.alpha, self.settings.cap_factor
        self.coordinate_cap = math.ceil(cap * m * cfg.t_total)
        self.pass_cap = math.ceil(
            cap * (cfg.t_total * max(alpha**-2, alpha) * max(1.0, math.log(m / (n * (1.0 + alpha)))) + 1.0)
        )
        logger.info(
            "Solving %dx%d with p=%g eps=%g variant=%s (T_total=%d)", m, n, cfg.p, cfg.eps, cfg.variant, cfg.t_total
        )
        if m > n:
            logger.debug("F(n/m) - F* <= %.6g", initial_gap_bound(m, n))

    def evaluate(self, w: ArrayLike) -> Snapshot:
        s = self.settings
        return evaluate(self.A, w, self.params, method=s.factorization, workers=s.workers, check_finite=False)

    def record(self, iteration: int, step_type: str, snap: Snapshot) -> None:
        row = TraceRow(iteration, step_type, snap.value, snap.rho.max, snap.optimality_residual)
        self.trace.append(row)
        logger.debug("%5d %-11s F=%.17g rho_max=%.6g residual=%.3e", *row)

    def round(self, snap: Snapshot) -> RoundResult:
        s = self.settings
        if self.cfg.variant is Variant.SEQUENTIAL:
            result = round_sequential(
                self.A,
                snap.weights,
                self.params,
                state=snap.state if s.refactor_period is None else None,
                refactor_period=s.refactor_period,
                sm_tolerance=s.sm_tolerance,
                method=s.factorization,
                workers=s.workers,
            )
            self.counts.coordinate_steps += result.steps
            if self.counts.coordinate_steps > self.coordinate_cap:
                raise IterationCapExceeded(f"More than {self.coordinate_cap} coordinate steps")
        else:
            result = round_parallel(
                self.A,
                snap.weights,
                self.params,
                snapshot=snap,
                cap_factor=s.cap_factor,
                method=s.factorization,
                workers=s.workers,
            )
            self.counts.parallel_passes += result.steps
            if self.opening_passes is None:
                # the first round starts from n/m and is bounded by its own per-call cap
                self.opening_passes = result.steps
            elif self.counts.parallel_passes - self.opening_passes > self.pass_cap:
                raise IterationCapExceeded(f"More than {self.pass_cap} parallel rounding passes")
        return result

    def should_stop(self, snap: Snapshot) -> bool:
        if not rounding_condition(snap.rho, self.params):
            return False
        if snap.optimality_residual <= self.cfg.stop_tolerance:
            return True
        gap = float(np.max(np.abs(snap.rho.values - 1.0)))
        if gap > self.next_certify:
            return False
        candidate = power(snap.quadforms, (1.0 + self.params.alpha) / self.params.alpha)
        if lewis_residual(self.A, candidate, self.cfg.p) <= self.cfg.certify_tolerance:
            return True
        self.next_certify = 0.75 * gap
        return False

    def finish(self, snap: Snapshot, converged: bool, w_bar: WeightVector | None = None) -> SolverReport:
        if not converged:
            logger.warning("Iteration budget of %d exhausted before the stop rule fired", self.cfg.t_total)
        if w_bar is None:
            w_hat = extract_weights(self.A, snap.weights, self.params, snapshot=snap)
            w_bar = to_definition_normalization(w_hat, self.params)
        else:
            w_hat = WeightVector(power(w_bar.values, 1.0 / (1.0 + self.params.alpha)), Normalization.OPTIMIZER)
        return SolverReport(
            weights_optimizer=w_hat,
            weights_definition=w_bar,
            residuals=residual_report(self.A, snap, w_bar),
            config=self.cfg,
            final_iterate=WeightVector(snap.weights, Normalization.OPTIMIZER),
            iterations=self.counts,
            trace=self.trace,
            converged=converged,
            wall_time=time.perf_counter() - self.started,
        )


def lewis_meta(A: ArrayLike, cfg: SolverConfig) -> SolverReport:
    """Alternate Round and a full Descent step from w = n/m, then round once more and extract the weights."""
    if cfg.variant not in (Variant.PARALLEL, Variant.SEQUENTIAL):
        raise ValueError(f"lewis_meta runs the parallel or sequential variant, not {cfg.variant}")
    A = validate_matrix(A)
    run = _Run(A, cfg)
    m, n = A.shape
    eta = StepSizes.uniform(m, run.params)

    snap = run.evaluate(np.full(m, n / m))
    run.record(0, "init", snap)
    converged = False
    iteration = 0
    for iteration in range(1, cfg.t_total + 1):
        rounded = run.round(snap)
        run.record(iteration, "round", rounded.snapshot)
        snap = rounded.snapshot
        if run.should_stop(snap):
            converged = True
            break
        snap = run.evaluate(descent_step(snap.weights, snap.rho, None, eta, run.params))
        run.counts.descent += 1
        run.record(iteration, "descent", snap)

    final = run.round(snap)
    run.record(iteration, "final_round", final.snapshot)
    return run.finish(final.snapshot, converged)


def lewis_one_step(A: ArrayLike, cfg: SolverConfig) -> SolverReport:
    """Descent only, from w = 1, with full steps where rho_i >= 1 and beta-damped steps elsewhere.

    rho_max <= 1 + alpha holds at every iterate without any rounding; a violation raises InvariantViolated.
    """
    if cfg.variant is not Variant.ONE_STEP:
        raise ValueError(f"lewis_one_step runs the one_step variant, not {cfg.variant}")
    A = validate_matrix(A)
    run = _Run(A, cfg)
    params = run.params
    full_step = 1.0 / (3.0 * params.alpha_bar)

    snap = run.evaluate(np.ones(A.shape[0]))
    run.record(0, "init", snap)
    converged = False
    for iteration in range(1, cfg.t_total + 1):
        _check_rounding_invariant(snap, iteration - 1)
        if run.should_stop(snap):
            converged = True
            break
        eta = StepSizes(np.where(snap.rho.values >= 1.0, full_step, cfg.beta * full_step))
        snap = run.evaluate(descent_step(snap.weights, snap.rho, None, eta, params))
        run.counts.descent += 1
        run.record(iteration, "one_step", snap)
    else:
        _check_rounding_invariant(snap, cfg.t_total)

    return run.finish(snap, converged)


def _check_rounding_invariant(snap: Snapshot, iteration: int) -> None:
    bound = snap.params.rounding_bound * (1.0 + INVARIANT_SLACK)
    if snap.rho.max > bound:
        raise InvariantViolated(f"rho_max = {snap.rho.max:.12g} exceeds {bound:.12g} at iteration {iteration}")


def _fixed_point_iterations(A: FloatArray, p: float, tol: float, max_iter: int, run: _Run | None = None) -> FloatArray:
    m, n = A.shape
    params = AlphaParams.from_p(p)
    w_bar = np.full(m, n / m)
    for iteration in range(max_iter + 1):
        # W-bar^(1 - 2/p) is the optimizer-normalized counterpart of w-bar
        v = power(w_bar, 1.0 - 2.0 / p)
        snap = run.evaluate(v) if run is not None else evaluate(A, v, params)
        if run is not None:
            run.record(iteration, "fixed_point", snap)
        lhs = power(w_bar, 2.0 / p)
        if np.max(np.abs(lhs - snap.quadforms) / lhs) <= tol:
            return w_bar
        if iteration < max_iter:
            w_bar = power(snap.quadforms, p / 2.0)
            if run is not None:
                run.counts.fixed_point += 1
    raise IterationCapExceeded(f"Fixed-point iteration did not reach residual {tol:g} in {max_iter} steps")


def cohen_peng_fixed_point(A: ArrayLike, p: float, eps: float, *, max_iter: int | None = None) -> WeightVector:
    """Iterate w-bar <- (a_i^T (A^T W-bar^(1-2/p) A)^-1 a_i)^(p/2) until the Lewis residual is at most eps.

    The map contracts with factor |p/2 - 1|, so this is restricted to p in (2, 4).
    """
    A = validate_matrix(A)
    if not 2 < p < 4:
        raise UnsupportedP(f"The fixed-point iteration only contracts for p in (2, 4), got {p}")
    if max_iter is None:
        max_iter = schedule(p, A.shape[0], A.shape[1], eps, Variant.COHEN_PENG).t_total
    return WeightVector(_fixed_point_iterations(A, p, eps, max_iter), Normalization.DEFINITION)


def lewis_cohen_peng(A: ArrayLike, cfg: SolverConfig) -> SolverReport:
    """The fixed-point baseline wrapped in a full report; stops at the certification tolerance."""
    if cfg.variant is not Variant.COHEN_PENG:
        raise ValueError(f"lewis_cohen_peng runs the cohen_peng variant, not {cfg.variant}")
    A = validate_matrix(A)
    run = _Run(A, cfg)
    w_bar = _fixed_point_iterations(A, cfg.p, cfg.certify_tolerance, cfg.t_total, run)
    snap = run.evaluate(power(w_bar, 1.0 / (1.0 + run.params.alpha)))
    return run.finish(snap, True, WeightVector(w_bar, Normalization.DEFINITION))


def solve(A: ArrayLike, cfg: SolverConfig) -> SolverReport:
    match cfg.variant:
        case Variant.ONE_STEP:
            return lewis_one_step(A, cfg)
        case Variant.COHEN_PENG:
            return lewis_cohen_peng(A, cfg)
        case _:
            return lewis_meta(A, cfg)


def lewis_weights(
    A: ArrayLike,
    p: float,
    eps: float = 1e-6,
    variant: Variant | str = Variant.PARALLEL,
    settings: SolverSettings | None = None,
) -> SolverReport:
    """Schedule and run a solver variant on A."""
    A = validate_matrix(A)
    return solve(A, schedule(p, A.shape[0], A.shape[1], eps, variant, settings))
