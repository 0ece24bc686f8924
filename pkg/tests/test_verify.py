import math

import numpy as np
import pytest

from lewisw.errors import PreconditionViolated
from lewisw.objective import AlphaParams, evaluate, initial_gap_bound, objective_value
from lewisw.steps import round_parallel
from lewisw.verify import (
    ellipsoid_containment,
    lewis_residual,
    optimality_residual,
    oracle_solve,
    suboptimality_certificate,
)

P4 = AlphaParams.from_p(4)
ROOT_HALF = 2**-0.5


@pytest.mark.parametrize("p", [3, 4, 8])
def test_lewis_residual_identity(p):
    assert lewis_residual(np.eye(3), np.ones(3), p) == pytest.approx(0.0, abs=1e-15)


def test_lewis_residual_column(column):
    assert lewis_residual(column, [0.5, 0.5], 4) == pytest.approx(0.0, abs=1e-14)
    assert lewis_residual(column, [0.6, 0.4], 4) > 0.01


def test_optimality_residual(column):
    assert optimality_residual(column, [1.0, 1.0], P4) == pytest.approx(0.5)
    assert optimality_residual(column, [ROOT_HALF, ROOT_HALF], P4) == pytest.approx(0.0, abs=1e-12)


def test_certificate_examples(column):
    assert suboptimality_certificate(column, [1.0, 1.0], P4) == pytest.approx(5 / 3)
    assert suboptimality_certificate(column, [ROOT_HALF, ROOT_HALF], P4) == pytest.approx(0.0, abs=1e-24)


def test_certificate_needs_rounding(triangle):
    with pytest.raises(PreconditionViolated):
        suboptimality_certificate(triangle, np.full(3, 0.01), P4)


@pytest.mark.parametrize("p", [3, 4, 8])
def test_certificate_bounds_suboptimality(p, gaussian, rng):
    A = gaussian(12, 3)
    params = AlphaParams.from_p(p)
    _, optimum = oracle_solve(A, p, tol=1e-11)
    for _ in range(5):
        rounded = round_parallel(A, rng.uniform(0.05, 1.0, 12), params).weights
        gap = objective_value(A, rounded, params) - optimum
        tight = suboptimality_certificate(A, rounded, params, tight=True)
        loose = suboptimality_certificate(A, rounded, params)
        assert gap <= tight + 1e-10
        assert tight <= loose * (1 + 1e-12)


@pytest.mark.parametrize("p", [3, 4, 8])
def test_initial_gap_bound_holds(p, rng):
    params = AlphaParams.from_p(p)
    for m, n in [(5, 1), (12, 3), (30, 2), (30, 5)]:
        A = rng.standard_normal((m, n))
        _, optimum = oracle_solve(A, p, tol=1e-11)
        start = objective_value(A, np.full(m, n / m), params)
        assert -1e-9 <= start - optimum <= initial_gap_bound(m, n) + 1e-6


def test_containment_identity():
    assert ellipsoid_containment(np.eye(2), np.ones(2), P4)


def test_containment_after_rounding(gaussian, rng):
    A = gaussian(20, 3)
    for p in (3, 4, 8):
        params = AlphaParams.from_p(p)
        w = round_parallel(A, rng.uniform(0.01, 1.0, 20), params).weights
        assert ellipsoid_containment(A, w, params, trials=100, seed=7)


def test_containment_fails_when_unrounded(triangle):
    assert not ellipsoid_containment(triangle, np.full(3, 1e-4), P4, trials=0)


def test_containment_is_seeded(triangle):
    w = np.full(3, 2 / 3)
    assert ellipsoid_containment(triangle, w, P4, seed=1) == ellipsoid_containment(triangle, w, P4, seed=1)


def test_oracle_identity():
    w, value = oracle_solve(np.eye(4), 4, tol=1e-10)
    assert np.allclose(w.values, 1.0)
    assert value == pytest.approx(2.0)


def test_oracle_column(column):
    w, value = oracle_solve(column, 4)
    assert np.allclose(w.values, ROOT_HALF, rtol=1e-9)
    assert value == pytest.approx(-math.log(2 * ROOT_HALF) + 0.5)


@pytest.mark.parametrize("p", [2.5, 3, 6, 12])
def test_oracle_reaches_stationarity(p, gaussian):
    A = gaussian(25, 4)
    params = AlphaParams.from_p(p)
    w, value = oracle_solve(A, p, tol=1e-10)
    snap = evaluate(A, w, params)
    assert snap.optimality_residual <= 1e-10
    assert value == pytest.approx(snap.value)
