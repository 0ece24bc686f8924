import math

import numpy as np
import pytest

from lewisw.errors import UnsupportedP
from lewisw.objective import (
    AlphaParams,
    evaluate,
    gradient,
    hessian_quadform,
    initial_gap_bound,
    objective_value,
    rho,
)


@pytest.mark.parametrize(
    "p, alpha, alpha_bar",
    [(4, 1.0, 1.0), (3, 2.0, 2.0), (8, 1 / 3, 1.0), (6, 0.5, 1.0)],
)
def test_alpha_params(p, alpha, alpha_bar):
    params = AlphaParams.from_p(p)
    assert params.alpha == pytest.approx(alpha)
    assert params.alpha_bar == pytest.approx(alpha_bar)
    assert params.rounding_bound == pytest.approx(1 + alpha)


@pytest.mark.parametrize("p", [2, 1.5, float("inf"), float("nan")])
def test_alpha_params_rejects(p):
    with pytest.raises(UnsupportedP):
        AlphaParams.from_p(p)


P4 = AlphaParams.from_p(4)


@pytest.mark.parametrize(
    "A, w, expected",
    [
        (np.eye(2), [1.0, 1.0], 1.0),
        (np.ones((2, 1)), [1.0, 1.0], 1.0 - math.log(2.0)),
        (np.eye(2), [2.0, 2.0], 4.0 - 2.0 * math.log(2.0)),
    ],
)
def test_objective_value(A, w, expected):
    assert objective_value(A, w, P4) == pytest.approx(expected)


@pytest.mark.parametrize(
    "A, w, expected",
    [
        (np.eye(2), [1.0, 1.0], [0.0, 0.0]),
        (np.ones((2, 1)), [1.0, 1.0], [0.5, 0.5]),
    ],
)
def test_gradient(A, w, expected):
    assert np.allclose(gradient(A, w, P4), expected)


@pytest.mark.parametrize("p", [3, 4, 8, 20])
def test_gradient_matches_finite_differences(p, gaussian, rng):
    A = gaussian(15, 3)
    w = rng.uniform(0.2, 1.5, 15)
    params = AlphaParams.from_p(p)
    g = gradient(A, w, params)
    h = 1e-5
    for i in range(15):
        e = np.zeros(15)
        e[i] = h * w[i]
        fd = (objective_value(A, w + e, params) - objective_value(A, w - e, params)) / (2 * e[i])
        assert fd == pytest.approx(g[i], rel=1e-5, abs=1e-7)


def test_hessian_quadform_examples():
    assert hessian_quadform(np.eye(2), [1.0, 1.0], P4, [1.0, 0.0]) == pytest.approx(2.0)
    assert hessian_quadform(np.eye(2), [1.0, 1.0], P4, [0.0, 0.0]) == 0.0


@pytest.mark.parametrize("p", [3, 4, 8])
def test_hessian_quadform_matches_gradient_differences(p, gaussian, rng):
    A = gaussian(12, 3)
    w = rng.uniform(0.5, 1.5, 12)
    d = rng.standard_normal(12)
    params = AlphaParams.from_p(p)
    t = 1e-6
    fd = (gradient(A, w + t * d, params) - gradient(A, w - t * d, params)) / (2 * t)
    assert hessian_quadform(A, w, params, d) == pytest.approx(float(d @ fd), rel=1e-5)


def test_hessian_is_positive(gaussian, rng):
    A = gaussian(10, 4)
    w = rng.uniform(0.5, 1.5, 10)
    for _ in range(20):
        assert hessian_quadform(A, w, AlphaParams.from_p(6), rng.standard_normal(10)) > 0


@pytest.mark.parametrize("p", [3, 4, 8])
def test_rho_identity(p):
    assert np.allclose(rho(np.eye(2), [1.0, 1.0], AlphaParams.from_p(p)).values, [1.0, 1.0])


def test_rho_examples(column, triangle):
    assert np.allclose(rho(column, [1.0, 1.0], P4).values, [0.5, 0.5])
    r = rho(triangle, np.full(3, 2 / 3), P4)
    assert np.allclose(r.values, [1.5, 1.5, 1.5])
    assert r.max == pytest.approx(1.5)


def test_snapshot_is_consistent(gaussian, rng):
    A = gaussian(20, 4)
    w = rng.uniform(0.5, 1.5, 20)
    params = AlphaParams.from_p(5)
    snap = evaluate(A, w, params)
    assert snap.value == pytest.approx(objective_value(A, w, params))
    assert np.allclose(snap.rho.values, snap.sigma / w ** (1 + params.alpha))
    assert snap.optimality_residual == pytest.approx(np.max(np.abs(snap.sigma - w ** (1 + params.alpha))))


def test_initial_gap_bound():
    assert initial_gap_bound(100, 10) == pytest.approx(10 * math.log(10))
    assert initial_gap_bound(5, 5) == 0.0
