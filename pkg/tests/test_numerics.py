import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adlm.numerics import (
    NotPositiveDefinite, SpdFactor, cholesky, effective_dimension, effective_dimension_gram, make_rng,
    sample_gaussian_precision, solve_spd,
)
from adlm.penalty import build_P

from _oracles import hat_trace


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


def test_cholesky_identity():
    assert np.array_equal(cholesky(np.eye(4)).L, np.eye(4))


def test_cholesky_hand_case():
    L = cholesky([[4.0, 2.0], [2.0, 3.0]]).L
    assert np.allclose(L, [[2, 0], [1, np.sqrt(2)]], atol=1e-15)


def test_cholesky_rejects_indefinite_and_nonsquare():
    with pytest.raises(NotPositiveDefinite):
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValueError):
        cholesky(np.ones((2, 3)))


def test_cholesky_relative_pivot_floor():
    # exactly singular after rounding: pivot far below 1e-12 of the largest diagonal
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1e14, 1e-1]))
    cholesky(np.diag([1e10, 1e-1]))


def test_solve_identity_and_residual():
    rng = np.random.default_rng(0)
    rhs = rng.standard_normal(5)
    assert np.array_equal(solve_spd(cholesky(np.eye(5)), rhs), rhs)
    A = random_spd(rng, 5)
    x = solve_spd(cholesky(A), rhs)
    assert np.linalg.norm(A @ x - rhs) < 1e-8


def test_solve_multiple_rhs_columnwise():
    rng = np.random.default_rng(1)
    A = random_spd(rng, 6)
    f = cholesky(A)
    R = rng.standard_normal((6, 3))
    both = solve_spd(f, R)
    for j in range(3):
        assert np.allclose(both[:, j], solve_spd(f, R[:, j]), atol=1e-14)
    with pytest.raises(ValueError):
        solve_spd(f, np.ones(5))


def test_logdet():
    A = random_spd(np.random.default_rng(2), 7)
    assert cholesky(A).logdet() == pytest.approx(np.linalg.slogdet(A)[1], rel=1e-12)
    assert isinstance(cholesky(A), SpdFactor)


def test_gaussian_standard_moments():
    rng = make_rng(11)
    z = sample_gaussian_precision(rng, np.eye(3), np.zeros(3), size=100_000)
    assert np.all(np.abs(z.mean(axis=0)) < 4 / np.sqrt(1e5))
    assert np.allclose(z.std(axis=0), 1.0, atol=0.01)


def test_gaussian_scalar_moments():
    x = sample_gaussian_precision(make_rng(12), [[4.0]], [8.0], size=100_000)[:, 0]
    assert abs(x.mean() - 2.0) < 4 * 0.5 / np.sqrt(1e5)
    assert abs(x.std() - 0.5) < 0.005


def test_gaussian_single_draw_covariance():
    # one-at-a-time draws through the scaled kernel
    rng = make_rng(13)
    P = np.array([[2.0, -0.8], [-0.8, 1.0]])
    lin = np.array([0.5, -1.0])
    draws = np.array([sample_gaussian_precision(rng, P, lin) for _ in range(40_000)])
    cov = np.linalg.inv(P)
    assert np.allclose(draws.mean(axis=0), cov @ lin, atol=4 * np.sqrt(np.diag(cov).max() / 4e4))
    assert np.allclose(np.cov(draws.T), cov, atol=0.03)


def test_gaussian_deterministic():
    a = sample_gaussian_precision(make_rng(5, "x"), np.eye(4), np.ones(4))
    b = sample_gaussian_precision(make_rng(5, "x"), np.eye(4), np.ones(4))
    assert np.array_equal(a, b)


def test_gaussian_rejects_singular():
    with pytest.raises(NotPositiveDefinite):
        sample_gaussian_precision(make_rng(0), build_P(4), np.zeros(4))


def test_rng_streams_are_keyed():
    a = make_rng(1, "data", "DecayCurve", 3).random(4)
    assert np.array_equal(a, make_rng(1, "data", "DecayCurve", 3).random(4))
    assert not np.array_equal(a, make_rng(1, "data", "DecayCurve", 4).random(4))
    assert not np.array_equal(a, make_rng(2, "data", "DecayCurve", 3).random(4))


def design(seed, n=60, K=6):
    return np.random.default_rng(seed).standard_normal((n, K))


def test_ed_unpenalised_is_K():
    X = design(0)
    assert effective_dimension(X, np.zeros((6, 6))) == pytest.approx(6.0, abs=1e-10)


@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100))
def test_ed_proportional_penalty(seed, c):
    X = design(seed)
    assert effective_dimension(X, c * X.T @ X) == pytest.approx(6 / (1 + c), abs=1e-8)


def test_ed_rw1_limit_is_one():
    X = design(3)
    S = 1e12 * build_P(6)
    # exact value is 1 + O(1e-10); double precision delivers about cond * eps
    tol = 10 * np.linalg.cond(X.T @ X + S) * np.finfo(float).eps
    assert effective_dimension(X, S) == pytest.approx(1.0, abs=max(tol, 1e-9))


@given(st.integers(0, 2**31 - 1))
def test_ed_matches_hat_trace(seed):
    rng = np.random.default_rng(seed)
    X = design(seed)
    S = random_spd(rng, 6) * rng.uniform(0.01, 10)
    assert effective_dimension(X, S) == pytest.approx(hat_trace(X, S), abs=1e-9)


def test_ed_monotone_under_scaling():
    rng = np.random.default_rng(9)
    for _ in range(100):
        X = rng.standard_normal((40, 5))
        A = rng.standard_normal((5, 5))
        S = A @ A.T
        eds = [effective_dimension(X, s * S) for s in (0.1, 1.0, 10.0, 100.0)]
        assert all(a > b for a, b in zip(eds, eds[1:]))


def test_ed_gram_rescaling_handles_huge_entries():
    X = design(4)
    S = np.diag([1e15, 0, 0, 0, 0, 0.0])
    # one direction removed entirely
    assert effective_dimension_gram(X.T @ X, S) == pytest.approx(5.0, abs=1e-6)
