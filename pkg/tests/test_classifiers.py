import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from adaffect.learn import (SingularCovarianceError, UndefinedMetricWarning, accuracy, f1_score,
                            fit_platt, platt_calibrate, train_lda, train_svm)
from adaffect.learn.svm import SvmConvergenceError, kkt_residual

XOR_X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
XOR_Y = np.array([-1, -1, 1, 1])


def gaussians(n, d, sep, seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n, d)), rng.normal(0, 1, (n, d))])
    X[:n, 0] += sep
    y = np.array([1] * n + [-1] * n)
    return X, y


def test_lda_separated_gaussians():
    X, y = gaussians(200, 3, 8.0, 0)
    m = train_lda(X, y)
    assert accuracy(m.predict(X), y) >= 0.99


def test_lda_identical_means():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 2))
    X = np.vstack([X, X])
    y = np.array([1] * 400 + [-1] * 400)
    m = train_lda(X, y)
    assert np.linalg.norm(m.w) < 1e-12
    assert accuracy(m.predict(X), y) == 0.5


def test_lda_two_point_threshold():
    m = train_lda(np.array([[0.0], [2.0]]), np.array([-1, 1]), shrinkage=0.5)
    assert -m.bias / m.w[0] == pytest.approx(1.0)


def test_lda_errors():
    with pytest.raises(SingularCovarianceError):
        train_lda(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), np.array([1, -1, 1]))
    with pytest.raises(ValueError):
        train_lda(np.array([[0.0], [1.0]]), np.array([1, 1]))
    with pytest.raises(ValueError):
        train_lda(np.array([[0.0], [1.0]]), np.array([1, -1]), shrinkage=1.5)


@given(st.integers(0, 2**32 - 1))
def test_lda_affine_invariant(seed):
    rng = np.random.default_rng(seed)
    X, y = gaussians(30, 3, 1.5, seed)
    A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    b = rng.normal(size=3)
    base = train_lda(X, y).decision_function(X)
    moved = train_lda(X @ A.T + b, y).decision_function(X @ A.T + b)
    assert np.allclose(base, moved, atol=1e-8 * (1 + np.abs(base).max()))
    clear = np.abs(base) > 1e-6
    assert (np.sign(base[clear]) == np.sign(moved[clear])).all()


def test_svm_three_point_hand_solution():
    X = np.array([[0, 0], [2, 0], [0, 2]], dtype=float)
    y = np.array([-1, 1, 1])
    m = train_svm(X, y, C=1e6, tol=1e-8)
    # dual: lambda = (1, 1/2, 1/2), w = (1, 1), b = -1, margin sqrt(2)
    assert np.allclose(m.diagnostics["dual"], [1.0, 0.5, 0.5], atol=1e-4)
    assert np.allclose(m.w, [1.0, 1.0], atol=1e-4)
    assert m.bias == pytest.approx(-1.0, abs=1e-4)
    assert (m.predict(X) == y).all()


def test_svm_xor():
    rbf = train_svm(XOR_X, XOR_Y, kernel="rbf", C=10, gamma=1)
    assert (rbf.predict(XOR_X) == XOR_Y).all()
    lin = train_svm(XOR_X, XOR_Y, kernel="linear", C=10)
    assert (lin.predict(XOR_X) == XOR_Y).sum() <= 3


def test_svm_separable_zero_errors():
    X, y = gaussians(40, 2, 10.0, 2)
    m = train_svm(X, y, C=1e3)
    assert (m.predict(X) == y).all()


@pytest.mark.parametrize("kernel", ["linear", "rbf"])
def test_svm_duplication_keeps_decision(kernel):
    # separable data, so no multiplier reaches C and each copy carries half the weight
    X, y = gaussians(15, 2, 6.0, 3)
    a = train_svm(X, y, kernel=kernel, C=1e3, gamma=0.5, tol=1e-9)
    assert (a.diagnostics["dual"] < 1e3).all()
    b = train_svm(np.vstack([X, X]), np.concatenate([y, y]), kernel=kernel, C=1e3, gamma=0.5,
                  tol=1e-9)
    grid = np.random.default_rng(0).normal(size=(50, 2))
    assert np.allclose(a.decision_function(grid), b.decision_function(grid), atol=1e-6)
    assert (a.predict(grid) == b.predict(grid)).all()


@pytest.mark.parametrize("kernel", ["linear", "rbf"])
def test_svm_duplication_soft_margin_halves_c(kernel):
    # with slack, two copies at C/2 reproduce one copy at C
    X, y = gaussians(15, 2, 1.0, 3)
    a = train_svm(X, y, kernel=kernel, C=1.0, gamma=0.5, tol=1e-9)
    b = train_svm(np.vstack([X, X]), np.concatenate([y, y]), kernel=kernel, C=0.5, gamma=0.5,
                  tol=1e-9)
    grid = np.random.default_rng(0).normal(size=(50, 2))
    assert np.allclose(a.decision_function(grid), b.decision_function(grid), atol=1e-6)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["linear", "rbf"]),
       st.sampled_from([0.01, 1.0, 100.0]))
def test_svm_dual_feasible_and_kkt(seed, kernel, C):
    X, y = gaussians(12, 3, 1.0, seed)
    m = train_svm(X, y, kernel=kernel, C=C, gamma=0.3)
    lam = m.diagnostics["dual"]
    assert (lam >= 0).all() and (lam <= C).all()
    assert abs(float(lam @ y)) < 1e-9 * max(1.0, C)
    assert m.diagnostics["kkt_residual"] < 1e-3


def test_kkt_residual_of_zero_point():
    K = np.eye(2)
    assert kkt_residual(np.zeros(2), K, np.array([1, -1]), 1.0) == pytest.approx(2.0)


def test_svm_errors():
    with pytest.raises(ValueError):
        train_svm(XOR_X, XOR_Y, C=0)
    with pytest.raises(ValueError):
        train_svm(XOR_X, XOR_Y, kernel="rbf", gamma=0)
    with pytest.raises(ValueError):
        train_svm(XOR_X, np.ones(4))
    with pytest.raises(SvmConvergenceError) as info:
        train_svm(*gaussians(20, 2, 0.5, 4), C=10, max_iter=1)
    assert info.value.n_iter == 1


def platt_oracle(f, y):
    n_pos, n_neg = (y == 1).sum(), (y != 1).sum()
    t = np.where(y == 1, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))

    def nll(ab):
        z = ab[0] * f + ab[1]
        return np.sum(t * z + np.logaddexp(0, -z))
    return optimize.minimize(nll, [0.0, 0.0], method="Nelder-Mead",
                             options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000}).x


def test_platt_matches_generic_optimizer():
    rng = np.random.default_rng(5)
    y = np.where(rng.random(80) < 0.4, 1, -1)
    f = y * 0.8 + rng.normal(0, 1, 80)
    a, b = fit_platt(f, y)
    ref = platt_oracle(f, y)
    assert np.allclose([a, b], ref, atol=1e-4)
    assert a < 0


def test_platt_examples():
    X, y = gaussians(30, 1, 20.0, 6)
    m = platt_calibrate(train_lda(X, y), X, y)
    p = m.predict_proba(X)
    assert (p[y == 1] > 0.9).all() and (p[y == -1] < 0.1).all()
    assert ((p > 0) & (p < 1)).all()
    y2 = np.where(np.arange(50) < 15, 1, -1)
    a, b = fit_platt(np.zeros(50), y2)
    assert 1 / (1 + np.exp(b)) == pytest.approx(0.3, abs=0.02)
    with pytest.raises(ValueError):
        fit_platt([0.1, 0.2], [1, 1])
    with pytest.raises(ValueError):
        train_lda(X, y).predict_proba(X)


def test_platt_label_flip_reverses_slope():
    rng = np.random.default_rng(7)
    y = np.where(rng.random(60) < 0.5, 1, -1)
    f = y + rng.normal(0, 0.8, 60)
    a, _ = fit_platt(f, y)
    a_flip, _ = fit_platt(f, -y)
    assert a < 0 < a_flip


def test_f1_examples():
    assert f1_score([1, -1, 1], [1, -1, 1]) == 1.0
    assert f1_score([1, 1, -1], [1, -1, 1]) == 0.5
    with pytest.warns(UndefinedMetricWarning):
        assert f1_score([-1, -1], [-1, -1]) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert f1_score([1, 1], [-1, -1]) == 0.0
    with pytest.raises(ValueError):
        f1_score([1], [1, -1])


@given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.sampled_from([-1, 1])), min_size=1,
                max_size=30), st.randoms(use_true_random=False))
def test_metrics_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        for fn in (f1_score, accuracy):
            assert fn(*zip(*pairs)) == fn(*zip(*shuffled))
