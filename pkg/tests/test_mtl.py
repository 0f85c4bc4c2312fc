import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaffect.learn import MtlError, f1_score, mtl_predict, quadrant_graph, train_mtl
from adaffect.learn.mtl import (MtlModel, _as_tasks, incidence_matrix, mtl_objective,
                                mtl_smooth_gradient, mtl_smooth_objective, quadrant_edges)
from oracles import graph_ridge, ridge


def random_tasks(rng, T=4, d=5, n=(8, 15)):
    w_true = rng.normal(size=d)
    tasks = []
    for _ in range(T):
        X = rng.normal(size=(int(rng.integers(*n)), d))
        y = np.sign(X @ (w_true + 0.3 * rng.normal(size=d)))
        y[y == 0] = 1
        tasks.append((X, y))
    return tasks


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_quadrant_graph_is_a_four_cycle():
    assert quadrant_edges() == [(0, 1), (0, 3), (1, 2), (2, 3)]
    R = quadrant_graph()
    assert R.shape == (4, 4)
    assert (np.abs(R).sum(axis=1) == 2).all() and (R.sum(axis=0) == 0).all()


@given(st.integers(0, 2**32 - 1))
def test_incidence_norm_sums_edge_differences(seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(3, 4))
    edges = quadrant_edges() + [(1, 3)]
    R = incidence_matrix(4, edges)
    expected = sum(np.sum((W[:, i] - W[:, j]) ** 2) for i, j in edges)
    assert np.sum((W @ R) ** 2) == pytest.approx(expected, rel=1e-12)


def test_incidence_rejects_bad_edges():
    with pytest.raises(ValueError):
        incidence_matrix(3, [(0, 0)])
    with pytest.raises(ValueError):
        incidence_matrix(3, [(0, 3)])


def test_zero_coupling_is_per_task_ridge():
    tasks = random_tasks(np.random.default_rng(0))
    m = train_mtl(tasks, alpha=0.0, beta=0.0, gamma=0.7)
    for t, (X, y) in enumerate(tasks):
        assert rel_err(m.W[:, t], ridge(X, y, 0.7)) < 1e-4
    assert m.converged


@pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
def test_smooth_problem_matches_graph_ridge(alpha):
    tasks = random_tasks(np.random.default_rng(1))
    R = quadrant_graph()
    m = train_mtl(tasks, R, alpha=alpha, beta=0.0, gamma=0.5)
    assert rel_err(m.W, graph_ridge(tasks, R, alpha, 0.5)) < 1e-4


def test_large_l1_gives_exact_zero():
    tasks = random_tasks(np.random.default_rng(2))
    m = train_mtl(tasks, beta=1e6)
    assert not m.W.any()


def test_identical_linked_tasks_merge():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 4))
    y = np.sign(X[:, 0] + 0.2)
    # same inputs, slightly different targets so the uncoupled fits differ
    y2 = y.copy()
    y2[:3] *= -1
    R = incidence_matrix(2, [(0, 1)])
    loose = train_mtl([(X, y), (X, y2)], R, alpha=0.0, gamma=0.1)
    tight = train_mtl([(X, y), (X, y2)], R, alpha=1e5, gamma=0.1, max_iter=20000)
    spread = lambda m: np.linalg.norm(m.W[:, 0] - m.W[:, 1]) / np.linalg.norm(m.W[:, 0])  # noqa: E731
    assert spread(loose) > 0.05
    assert spread(tight) < 1e-3


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
def test_objective_never_increases(seed, alpha, beta, gamma):
    tasks = random_tasks(np.random.default_rng(seed), d=int(seed % 6) + 2)
    m = train_mtl(tasks, alpha=alpha, beta=beta, gamma=gamma, max_iter=300)
    h = np.array(m.history)
    assert (np.diff(h) <= 0).all()
    data = _as_tasks(tasks)
    assert h[-1] == pytest.approx(mtl_objective(m.W, data, m.R, alpha, beta, gamma), rel=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.floats(0, 3), st.floats(0, 3))
def test_gradient_matches_central_differences(seed, d, alpha, gamma):
    rng = np.random.default_rng(seed)
    data = _as_tasks(random_tasks(rng, d=d))
    R = quadrant_graph()
    W = rng.normal(size=(d, 4))
    G = mtl_smooth_gradient(W, data, R, alpha, gamma)
    num = np.empty_like(W)
    h = 1e-5
    for idx in np.ndindex(*W.shape):
        E = np.zeros_like(W)
        E[idx] = h
        num[idx] = (mtl_smooth_objective(W + E, data, R, alpha, gamma)
                    - mtl_smooth_objective(W - E, data, R, alpha, gamma)) / (2 * h)
    assert rel_err(num, G) < 1e-5


def test_predict_examples():
    W = np.zeros((3, 4))
    W[0, 2] = 1.0
    m = MtlModel(W, quadrant_graph(), 1.0, 0.0, 1.0)
    assert mtl_predict(m, np.array([2.0, -5.0, 1.0]), 2) == 1
    assert mtl_predict(m, np.array([-2.0, 5.0, 1.0]), 2) == -1
    assert mtl_predict(m, np.zeros(3), 2) == 1
    with pytest.raises(ValueError):
        mtl_predict(m, np.zeros(2), 0)
    with pytest.raises(ValueError):
        mtl_predict(m, np.zeros(3), 4)


def test_separable_tasks_fit_well():
    rng = np.random.default_rng(4)
    planes = rng.normal(size=(4, 6))
    tasks = []
    for t in range(4):
        X = rng.normal(size=(40, 6))
        X = X[np.abs(X @ planes[t]) > 0.3][:30]
        tasks.append((X, np.sign(X @ planes[t])))
    m = train_mtl(tasks, alpha=0.01, beta=0.01, gamma=0.01)
    for t, (X, y) in enumerate(tasks):
        pred = [mtl_predict(m, x, t) for x in X]
        assert f1_score(pred, y) >= 0.95


def test_errors():
    tasks = random_tasks(np.random.default_rng(5))
    with pytest.raises(ValueError):
        train_mtl(tasks, alpha=-1)
    with pytest.raises(ValueError):
        train_mtl(tasks[:3])
    with pytest.raises(ValueError):
        train_mtl([tasks[0], (np.zeros((3, 2)), np.ones(3))], incidence_matrix(2, [(0, 1)]))
    with pytest.raises(MtlError):
        train_mtl([(np.full((3, 2), 1e200), np.ones(3))], np.zeros((1, 0)))
