import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaffect.learn import cross_fitted_fusion, decision_fusion, f1_score
from adaffect.learn.fusion import DEFAULT_THRESHOLDS, fuse_scores, fusion_coefficients
from oracles import fusion_grid


def perfect_plus_random(n=30, seed=0):
    rng = np.random.default_rng(seed)
    truth = np.array([1, -1] * (n // 2))
    p_video = np.where(truth == 1, rng.uniform(0.7, 1.0, n), rng.uniform(0.0, 0.3, n))
    p_audio = rng.random(n)
    return p_audio, p_video, truth


def test_perfect_video_recovers_f1_one():
    pa, pv, truth = perfect_plus_random()
    res = decision_fusion(pa, pv, 0.5, 1.0, truth)
    assert res.f1 == 1.0 and res.optimistic
    c_audio, c_video, _, _ = fusion_coefficients(np.array(res.weights.alpha[0]),
                                                 np.array(res.weights.alpha[1]), 0.5, 1.0)
    assert c_video > c_audio


def test_identical_posteriors_make_alpha_irrelevant():
    rng = np.random.default_rng(1)
    truth = np.where(rng.random(25) < 0.5, 1, -1)
    p = np.clip(0.5 + 0.3 * truth + rng.normal(0, 0.25, 25), 0, 1)
    res = decision_fusion(p, p, 0.6, 0.8, truth)
    # any alpha gives a1 t1 + a2 t2 = (a1^2 F1 + a2^2 F2) / (a1 F1 + a2 F2), so compare
    # against the unimodal labeling at the matching effective threshold
    c1, c2, _, _ = fusion_coefficients(np.array(res.weights.alpha[0]),
                                       np.array(res.weights.alpha[1]), 0.6, 0.8)
    unimodal = np.where((c1 + c2) * p >= res.weights.threshold, 1, -1)
    assert (res.labels == unimodal).all()
    for a1, a2 in [(0.2, 0.9), (1.0, 1.0), (0.5, 0.1)]:
        cc1, cc2, _, _ = fusion_coefficients(np.array(a1), np.array(a2), 0.6, 0.8)
        s = cc1 * p + cc2 * p
        assert np.allclose(s, (cc1 + cc2) * p)


def test_both_perfect_any_interior_alpha():
    truth = np.array([1, 1, -1, -1, 1, -1])
    p = np.where(truth == 1, 0.95, 0.05)
    res = decision_fusion(p, p, 1.0, 1.0, truth)
    assert res.f1 == 1.0
    assert res.weights.alpha == (0.5, 0.5)
    # every interior alpha keeps the classes apart; whether a fixed threshold
    # splits them depends on the overall score scale c1 + c2
    for a1 in np.arange(1, 100) / 100:
        for a2 in (0.01, 0.3, 0.6, 0.99):
            c1, c2, _, _ = fusion_coefficients(np.array(a1), np.array(a2), 1.0, 1.0)
            s = c1 * p + c2 * p
            assert s[truth == 1].min() > s[truth == -1].max()
            if (c1 + c2) * 0.95 >= DEFAULT_THRESHOLDS[0]:
                best = max(f1_score(np.where(s >= th, 1, -1), truth) for th in DEFAULT_THRESHOLDS)
                assert best == 1.0


def test_t_weights_sum_to_one():
    a1 = np.array([0.0, 0.3, 1.0, 0.0])
    a2 = np.array([0.4, 0.3, 0.0, 0.0])
    _, _, t1, t2 = fusion_coefficients(a1, a2, 0.5, 0.7)
    assert np.allclose((t1 + t2)[:3], 1.0)
    assert np.isnan(t1[3]) and np.isnan(t2[3])


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(6, 14), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_grid_matches_bruteforce(seed, n, fa, fv):
    rng = np.random.default_rng(seed)
    truth = np.where(rng.random(n) < 0.5, 1, -1)
    pa, pv = rng.random(n), rng.random(n)
    res = decision_fusion(pa, pv, fa, fv, truth, grid_step=0.05)
    a1, a2, theta, labels, f1 = fusion_grid(pa, pv, fa, fv, truth, n_steps=20)
    assert res.weights.alpha == (a1, a2) and res.weights.threshold == theta
    assert res.labels.tolist() == labels and res.f1 == f1


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_rescaling_training_f1_keeps_labels(seed, scale):
    rng = np.random.default_rng(seed)
    truth = np.where(rng.random(20) < 0.5, 1, -1)
    pa, pv = rng.random(20), rng.random(20)
    base = decision_fusion(pa, pv, 0.4, 0.7, truth, grid_step=0.05)
    scaled = decision_fusion(pa, pv, 0.4 * scale, 0.7 * scale, truth, grid_step=0.05)
    assert (base.labels == scaled.labels).all()


def test_validation_mode_is_not_optimistic():
    pa, pv, truth = perfect_plus_random(40, 2)
    res = decision_fusion(pa[:20], pv[:20], 0.5, 1.0, truth[:20],
                          validation=(pa[20:], pv[20:], truth[20:]))
    assert not res.optimistic
    assert (res.labels == fuse_scores(res.weights, pa[:20], pv[:20])).all()
    pooled, folds = cross_fitted_fusion(pa, pv, 0.5, 1.0, truth, n_folds=4, seed=1)
    assert not pooled.optimistic and len(folds) == 4
    again, _ = cross_fitted_fusion(pa, pv, 0.5, 1.0, truth, n_folds=4, seed=1)
    assert (pooled.labels == again.labels).all()


def test_fusion_errors():
    with pytest.raises(ValueError):
        decision_fusion([0.1], [0.2], 0.0, 0.0, [1])
    with pytest.raises(ValueError):
        decision_fusion([0.1], [0.2, 0.3], 0.5, 0.5, [1])
    with pytest.raises(ValueError):
        decision_fusion([0.1], [0.2], 0.5, 0.5, [1], grid_step=0.03)
