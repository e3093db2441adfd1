import numpy as np
import pytest

from radialdwd import TrainingSet, baselines, simlab
from radialdwd.baselines import ZeroDirection, ldwd_fit, md_fit


def test_md_examples():
    m = md_fit(TrainingSet([[1.0, 0.0], [0.0, 1.0]], [1, -1]))
    np.testing.assert_array_equal(m.normal, [1.0, -1.0])
    assert m.score([[0.5, 0.5]])[0] == 0.0
    one_d = md_fit(TrainingSet([[2.0], [0.0]], [1, -1]))
    assert -one_d.intercept / one_d.normal[0] == pytest.approx(1.0)
    with pytest.raises(ZeroDirection):
        md_fit(TrainingSet([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]], [1, 1, -1]))


def test_md_translation_equivariant():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 3))
    y = np.r_[np.ones(5), -np.ones(5)]
    shift = np.array([3.0, -1.0, 7.0])
    test = rng.normal(size=(20, 3))
    a = md_fit(TrainingSet(X, y)).score(test)
    b = md_fit(TrainingSet(X + shift, y)).score(test + shift)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_ldwd_one_dimensional():
    m = ldwd_fit(TrainingSet([[0.0], [2.0]], [-1, 1]))
    boundary = -m.intercept / m.normal[0]
    assert 0.0 < boundary < 2.0
    assert boundary == pytest.approx(1.0, abs=1e-6)


def test_ldwd_symmetric_intercept():
    pos = np.array([[1.0, 0.5], [2.0, -0.3], [1.5, 1.0]])
    X = np.vstack([pos, -pos])
    y = np.r_[np.ones(3), -np.ones(3)]
    m = ldwd_fit(TrainingSet(X, y))
    assert abs(m.intercept) <= 1e-6


def test_ldwd_separable_residuals_and_ball():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal([2, 2], 0.3, (8, 2)), rng.normal([-2, -2], 0.3, (9, 2))])
    y = np.r_[np.ones(8), -np.ones(9)]
    m = ldwd_fit(TrainingSet(X, y))
    assert np.linalg.norm(m.normal) <= 1 + 1e-8
    assert np.all(y * (X @ m.normal + m.intercept) > 0)
    assert m.meta["status"] == "optimal"


def test_ldwd_reduced_matches_full():
    data = simlab.draw_training(np.random.default_rng(5), 1.0, 0.5, 200, 6, 8)
    a = ldwd_fit(data, reduce=False)
    b = ldwd_fit(data, reduce=True)
    np.testing.assert_allclose(a.score(data.X), b.score(data.X), atol=1e-6)


def test_stratified_folds():
    y = np.r_[np.ones(7), -np.ones(13)]
    folds = baselines.stratified_folds(y, 5, seed=1)
    allidx = np.sort(np.concatenate(folds))
    assert list(allidx) == list(range(20))
    for f in folds:
        assert 1 <= np.sum(y[f] > 0) <= 2 and 2 <= np.sum(y[f] < 0) <= 3
    assert [list(f) for f in folds] == [list(f) for f in baselines.stratified_folds(y, 5, 1)]


def test_cv_penalty_returns_grid_member():
    data = simlab.draw_training(np.random.default_rng(2), 1.0, 0.5, 20, 10, 10)
    grid = [1.0, 100.0, 1e4]
    assert baselines.cv_penalty(data, grid) in grid
