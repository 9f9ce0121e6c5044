import numpy as np
import pytest
from scipy import linalg

from mascots.borf import BorfTransform, dense_counts, transform_one
from mascots.dataset_io import Dataset
from mascots.errors import NonFiniteLoss, ShapeError
from mascots.models import (
    KNN1,
    RidgeBorf,
    Surrogate,
    attribute,
    blackbox_from_dict,
    knn1_fit,
    knn1_predict,
    ridge_borf_fit,
    ridge_solve,
    softmax,
    softmax_cross_entropy,
    surrogate_fidelity,
    surrogate_fit,
)
from mascots.symbolic import SaxConfig


def numeric_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f()
        x[idx] = old - h
        down = f()
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def test_gradient_matches_finite_differences(rng):
    X = rng.poisson(2.0, (5, 8)).astype(float)
    T = softmax(rng.standard_normal((5, 2)))
    W = rng.standard_normal((8, 2)) * 0.3
    b = rng.standard_normal(2) * 0.1
    _, gW, gb = softmax_cross_entropy(W, b, X, T)
    nW = numeric_grad(lambda: softmax_cross_entropy(W, b, X, T)[0], W)
    nb = numeric_grad(lambda: softmax_cross_entropy(W, b, X, T)[0], b)
    assert np.linalg.norm(gW - nW) / np.linalg.norm(nW) < 1e-4
    assert np.linalg.norm(gb - nb) / max(np.linalg.norm(nb), 1e-12) < 1e-4


def test_attribution_completeness(rng):
    Z = rng.poisson(1.5, (30, 12)).astype(float)
    T = softmax(rng.standard_normal((30, 3)) * 2)
    g = surrogate_fit(Z, T, epochs=200)
    z = rng.poisson(1.5, 12).astype(float)
    phi = attribute(g, z).phi
    baseline = g.margins(g.feature_means[None])[0]
    np.testing.assert_allclose(phi.sum(axis=0), g.margins(z[None])[0] - baseline, atol=1e-8)


def test_attribution_examples():
    g = Surrogate(np.zeros((3, 2)), np.zeros(2), np.ones(3))
    assert not attribute(g, np.array([4.0, 0.0, 1.0])).phi.any()
    g = Surrogate(np.array([[2.0, -2.0], [1.0, 1.0]]), np.zeros(2), np.array([1.0, 0.5]))
    assert not attribute(g, g.feature_means).phi.any()
    np.testing.assert_array_equal(attribute(g, np.array([4.0, 0.5])).phi[0], [6.0, -6.0])
    with pytest.raises(ShapeError):
        attribute(g, np.zeros(3))


def separable(rng, n=40):
    labels = np.arange(n) % 2
    Z = rng.poisson(1.0, (n, 6)).astype(float)
    Z[:, 0] += 4 * labels
    return Z, labels


def test_surrogate_separable_and_constant_column(rng):
    Z, labels = separable(rng)
    Z[:, 5] = 3.0
    T = np.eye(2)[labels]
    g = surrogate_fit(Z, T, epochs=500)
    assert surrogate_fidelity(g, Z, labels) == 1.0
    assert np.all(g.weights[5] == 0.0)
    assert np.all(np.isfinite(g.weights))
    np.testing.assert_allclose(g.predict_proba(Z).sum(axis=1), 1.0)


def test_surrogate_loss_non_increasing(rng):
    Z, labels = separable(rng)
    T = np.eye(2)[labels] * 0.9 + 0.05
    g = surrogate_fit(Z, T, epochs=300, learning_rate=0.1)
    assert np.all(np.diff(g.loss_history) <= 1e-12)
    auto = surrogate_fit(Z, T, epochs=300)
    assert np.all(np.diff(auto.loss_history) <= 1e-12)


def test_surrogate_deterministic_and_initial_state(rng):
    Z, labels = separable(rng)
    T = np.eye(2)[labels]
    a, b = surrogate_fit(Z, T, epochs=50, seed=1), surrogate_fit(Z, T, epochs=50, seed=1)
    assert a.weights.tobytes() == b.weights.tobytes()
    zero = surrogate_fit(Z, T, epochs=0)
    assert not zero.weights.any()
    np.testing.assert_allclose(zero.bias, np.log(T.mean(axis=0)))


def test_surrogate_errors(rng):
    Z, labels = separable(rng)
    with pytest.raises(ShapeError):
        surrogate_fit(Z, np.ones((len(Z), 2)))
    with pytest.raises(ShapeError):
        surrogate_fit(Z, np.eye(2)[labels][:-1])
    # softmax cross-entropy has bounded gradients, so only an absurd step overflows
    with np.errstate(all="ignore"), pytest.raises(NonFiniteLoss):
        surrogate_fit(Z * 100, np.eye(2)[labels], epochs=5, learning_rate=1e308)


def test_random_surrogate_fidelity_near_half():
    rng = np.random.default_rng(3)
    Z = rng.poisson(1.0, (1000, 10)).astype(float)
    g = Surrogate(rng.standard_normal((10, 2)), np.zeros(2), Z.mean(axis=0))
    labels = np.arange(1000) % 2
    assert abs(surrogate_fidelity(g, Z, labels) - 0.5) <= 0.1


def test_surrogate_accepts_borf_vectors(rng):
    t = BorfTransform.auto(1, 32)
    X = rng.standard_normal((6, 1, 32))
    Z = dense_counts(X, t)
    g = surrogate_fit(Z, np.eye(2)[np.arange(6) % 2], epochs=20)
    z = transform_one(X[0], t)
    np.testing.assert_allclose(g.margins(z), g.margins(Z[:1]))
    back = Surrogate.from_dict(g.to_dict())
    np.testing.assert_array_equal(back.weights, g.weights)


def knn_data():
    return Dataset(np.array([np.zeros((1, 4)), np.ones((1, 4))]), [0, 1], ("zero", "one"))


def test_knn_examples():
    model = knn1_fit(knn_data())
    assert knn1_predict(model, np.ones((1, 4))) == 1
    assert knn1_predict(model, np.full((1, 4), 0.9)) == 1
    assert knn1_predict(model, np.full((1, 4), 0.5)) == 0  # equidistant: lowest index wins
    np.testing.assert_allclose(model.predict_proba(np.zeros((1, 4))), [0.95, 0.05])
    with pytest.raises(ShapeError):
        model.predict(np.zeros((1, 5)))


def test_knn_tie_to_lowest_index():
    data = Dataset(np.array([[[1.0, 0.0]], [[-1.0, 0.0]], [[1.0, 0.0]]]), [1, 0, 0], ("a", "b"))
    model = knn1_fit(data)
    assert model.nearest(np.array([[[0.0, 0.0]]]))[0] == 0
    assert model.predict(np.array([[1.0, 0.0]])) == 1


def test_predict_consistency_and_round_trip(rng):
    X = rng.standard_normal((9, 1, 16))
    data = Dataset(X, np.arange(9) % 3, ("a", "b", "c"))
    t = BorfTransform.auto(1, 16)
    for model in (knn1_fit(data), ridge_borf_fit(data, t, 0.5)):
        P = model.predict_proba_batch(X)
        np.testing.assert_allclose(P.sum(axis=1), 1.0)
        np.testing.assert_array_equal(model.predict_batch(X), np.argmax(P, axis=1))
        back = blackbox_from_dict(model.to_dict())
        np.testing.assert_array_equal(back.predict_proba_batch(X), P)
    assert isinstance(blackbox_from_dict(knn1_fit(data).to_dict()), KNN1)


def ridge_setup(rng):
    t = BorfTransform((SaxConfig(4, 2, 3, 2),), 1)
    X = rng.standard_normal((24, 1, 12))
    labels = np.arange(24) % 2
    X[labels == 1, 0, :6] += np.linspace(0, 4, 6)
    return Dataset(X, labels, ("a", "b")), t


def test_ridge_matches_normal_equations(rng):
    data, t = ridge_setup(rng)
    Z = dense_counts(data, t)
    W, intercept, means, scales = ridge_solve(Z, data.labels, 2, 0.7)
    Xs = (Z - means) / scales
    Y = np.where(np.eye(2)[data.labels] > 0, 1.0, -1.0)
    # augmented least squares with an unpenalized intercept column
    A = np.hstack([Xs, np.ones((len(Z), 1))])
    P = np.diag(np.r_[np.full(Z.shape[1], 0.7 * len(Z)), 0.0])
    sol = linalg.lstsq(A.T @ A + P, A.T @ Y)[0]
    np.testing.assert_allclose(W, sol[:-1], atol=1e-9)
    np.testing.assert_allclose(intercept, sol[-1], atol=1e-9)


def test_ridge_duplicate_invariance(rng):
    data, t = ridge_setup(rng)
    doubled = Dataset(np.concatenate([data.values] * 2), np.concatenate([data.labels] * 2), data.class_names)
    a, b = ridge_borf_fit(data, t, 1.0), ridge_borf_fit(doubled, t, 1.0)
    probe = rng.standard_normal((10, 1, 12))
    np.testing.assert_allclose(a.margins(probe), b.margins(probe), atol=1e-10)


def test_ridge_separable_and_limit():
    t = BorfTransform((SaxConfig(4, 2, 3, 4),), 1)
    up = np.array([0, 0, 1, 1.0])
    X = np.array([np.tile(up, 3) if i % 2 else np.tile(up[::-1], 3) for i in range(10)])[:, None, :]
    X = X + np.random.default_rng(0).normal(0, 0.01, X.shape)
    data = Dataset(X, np.arange(10) % 2, ("down", "up"))
    assert np.all(ridge_borf_fit(data, t, 0.01).predict_batch(X) == data.labels)

    skew = Dataset(X[:7], [0, 0, 0, 0, 0, 1, 1], ("a", "b"))
    heavy = ridge_borf_fit(skew, t, 1e12)
    assert np.abs(heavy.weights).max() < 1e-9
    assert np.all(heavy.predict_batch(X) == 0)
    assert isinstance(heavy, RidgeBorf)
