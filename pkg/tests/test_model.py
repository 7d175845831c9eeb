import logging
import math

import numpy as np
import pytest

from visent.model import (LRModel, OneVsRestModel, TrainConfig, load_model, lr_loss_grad, predict_scores,
                          save_model, sigmoid, standardization, train_lr, train_one_vs_rest)
from visent.tensor import ShapeError


def fd_gradient(model, X, y, step=1e-4):
    """Central differences over every weight and the bias."""
    params = np.append(model.w, model.b)
    grad = np.empty_like(params)
    for i in range(params.size):
        up, down = params.copy(), params.copy()
        up[i] += step
        down[i] -= step
        lp = lr_loss_grad(LRModel(up[:-1], up[-1], model.lam), X, y)[0]
        lm = lr_loss_grad(LRModel(down[:-1], down[-1], model.lam), X, y)[0]
        grad[i] = (lp - lm) / (2 * step)
    return grad


def separable(rng, n=40):
    X = rng.normal(0, 1, (n, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(float)
    X[y == 1] += 0.5
    X[y == 0] -= 0.5
    return X, y


def test_sigmoid():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(math.log(3)) == pytest.approx(0.75, rel=1e-12)
    z = np.linspace(-800, 800, 101)
    np.testing.assert_allclose(sigmoid(-z), 1 - sigmoid(z), atol=1e-15)
    assert np.all(np.isfinite(sigmoid(z)))


def test_loss_at_zero_is_log2(rng):
    X = rng.normal(0, 1, (7, 3))
    y = rng.integers(0, 2, 7)
    loss, gw, gb = lr_loss_grad(LRModel(np.zeros(3)), X, y)
    assert loss == pytest.approx(math.log(2), rel=1e-12)


def test_regulariser_offset(rng):
    X = rng.normal(0, 1, (9, 4))
    y = rng.integers(0, 2, 9)
    w = rng.normal(0, 1, 4)
    plain = lr_loss_grad(LRModel(w, 0.3, 0.0), X, y)[0]
    reg = lr_loss_grad(LRModel(w, 0.3, 0.05), X, y)[0]
    assert reg - plain == pytest.approx(0.025 * float(w @ w), rel=1e-10)


def test_gradient_matches_finite_differences(rng):
    for _ in range(60):
        d = int(rng.integers(1, 21))
        n = int(rng.integers(1, 51))
        X = rng.normal(0, 1, (n, d))
        y = rng.integers(0, 2, n)
        model = LRModel(rng.normal(0, 1, d), float(rng.normal()), float(rng.uniform(0, 0.5)))
        _, gw, gb = lr_loss_grad(model, X, y)
        analytic = np.append(gw, gb)
        numeric = fd_gradient(model, X, y)
        assert np.linalg.norm(numeric - analytic) <= 1e-4 * max(np.linalg.norm(analytic), 1e-8)


def test_loss_grad_shape_errors():
    with pytest.raises(ShapeError):
        lr_loss_grad(LRModel(np.zeros(3)), np.zeros((4, 2)), np.zeros(4))
    with pytest.raises(ShapeError):
        lr_loss_grad(LRModel(np.zeros(2)), np.zeros((4, 2)), np.zeros(3))


def test_train_separable_toy(rng):
    X, y = separable(rng)
    model = train_lr(X, y, TrainConfig(learning_rate=0.05, epochs=2000, lam=0.0))
    acc = np.mean((predict_scores(model, X) > 0.5) == (y == 1))
    assert acc == 1.0


def test_one_epoch_is_one_gradient_step(rng):
    X = rng.normal(0, 1, (30, 5)) * 3 + 1
    y = rng.integers(0, 2, 30).astype(float)
    cfg = TrainConfig(learning_rate=0.1, epochs=1, lam=1e-3)
    model = train_lr(X, y, cfg)
    mu, sigma = standardization(X)
    zero = LRModel(np.zeros(5), 0.0, 1e-3, mu, sigma)
    _, gw, gb = lr_loss_grad(zero, zero.standardize(X), y)
    np.testing.assert_array_equal(model.w, -0.1 * gw)
    assert model.b == -0.1 * gb
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)


def test_training_deterministic(rng):
    X, y = separable(rng)
    for cfg in (TrainConfig(epochs=50), TrainConfig(epochs=20, batch_size=8, seed=4)):
        a, b = train_lr(X, y, cfg), train_lr(X, y, cfg)
        assert a.w.tobytes() == b.w.tobytes() and a.b == b.b


def test_single_class_rejected():
    with pytest.raises(ValueError, match="single class"):
        train_lr(np.ones((4, 2)), np.ones(4))


def test_loss_trace_non_increasing(rng):
    for _ in range(20):
        n, d = int(rng.integers(10, 80)), int(rng.integers(1, 60))
        X = rng.normal(0, 1, (n, d)) * rng.uniform(0.1, 10, d)
        y = np.zeros(n)
        y[: n // 2] = 1
        rng.shuffle(y)
        for lr in (0.01, 0.1):
            trace = np.array(train_lr(X, y, TrainConfig(learning_rate=lr, epochs=100)).loss_trace)
            assert np.all(np.diff(trace[1:]) <= 0)


def test_standardisation_statistics(rng):
    X = rng.normal(5, 3, (40, 6))
    X[:, 2] = 7.0  # constant column
    y = (X[:, 0] > 5).astype(float)
    model = train_lr(X, y, TrainConfig(epochs=1))
    Z = model.standardize(X)
    live = [0, 1, 3, 4, 5]
    np.testing.assert_allclose(Z[:, live].mean(axis=0), 0, atol=1e-6)
    np.testing.assert_allclose(Z[:, live].std(axis=0), 1, atol=1e-6)
    assert np.all(model.sigma >= 1e-8)


def test_predict_scores(rng):
    X, y = separable(rng)
    assert np.all(predict_scores(LRModel(np.zeros(2)), X) == 0.5)
    model = train_lr(X, y, TrainConfig(epochs=200))
    s = predict_scores(model, X)
    assert np.all((s > 0) & (s < 1))
    j = int(np.argmax(model.w))
    lo = X.mean(axis=0, keepdims=True)
    hi = lo.copy()
    hi[0, j] += 1.0
    assert predict_scores(model, hi)[0] > predict_scores(model, lo)[0]
    with pytest.raises(ShapeError):
        predict_scores(model, np.zeros((2, 3)))


def test_ranking_invariant_to_rescaling(rng):
    X, y = separable(rng, 60)
    cfg = TrainConfig(epochs=100)
    base = predict_scores(train_lr(X, y, cfg), X)
    scaled = X * np.array([1000.0, 0.01])
    other = predict_scores(train_lr(scaled, y, cfg), scaled)
    np.testing.assert_array_equal(np.argsort(base, kind="stable"), np.argsort(other, kind="stable"))


def test_one_vs_rest_binary_and_five_scale(rng):
    X = rng.normal(0, 1, (50, 4))
    binary = ["positive" if v > 0 else "negative" for v in X[:, 0]]
    ovr = train_one_vs_rest(X, binary, TrainConfig(epochs=20))
    assert ovr.labels == ["positive", "negative"]
    scale = [int(v) for v in np.clip(np.round(X[:, 1] * 1.5), -2, 2)]
    ovr5 = train_one_vs_rest(X, scale, TrainConfig(epochs=20))
    assert ovr5.labels == [-2, -1, 0, 1, 2]
    assert len(ovr5.predict(X)) == 50
    with pytest.raises(ValueError):
        train_one_vs_rest(X, [1] * 50)


def test_one_vs_rest_reports_missing_label(rng, caplog):
    X = rng.normal(0, 1, (20, 3))
    labels = [-1] * 10 + [1] * 10
    with caplog.at_level(logging.WARNING):
        ovr = train_one_vs_rest(X, labels, TrainConfig(epochs=5), label_order=[-2, -1, 1])
    assert ovr.skipped == [-2] and ovr.labels == [-1, 1]
    assert "-2" in caplog.text


def test_model_file_round_trip(tmp_path, rng):
    X = rng.normal(0, 1, (30, 3))
    labels = ["positive"] * 15 + ["negative"] * 15
    ovr = train_one_vs_rest(X, labels, TrainConfig(epochs=30))
    save_model(tmp_path / "m.bin", ovr)
    back = load_model(tmp_path / "m.bin")
    assert isinstance(back, OneVsRestModel) and back.labels == ovr.labels
    for label in ovr.labels:
        np.testing.assert_allclose(predict_scores(back.models[label], X), predict_scores(ovr.models[label], X),
                                   rtol=1e-5)
    single = ovr.models["positive"]
    save_model(tmp_path / "s.bin", single)
    assert isinstance(load_model(tmp_path / "s.bin"), LRModel)


def test_loss_finite_and_exact_when_saturated():
    X = np.array([[50.0], [-50.0], [800.0]])
    y = np.array([0.0, 1.0, 1.0])
    loss, gw, gb = lr_loss_grad(LRModel(np.ones(1)), X, y)
    assert loss == pytest.approx(100 / 3, rel=1e-12)
    assert np.isfinite(gw).all() and np.isfinite(gb)
