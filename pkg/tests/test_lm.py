import numpy as np
import pytest

from indexcast.linalg import lsq_solve
from indexcast.lm import LmConfig, lm_step, lm_train, trace_rows
from indexcast.mlp import MlpNetwork


class LinearModel:
    """Minimal train-protocol model: y = X @ w, e = t - y, J = -X.T (constant)."""

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)

    def errors(self, X, t):
        return t - X @ self.weights

    def error_jacobian(self, X, t=None):
        return -np.asarray(X, dtype=float).T

    def with_weights(self, weights):
        return LinearModel(weights)


def test_lm_step_scalar_hand_oracle():
    # one weight, J = [[j1, j2]], e = (e1, e2):
    # candidate = w - (j1*e1 + j2*e2) / (j1^2 + j2^2 + eps)
    model = LinearModel([2.0])
    J = np.array([[3.0, -1.0]])
    e = np.array([0.5, 2.0])
    eps = 0.25
    got = lm_step(model, J, e, eps)
    expected = 2.0 - (3.0 * 0.5 - 1.0 * 2.0) / (9.0 + 1.0 + 0.25)
    assert got[0] == pytest.approx(expected, rel=1e-14)


def test_lm_step_matches_explicit_inverse():
    rng = np.random.default_rng(0)
    model = LinearModel(rng.normal(size=4))
    J = rng.normal(size=(4, 12))
    e = rng.normal(size=12)
    eps = 0.7
    got = lm_step(model, J, e, eps)
    expected = model.weights - np.linalg.inv(J @ J.T + eps * np.eye(4)) @ (J @ e)
    assert np.allclose(got, expected, atol=1e-12)


def test_lm_step_zero_damping_singular_falls_back():
    # rank-1 J makes JJ^T singular; with eps=0 the step must still be finite
    model = LinearModel([0.0, 0.0])
    J = np.array([[1.0, 2.0], [2.0, 4.0]])
    e = np.array([1.0, -1.0])
    got = lm_step(model, J, e, 0.0)
    assert np.all(np.isfinite(got))
    expected = model.weights - np.linalg.pinv(J @ J.T) @ (J @ e)
    assert np.allclose(got, expected, atol=1e-10)


def test_lm_step_rejects_negative_damping():
    with pytest.raises(ValueError):
        lm_step(LinearModel([1.0]), np.ones((1, 2)), np.ones(2), -1.0)


def test_lm_step_huge_damping_is_gradient_direction():
    # start from zero weights so the returned candidate IS the step; adding a
    # large w and subtracting it back would swamp the tiny step in rounding
    rng = np.random.default_rng(1)
    model = LinearModel(np.zeros(5))
    J = rng.normal(size=(5, 20))
    e = rng.normal(size=20)
    step = lm_step(model, J, e, 1e12)
    g = J @ e
    ghat = -g / np.linalg.norm(g)
    par = float(step @ ghat)
    perp = np.linalg.norm(step - par * ghat)
    assert par > 0
    assert np.arctan2(perp, par) < 1e-6


def test_lm_train_solves_linear_least_squares():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    t = X @ np.array([1.0, -2.0, 0.5]) + 0.05 * rng.normal(size=40)
    w_star = lsq_solve(X, t).x
    res = lm_train(LinearModel(np.zeros(3)), X, t, LmConfig(max_epochs=3))
    assert np.max(np.abs(res.model.weights - w_star)) < 1e-6


def test_lm_train_accepted_psi_strictly_decreases():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(30, 2))
    t = np.sin(2 * X[:, 0]) * X[:, 1]
    net = MlpNetwork.random(2, 4, rng)
    res = lm_train(net, X, t, LmConfig(max_epochs=15))
    acc = res.accepted_psis
    assert len(acc) >= 2
    assert all(b < a for a, b in zip(acc, acc[1:]))


def test_lm_train_trace_damping_bookkeeping():
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, size=(25, 2))
    t = X[:, 0] ** 2
    net = MlpNetwork.random(2, 3, rng)
    res = lm_train(net, X, t, LmConfig(max_epochs=10))
    rows = trace_rows(res)
    assert rows and set(rows[0]) == {"epoch", "psi", "epsilon", "accepted"}
    # within an epoch, each rejection multiplies the damping by 10
    for a, b in zip(rows, rows[1:]):
        if a["epoch"] == b["epoch"]:
            assert b["epsilon"] == pytest.approx(10.0 * a["epsilon"], rel=1e-12)
    # an accepted proposal starts the next epoch at a tenth of the damping
    for a, b in zip(rows, rows[1:]):
        if a["accepted"] and b["epoch"] == a["epoch"] + 1:
            assert b["epsilon"] == pytest.approx(0.1 * a["epsilon"], rel=1e-12)


def test_lm_train_stops_at_target_error():
    X = np.array([[1.0], [2.0]])
    t = np.array([2.0, 4.0])
    res = lm_train(LinearModel([2.0]), X, t, LmConfig(target_error=1e-12))
    assert res.stop_reason == "target_error"
    assert res.psi <= 1e-12


def test_lm_train_reports_damping_overflow():
    # gradient is zero at a least-squares optimum of an inconsistent system,
    # so every proposal is rejected and the damping climbs past its cap
    X = np.array([[1.0], [1.0]])
    t = np.array([0.0, 1.0])  # optimum w=0.5, psi=0.5 > 0
    res = lm_train(LinearModel([0.5]), X, t, LmConfig(max_epochs=50))
    assert res.stop_reason == "epsilon_overflow"
    assert res.psi == pytest.approx(0.5)


def test_lm_train_rejects_non_finite_start():
    X = np.array([[1.0], [2.0]])
    t = np.array([1.0, 2.0])
    with pytest.raises(ValueError):
        lm_train(LinearModel([np.inf]), X, t)


def test_lm_config_validation():
    with pytest.raises(ValueError):
        LmConfig(epsilon_init=0.0)
    with pytest.raises(ValueError):
        LmConfig(epsilon_decrease=1.5)
    with pytest.raises(ValueError):
        LmConfig(epsilon_increase=0.5)
    with pytest.raises(ValueError):
        LmConfig(max_epochs=0)


def test_xor_is_learnable_across_seeds():
    """Classic nonlinear fixture: four points, small nets, several seeds."""
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    t = np.array([0.0, 1.0, 1.0, 0.0])
    for seed in range(5):
        net = MlpNetwork.random(2, 4, np.random.default_rng(seed))
        res = lm_train(net, X, t, LmConfig(max_epochs=200, target_error=1e-3))
        assert res.psi < 1e-3, f"seed {seed} stalled at psi={res.psi}"
