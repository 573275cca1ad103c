"""Single-hidden-layer perceptron with an analytic error Jacobian.

The network maps d inputs through ``n_hidden`` tanh units to one linear
output.  Weights live in one flat vector so the second-order trainer can
treat the whole network as a point in R^p:

    [ W (n_hidden x d, row-major) | hidden biases | output weights | output bias ]
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .lm import LmConfig, lm_train, trace_rows
from .validation import as_float_matrix, as_float_vector, check_fitted, check_same_length


@dataclass(frozen=True)
class MlpNetwork:
    n_inputs: int
    n_hidden: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "weights", w)
        if w.size != self.n_weights:
            raise ValueError(
                f"expected {self.n_weights} weights for "
                f"{self.n_inputs} inputs x {self.n_hidden} hidden units, got {w.size}"
            )

    @property
    def n_weights(self) -> int:
        # hidden weights + hidden biases + output weights + output bias
        return self.n_hidden * (self.n_inputs + 2) + 1

    @classmethod
    def random(cls, n_inputs: int, n_hidden: int, rng, scale: float = 0.5) -> "MlpNetwork":
        if n_inputs < 1 or n_hidden < 1:
            raise ValueError("n_inputs and n_hidden must be >= 1")
        p = n_hidden * (n_inputs + 2) + 1
        return cls(n_inputs=n_inputs, n_hidden=n_hidden, weights=rng.uniform(-scale, scale, size=p))

    def _unpack(self):
        h, d = self.n_hidden, self.n_inputs
        w = self.weights
        W = w[: h * d].reshape(h, d)
        bh = w[h * d : h * d + h]
        v = w[h * d + h : h * d + 2 * h]
        bo = w[-1]
        return W, bh, v, bo

    def hidden_activations(self, X: np.ndarray) -> np.ndarray:
        W, bh, _, _ = self._unpack()
        return np.tanh(X @ W.T + bh)

    def forward(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        _, _, v, bo = self._unpack()
        return self.hidden_activations(X) @ v + bo

    def errors(self, X, t) -> np.ndarray:
        return self.forward(X) - np.asarray(t, dtype=float).ravel()

    def error_jacobian(self, X, t=None) -> np.ndarray:
        """p x n matrix of d e_j / d w_i.

        The targets do not enter: e_j = y_j - t_j and t_j is constant.
        """
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        h, d = self.n_hidden, self.n_inputs
        _, _, v, _ = self._unpack()
        A = self.hidden_activations(X)          # n x h
        D = (1.0 - A**2) * v                    # n x h, per-sample hidden deltas
        J_W = np.einsum("nk,ni->kin", D, X).reshape(h * d, n)
        J = np.empty((self.n_weights, n))
        J[: h * d] = J_W
        J[h * d : h * d + h] = D.T
        J[h * d + h : h * d + 2 * h] = A.T
        J[-1] = 1.0
        return J

    def with_weights(self, weights) -> "MlpNetwork":
        return replace(self, weights=np.asarray(weights, dtype=float))

    def to_dict(self) -> dict:
        return {
            "n_inputs": self.n_inputs,
            "n_hidden": self.n_hidden,
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpNetwork":
        return cls(
            n_inputs=int(payload["n_inputs"]),
            n_hidden=int(payload["n_hidden"]),
            weights=np.asarray(payload["weights"], dtype=float),
        )


class MlpRegressor(BaseEstimator, RegressorMixin):
    """Feed-forward regressor trained by damped second-order descent.

    Parameters
    ----------
    n_hidden : int, default 26
        Width of the tanh hidden layer.
    max_epochs : int, default 50
        Upper bound on accepted weight updates.
    epsilon_init : float, default 1e-3
        Starting damping value.
    target_error : float, default 0.0
        Stop once the summed squared error falls to this level.
    init_scale : float, default 0.5
        Half-width of the uniform weight initialisation.
    random_state : int, default 0
    """

    def __init__(
        self,
        n_hidden: int = 26,
        max_epochs: int = 50,
        epsilon_init: float = 1e-3,
        target_error: float = 0.0,
        init_scale: float = 0.5,
        random_state: int = 0,
    ):
        self.n_hidden = n_hidden
        self.max_epochs = max_epochs
        self.epsilon_init = epsilon_init
        self.target_error = target_error
        self.init_scale = init_scale
        self.random_state = random_state

    def fit(self, X, t):
        X = as_float_matrix(X)
        t = as_float_vector(t)
        check_same_length(X, t)
        rng = np.random.default_rng(self.random_state)
        net = MlpNetwork.random(X.shape[1], self.n_hidden, rng, scale=self.init_scale)
        cfg = LmConfig(
            epsilon_init=self.epsilon_init,
            max_epochs=self.max_epochs,
            target_error=self.target_error,
        )
        result = lm_train(net, X, t, cfg)
        self.network_ = result.model
        self.psi_ = result.psi
        self.stop_reason_ = result.stop_reason
        self.trace_ = trace_rows(result)
        return self

    def predict(self, X):
        check_fitted(self, "network_")
        X = as_float_matrix(X)
        if X.shape[1] != self.network_.n_inputs:
            raise ValueError(
                f"X has {X.shape[1]} features, network expects {self.network_.n_inputs}"
            )
        return self.network_.forward(X)
