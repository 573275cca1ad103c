"""Kernel support-vector machines solved by sequential minimal optimisation.

One generic dual solver covers both tasks.  It minimises

    0.5 * alpha' (yy' * K) alpha + p' alpha
    subject to   y' alpha = 0,   0 <= alpha <= C

choosing the maximal-violating pair each iteration.  Classification uses
p = -1; epsilon-tube regression doubles the variables (one pair per sample)
and recovers the expansion coefficients as the difference.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin

from .linalg import psd_check
from .validation import as_float_matrix, as_float_vector, check_fitted, check_same_length

KERNEL_KINDS = ("linear", "poly", "rbf")
SUPPORT_COEF_MIN = 1e-8


@dataclass(frozen=True)
class Kernel:
    """Similarity function k(x, z) in one of three standard families."""

    kind: str = "rbf"
    degree: int = 3
    coef0: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "poly" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.kind == "rbf" and self.gamma <= 0:
            raise ValueError("rbf gamma must be positive")

    @classmethod
    def make(cls, kind: str, degree: int, coef0: float, gamma, n_features: int) -> "Kernel":
        if kind == "polynomial":
            kind = "poly"
        if gamma is None:
            gamma = 1.0 / n_features
        return cls(kind=kind, degree=degree, coef0=coef0, gamma=float(gamma))

    def matrix(self, X, Z) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        inner = X @ Z.T
        if self.kind == "linear":
            return inner
        if self.kind == "poly":
            return (inner + self.coef0) ** self.degree
        sq = (
            np.sum(X**2, axis=1)[:, None]
            - 2.0 * inner
            + np.sum(Z**2, axis=1)[None, :]
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def __call__(self, x, z) -> float:
        return float(self.matrix(np.atleast_2d(x), np.atleast_2d(z))[0, 0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "coef0": self.coef0, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, payload: dict) -> "Kernel":
        return cls(
            kind=payload["kind"],
            degree=int(payload["degree"]),
            coef0=float(payload["coef0"]),
            gamma=float(payload["gamma"]),
        )


def mercer_gram_check(X, kernel, tol: float = 1e-10) -> bool:
    """True iff the kernel's Gram matrix on ``X`` is positive semidefinite."""
    k = kernel.matrix if isinstance(kernel, Kernel) else kernel
    G = np.asarray(k(X, X), dtype=float)
    return psd_check(G, tol=tol)


def dual_objective(alpha, K, y, p) -> float:
    """Value of the quadratic dual objective at ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    y = np.asarray(y, dtype=float)
    v = y * (K @ (y * alpha))
    return float(0.5 * alpha @ v + np.asarray(p, dtype=float) @ alpha)


@dataclass
class SmoSolution:
    alpha: np.ndarray
    b: float
    gap: float
    n_updates: int
    converged: bool


def smo_solve(K, y, p, C: float, tol: float = 1e-4, max_updates=None) -> SmoSolution:
    """Maximal-violating-pair SMO for the generic box-constrained dual.

    ``max_updates`` caps the number of pair updates; the default is ten
    times the number of variables.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"K must be {n}x{n}, got {K.shape}")
    if p.size != n:
        raise ValueError("p length does not match y")
    if C <= 0:
        raise ValueError("C must be positive")
    if max_updates is None:
        max_updates = 10 * n

    alpha = np.zeros(n)
    grad = p.copy()  # grad = Q alpha + p, and alpha starts at zero
    score = np.empty(n)  # -y * grad, the violation measure

    n_updates = 0
    gap = np.inf
    converged = False
    while True:
        np.multiply(y, grad, out=score)
        np.negative(score, out=score)
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            gap = 0.0
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        gap = score[i] - score[j]
        if gap <= tol:
            converged = True
            break
        if n_updates >= max_updates:
            break

        # One-dimensional move alpha_i += y_i*step, alpha_j -= y_j*step.
        slope = y[i] * grad[i] - y[j] * grad[j]  # = -(gap), always negative here
        curv = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        step = -slope / curv
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = C - alpha[j] if y[j] < 0 else alpha[j]
        step = min(step, room_i, room_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        np.clip(alpha, 0.0, C, out=alpha)
        grad += step * y * (K[:, i] - K[:, j])
        n_updates += 1

    unbounded = (alpha > SUPPORT_COEF_MIN) & (alpha < C - SUPPORT_COEF_MIN)
    if unbounded.any():
        b = float(np.mean(score[unbounded]))
    else:
        m = np.max(score[up]) if up.any() else 0.0
        mm = np.min(score[low]) if low.any() else 0.0
        b = float((m + mm) / 2.0)
    return SmoSolution(alpha=alpha, b=b, gap=float(gap), n_updates=n_updates, converged=converged)


@dataclass
class SvmModel:
    """Kernel expansion f(x) = sum_i coef_i k(sv_i, x) + b."""

    kind: str  # "svc" or "svr"
    kernel: Kernel
    support_vectors: np.ndarray
    coef: np.ndarray
    b: float

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.b)
        return self.kernel.matrix(X, self.support_vectors) @ self.coef + self.b

    def predict(self, X) -> np.ndarray:
        f = self.decision_function(X)
        if self.kind == "svc":
            return np.where(f >= 0.0, 1.0, -1.0)
        return f

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "kernel": self.kernel.to_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "coef": self.coef.tolist(),
            "b": self.b,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SvmModel":
        return cls(
            kind=payload["kind"],
            kernel=Kernel.from_dict(payload["kernel"]),
            support_vectors=np.asarray(payload["support_vectors"], dtype=float),
            coef=np.asarray(payload["coef"], dtype=float),
            b=float(payload["b"]),
        )


def _prune(X, coef, kind, kernel, b) -> SvmModel:
    keep = np.abs(coef) > SUPPORT_COEF_MIN
    return SvmModel(
        kind=kind,
        kernel=kernel,
        support_vectors=np.asarray(X, dtype=float)[keep],
        coef=coef[keep],
        b=b,
    )


def svc_train(X, y, kernel: Kernel, C: float = 10.0, tol: float = 1e-4, max_updates=None):
    """Soft-margin classifier on labels in {-1, +1}."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("classification labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise ValueError("training data contains a single class")
    K = kernel.matrix(X, X)
    sol = smo_solve(K, y, np.full(y.size, -1.0), C, tol=tol, max_updates=max_updates)
    if not sol.converged:
        warnings.warn(f"dual not converged: violation gap {sol.gap:.3g} after {sol.n_updates} updates")
    model = _prune(X, sol.alpha * y, "svc", kernel, sol.b)
    return model, sol


def svr_train(
    X,
    t,
    kernel: Kernel,
    C: float = 10.0,
    epsilon_tube: float = 0.01,
    tol: float = 1e-4,
    max_updates=None,
):
    """Epsilon-insensitive regression via the doubled-variable dual."""
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float).ravel()
    if epsilon_tube < 0:
        raise ValueError("epsilon_tube must be >= 0")
    n = t.size
    K = kernel.matrix(X, X)
    K2 = np.tile(K, (2, 2))
    y2 = np.concatenate([np.ones(n), -np.ones(n)])
    p2 = epsilon_tube - y2 * np.concatenate([t, t])
    sol = smo_solve(K2, y2, p2, C, tol=tol, max_updates=max_updates)
    if not sol.converged:
        warnings.warn(f"dual not converged: violation gap {sol.gap:.3g} after {sol.n_updates} updates")
    beta = sol.alpha[:n] - sol.alpha[n:]
    model = _prune(X, beta, "svr", kernel, sol.b)
    return model, sol


class _KernelMixin:
    def _make_kernel(self, n_features: int) -> Kernel:
        return Kernel.make(self.kernel, self.degree, self.coef0, self.gamma, n_features)


class KernelSVC(_KernelMixin, BaseEstimator, ClassifierMixin):
    """Binary kernel classifier; labels must be -1/+1."""

    def __init__(self, C=10.0, kernel="rbf", degree=3, coef0=1.0, gamma=None, tol=1e-4, max_updates=None):
        self.C = C
        self.kernel = kernel
        self.degree = degree
        self.coef0 = coef0
        self.gamma = gamma
        self.tol = tol
        self.max_updates = max_updates

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_float_vector(y, name="y")
        check_same_length(X, y)
        kern = self._make_kernel(X.shape[1])
        self.model_, self.solution_ = svc_train(
            X, y, kern, C=self.C, tol=self.tol, max_updates=self.max_updates
        )
        self.classes_ = np.array([-1.0, 1.0])
        return self

    def decision_function(self, X):
        check_fitted(self, "model_")
        return self.model_.decision_function(as_float_matrix(X))

    def predict(self, X):
        check_fitted(self, "model_")
        return self.model_.predict(as_float_matrix(X))


class KernelSVR(_KernelMixin, BaseEstimator, RegressorMixin):
    """Epsilon-tube kernel regressor.

    Parameters mirror :class:`KernelSVC` plus the tube half-width
    ``epsilon_tube``.
    """

    def __init__(
        self,
        C=10.0,
        kernel="rbf",
        degree=3,
        coef0=1.0,
        gamma=None,
        epsilon_tube=0.01,
        tol=1e-4,
        max_updates=None,
    ):
        self.C = C
        self.kernel = kernel
        self.degree = degree
        self.coef0 = coef0
        self.gamma = gamma
        self.epsilon_tube = epsilon_tube
        self.tol = tol
        self.max_updates = max_updates

    def fit(self, X, t):
        X = as_float_matrix(X)
        t = as_float_vector(t)
        check_same_length(X, t)
        kern = self._make_kernel(X.shape[1])
        self.model_, self.solution_ = svr_train(
            X,
            t,
            kern,
            C=self.C,
            epsilon_tube=self.epsilon_tube,
            tol=self.tol,
            max_updates=self.max_updates,
        )
        return self

    def predict(self, X):
        check_fitted(self, "model_")
        return self.model_.predict(as_float_matrix(X))
