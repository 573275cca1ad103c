"""Boosted naive-Bayes classifier over discretized attributes, plus a
regression adapter.

The base model is a smoothed naive Bayes on equal-width bins.  Boosting
multiplies per-(class, attribute, bin) weights on each misclassified
example's true-class cells by (1 + learn_rate * gap), where gap is how far the
winning wrong class's posterior sits above the true one.  The same
classifier is updated in place throughout; the weight state with the lowest
training error count is kept.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin

from .validation import as_float_matrix, as_float_vector, check_fitted, check_same_length

SMOOTHING_M = 1.0  # total pseudo-count spread uniformly over a class's bins


@dataclass(frozen=True)
class AttributeBins:
    """Equal-width discretization of one attribute over its training range."""

    lo: float
    hi: float
    n_bins: int

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError(f"need at least 2 bins, got {self.n_bins}")

    @classmethod
    def fit(cls, values, n_bins: int) -> "AttributeBins":
        v = np.asarray(values, dtype=float)
        lo, hi = float(v.min()), float(v.max())
        if hi <= lo:
            warnings.warn(f"constant attribute (value {lo}); all mass falls in one degenerate bin")
        return cls(lo=lo, hi=hi, n_bins=n_bins)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_bins + 1)

    @property
    def cuts(self) -> np.ndarray:
        return self.edges[1:-1]

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    def centers(self) -> np.ndarray:
        e = self.edges
        return (e[:-1] + e[1:]) / 2.0

    def index(self, values) -> np.ndarray:
        """Bin index per value; out-of-range values clamp to the edge bins."""
        v = np.asarray(values, dtype=float)
        return np.searchsorted(self.cuts, v, side="right")

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n_bins": self.n_bins}

    @classmethod
    def from_dict(cls, payload: dict) -> "AttributeBins":
        return cls(lo=float(payload["lo"]), hi=float(payload["hi"]), n_bins=int(payload["n_bins"]))


def count_tables(B: np.ndarray, y_idx: np.ndarray, n_classes: int, n_bins: int):
    """Priors and smoothed likelihoods from binned training data.

    Likelihoods get a uniform pseudo-count of ``SMOOTHING_M / n_bins`` per
    cell so every (class, attribute) row sums to one and no cell is zero.
    """
    n, d = B.shape
    class_counts = np.bincount(y_idx, minlength=n_classes).astype(float)
    priors = class_counts / n
    counts = np.zeros((n_classes, d, n_bins))
    for f in range(d):
        np.add.at(counts[:, f, :], (y_idx, B[:, f]), 1.0)
    likelihoods = (counts + SMOOTHING_M / n_bins) / (class_counts[:, None, None] + SMOOTHING_M)
    return priors, likelihoods


def posteriors(priors, likelihoods, weights, B) -> np.ndarray:
    """Normalized class posteriors for binned rows ``B`` (n x d)."""
    B = np.asarray(B, dtype=int)
    n, d = B.shape
    score = np.tile(priors, (n, 1))
    cell = likelihoods * weights
    for f in range(d):
        score *= cell[:, f, :][:, B[:, f]].T
    return score / score.sum(axis=1, keepdims=True)


def boost_weights(priors, likelihoods, B, y_idx, rounds: int, learn_rate: float):
    """Run boosting rounds and keep the best weight state seen.

    Returns ``(weights, error_history)`` where ``error_history[0]`` is the
    round-0 (plain smoothed Bayes) training error count and each later entry
    is the count after one more full pass.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if learn_rate <= 0:
        raise ValueError("learn_rate must be positive")
    n, d = B.shape
    weights = np.ones_like(likelihoods)

    def error_count(w):
        pred = np.argmax(posteriors(priors, likelihoods, w, B), axis=1)
        return int(np.sum(pred != y_idx))

    best_errors = error_count(weights)
    best_weights = weights.copy()
    history = [best_errors]
    if best_errors == 0:
        return best_weights, history

    for _ in range(rounds):
        pass_errors = 0
        for j in range(n):
            post = posteriors(priors, likelihoods, weights, B[j : j + 1])[0]
            pred = int(np.argmax(post))
            true = int(y_idx[j])
            if pred != true:
                pass_errors += 1
                gap = post[pred] - post[true]
                weights[true, np.arange(d), B[j]] *= 1.0 + learn_rate * gap
        errors_now = error_count(weights)
        history.append(errors_now)
        if errors_now < best_errors:
            best_errors = errors_now
            best_weights = weights.copy()
        if pass_errors == 0 or best_errors == 0:
            break
    return best_weights, history


class DbnnClassifier(BaseEstimator, ClassifierMixin):
    """Naive Bayes on equal-width bins with difference boosting.

    Parameters
    ----------
    n_bins : int, default 16
        Bins per attribute.
    rounds : int, default 50
        Maximum boosting passes over the training set.
    learn_rate : float, default 0.5
        Scale of the multiplicative weight correction.
    """

    def __init__(self, n_bins: int = 16, rounds: int = 50, learn_rate: float = 0.5):
        self.n_bins = n_bins
        self.rounds = rounds
        self.learn_rate = learn_rate

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = np.asarray(y).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("training data contains a single class")
        self.bins_ = [AttributeBins.fit(X[:, f], self.n_bins) for f in range(X.shape[1])]
        B = self._binned(X)
        self.priors_, self.likelihoods_ = count_tables(B, y_idx, self.classes_.size, self.n_bins)
        self.weights_, self.error_history_ = boost_weights(
            self.priors_, self.likelihoods_, B, y_idx, self.rounds, self.learn_rate
        )
        return self

    def _binned(self, X) -> np.ndarray:
        if X.shape[1] != len(self.bins_):
            raise ValueError(f"X has {X.shape[1]} columns, model expects {len(self.bins_)}")
        return np.column_stack([bins.index(X[:, f]) for f, bins in enumerate(self.bins_)])

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "weights_")
        X = as_float_matrix(X)
        return posteriors(self.priors_, self.likelihoods_, self.weights_, self._binned(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class DbnnRegressor(BaseEstimator, RegressorMixin):
    """Regression by classifying into target bins and decoding the mean.

    The continuous target is cut into ``n_target_bins`` equal-width classes
    over the training range; prediction is the posterior-weighted mean of
    the populated bins' centers.
    """

    def __init__(
        self,
        n_bins: int = 16,
        n_target_bins: int = 32,
        rounds: int = 50,
        learn_rate: float = 0.5,
    ):
        self.n_bins = n_bins
        self.n_target_bins = n_target_bins
        self.rounds = rounds
        self.learn_rate = learn_rate

    def fit(self, X, t):
        X = as_float_matrix(X)
        t = as_float_vector(t)
        check_same_length(X, t)
        self.target_bins_ = AttributeBins.fit(t, self.n_target_bins)
        labels = self.target_bins_.index(t)
        populated = np.unique(labels)
        if populated.size < 2:
            # degenerate target: a lone populated bin decides every prediction
            self.constant_ = float(self.target_bins_.centers()[populated[0]])
            self.classifier_ = None
            return self
        self.constant_ = None
        self.classifier_ = DbnnClassifier(
            n_bins=self.n_bins, rounds=self.rounds, learn_rate=self.learn_rate
        ).fit(X, labels)
        self.class_centers_ = self.target_bins_.centers()[self.classifier_.classes_]
        return self

    def predict(self, X):
        check_fitted(self, "target_bins_")
        X = as_float_matrix(X)
        if self.classifier_ is None:
            return np.full(X.shape[0], self.constant_)
        return self.classifier_.predict_proba(X) @ self.class_centers_

    def to_dict(self) -> dict:
        check_fitted(self, "target_bins_")
        payload = {
            "n_bins": self.n_bins,
            "n_target_bins": self.n_target_bins,
            "rounds": self.rounds,
            "learn_rate": self.learn_rate,
            "target_bins": self.target_bins_.to_dict(),
            "constant": self.constant_,
        }
        if self.classifier_ is not None:
            c = self.classifier_
            payload["classifier"] = {
                "classes": c.classes_.tolist(),
                "bins": [b.to_dict() for b in c.bins_],
                "priors": c.priors_.tolist(),
                "likelihoods": c.likelihoods_.tolist(),
                "weights": c.weights_.tolist(),
                "error_history": c.error_history_,
            }
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "DbnnRegressor":
        est = cls(
            n_bins=int(payload["n_bins"]),
            n_target_bins=int(payload["n_target_bins"]),
            rounds=int(payload["rounds"]),
            learn_rate=float(payload["learn_rate"]),
        )
        est.target_bins_ = AttributeBins.from_dict(payload["target_bins"])
        est.constant_ = payload["constant"]
        if "classifier" in payload:
            cp = payload["classifier"]
            clf = DbnnClassifier(n_bins=est.n_bins, rounds=est.rounds, learn_rate=est.learn_rate)
            clf.classes_ = np.asarray(cp["classes"])
            clf.bins_ = [AttributeBins.from_dict(b) for b in cp["bins"]]
            clf.priors_ = np.asarray(cp["priors"], dtype=float)
            clf.likelihoods_ = np.asarray(cp["likelihoods"], dtype=float)
            clf.weights_ = np.asarray(cp["weights"], dtype=float)
            clf.error_history_ = list(cp["error_history"])
            est.classifier_ = clf
            est.class_centers_ = est.target_bins_.centers()[clf.classes_]
        else:
            est.classifier_ = None
        return est
