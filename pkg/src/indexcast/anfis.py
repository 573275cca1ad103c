"""Takagi-Sugeno fuzzy inference with hybrid learning.

Rule premises are grids of membership functions over each input; rule
consequents are per-rule affine functions.  Firing strengths use the
product T-norm and are floored at a tiny constant before normalisation so
the output stays defined outside the fitted input range.  Learning splits
the parameters: consequents are identified by (batch or sequential) least
squares, premises move by gradient descent on the squared-error sum.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .linalg import RlsState, lsq_solve, rls_init, rls_update
from .validation import as_float_matrix, as_float_vector, check_fitted, check_same_length

STRENGTH_FLOOR = 1e-12
MIN_SIGMA = 1e-9
MIN_SPAN = 1e-9


@dataclass(frozen=True)
class GaussianMF:
    """Bell curve exp(-((x-center)/sigma)^2 / 2)."""

    center: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.center, self.sigma])

    def with_params(self, p) -> "GaussianMF":
        return GaussianMF(center=float(p[0]), sigma=float(p[1]))

    def project(self) -> "GaussianMF":
        if self.sigma >= MIN_SIGMA:
            return self
        return GaussianMF(center=self.center, sigma=MIN_SIGMA)

    @staticmethod
    def repair_params(p) -> np.ndarray:
        """Numerically repair a raw parameter triple before construction."""
        return np.array([float(p[0]), max(float(p[1]), MIN_SIGMA)])

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = (x - self.center) / self.sigma
        return np.exp(-0.5 * z * z)

    def value_and_param_grads(self, x):
        x = np.asarray(x, dtype=float)
        mu = self.value(x)
        diff = x - self.center
        d_center = mu * diff / self.sigma**2
        d_sigma = mu * diff**2 / self.sigma**3
        return mu, np.vstack([d_center, d_sigma])

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "center": self.center, "sigma": self.sigma}


@dataclass(frozen=True)
class TriangularMF:
    """Piecewise-linear bump: 0 at the feet, 1 at the peak."""

    left: float
    peak: float
    right: float

    def __post_init__(self):
        if not (self.left <= self.peak <= self.right):
            raise ValueError(f"need left <= peak <= right, got {(self.left, self.peak, self.right)}")
        if self.left >= self.right:
            raise ValueError("triangle has zero width")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.left, self.peak, self.right])

    def with_params(self, p) -> "TriangularMF":
        return TriangularMF(left=float(p[0]), peak=float(p[1]), right=float(p[2]))

    def project(self) -> "TriangularMF":
        lo, mid, hi = self.repair_params(self.params)
        return TriangularMF(left=float(lo), peak=float(mid), right=float(hi))

    @staticmethod
    def repair_params(p) -> np.ndarray:
        """Sort a raw foot/peak/foot triple and enforce a minimum width."""
        lo, mid, hi = np.sort(np.asarray(p, dtype=float))
        if hi - lo < MIN_SPAN:
            lo, hi = mid - MIN_SPAN / 2, mid + MIN_SPAN / 2
        return np.array([lo, mid, hi])

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, mid, hi = self.left, self.peak, self.right
        out = np.zeros_like(x)
        if mid > lo:
            rising = (x > lo) & (x < mid)
            out[rising] = (x[rising] - lo) / (mid - lo)
        if hi > mid:
            falling = (x > mid) & (x < hi)
            out[falling] = (hi - x[falling]) / (hi - mid)
        out[x == mid] = 1.0
        return out

    def value_and_param_grads(self, x):
        x = np.asarray(x, dtype=float)
        lo, mid, hi = self.left, self.peak, self.right
        mu = self.value(x)
        G = np.zeros((3, x.shape[0]))
        if mid > lo:
            m = (x > lo) & (x < mid)
            G[0, m] = (x[m] - mid) / (mid - lo) ** 2
            G[1, m] = -(x[m] - lo) / (mid - lo) ** 2
        if hi > mid:
            m = (x > mid) & (x < hi)
            G[1, m] = (hi - x[m]) / (hi - mid) ** 2
            G[2, m] = (x[m] - mid) / (hi - mid) ** 2
        return mu, G

    def to_dict(self) -> dict:
        return {"kind": "triangular", "left": self.left, "peak": self.peak, "right": self.right}


def mf_from_dict(payload: dict):
    kind = payload["kind"]
    if kind == "gaussian":
        return GaussianMF(center=float(payload["center"]), sigma=float(payload["sigma"]))
    if kind == "triangular":
        return TriangularMF(
            left=float(payload["left"]), peak=float(payload["peak"]), right=float(payload["right"])
        )
    raise ValueError(f"unknown membership kind {kind!r}")


@dataclass(frozen=True)
class AnfisModel:
    """Premise grid + rule table + consequent matrix.

    ``mfs[k]`` lists the membership functions on input k; ``rules`` is an
    R x d integer table of membership indices; ``consequents`` is R x (d+1)
    with the affine offset in the last column.
    """

    mfs: tuple
    rules: np.ndarray
    consequents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mfs", tuple(tuple(dim) for dim in self.mfs))
        object.__setattr__(self, "rules", np.asarray(self.rules, dtype=int))
        object.__setattr__(self, "consequents", np.asarray(self.consequents, dtype=float))
        d = len(self.mfs)
        if self.rules.ndim != 2 or self.rules.shape[1] != d:
            raise ValueError(f"rules must be R x {d}, got {self.rules.shape}")
        for k in range(d):
            if self.rules[:, k].min() < 0 or self.rules[:, k].max() >= len(self.mfs[k]):
                raise ValueError(f"rule refers to a missing membership function on input {k}")
        if self.consequents.shape != (self.rules.shape[0], d + 1):
            raise ValueError(
                f"consequents must be {self.rules.shape[0]} x {d + 1}, got {self.consequents.shape}"
            )

    @property
    def n_inputs(self) -> int:
        return len(self.mfs)

    @property
    def n_rules(self) -> int:
        return self.rules.shape[0]

    @property
    def n_consequent_params(self) -> int:
        return self.n_rules * (self.n_inputs + 1)

    def _check_X(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"X has {X.shape[1]} columns, model expects {self.n_inputs}")
        return X

    def memberships(self, X):
        X = self._check_X(X)
        return [
            np.stack([mf.value(X[:, k]) for mf in self.mfs[k]], axis=1)
            for k in range(self.n_inputs)
        ]

    def strengths(self, X):
        """Raw rule strengths and their floored, normalized form."""
        X = self._check_X(X)
        mu = self.memberships(X)
        w = np.ones((X.shape[0], self.n_rules))
        for k in range(self.n_inputs):
            w *= mu[k][:, self.rules[:, k]]
        floored = np.maximum(w, STRENGTH_FLOOR)
        return w, floored / floored.sum(axis=1, keepdims=True)

    def design_matrix(self, X) -> np.ndarray:
        """Row per sample: rule-major blocks of w_norm * (x, 1)."""
        X = self._check_X(X)
        _, wbar = self.strengths(X)
        Xb = np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
        return (wbar[:, :, None] * Xb[:, None, :]).reshape(X.shape[0], -1)

    def design_row(self, x) -> np.ndarray:
        return self.design_matrix(np.atleast_2d(np.asarray(x, dtype=float)))[0]

    def forward(self, X) -> np.ndarray:
        X = self._check_X(X)
        _, wbar = self.strengths(X)
        node = X @ self.consequents[:, :-1].T + self.consequents[:, -1]
        return np.sum(wbar * node, axis=1)

    # --- premise parameter plumbing -------------------------------------

    def premise_params(self) -> np.ndarray:
        return np.concatenate([mf.params for dim in self.mfs for mf in dim])

    def with_premise_params(self, theta) -> "AnfisModel":
        theta = np.asarray(theta, dtype=float).ravel()
        new_mfs = []
        pos = 0
        for dim in self.mfs:
            new_dim = []
            for mf in dim:
                q = mf.params.size
                new_dim.append(mf.with_params(theta[pos : pos + q]))
                pos += q
            new_mfs.append(new_dim)
        if pos != theta.size:
            raise ValueError(f"expected {pos} premise parameters, got {theta.size}")
        return replace(self, mfs=tuple(tuple(d) for d in new_mfs))

    def project_premises(self) -> "AnfisModel":
        return replace(
            self, mfs=tuple(tuple(mf.project() for mf in dim) for dim in self.mfs)
        )

    def project_premise_vector(self, theta) -> np.ndarray:
        """Repair a raw premise vector so every block builds a valid function.

        A gradient step can disorder a triangle or push a width negative;
        the repaired vector is what the step actually lands on.
        """
        theta = np.asarray(theta, dtype=float).ravel()
        out = np.empty_like(theta)
        pos = 0
        for dim in self.mfs:
            for mf in dim:
                q = mf.params.size
                out[pos : pos + q] = type(mf).repair_params(theta[pos : pos + q])
                pos += q
        if pos != theta.size:
            raise ValueError(f"expected {pos} premise parameters, got {theta.size}")
        return out

    def to_dict(self) -> dict:
        return {
            "mfs": [[mf.to_dict() for mf in dim] for dim in self.mfs],
            "rules": self.rules.tolist(),
            "consequents": self.consequents.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AnfisModel":
        return cls(
            mfs=tuple(tuple(mf_from_dict(m) for m in dim) for dim in payload["mfs"]),
            rules=np.asarray(payload["rules"], dtype=int),
            consequents=np.asarray(payload["consequents"], dtype=float),
        )


def build_grid_rules(input_ranges, mfs_per_input: int = 3, kind: str = "triangular") -> AnfisModel:
    """Full grid of rules over evenly spaced membership functions.

    Peaks sit on a uniform grid across each input range; triangular feet
    reach the neighbouring peaks (the outermost feet extend one spacing
    beyond the range) and gaussian widths are half the spacing.  Consequents
    start at zero.
    """
    if mfs_per_input < 1:
        raise ValueError("mfs_per_input must be >= 1")
    if kind not in ("triangular", "gaussian"):
        raise ValueError(f"unknown membership kind {kind!r}")
    mfs = []
    for k, (lo, hi) in enumerate(input_ranges):
        lo, hi = float(lo), float(hi)
        if not hi > lo:
            raise ValueError(f"input {k} has a degenerate range [{lo}, {hi}]")
        if mfs_per_input == 1:
            peaks = np.array([(lo + hi) / 2.0])
            spacing = hi - lo
        else:
            peaks = np.linspace(lo, hi, mfs_per_input)
            spacing = (hi - lo) / (mfs_per_input - 1)
        if kind == "triangular":
            mfs.append([TriangularMF(p - spacing, p, p + spacing) for p in peaks])
        else:
            mfs.append([GaussianMF(p, spacing / 2.0) for p in peaks])
    d = len(mfs)
    rules = np.array(list(itertools.product(*(range(mfs_per_input) for _ in range(d)))), dtype=int)
    consequents = np.zeros((rules.shape[0], d + 1))
    return AnfisModel(mfs=tuple(tuple(m) for m in mfs), rules=rules, consequents=consequents)


def consequent_lse(model: AnfisModel, X, t, mode: str = "batch", gamma: float = 1e8) -> AnfisModel:
    """Globally optimal consequents for fixed premises.

    ``mode="batch"`` solves the stacked system at once; ``mode="sequential"``
    folds the rows through the recursive update with unit forgetting and
    agrees with batch up to recursion round-off.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = np.asarray(t, dtype=float).ravel()
    if X.shape[0] != t.size:
        raise ValueError(f"X has {X.shape[0]} rows but t has {t.size} values")
    M = model.n_consequent_params
    if M > t.size:
        warnings.warn(f"underdetermined consequent fit ({M} params, {t.size} samples); minimum-norm solution")
    if mode == "batch":
        theta = lsq_solve(model.design_matrix(X), t).x
    elif mode == "sequential":
        state = rls_init(M, gamma)
        for i in range(t.size):
            state = rls_update(state, model.design_row(X[i]), t[i], 1.0)
        theta = state.x
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'batch' or 'sequential'")
    return replace(model, consequents=theta.reshape(model.n_rules, model.n_inputs + 1))


def premise_gradient(model: AnfisModel, X, t) -> np.ndarray:
    """Exact gradient of E = sum((output - t)^2) over all premise parameters.

    Flattened in the same order as ``premise_params``: inputs outer, member
    functions inner, each function's own parameters innermost.  Strengths
    sitting on the floor contribute nothing (the floor is locally constant).
    """
    X = model._check_X(X)
    t = np.asarray(t, dtype=float).ravel()
    mu = model.memberships(X)
    sel = [mu[k][:, model.rules[:, k]] for k in range(model.n_inputs)]
    w_raw = np.ones((X.shape[0], model.n_rules))
    for s in sel:
        w_raw *= s
    w = np.maximum(w_raw, STRENGTH_FLOOR)
    total = w.sum(axis=1, keepdims=True)
    wbar = w / total
    node = X @ model.consequents[:, :-1].T + model.consequents[:, -1]
    y = np.sum(wbar * node, axis=1)
    e = y - t

    # dE/dw_r = 2 e * (node_r - y) / total, gated where the floor is inactive
    base = (2.0 * e)[:, None] * (node - y[:, None]) / total
    base = np.where(w_raw > STRENGTH_FLOOR, base, 0.0)

    pieces = []
    for k in range(model.n_inputs):
        prod_excl = np.ones_like(w_raw)
        for k2 in range(model.n_inputs):
            if k2 != k:
                prod_excl *= sel[k2]
        coeff = base * prod_excl
        for m, mf in enumerate(model.mfs[k]):
            uses = model.rules[:, k] == m
            per_sample = coeff[:, uses].sum(axis=1)
            _, G = mf.value_and_param_grads(X[:, k])
            pieces.append(G @ per_sample)
    return np.concatenate(pieces)


def hybrid_epoch(model: AnfisModel, X, t, eta: float = 0.01):
    """One forward/backward pass: batch consequent fit, then premise step.

    Returns the updated model and the squared-error sum measured right
    after the consequent fit (before premises move).
    """
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    t = np.asarray(t, dtype=float).ravel()
    model = consequent_lse(model, X, t, mode="batch")
    e = model.forward(X) - t
    E = float(e @ e)
    if not np.isfinite(E):
        raise ValueError("epoch error is non-finite")
    if eta > 0:
        theta = model.premise_params() - eta * premise_gradient(model, X, t)
        model = model.with_premise_params(model.project_premise_vector(theta))
    return model, E


@dataclass(frozen=True)
class AnfisOnlineState:
    """Consequent-only online adaptation with a forgetting factor."""

    model: AnfisModel
    rls: RlsState
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {self.lam}")
        if self.rls.dim != self.model.n_consequent_params:
            raise ValueError(
                f"recursion dimension {self.rls.dim} does not match "
                f"{self.model.n_consequent_params} consequent parameters"
            )


def online_init(model: AnfisModel, gamma: float = 1e8, lam: float = 1.0) -> AnfisOnlineState:
    return AnfisOnlineState(model=model, rls=rls_init(model.n_consequent_params, gamma), lam=lam)


def online_update(state: AnfisOnlineState, x, t: float) -> AnfisOnlineState:
    """Fold one (x, t) pair into the consequents; premises stay fixed."""
    row = state.model.design_row(x)
    rls = rls_update(state.rls, row, float(t), state.lam)
    model = replace(
        state.model,
        consequents=rls.x.reshape(state.model.n_rules, state.model.n_inputs + 1),
    )
    return AnfisOnlineState(model=model, rls=rls, lam=state.lam)


class AnfisRegressor(BaseEstimator, RegressorMixin):
    """Grid fuzzy regressor trained by the hybrid epoch loop.

    Parameters
    ----------
    n_mfs : int, default 3
        Membership functions per input.
    mf_kind : {"triangular", "gaussian"}, default "triangular"
    epochs : int, default 12
    eta : float, default 0.01
        Premise gradient step size.
    """

    def __init__(self, n_mfs: int = 3, mf_kind: str = "triangular", epochs: int = 12, eta: float = 0.01):
        self.n_mfs = n_mfs
        self.mf_kind = mf_kind
        self.epochs = epochs
        self.eta = eta

    def fit(self, X, t):
        X = as_float_matrix(X)
        t = as_float_vector(t)
        check_same_length(X, t)
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        ranges = [(X[:, k].min(), X[:, k].max()) for k in range(X.shape[1])]
        model = build_grid_rules(ranges, mfs_per_input=self.n_mfs, kind=self.mf_kind)
        errors = []
        eta = float(self.eta)
        best_model, best_err = model, np.inf
        for _ in range(self.epochs):
            stepped, E = hybrid_epoch(model, X, t, eta=eta)
            errors.append(E)
            if E <= best_err:
                best_model, best_err = model, E
                model = stepped
            else:
                # the last premise step made things worse: back off and retry
                # from the best premises with a smaller step
                model = best_model
                eta *= 0.5
        # Final consequents for the best premises seen.  The sequential solver
        # is preferred here: its prior acts as a tiny ridge, so rules that
        # barely fire on the training rows keep near-zero coefficients instead
        # of the huge cancelling pairs an exact least-squares fit can assign.
        self.model_ = consequent_lse(best_model, X, t, mode="sequential", gamma=1e8)
        self.epoch_errors_ = errors
        return self

    def predict(self, X):
        check_fitted(self, "model_")
        return self.model_.forward(as_float_matrix(X))
