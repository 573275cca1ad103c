"""Damped Gauss-Newton (Levenberg-Marquardt) trainer for least-squares models.

The trainer is model-agnostic: anything exposing ``weights``,
``with_weights``, ``errors(X, t)`` and ``error_jacobian(X, t)`` can be
trained.  The objective is the plain sum of squared errors

    psi(w) = sum_j e_j(w)^2

and with Jable[i, j] = d e_j / d w_i the proposed update is

    w_new = w - (J J^T + epsilon I)^{-1} (J e)

with unit step length.  epsilon shrinks by a fixed factor after every
accepted step and grows after every rejection; a rejected proposal is
retried within the same epoch with the larger damping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LmConfig:
    epsilon_init: float = 1e-3
    epsilon_decrease: float = 0.1
    epsilon_increase: float = 10.0
    max_epochs: int = 50
    target_error: float = 0.0
    epsilon_max: float = 1e10
    max_retries: int = 20

    def __post_init__(self):
        if self.epsilon_init <= 0:
            raise ValueError("epsilon_init must be positive")
        if not 0 < self.epsilon_decrease < 1:
            raise ValueError("epsilon_decrease must lie in (0, 1)")
        if self.epsilon_increase <= 1:
            raise ValueError("epsilon_increase must exceed 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass(frozen=True)
class LmStep:
    """One proposal: the psi it produced, the damping used, and the verdict."""

    epoch: int
    psi: float
    epsilon: float
    accepted: bool


@dataclass
class LmResult:
    model: object
    psi: float
    trace: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def accepted_psis(self):
        return [s.psi for s in self.trace if s.accepted]


def lm_step(model, J, e, epsilon: float) -> np.ndarray:
    """Candidate weight vector from one damped proposal.

    ``epsilon`` may be zero, in which case a singular normal system falls
    back to the minimum-norm solution.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    J = np.asarray(J, dtype=float)
    e = np.asarray(e, dtype=float).ravel()
    return model.weights + _solve_delta(J @ J.T, J @ e, epsilon)


def _solve_delta(H: np.ndarray, g: np.ndarray, epsilon: float) -> np.ndarray:
    A = H + epsilon * np.eye(H.shape[0])
    try:
        return -np.linalg.solve(A, g)
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(A, g, rcond=None)[0]


def lm_train(model, X, t, config: LmConfig = None) -> LmResult:
    """Run the accept/reject damping loop until convergence or the epoch cap."""
    cfg = config if config is not None else LmConfig()
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float).ravel()

    e = np.asarray(model.errors(X, t), dtype=float)
    psi = float(e @ e)
    if not np.isfinite(psi):
        raise ValueError("objective is non-finite at the initial weights")
    epsilon = cfg.epsilon_init
    trace = []
    stop_reason = "max_epochs"

    for epoch in range(1, cfg.max_epochs + 1):
        if psi <= cfg.target_error:
            stop_reason = "target_error"
            break
        J = np.asarray(model.error_jacobian(X, t), dtype=float)
        g = J @ e
        H = J @ J.T

        accepted = False
        for _ in range(cfg.max_retries + 1):
            delta = _solve_delta(H, g, epsilon)
            if not np.all(np.isfinite(delta)):
                psi_new = np.inf
                candidate = None
            else:
                candidate = model.with_weights(model.weights + delta)
                e_new = np.asarray(candidate.errors(X, t), dtype=float)
                psi_new = float(e_new @ e_new) if np.all(np.isfinite(e_new)) else np.inf

            improved = np.isfinite(psi_new) and psi_new < psi
            trace.append(LmStep(epoch=epoch, psi=psi_new, epsilon=epsilon, accepted=improved))
            if improved:
                model, e, psi = candidate, e_new, psi_new
                epsilon *= cfg.epsilon_decrease
                accepted = True
                break
            epsilon *= cfg.epsilon_increase
            if epsilon > cfg.epsilon_max:
                break

        if not accepted:
            stop_reason = "epsilon_overflow" if epsilon > cfg.epsilon_max else "no_progress"
            break
    else:
        stop_reason = "max_epochs"

    if psi <= cfg.target_error:
        stop_reason = "target_error"
    return LmResult(model=model, psi=psi, trace=trace, stop_reason=stop_reason)


def trace_rows(result: LmResult):
    """Trace as plain dict rows, one per proposal, for CSV emission."""
    return [
        {"epoch": s.epoch, "psi": s.psi, "epsilon": s.epsilon, "accepted": int(s.accepted)}
        for s in result.trace
    ]
