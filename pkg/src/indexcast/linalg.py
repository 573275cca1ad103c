"""Small dense linear-algebra kernel shared by the trainers.

Batch least squares (minimum-norm when rank deficient), sequential
recursive least squares with an optional forgetting factor, and a finite
positive-semidefiniteness test used to vet kernel Gram matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LsqSolution",
    "RlsState",
    "lsq_solve",
    "rls_init",
    "rls_update",
    "psd_check",
]


@dataclass(frozen=True)
class LsqSolution:
    """Least-squares estimate together with its squared residual norm."""

    x: np.ndarray
    residual_norm_sq: float


@dataclass(frozen=True)
class RlsState:
    """State of the sequential least-squares recursion.

    ``x`` is the current estimate and ``S`` the covariance matrix.  ``S`` is
    re-symmetrized on every update because the recursion is exact only in
    real arithmetic and asymmetry would otherwise accumulate.
    """

    x: np.ndarray
    S: np.ndarray
    samples_seen: int = 0

    @property
    def dim(self) -> int:
        return self.x.shape[0]


def _as_matrix(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _as_vector(v, name: str = "b") -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def lsq_solve(A, b) -> LsqSolution:
    """Minimize ``||A x - b||**2`` over x.

    Rank-deficient systems return the minimum-norm solution instead of
    raising.
    """
    A = _as_matrix(A)
    b = _as_vector(b)
    if A.shape[0] != b.shape[0]:
        raise ValueError(
            f"A has {A.shape[0]} rows but b has {b.shape[0]} entries"
        )
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError("A must have at least one row and one column")
    # Truncate singular values below 1e-10 of the largest: inverting them
    # turns rounding noise into huge coefficients on near-collinear designs
    # (overlapping-grid design matrices are the worst offenders).
    x, _, _, _ = np.linalg.lstsq(A, b, rcond=1e-10)
    r = A @ x - b
    return LsqSolution(x=x, residual_norm_sq=float(r @ r))


def rls_init(m: int, gamma: float) -> RlsState:
    """Fresh recursion state: zero estimate, covariance ``gamma * I``."""
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return RlsState(x=np.zeros(m), S=gamma * np.eye(m), samples_seen=0)


def rls_update(state: RlsState, a, b: float, lam: float = 1.0) -> RlsState:
    """One sequential least-squares step on the pair ``(a, b)``.

    With ``lam`` = 1 every sample carries equal weight; ``lam`` < 1
    exponentially down-weights older samples (values well below 1 are known
    to be numerically fragile on long streams).
    """
    a = _as_vector(a, "a")
    if a.shape[0] != state.dim:
        raise ValueError(f"regressor has {a.shape[0]} entries, state expects {state.dim}")
    if not np.isfinite(b):
        raise ValueError("target b is not finite")
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"forgetting factor must lie in (0, 1], got {lam}")

    S = state.S
    Sa = S @ a
    denom = lam + float(a @ Sa)
    S_new = (S - np.outer(Sa, Sa) / denom) / lam
    S_new = 0.5 * (S_new + S_new.T)
    x_new = state.x + S_new @ a * (b - float(a @ state.x))
    return RlsState(x=x_new, S=S_new, samples_seen=state.samples_seen + 1)


def psd_check(G, tol: float = 1e-10) -> bool:
    """True iff the symmetric matrix ``G`` has no eigenvalue below ``-tol``."""
    G = _as_matrix(G, "G")
    if G.shape[0] != G.shape[1]:
        raise ValueError(f"G must be square, got shape {G.shape}")
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    if not np.allclose(G, G.T, atol=tol + 1e-12, rtol=0.0):
        raise ValueError("G is not symmetric within tolerance")
    eigenvalues = np.linalg.eigvalsh(0.5 * (G + G.T))
    return bool(eigenvalues[0] >= -tol)
