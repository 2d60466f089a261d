"""Small dense linear-algebra kernel.

Everything here works on matrices of dimension ~2..6, so the
implementations favour robustness and verifiability over speed:
the matrix exponential uses scaling-and-squaring around a fixed-order
Taylor core, and the Lyapunov equation is solved by Kronecker
vectorisation to an ``n^2 x n^2`` linear system with partially pivoted
elimination.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError, NotHurwitzError, NumericalError

# Fixed Taylor order; with the scaled norm kept below 1/2 the truncation
# error is ~0.5**21/21! << 1e-10.
_TAYLOR_ORDER = 20


def _as_square(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix entries must be finite")
    return A


def inf_norm(M) -> float:
    """Infinity norm: max absolute row sum (max |entry| for vectors)."""
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        return float(np.max(np.abs(A))) if A.size else 0.0
    return float(np.max(np.sum(np.abs(A), axis=1)))


def spec_norm(M) -> float:
    """Spectral norm: largest singular value (Euclidean norm for vectors).

    Computed as ``sqrt(lambda_max(M^T M))`` to avoid a general SVD.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        return float(np.linalg.norm(A))
    _, lam_max = sym_eig_extremes(A.T @ A)
    return float(np.sqrt(max(lam_max, 0.0)))


def sym_eig_extremes(S, sym_tol: float = 1e-10) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Raises DomainError when the input is not symmetric to within
    ``sym_tol`` relative to its magnitude.
    """
    A = _as_square(S)
    scale = max(inf_norm(A), 1.0)
    if inf_norm(A - A.T) > sym_tol * scale:
        raise DomainError("matrix is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    return float(w[0]), float(w[-1])


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(M t)`` by scaling and squaring.

    Parameters
    ----------
    M : array_like, square
    t : nonnegative scale; ``t=0`` or the zero matrix return the identity.
    """
    A = _as_square(M)
    if t < 0:
        raise DomainError("mat_exp requires t >= 0")
    X = A * t
    n = X.shape[0]
    norm = inf_norm(X)
    if norm == 0.0:
        return np.eye(n)
    # Scale so the Taylor argument has norm <= 1/2.
    s = max(0, int(np.ceil(np.log2(norm))) + 1)
    Xs = X / (2.0 ** s)
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, _TAYLOR_ORDER + 1):
        term = term @ Xs / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def is_hurwitz(M) -> bool:
    """True when every eigenvalue of M has strictly negative real part."""
    A = _as_square(M)
    return bool(np.all(np.linalg.eigvals(A).real < 0.0))


def solve_lyapunov(Abar, Q, residual_tol: float = 1e-9) -> np.ndarray:
    """Solve ``P Abar + Abar^T P = -Q`` for symmetric positive-definite P.

    Vectorises to ``(Abar^T (x) I + I (x) Abar^T) vec(P) = -vec(Q)`` and
    solves with partially pivoted elimination; the residual is checked
    against ``residual_tol`` before returning.

    Raises
    ------
    NotHurwitzError : Abar has an eigenvalue with nonnegative real part.
    DomainError     : Q is not symmetric positive definite.
    NumericalError  : the residual check fails.
    """
    A = _as_square(Abar)
    Qm = _as_square(Q)
    n = A.shape[0]
    if Qm.shape[0] != n:
        raise DimensionError("Abar and Q must have matching dimensions")
    if not is_hurwitz(A):
        raise NotHurwitzError("closed-loop matrix is not Hurwitz")
    qmin, _ = sym_eig_extremes(Qm)
    if qmin <= 0.0:
        raise DomainError("Q must be symmetric positive definite")

    eye = np.eye(n)
    lhs = np.kron(A.T, eye) + np.kron(eye, A.T)
    vec_p = np.linalg.solve(lhs, -Qm.flatten(order="F"))
    P = vec_p.reshape((n, n), order="F")
    P = 0.5 * (P + P.T)

    residual = inf_norm(P @ A + A.T @ P + Qm)
    if residual > residual_tol:
        raise NumericalError(f"Lyapunov residual {residual:.3e} exceeds {residual_tol:.1e}")
    return P
