"""Control problem definition and the scalar constants derived from it."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DecayMarginError, DimensionError, DomainError
from .linalg import inf_norm, solve_lyapunov, spec_norm, sym_eig_extremes


@dataclass(frozen=True)
class RateConstants:
    """Scalar rates used by every trigger bound.

    decay_gap          gap between the certified closed-loop decay rate and
                       the target rate (``lam_min(Q)/lam_max(P) - beta``)
    guarded_decay_gap  same gap measured against the inflated target
                       ``a*beta``; must be positive for the design to exist
    growth_rate        open-loop error growth rate in the spectral norm
                       (``||A||_2 + beta/2``)
    growth_rate_inf    open-loop error growth rate in the infinity norm
                       (``||A||_inf + beta/2``)
    error_scale        normalisation turning the codec bound d_e into the
                       dimensionless error ratio
    """

    decay_gap: float
    guarded_decay_gap: float
    growth_rate: float
    growth_rate_inf: float
    error_scale: float


@dataclass(frozen=True)
class PlantModel:
    """Immutable plant + certificate bundle.

    Holds the system matrices, the feedback gain, the Lyapunov
    certificate P for ``Abar = A + B K`` and the derived rate constants.
    """

    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    Abar: np.ndarray
    a: float
    beta: float
    vd0: float
    constants: RateConstants

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def lyapunov_value(self, x) -> float:
        """V(x) = x^T P x."""
        v = np.asarray(x, dtype=float)
        return float(v @ self.P @ v)

    def desired_performance(self, t: float) -> float:
        """Target performance level ``vd0 * exp(-beta t)`` (t0 = 0)."""
        if t < 0:
            raise DomainError("desired_performance requires t >= t0 = 0")
        return self.vd0 * float(np.exp(-self.beta * t))

    def with_vd0(self, vd0: float) -> "PlantModel":
        if vd0 <= 0:
            raise ConfigurationError("initial performance level must be positive")
        return dataclasses.replace(self, vd0=vd0)


def build_plant(A, B, K, Q, a: float, beta: float | None = None,
                beta_fraction: float | None = None, vd0: float = 1.0,
                lyap_tol: float = 1e-9) -> PlantModel:
    """Assemble a PlantModel and all derived constants.

    The target decay rate may be given directly (``beta``) or as a
    fraction of the certified rate ``lam_min(Q)/lam_max(P)``
    (``beta_fraction``); exactly one of the two must be provided.

    Raises NotHurwitzError when A + B K is unstable and DecayMarginError
    when the guarded margin ``lam_min(Q)/lam_max(P) - a*beta`` is not
    positive.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = np.asarray(K, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError("A must be square")
    if B.ndim != 2 or B.shape[0] != n:
        raise DimensionError("B must be n x m")
    m = B.shape[1]
    if K.shape != (m, n):
        raise DimensionError("K must be m x n")
    if Q.shape != (n, n):
        raise DimensionError("Q must be n x n")
    if a <= 1.0:
        raise ConfigurationError("margin factor a must exceed 1")
    if (beta is None) == (beta_fraction is None):
        raise ConfigurationError("provide exactly one of beta or beta_fraction")

    Abar = A + B @ K
    P = solve_lyapunov(Abar, Q, residual_tol=lyap_tol)

    q_min, _ = sym_eig_extremes(Q)
    p_min, p_max = sym_eig_extremes(P)
    certified_rate = q_min / p_max

    if beta is None:
        if not 0.0 < beta_fraction:
            raise ConfigurationError("beta_fraction must be positive")
        beta = beta_fraction * certified_rate
    if beta <= 0.0:
        raise ConfigurationError("beta must be positive")

    guarded = certified_rate - a * beta
    if guarded <= 0.0:
        raise DecayMarginError(
            f"lam_min(Q)/lam_max(P) - a*beta = {guarded:.6g} must be positive")

    constants = RateConstants(
        decay_gap=certified_rate - beta,
        guarded_decay_gap=guarded,
        growth_rate=spec_norm(A) + beta / 2.0,
        growth_rate_inf=inf_norm(A) + beta / 2.0,
        error_scale=guarded * np.sqrt(p_min) / (2.0 * np.sqrt(n) * spec_norm(P @ B @ K)),
    )
    if vd0 <= 0:
        raise ConfigurationError("initial performance level must be positive")

    frozen = lambda M: _readonly(M)
    return PlantModel(A=frozen(A), B=frozen(B), K=frozen(K), Q=frozen(Q),
                      P=frozen(P), Abar=frozen(Abar), a=float(a),
                      beta=float(beta), vd0=float(vd0), constants=constants)


def _readonly(M: np.ndarray) -> np.ndarray:
    out = np.array(M, dtype=float)
    out.setflags(write=False)
    return out
