"""Penalty and precision matrices for the lag-curve coefficients.

All matrices are dense numpy arrays. Symmetric entries are assigned from the
same value, so the results are exactly symmetric.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PrecisionComponents:
    """Pairwise smoothing precisions lambda_1..lambda_{K-1} plus the corner term rho."""

    lambdas: np.ndarray
    rho: float = 0.0

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("lambdas must be a nonempty vector")
        if not np.all(lam > 0) or not np.all(np.isfinite(lam)):
            raise ValueError("all lambdas must be finite and > 0")
        if not self.rho >= 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def from_log(cls, tau, rho=0.0):
        return cls(np.exp(np.asarray(tau, dtype=float)), rho)

    @property
    def K(self) -> int:
        return self.lambdas.size + 1


def _rw1(weights, corner=0.0):
    w = np.asarray(weights, dtype=float)
    K = w.size + 1
    M = np.zeros((K, K))
    idx = np.arange(K - 1)
    M[idx, idx] += w
    M[idx + 1, idx + 1] += w
    M[idx, idx + 1] = -w
    M[idx + 1, idx] = -w
    M[K - 1, K - 1] += corner
    return M


def build_P(K: int) -> np.ndarray:
    """First-difference (RW1/ICAR) structure matrix: b'Pb = sum (b_{k+1} - b_k)^2."""
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    return _rw1(np.ones(K - 1))


def build_Q(pc: PrecisionComponents) -> np.ndarray:
    """Adaptive ICAR precision: b'Qb = sum lambda_k (b_{k+1} - b_k)^2 + rho b_K^2."""
    return _rw1(pc.lambdas, pc.rho)


def q_logdet(pc: PrecisionComponents) -> float:
    """log det Q = log rho + sum log lambda_k.

    Q = T' diag(lambda, rho) T where T maps b to (b_2 - b_1, ..., b_K - b_{K-1}, b_K)
    and has unit determinant. -inf when rho = 0.
    """
    if pc.rho == 0:
        return -np.inf
    return float(np.log(pc.rho) + np.sum(np.log(pc.lambdas)))


def conditional_moments_b(pc: PrecisionComponents, b, k: int):
    """Mean and variance of b_k given the other coefficients under N(0, Q^{-1}).

    ``k`` is 0-based. For the last coefficient the corner term enters the
    precision, so with rho > 0 the mean is shrunk toward 0.
    """
    lam = pc.lambdas
    K = pc.K
    b = np.asarray(b, dtype=float)
    if b.shape != (K,):
        raise ValueError(f"b must have length {K}")
    if not 0 <= k < K:
        raise IndexError(f"k={k} out of range for K={K}")
    left = lam[k - 1] if k > 0 else 0.0
    right = lam[k] if k < K - 1 else 0.0
    prec = left + right + (pc.rho if k == K - 1 else 0.0)
    num = (left * b[k - 1] if k > 0 else 0.0) + (right * b[k + 1] if k < K - 1 else 0.0)
    return num / prec, 1.0 / prec


def build_K_hyper(m: int) -> np.ndarray:
    """RW1 structure matrix of size m x m for smoothing the log precisions (rank m - 1)."""
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return build_P(m)


def build_ridge_diag(K: int, scale: float) -> np.ndarray:
    """scale * diag(1, 2, ..., K): ridge weights growing linearly with coefficient index."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    return np.diag(scale * np.arange(1, K + 1, dtype=float))


def build_pspline_combo(K: int, lam: float, rho: float) -> np.ndarray:
    """lam * P + rho * I."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if not rho >= 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    return lam * build_P(K) + rho * np.eye(K)


def rw1_eigenvalues(K: int) -> np.ndarray:
    """Eigenvalues 2 - 2 cos(pi j / K), j = 0..K-1, of build_P(K)."""
    return 2.0 - 2.0 * np.cos(np.pi * np.arange(K) / K)
