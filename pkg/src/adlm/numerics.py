"""Dense SPD linear algebra, random streams and the effective dimension."""
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Cholesky hit a pivot below 1e-12 times the largest diagonal entry."""


@dataclass(frozen=True)
class SpdFactor:
    L: np.ndarray

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.L))))


def cholesky(A) -> SpdFactor:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    L, ok = kernels.cholesky_lower(np.ascontiguousarray(A))
    if not ok:
        raise NotPositiveDefinite("matrix is not numerically positive definite")
    return SpdFactor(L)


def solve_spd(f: SpdFactor, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != f.dim:
        raise ValueError(f"rhs has leading dimension {rhs.shape[0]}, factor is {f.dim}")
    w = solve_triangular(f.L, rhs, lower=True, check_finite=False)
    return solve_triangular(f.L, w, lower=True, trans="T", check_finite=False)


# ---------------------------------------------------------------------------
# random streams


def make_rng(seed: int, *keys) -> np.random.Generator:
    """Counter-based Philox stream for ``seed`` and an optional key path.

    String keys are mapped through crc32 so stream identity is stable across
    runs, platforms and worker scheduling.
    """
    spawn = tuple(k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys)
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=spawn)
    return np.random.Generator(np.random.Philox(ss))


def sample_gaussian_precision(rng: np.random.Generator, precision, linear_term, size=None) -> np.ndarray:
    """Draw from N(precision^{-1} linear_term, precision^{-1}).

    With ``size`` given, returns ``size`` draws stacked in rows from a single
    factorisation.
    """
    precision = np.ascontiguousarray(precision, dtype=float)
    linear_term = np.ascontiguousarray(linear_term, dtype=float)
    n = precision.shape[0]
    if size is None:
        z = rng.standard_normal(n)
        x, ok = kernels.precision_draw(precision, linear_term, z)
        if not ok:
            raise NotPositiveDefinite("precision matrix is not positive definite")
        return x
    f = cholesky(precision)
    mean = solve_spd(f, linear_term)
    z = rng.standard_normal((n, size))
    return (mean[:, None] + solve_triangular(f.L, z, lower=True, trans="T", check_finite=False)).T


def effective_dimension_gram(XtX, S) -> float:
    """tr[(X'X + S)^{-1} X'X].

    Both matrices are rescaled by diag(X'X + S)^{-1/2} on each side first;
    the trace is unchanged and the factorisation stays well scaled when S
    has a few very large entries.
    """
    XtX = np.asarray(XtX, dtype=float)
    A = XtX + np.asarray(S, dtype=float)
    d = np.diag(A)
    if not np.all(d > 0):
        raise NotPositiveDefinite("X'X + S has a nonpositive diagonal entry")
    s = 1.0 / np.sqrt(d)
    scale = np.outer(s, s)
    f = cholesky(A * scale)
    return float(np.trace(solve_spd(f, XtX * scale)))


def effective_dimension(X, S) -> float:
    """tr[X (X'X + S)^{-1} X'], evaluated in K x K form."""
    X = np.asarray(X, dtype=float)
    return effective_dimension_gram(X.T @ X, S)
