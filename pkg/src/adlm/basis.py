"""B-spline bases over the lag axis and the distributed-lag design matrix."""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import BSpline

from . import kernels


class Placement(str, Enum):
    UNIFORM = "uniform"
    LOGARITHMIC = "logarithmic"


def default_n_basis(p: int) -> int:
    """floor(2(p+1)/3) basis functions, e.g. 34 for p = 50."""
    return (2 * (p + 1)) // 3


@dataclass(frozen=True)
class BasisSpec:
    p: int
    K: int
    degree: int = 3
    placement: Placement = Placement.UNIFORM

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"maximum lag p must be >= 1, got {self.p}")
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        if self.K < self.degree + 1:
            raise ValueError(f"need K >= degree + 1 = {self.degree + 1}, got K={self.K}")

    @classmethod
    def default(cls, p: int, degree: int = 3) -> "BasisSpec":
        return cls(p=p, K=default_n_basis(p), degree=degree)

    @property
    def n_interior(self) -> int:
        return self.K - self.degree - 1

    def knots(self) -> np.ndarray:
        if self.placement == Placement.UNIFORM:
            return uniform_knots(self)
        return log_knots(self.p, self.n_interior, self.degree)

    def matrix(self) -> np.ndarray:
        """Basis evaluated at the integer lags 0..p, shape (p+1, K)."""
        return eval_basis(self.knots(), self.degree, np.arange(self.p + 1, dtype=float))


def _clamp(interior, p, degree):
    return np.concatenate([np.zeros(degree + 1), np.asarray(interior, float), np.full(degree + 1, float(p))])


def uniform_knots(spec: BasisSpec) -> np.ndarray:
    """Clamped knot vector on [0, p] with K - degree - 1 equally spaced interior knots."""
    if spec.placement != Placement.UNIFORM:
        raise ValueError("uniform_knots needs a uniform BasisSpec")
    n_int = spec.n_interior
    interior = spec.p * np.arange(1, n_int + 1) / (n_int + 1)
    return _clamp(interior, spec.p, spec.degree)


def log_knots(p: int, n_interior: int, degree: int = 3) -> np.ndarray:
    """Clamped knot vector on [0, p], interior knots equally spaced in log(1 + lag).

    Knots are dense at short lags and thin out with increasing lag.
    """
    if n_interior < 0:
        raise ValueError(f"n_interior must be >= 0, got {n_interior}")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    q = np.arange(1, n_interior + 1) / (n_interior + 1)
    interior = np.exp(q * np.log(p + 1.0)) - 1.0
    return _clamp(interior, p, degree)


def eval_basis(knots, degree: int, points) -> np.ndarray:
    """B-spline design matrix, one row per point and one column per basis function."""
    knots = np.asarray(knots, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    lo, hi = knots[0], knots[-1]
    if np.any(points < lo) or np.any(points > hi):
        raise ValueError(f"evaluation points must lie in [{lo}, {hi}]")
    if len(knots) < degree + 2:
        raise ValueError("too few knots for the requested degree")
    return BSpline.design_matrix(points, knots, degree).toarray()


def lag_matrix(x, p: int) -> np.ndarray:
    """Lag embedding L with L[i, j] = x[p + i - j], shape (n - p, p + 1)."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    if len(x) <= p:
        raise ValueError(f"series length n={len(x)} must exceed the maximum lag p={p}")
    return kernels.lag_embed(x, p)


def build_design(x, spec: BasisSpec, basis=None) -> np.ndarray:
    """Distributed-lag design X[i, k] = sum_j x[i - j] B_k(j), shape (n - p, K).

    Row i corresponds to time index p + i (0-based) of ``x``.
    """
    if basis is None:
        basis = spec.matrix()
    basis = np.asarray(basis, dtype=float)
    if basis.shape[0] != spec.p + 1:
        raise ValueError(f"basis has {basis.shape[0]} rows, expected p+1={spec.p + 1}")
    return lag_matrix(x, spec.p) @ basis
