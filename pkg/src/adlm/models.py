"""The comparison suite M1-M5.

M1-M4 are Bayesian penalised-spline DLMs on a uniform cubic basis with
K = floor(2(p+1)/3) functions and differ only in the prior penalty:

    M1  lambda * diag(1, ..., K)      lag-increasing ridge
    M2  lambda * P                    RW1 / ordinary ICAR
    M3  Q(lambda_1..lambda_{K-1}, rho) adaptive ICAR
    M4  lambda * P + rho * I          P-spline with ridge

M5 chooses the number of log-spaced knots by AIC and fits by least squares.
``reading="description"`` swaps the M1 and M2 penalties.
"""
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .basis import BasisSpec, Placement, build_design, default_n_basis, eval_basis, lag_matrix, log_knots
from .numerics import NotPositiveDefinite, cholesky, effective_dimension, solve_spd
from .sampler import ChainConfig, PosteriorSummary, Samples, run_chain, summarize

BAND_Z = 1.959963984540054


class ModelId(str, Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    M5 = "M5"


@dataclass(frozen=True)
class ModelSpec:
    id: ModelId
    prior: str | None  # sampler prior kind, None for M5
    placement: Placement
    route: str  # "bayesian" or "aic_least_squares"

    @property
    def bayesian(self) -> bool:
        return self.route == "bayesian"


_PRIORS = {"M1": "ridge", "M2": "rw1", "M3": "adaptive", "M4": "pspline"}


def model_spec(model, reading: str = "penalty") -> ModelSpec:
    if isinstance(model, ModelSpec):
        return model
    mid = ModelId(getattr(model, "value", model))
    if reading not in ("penalty", "description"):
        raise ValueError(f"reading must be 'penalty' or 'description', got {reading!r}")
    if mid == ModelId.M5:
        return ModelSpec(mid, None, Placement.LOGARITHMIC, "aic_least_squares")
    prior = _PRIORS[mid.value]
    if reading == "description" and mid in (ModelId.M1, ModelId.M2):
        prior = {"ridge": "rw1", "rw1": "ridge"}[prior]
    return ModelSpec(mid, prior, Placement.UNIFORM, "bayesian")


def all_models(reading: str = "penalty"):
    return [model_spec(m, reading) for m in ModelId]


@dataclass
class FitResult:
    model: ModelSpec
    p: int
    K: int
    summary: PosteriorSummary
    elapsed: float
    basis: np.ndarray = field(repr=False)
    samples: Samples | None = field(default=None, repr=False)
    n_interior: int | None = None  # M5 only
    aic_table: list | None = field(default=None, repr=False)

    @property
    def beta(self):
        return self.summary.beta_mean

    @property
    def ed(self):
        return self.summary.ed


def aic(rss: float, m: int, k_params: int) -> float:
    """Gaussian profile AIC m log(rss/m) + 2k; -inf for a perfect fit."""
    if m <= 0:
        raise ValueError("m must be positive")
    if rss < 0:
        raise ValueError("rss must be nonnegative")
    if rss == 0:
        return -np.inf
    return m * np.log(rss / m) + 2 * k_params


def max_log_interior(p: int, degree: int = 3) -> int:
    """Largest interior-knot count for M5 so the basis stays under 2p/3 functions."""
    return max((2 * p) // 3 - degree - 1, 0)


def response_window(x, y, p):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if len(y) != n:
        raise ValueError(f"x and y must have equal length, got {n} and {len(y)}")
    if n <= p:
        raise ValueError(f"series length n={n} must exceed the maximum lag p={p}")
    yw = y[p:]
    if not np.all(np.isfinite(yw)):
        raise ValueError(f"y must be finite from index p={p} onwards")
    return x, yw


def fit_m5(x, y, p, degree=3, ed_count="basis", max_interior=None):
    t0 = time.perf_counter()
    x, yw = response_window(x, y, p)
    L = lag_matrix(x, p)
    m = len(yw)
    lags = np.arange(p + 1, dtype=float)
    top = max_log_interior(p, degree) if max_interior is None else max_interior
    table = []
    best = None
    for n_int in range(top + 1):
        B = eval_basis(log_knots(p, n_int, degree), degree, lags)
        X = L @ B
        k = B.shape[1]
        if k >= m:
            continue
        try:
            f = cholesky(X.T @ X)
        except NotPositiveDefinite:
            continue
        coef = solve_spd(f, X.T @ yw)
        rss = float(np.sum((yw - X @ coef) ** 2))
        score = aic(rss, m, k)
        table.append((n_int, k, rss, score))
        if best is None or score < best[0]:
            best = (score, n_int, B, X, f, coef, rss)
    if best is None:
        raise NotPositiveDefinite("every M5 candidate basis gave singular normal equations")
    _, n_int, B, X, f, coef, rss = best
    k = B.shape[1]
    s2 = rss / max(m - k, 1)
    cov = s2 * solve_spd(f, np.eye(k))
    beta = B @ coef
    half = BAND_Z * np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", B, cov, B), 0.0))
    ed = {"basis": k, "interior": n_int, "knots": n_int + 2}[ed_count]
    summary = PosteriorSummary(
        beta_mean=beta, beta_lower=beta - half, beta_upper=beta + half, ed=float(ed),
        acceptance_rates=np.zeros(0), sample_count=0, sigma2_mean=s2,
    )
    return FitResult(
        model=model_spec("M5"), p=p, K=k, summary=summary, elapsed=time.perf_counter() - t0,
        basis=B, n_interior=n_int, aic_table=table,
    )


def fit(model, x, y, p: int, cfg: ChainConfig, degree: int = 3, K: int | None = None,
        m5_ed: str = "basis", keep_samples: bool = False) -> FitResult:
    """Fit one model to a covariate series ``x`` and response ``y`` of equal length.

    Only ``y[p:]`` is used, so leading entries of ``y`` may be NaN.
    """
    spec = model_spec(model)
    if not spec.bayesian:
        return fit_m5(x, y, p, degree, ed_count=m5_ed)
    t0 = time.perf_counter()
    x, yw = response_window(x, y, p)
    bspec = BasisSpec(p=p, K=K or default_n_basis(p), degree=degree)
    B = bspec.matrix()
    X = build_design(x, bspec, B)
    samples = run_chain(yw, X, spec, cfg)
    summary = summarize(samples, B, X, spec)
    return FitResult(
        model=spec, p=p, K=bspec.K, summary=summary, elapsed=time.perf_counter() - t0,
        basis=B, samples=samples if keep_samples else None,
    )


def model_ed(fit_result: FitResult, X=None) -> float:
    """Effective dimension: trace formula at the posterior-mean penalty, or M5's knot count."""
    if not fit_result.model.bayesian:
        return fit_result.summary.ed
    if X is None:
        return fit_result.summary.ed
    return effective_dimension(X, fit_result.summary.penalty)
