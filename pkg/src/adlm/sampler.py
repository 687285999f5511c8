"""Gibbs / Metropolis-Hastings sampler for the penalised distributed lag model.

The lag-curve coefficients ``b`` have prior ``N(0, sigma2 * S^{-1})`` where the
penalty ``S`` depends on the model:

``adaptive``  Q(lambda, rho), one log precision ``tau_k = log lambda_k`` per
              neighbouring pair, smoothed by an RW1 prior with variance zeta2
``rw1``       lambda * P
``ridge``     lambda * diag(1, ..., K)
``pspline``   lambda * P + rho * I

Scaling the prior by sigma2 keeps the penalty on the same scale as X'X, so
the effective dimension of a fit is tr[(X'X + S)^{-1} X'X] at the posterior
mean of S. Single shared precisions (M1, M2) and the two M4 precisions are
Gamma(1, 1); the overall level of ``tau`` and the adaptive corner term rho
get ``N(0, log_precision_sd^2)`` priors on the log scale; sigma2 and zeta2 are
Inverse-Gamma(1, 1/2) in shape/rate form. All log precisions are confined to
``[-log_precision_bound, log_precision_bound]``.
"""
import csv
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import kernels
from .numerics import NotPositiveDefinite, cholesky, effective_dimension_gram, make_rng, solve_spd
from .penalty import PrecisionComponents, build_K_hyper, build_P, build_Q, rw1_eigenvalues

PRIOR_KINDS = ("ridge", "rw1", "adaptive", "pspline")


@dataclass(frozen=True)
class ChainConfig:
    n_iter: int = 10000
    burn_in: int = 2000
    thin: int = 1
    proposal_sd: float = 0.5
    rho: float = 1.0
    estimate_rho: bool = True
    seed: int = 0
    adapt_proposals: bool = True
    target_accept: float = 0.44
    # Inverse-Gamma(shape, rate) for sigma2 and zeta2
    ig_shape: float = 1.0
    ig_rate: float = 0.5
    log_precision_sd: float = 10.0
    # log precisions live in [-bound, bound]; beyond it the data cannot tell values apart
    log_precision_bound: float = 20.0
    # Gamma(shape, rate) on the M4 precisions lambda and rho
    pspline_shape: float = 1.0
    pspline_rate: float = 1.0
    # prior on a single shared lambda (M1, M2, tied M3): "gamma" uses the
    # Gamma(pspline_shape, pspline_rate) above, "lognormal" N(0, log_precision_sd^2) on log lambda
    single_lambda_prior: str = "gamma"
    tie_lambdas: bool = False

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError("n_iter must be positive")
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError(f"need 0 <= burn_in < n_iter, got burn_in={self.burn_in}, n_iter={self.n_iter}")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if not self.proposal_sd > 0:
            raise ValueError("proposal_sd must be positive")
        if not self.rho >= 0:
            raise ValueError("rho must be nonnegative")
        hyper = (self.ig_shape, self.ig_rate, self.log_precision_sd, self.pspline_shape, self.pspline_rate,
                 self.log_precision_bound)
        if min(hyper) <= 0:
            raise ValueError("prior hyperparameters must be positive")
        if self.single_lambda_prior not in ("gamma", "lognormal"):
            raise ValueError(f"single_lambda_prior must be 'gamma' or 'lognormal', got {self.single_lambda_prior!r}")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class ChainState:
    b: np.ndarray
    tau: np.ndarray
    sigma2: float
    zeta2: float = 1.0
    rho: float = 0.0

    def copy(self):
        return replace(self, b=self.b.copy(), tau=self.tau.copy())


@dataclass(frozen=True)
class Gram:
    """Sufficient statistics X'X, X'y, y'y and the number of observations."""

    XtX: np.ndarray
    Xty: np.ndarray
    yty: float
    m: int

    @classmethod
    def from_data(cls, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has length {y.shape[0]}")
        return cls(X.T @ X, X.T @ y, float(y @ y), len(y))

    def rss(self, b) -> float:
        return max(self.yty - 2.0 * float(b @ self.Xty) + float(b @ self.XtX @ b), 0.0)


@dataclass
class Samples:
    kind: str
    iteration: np.ndarray
    b: np.ndarray
    tau: np.ndarray
    sigma2: np.ndarray
    zeta2: np.ndarray
    rho: np.ndarray
    acceptance_rates: np.ndarray
    proposal_sd: np.ndarray

    def __len__(self):
        return len(self.iteration)

    @property
    def lambdas(self):
        return np.exp(self.tau)


# ---------------------------------------------------------------------------
# prior structure


def n_log_precisions(kind: str, K: int, tie: bool = False) -> int:
    if kind == "adaptive":
        return 1 if tie else K - 1
    if kind in ("ridge", "rw1", "pspline"):
        return 1
    raise ValueError(f"unknown prior kind {kind!r}")


def expand_lambdas(kind, tau, K):
    lam = np.exp(np.asarray(tau, dtype=float))
    if kind == "adaptive" and lam.size == 1:
        lam = np.full(K - 1, lam[0])
    return lam


def prior_precision(kind: str, K: int, lambdas, rho: float = 0.0) -> np.ndarray:
    """Penalty S for the given precision parameters (prior of b is N(0, sigma2 S^{-1}))."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if kind == "adaptive":
        if lam.size == 1:
            lam = np.full(K - 1, lam[0])
        return build_Q(PrecisionComponents(lam, rho))
    if kind == "rw1":
        return lam[0] * build_P(K)
    if kind == "ridge":
        return np.diag(lam[0] * np.arange(1, K + 1, dtype=float))
    if kind == "pspline":
        return lam[0] * build_P(K) + rho * np.eye(K)
    raise ValueError(f"unknown prior kind {kind!r}")


def prior_rank(kind: str, K: int, rho: float) -> int:
    if kind == "rw1" or (kind in ("adaptive", "pspline") and rho == 0):
        return K - 1
    return K


# ---------------------------------------------------------------------------
# conditional updates


def draw_inverse_gamma(rng, shape, rate):
    return rate / rng.gamma(shape)


def update_b(state: ChainState, gram: Gram, prior_prec, rng) -> np.ndarray:
    """Draw b from N(A^{-1} X'y / sigma2, A^{-1}) with A = X'X / sigma2 + prior_prec.

    ``prior_prec`` is the prior precision of b (S / sigma2 inside the chain).
    """
    s2 = state.sigma2
    A = gram.XtX / s2 + prior_prec
    z = rng.standard_normal(A.shape[0])
    b, ok = kernels.precision_draw(np.ascontiguousarray(A), gram.Xty / s2, z)
    if not ok:
        raise NotPositiveDefinite("X'X/sigma2 + prior precision is not positive definite")
    return b


def update_sigma2(residuals, rng, shape=1.0, rate=0.5, extra_ss=0.0, extra_n=0) -> float:
    """Draw sigma2 from Inverse-Gamma(shape + m/2, rate + RSS/2).

    ``extra_ss``/``extra_n`` add the prior quadratic form b'Sb and rank of S
    when the coefficient prior is scaled by sigma2.
    """
    r = np.asarray(residuals, dtype=float)
    return update_sigma2_ss(float(r @ r), r.size, rng, shape, rate, extra_ss, extra_n)


def update_sigma2_ss(rss, m, rng, shape=1.0, rate=0.5, extra_ss=0.0, extra_n=0) -> float:
    return draw_inverse_gamma(rng, shape + 0.5 * (m + extra_n), rate + 0.5 * (rss + extra_ss))


def update_zeta2(tau, Khyper, rng, shape=1.0, rate=0.5) -> float:
    """Draw zeta2 from Inverse-Gamma(shape + (m-1)/2, rate + tau'K tau/2)."""
    tau = np.asarray(tau, dtype=float)
    quad = float(tau @ Khyper @ tau)
    return draw_inverse_gamma(rng, shape + 0.5 * (tau.size - 1), rate + 0.5 * quad)


def update_tau(state: ChainState, b, zeta2, proposal_sd, rng, level_sd=10.0, bound=math.inf):
    """One random-walk MH pass over the log precisions of the adaptive prior.

    Target per coordinate: the N(0, sigma2 Q^{-1}) density of b (log det Q =
    log rho + sum tau, so the normaliser is exact) times the RW1 prior on tau
    with variance zeta2 and a N(0, level_sd^2) prior on mean(tau). Returns the
    new tau and per-coordinate acceptance flags.
    """
    tau = np.array(state.tau, dtype=float)
    m = tau.size
    d2 = np.diff(b) ** 2 / state.sigma2
    sd = np.broadcast_to(np.asarray(proposal_sd, dtype=float), (m,)).copy()
    z = rng.standard_normal(m)
    logu = np.log(rng.random(m))
    acc = np.zeros(m, dtype=np.bool_)
    level_prec = 1.0 / (m * m * level_sd * level_sd)
    kernels.tau_sweep(tau, d2, 1.0 / zeta2, level_prec, sd, z, logu, acc, float(bound))
    return tau, acc


def _mh_step(cur, logpost, sd, rng, bound=math.inf):
    new = cur + sd * rng.standard_normal()
    lu = math.log(rng.random())
    if abs(new) <= bound and lu < logpost(new) - logpost(cur):
        return new, True
    return cur, False


# ---------------------------------------------------------------------------
# chain driver


class _Target:
    """Log conditional densities of the scalar log precisions."""

    def __init__(self, kind, K, cfg):
        self.kind = kind
        self.K = K
        self.prior_prec = 1.0 / cfg.log_precision_sd**2
        self.gamma = (cfg.pspline_shape, cfg.pspline_rate)
        self.single_gamma = cfg.single_lambda_prior == "gamma"
        self.mu = rw1_eigenvalues(K)
        self.diag = np.arange(1, K + 1, dtype=float)

    def _log_gamma(self, t):
        # Gamma(a, b) density of exp(t) on the log scale, Jacobian included
        a, b = self.gamma
        return a * t - b * math.exp(t)

    def log_lambda(self, b, s2, rho):
        kind = self.kind
        if kind in ("ridge", "rw1", "adaptive"):
            if kind == "ridge":
                half_rank, q = 0.5 * self.K, float(self.diag @ b**2) / s2
            else:
                # adaptive with tied lambdas: one log precision shared by K-1 pairs
                half_rank, q = 0.5 * (self.K - 1), float(np.sum(np.diff(b) ** 2)) / s2
            if self.single_gamma:
                lg = self._log_gamma
                return lambda t: half_rank * t - 0.5 * math.exp(t) * q + lg(t)
            pp = self.prior_prec
            return lambda t: half_rank * t - 0.5 * math.exp(t) * q - 0.5 * pp * t * t
        # pspline: log det(lambda P + rho I) = sum log(lambda mu_j + rho)
        q = float(np.sum(np.diff(b) ** 2)) / s2
        mu = self.mu
        lg = self._log_gamma
        return lambda t: 0.5 * float(np.sum(np.log(math.exp(t) * mu + rho))) - 0.5 * math.exp(t) * q + lg(t)

    def log_rho(self, b, s2, lam):
        pp = self.prior_prec
        if self.kind == "adaptive":
            q = b[-1] ** 2 / s2
            return lambda r: 0.5 * r - 0.5 * math.exp(r) * q - 0.5 * pp * r * r
        q = float(b @ b) / s2
        lmu = lam * self.mu
        lg = self._log_gamma
        return lambda r: 0.5 * float(np.sum(np.log(lmu + math.exp(r)))) - 0.5 * math.exp(r) * q + lg(r)


def _initial_state(kind, gram, y, cfg, K, m_tau):
    A = gram.XtX + build_P(K) + 1e-8 * np.trace(gram.XtX) / K * np.eye(K)
    b0 = solve_spd(cholesky(A), gram.Xty)
    s2 = float(np.var(y)) if len(y) > 1 else 1.0
    if not s2 > 0:
        s2 = 1.0
    rho = cfg.rho if kind in ("adaptive", "pspline") else 0.0
    if kind == "pspline" and rho == 0:
        rho = 1.0
    return ChainState(b=b0, tau=np.zeros(m_tau), sigma2=s2, zeta2=1.0, rho=rho)


class Transition:
    """One full Gibbs/MH sweep for a given prior kind, basis size and config.

    ``step`` updates the state in place: b, sigma2, then the log precisions
    (and zeta2 for the adaptive prior), then rho when it is estimated.
    """

    def __init__(self, kind: str, K: int, cfg: ChainConfig):
        if kind not in PRIOR_KINDS:
            raise ValueError(f"prior kind must be one of {PRIOR_KINDS}, got {kind!r}")
        if K < 2:
            raise ValueError("need at least two basis functions")
        self.kind = kind
        self.K = K
        self.cfg = cfg
        tie = cfg.tie_lambdas and kind == "adaptive"
        self.adaptive = kind == "adaptive" and not tie
        self.m_tau = n_log_precisions(kind, K, tie)
        self.est_rho = (kind == "adaptive" and cfg.estimate_rho) or kind == "pspline"
        if kind == "adaptive" and self.est_rho and cfg.rho == 0:
            raise ValueError("estimate_rho needs a positive starting rho")
        self.n_mh = self.m_tau + (1 if self.est_rho else 0)
        self.target = _Target(kind, K, cfg)
        self.Kh = build_K_hyper(self.m_tau) if self.adaptive else None

    def penalty(self, state: ChainState) -> np.ndarray:
        return prior_precision(self.kind, self.K, expand_lambdas(self.kind, state.tau, self.K), state.rho)

    def step(self, state: ChainState, gram: Gram, rng, sd) -> np.ndarray:
        """Advance ``state`` by one sweep; returns per-parameter MH acceptance flags."""
        cfg, kind, K = self.cfg, self.kind, self.K
        S = self.penalty(state)
        state.b = update_b(state, gram, S / state.sigma2, rng)
        b = state.b
        state.sigma2 = update_sigma2_ss(
            gram.rss(b), gram.m, rng, cfg.ig_shape, cfg.ig_rate,
            extra_ss=float(b @ S @ b), extra_n=prior_rank(kind, K, state.rho),
        )
        bound = cfg.log_precision_bound
        acc = np.zeros(self.n_mh, dtype=bool)
        m = self.m_tau
        if self.adaptive:
            state.tau, acc[:m] = update_tau(state, b, state.zeta2, sd[:m], rng, cfg.log_precision_sd, bound)
            state.zeta2 = update_zeta2(state.tau, self.Kh, rng, cfg.ig_shape, cfg.ig_rate)
        else:
            lp = self.target.log_lambda(b, state.sigma2, state.rho)
            state.tau[0], acc[0] = _mh_step(state.tau[0], lp, sd[0], rng, bound)
        if self.est_rho:
            lr = self.target.log_rho(b, state.sigma2, math.exp(state.tau[0]))
            r_new, acc[-1] = _mh_step(math.log(state.rho), lr, sd[-1], rng, bound)
            state.rho = math.exp(r_new)
        return acc


def run_chain(y, X, model, cfg: ChainConfig, callback=None) -> Samples:
    """Run one chain and return the thinned post-burn-in draws.

    ``model`` is a prior kind (see ``PRIOR_KINDS``) or any object with a
    ``prior`` attribute holding one.
    """
    kind = getattr(model, "prior", model)
    if kind not in PRIOR_KINDS:
        raise ValueError(f"run_chain handles {PRIOR_KINDS}, got {kind!r}")
    y = np.asarray(y, dtype=float)
    gram = Gram.from_data(X, y)
    K = gram.XtX.shape[0]
    sweep = Transition(kind, K, cfg)
    rng = make_rng(cfg.seed, "chain")
    state = _initial_state(kind, gram, y, cfg, K, sweep.m_tau)

    log_sd = np.full(sweep.n_mh, math.log(cfg.proposal_sd))
    acc_count = np.zeros(sweep.n_mh)
    kept = [t for t in range(cfg.burn_in, cfg.n_iter) if (t - cfg.burn_in) % cfg.thin == 0]
    n_keep = len(kept)
    out_b = np.empty((n_keep, K))
    out_tau = np.empty((n_keep, sweep.m_tau))
    out_s2 = np.empty(n_keep)
    out_z2 = np.empty(n_keep)
    out_rho = np.empty(n_keep)
    j = 0

    for t in range(cfg.n_iter):
        try:
            acc = sweep.step(state, gram, rng, np.exp(log_sd))
        except NotPositiveDefinite as exc:
            err = NotPositiveDefinite(f"b update failed at iteration {t}: {exc}")
            err.iteration = t
            raise err from exc
        if t < cfg.burn_in:
            if cfg.adapt_proposals:
                gamma = min(0.5, 2.0 / (t + 1) ** 0.6)
                log_sd += gamma * (acc - cfg.target_accept)
        else:
            acc_count += acc
            if j < n_keep and t == kept[j]:
                out_b[j] = state.b
                out_tau[j] = state.tau
                out_s2[j] = state.sigma2
                out_z2[j] = state.zeta2
                out_rho[j] = state.rho
                j += 1
        if callback is not None:
            callback(t, state)

    n_post = cfg.n_iter - cfg.burn_in
    return Samples(
        kind=kind, iteration=np.asarray(kept, dtype=np.int64), b=out_b, tau=out_tau,
        sigma2=out_s2, zeta2=out_z2, rho=out_rho,
        acceptance_rates=acc_count / n_post, proposal_sd=np.exp(log_sd),
    )


# ---------------------------------------------------------------------------
# summaries


@dataclass
class PosteriorSummary:
    beta_mean: np.ndarray
    beta_lower: np.ndarray
    beta_upper: np.ndarray
    ed: float
    acceptance_rates: np.ndarray
    sample_count: int
    sigma2_mean: float = float("nan")
    penalty: np.ndarray = field(default=None, repr=False)


def posterior_penalty(samples: Samples, K: int) -> np.ndarray:
    """Penalty S evaluated at the posterior means of its parameters."""
    lam_hat = samples.lambdas.mean(axis=0)
    rho_hat = float(samples.rho.mean())
    return prior_precision(samples.kind, K, lam_hat, rho_hat)


def summarize(samples: Samples, basis, X, model=None) -> PosteriorSummary:
    if len(samples) == 0:
        raise ValueError("no samples to summarise")
    basis = np.asarray(basis, dtype=float)
    curves = samples.b @ basis.T
    lo, hi = np.quantile(curves, [0.025, 0.975], axis=0)
    mean = basis @ samples.b.mean(axis=0)
    X = np.asarray(X, dtype=float)
    XtX = X.T @ X
    S = posterior_penalty(samples, XtX.shape[0])
    ed = effective_dimension_gram(XtX, S)
    return PosteriorSummary(
        beta_mean=mean,
        beta_lower=np.minimum(lo, mean),
        beta_upper=np.maximum(hi, mean),
        ed=ed,
        acceptance_rates=samples.acceptance_rates,
        sample_count=len(samples),
        sigma2_mean=float(samples.sigma2.mean()),
        penalty=S,
    )


def write_samples_csv(samples: Samples, path) -> None:
    """One row per retained draw: iteration, b_*, tau_*, sigma2, zeta2, rho."""
    K = samples.b.shape[1]
    m = samples.tau.shape[1]
    header = ["iteration"] + [f"b_{k + 1}" for k in range(K)] + [f"tau_{k + 1}" for k in range(m)]
    header += ["sigma2", "zeta2", "rho"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(samples)):
            row = [int(samples.iteration[i])] + [repr(float(v)) for v in samples.b[i]]
            row += [repr(float(v)) for v in samples.tau[i]]
            row += [repr(float(samples.sigma2[i])), repr(float(samples.zeta2[i])), repr(float(samples.rho[i]))]
            w.writerow(row)
