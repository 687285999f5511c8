"""Successive-conditional (Geweke) check for the adaptive sampler.

Each chain starts from an exact draw of the joint prior, simulates data, and
applies ``sweeps`` full transitions, simulating fresh data before each one.
If every update leaves the joint (data, parameter) law invariant the end
state is again an exact prior draw. The end states of independent chains are
compared with independent prior draws by two-sample KS tests.
"""
import math

import numpy as np
from scipy import stats

from adlm.numerics import make_rng, sample_gaussian_precision
from adlm.penalty import build_K_hyper
from adlm.sampler import ChainState, Gram, Transition

from _oracles import icar_prior_draw


def prior_state(rng, cfg, K):
    """Exact draw from the truncated joint prior of the adaptive model."""
    m = K - 1
    B, L = cfg.log_precision_bound, cfg.log_precision_sd
    Kh = build_K_hyper(m)
    level = np.full((m, m), 1.0 / (m * m * L * L))
    # truncation acts on (zeta2, tau) jointly, as in the sampler's target
    while True:
        zeta2 = cfg.ig_rate / rng.gamma(cfg.ig_shape)
        tau = sample_gaussian_precision(rng, Kh / zeta2 + level, np.zeros(m))
        if np.all(np.abs(tau) <= B):
            break
    while True:
        log_rho = L * rng.standard_normal()
        if abs(log_rho) <= B:
            break
    sigma2 = cfg.ig_rate / rng.gamma(cfg.ig_shape)
    b = icar_prior_draw(rng, np.exp(tau), math.exp(log_rho), sigma2)
    return ChainState(b=b, tau=tau, sigma2=sigma2, zeta2=zeta2, rho=math.exp(log_rho))


def _features(s):
    return s.sigma2, s.zeta2, s.tau[0], math.log(s.rho)


def geweke_pvalues(cfg, seed, K=6, n=30, sweeps=20, draws=10_000):
    """KS p-values for sigma2, zeta2, tau_1 and log rho."""
    X = make_rng(seed, "X").standard_normal((n, K))
    step = Transition("adaptive", K, cfg)
    sd = np.ones(step.n_mh)
    rng = make_rng(seed, "geweke")
    marginal = np.array([_features(prior_state(rng, cfg, K)) for _ in range(draws)])
    successive = np.empty_like(marginal)
    for i in range(draws):
        s = prior_state(rng, cfg, K)
        for _ in range(sweeps):
            y = X @ s.b + math.sqrt(s.sigma2) * rng.standard_normal(n)
            step.step(s, Gram.from_data(X, y), rng, sd)
        successive[i] = _features(s)
    return [stats.ks_2samp(marginal[:, j], successive[:, j]).pvalue for j in range(marginal.shape[1])]
