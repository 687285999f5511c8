"""True lag curves, AR(1) data generation, error metrics and the replicated studies."""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import lfilter

from .models import fit, model_spec
from .numerics import make_rng
from .sampler import ChainConfig

log = logging.getLogger(__name__)


class Scenario(str, Enum):
    DELAYED_PEAK = "DelayedPeak"
    DECAY_CURVE = "DecayCurve"
    FLAT_RESPONSE = "FlatResponse"
    DISPLACEMENT = "Displacement"
    SHARP_PEAK = "SharpPeak"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).replace("_", "").replace(" ", "").lower()
        for s in cls:
            if s.value.lower() == key:
                return s
        if key == "nullcurve":
            return cls.FLAT_RESPONSE
        raise ValueError(f"unknown scenario {name!r}")


# shape parameters, all overridable through lag_curve(**params)
CURVE_PARAMS = {
    Scenario.DECAY_CURVE: dict(a=0.10, ell=7.0),
    Scenario.DELAYED_PEAK: dict(a=0.10, m=12.0, w=5.0),
    Scenario.SHARP_PEAK: dict(a=0.15, ell=1.5),
    Scenario.DISPLACEMENT: dict(a=0.10, m1=4.0, w1=3.0, d=0.05, m2=18.0, w2=6.0),
    Scenario.FLAT_RESPONSE: dict(),
}


def lag_curve(scenario, p: int, **params) -> np.ndarray:
    """beta_0..beta_p for one of the five scenarios."""
    s = Scenario.parse(scenario)
    if p < 1:
        raise ValueError("p must be >= 1")
    kw = {**CURVE_PARAMS[s], **params}
    j = np.arange(p + 1, dtype=float)
    if s == Scenario.FLAT_RESPONSE:
        return np.zeros(p + 1)
    if s in (Scenario.DECAY_CURVE, Scenario.SHARP_PEAK):
        return kw["a"] * np.exp(-j / kw["ell"])
    if s == Scenario.DELAYED_PEAK:
        return kw["a"] * np.exp(-((j - kw["m"]) ** 2) / (2 * kw["w"] ** 2))
    return kw["a"] * np.exp(-((j - kw["m1"]) ** 2) / (2 * kw["w1"] ** 2)) - kw["d"] * np.exp(
        -((j - kw["m2"]) ** 2) / (2 * kw["w2"] ** 2)
    )


@dataclass(frozen=True)
class SimConfig:
    n: int = 500
    p_true: int = 50
    phi_x: float = 0.5
    sd_x: float = 0.1
    phi_e: float = 0.2
    sd_e: float = 0.1
    reps: int = 200
    master_seed: int = 0

    def __post_init__(self):
        if not (abs(self.phi_x) < 1 and abs(self.phi_e) < 1):
            raise ValueError("AR coefficients must lie in (-1, 1)")
        if self.n <= self.p_true:
            raise ValueError(f"n={self.n} must exceed p_true={self.p_true}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.sd_x <= 0 or self.sd_e <= 0:
            raise ValueError("innovation sds must be positive")


def ar1(n, phi, sd, rng):
    """Stationary AR(1): first value from N(0, sd^2 / (1 - phi^2))."""
    e = sd * rng.standard_normal(n)
    e[0] /= math.sqrt(1.0 - phi * phi)
    return lfilter([1.0], [1.0, -phi], e)


def gen_covariate(cfg: SimConfig, rng) -> np.ndarray:
    return ar1(cfg.n, cfg.phi_x, cfg.sd_x, rng)


def gen_response(x, beta, cfg: SimConfig, rng) -> np.ndarray:
    """y_t = sum_j beta_j x_{t-j} + eps_t for t = p_true..n-1 (0-based), AR(1) errors.

    Returns the usable window, length n - p_true.
    """
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    p = len(beta) - 1
    if len(x) <= p:
        raise ValueError("series shorter than the lag curve")
    signal = np.convolve(x, beta, mode="valid")
    eps = ar1(len(signal), cfg.phi_e, cfg.sd_e, rng)
    return signal + eps


def simulate_dataset(scenario, cfg: SimConfig, rep: int, **curve_params):
    """(x, y, beta) for one replicate; y has NaN before index p_true."""
    rng = make_rng(cfg.master_seed, "data", Scenario.parse(scenario).value, rep)
    beta = lag_curve(scenario, cfg.p_true, **curve_params)
    x = gen_covariate(cfg, rng)
    yw = gen_response(x, beta, cfg, rng)
    y = np.concatenate([np.full(cfg.p_true, np.nan), yw])
    return x, y, beta


def rmse(beta_hat, beta_true) -> float:
    e = _err(beta_hat, beta_true)
    return float(np.sqrt(np.mean(e**2)))


def bias2(beta_hat, beta_true) -> float:
    """Squared mean pointwise error."""
    return float(np.mean(_err(beta_hat, beta_true)) ** 2)


def mc_bias2(curves, beta_true) -> float:
    """Mean over lags of (replicate-averaged estimate - truth)^2, scaled x 1e3."""
    if not curves or any(c is None for c in curves):
        return float("nan")
    avg = np.mean(np.asarray(curves, dtype=float), axis=0)
    return 1e3 * float(np.mean(_err(avg, beta_true) ** 2))


def _err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a - b


def pad_curve(beta, p):
    """True curve extended with zeros out to lag p."""
    out = np.zeros(p + 1)
    out[: len(beta)] = beta
    return out


# ---------------------------------------------------------------------------
# studies


@dataclass
class StudyRow:
    scenario: str
    model: str
    p: int
    rmse: float  # x 1e3
    bias2: float  # x 1e3
    ed: float
    reps: int
    failures: int = 0
    coverage: float = float("nan")
    # squared bias of the replicate-averaged curve, x 1e3
    mc_bias2: float = float("nan")

    def as_dict(self):
        return asdict(self)


@dataclass
class ReplicateResult:
    scenario: str
    model: str
    p: int
    rep: int
    rmse: float = float("nan")
    bias2: float = float("nan")
    ed: float = float("nan")
    coverage: float = float("nan")
    elapsed: float = 0.0
    error: str = ""
    beta_hat: np.ndarray | None = field(default=None, repr=False)
    truth: np.ndarray | None = field(default=None, repr=False)


def chain_seed(master_seed, scenario, model, rep, p):
    """Chain seed derived from the cell identity, never from scheduling order."""
    return int(make_rng(master_seed, "chain", scenario, model, rep, p).integers(0, 2**63))


def _run_replicate(task):
    scenario, model, p, rep, cfg, chain_cfg, reading = task
    x, y, beta = simulate_dataset(scenario, cfg, rep)
    truth = pad_curve(beta, p)
    seed = chain_seed(cfg.master_seed, scenario, model, rep, p)
    out = ReplicateResult(scenario, model, p, rep)
    t0 = time.perf_counter()
    try:
        # a copy of the chain config carrying the derived seed
        ccfg = ChainConfig(**{**asdict(chain_cfg), "seed": seed})
        res = fit(model_spec(model, reading), x, y, p, ccfg)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        out.elapsed = time.perf_counter() - t0
        return out
    bh = res.summary.beta_mean
    out.rmse = rmse(bh, truth)
    out.bias2 = bias2(bh, truth)
    out.ed = res.summary.ed
    out.coverage = float(np.mean((res.summary.beta_lower <= truth) & (truth <= res.summary.beta_upper)))
    out.elapsed = time.perf_counter() - t0
    out.beta_hat = bh
    out.truth = truth
    return out


def _execute(tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_replicate, tasks, chunksize=1))
    else:
        results = [_run_replicate(t) for t in tasks]
    for r in results:
        if r.error:
            log.warning("%s %s p=%d rep=%d failed: %s", r.scenario, r.model, r.p, r.rep, r.error)
        else:
            log.info("%s %s p=%d rep=%d rmse=%.5f ed=%.2f (%.1fs)",
                     r.scenario, r.model, r.p, r.rep, r.rmse, r.ed, r.elapsed)
    return results


def aggregate(results, reps):
    """Average successful replicates per (scenario, model, p), in first-seen order."""
    cells = {}
    for r in results:
        cells.setdefault((r.scenario, r.model, r.p), []).append(r)
    rows = []
    for (scen, mod, p), rs in cells.items():
        ok = [r for r in rs if not r.error]
        if ok:
            for r in ok:
                # Cauchy-Schwarz: mean error squared never exceeds mean squared error
                assert r.bias2 <= r.rmse**2 * (1 + 1e-12) + 1e-300
            rows.append(StudyRow(
                scen, mod, p,
                rmse=1e3 * float(np.mean([r.rmse for r in ok])),
                bias2=1e3 * float(np.mean([r.bias2 for r in ok])),
                ed=float(np.mean([r.ed for r in ok])),
                reps=len(ok), failures=len(rs) - len(ok),
                coverage=float(np.mean([r.coverage for r in ok])),
                mc_bias2=mc_bias2([r.beta_hat for r in ok], ok[0].truth),
            ))
        else:
            rows.append(StudyRow(scen, mod, p, math.nan, math.nan, math.nan, 0, len(rs)))
    return rows


def run_study(models, scenarios, cfg: SimConfig, chain_cfg: ChainConfig, workers: int = 1,
              return_replicates: bool = False, reading: str = "penalty"):
    """Fit every model to ``cfg.reps`` datasets per scenario at p = p_true."""
    models = [model_spec(m).id.value for m in models]
    scenarios = [Scenario.parse(s).value for s in scenarios]
    tasks = [
        (s, m, cfg.p_true, r, cfg, chain_cfg, reading)
        for s in scenarios for m in models for r in range(cfg.reps)
    ]
    results = _execute(tasks, workers)
    rows = aggregate(results, cfg.reps)
    return (rows, results) if return_replicates else rows


def run_misspec_study(p_values=(50, 75, 100, 125), cfg: SimConfig | None = None,
                      chain_cfg: ChainConfig | None = None, models=("M1", "M2", "M3", "M4", "M5"),
                      workers: int = 1, return_replicates: bool = False, reading: str = "penalty"):
    """Displacement data at p_true, each model fitted at every assumed maximum lag."""
    cfg = cfg or SimConfig()
    chain_cfg = chain_cfg or ChainConfig()
    if any(p < cfg.p_true for p in p_values):
        raise ValueError(f"all assumed lags must be >= p_true={cfg.p_true}")
    if any(p >= cfg.n for p in p_values):
        raise ValueError("assumed lags must be below the series length")
    models = [model_spec(m).id.value for m in models]
    scen = Scenario.DISPLACEMENT.value
    tasks = [(scen, m, p, r, cfg, chain_cfg, reading) for m in models for p in p_values for r in range(cfg.reps)]
    results = _execute(tasks, workers)
    rows = aggregate(results, cfg.reps)
    return (rows, results) if return_replicates else rows

