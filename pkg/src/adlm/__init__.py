"""Bayesian adaptive distributed lag models."""
from .basis import BasisSpec, Placement, build_design, default_n_basis, eval_basis, log_knots, uniform_knots
from .kernels import BACKEND
from .models import FitResult, ModelId, ModelSpec, aic, fit, model_ed, model_spec
from .numerics import NotPositiveDefinite, effective_dimension, make_rng
from .penalty import PrecisionComponents, build_K_hyper, build_P, build_Q
from .sampler import ChainConfig, ChainState, PosteriorSummary, run_chain, summarize
from .simulate import Scenario, SimConfig, StudyRow, lag_curve, run_misspec_study, run_study, simulate_dataset

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BasisSpec", "ChainConfig", "ChainState", "FitResult", "ModelId", "ModelSpec",
    "NotPositiveDefinite", "Placement", "PosteriorSummary", "PrecisionComponents", "Scenario", "SimConfig",
    "StudyRow", "aic", "build_K_hyper", "build_P", "build_Q", "build_design", "default_n_basis",
    "effective_dimension", "eval_basis", "fit", "lag_curve", "log_knots", "make_rng", "model_ed", "model_spec",
    "run_chain", "run_misspec_study", "run_study", "simulate_dataset", "summarize", "uniform_knots",
]
