"""Fidelity of continuous-variable teleportation of coherent states with tunable gains and beam-splitter angle."""

from .averaging import (
    CircleDist,
    GaussDist,
    LineDist,
    NoInteriorMax,
    avg_fidelity,
    gauss_opt_fidelity,
    gauss_opt_gain,
    r_max_circle,
    r_max_gauss,
)
from .core import ChannelParams, DomainError, GaussianCF2, NonPositiveG, TeleporterParams, tmsv_cf
from .fidelity import (
    CoherentAmplitude,
    ThresholdWarning,
    eps_independent_fidelity,
    kernel,
    optimal_eps_independent_fidelity,
    point_fidelity,
    r_max_eps_independent,
    theta_stationarity_gap,
)
from .optimize import FreeParamSet, OptimizationResult, maximize, optimize_profile

__all__ = [
    "ChannelParams", "CircleDist", "CoherentAmplitude", "DomainError", "FreeParamSet", "GaussDist",
    "GaussianCF2", "LineDist", "NoInteriorMax", "NonPositiveG", "OptimizationResult", "TeleporterParams",
    "ThresholdWarning", "avg_fidelity", "eps_independent_fidelity", "gauss_opt_fidelity", "gauss_opt_gain",
    "kernel", "maximize", "optimal_eps_independent_fidelity", "optimize_profile", "point_fidelity",
    "r_max_circle", "r_max_eps_independent", "r_max_gauss", "theta_stationarity_gap", "tmsv_cf",
]
