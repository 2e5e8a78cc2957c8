"""Minimal-norm Gauss-Newton phase retrieval."""
from .baselines import WfConfig, wf_solve
from .core import RngStream, align_phase, complex_gaussian_vector, complex_rep, dist, real_rep
from .gauss_newton import SolverConfig, gn_step, solve
from .sensing import (CDPEnsemble, GaussianEnsemble, MeasurementSet, gaussian_ensemble, measure,
                      sample_octanary_masks)
from .spectral import PowerConfig, spectral_initialize

__version__ = "0.1.0"

__all__ = [
    "RngStream", "align_phase", "complex_gaussian_vector", "complex_rep", "dist", "real_rep",
    "GaussianEnsemble", "CDPEnsemble", "MeasurementSet", "gaussian_ensemble", "measure",
    "sample_octanary_masks", "PowerConfig", "spectral_initialize", "SolverConfig", "gn_step",
    "solve", "WfConfig", "wf_solve", "__version__",
]
