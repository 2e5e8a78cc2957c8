"""Wirtinger flow (reimplementation) as the first-order comparison method."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, as_complex_vector
from .errors import InvalidArgumentError
from .gauss_newton import IterateTrace, StepInfo, _record, residual
from .spectral import PowerConfig, spectral_initialize

__all__ = ["WfConfig", "wirtinger_gradient", "wf_solve"]


@dataclass
class WfConfig:
    """Step schedule ``mu_k = min(1 - exp(-k / ramp), mu_max)``."""

    max_iters: int = 2500
    mu_max: float = 0.2
    ramp: float = 330.0
    residual_tol: float = 1e-14
    stop_error: float | None = None
    power: PowerConfig = field(default_factory=PowerConfig)

    def __post_init__(self):
        if isinstance(self.power, dict):
            self.power = PowerConfig(**self.power)
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if self.mu_max < 0 or self.ramp <= 0 or self.residual_tol < 0:
            raise InvalidArgumentError("invalid step schedule")


def wirtinger_gradient(e, ms, z):
    """``g = (2/m) adjoint(e, (|b|^2 - y) * b)`` with ``b = forward(e, z)``.

    First-order model: ``f(z + t d) = f(z) + 2 t Re(g^* d) + O(t^2)``.
    """
    b = e.forward(z)
    F = residual(e, ms, z) * np.sqrt(e.m)
    return 2.0 / e.m * e.adjoint(F * b)


def wf_solve(e, ms, cfg: WfConfig | None = None, x_opt=None, rng: RngStream | None = None, z0=None):
    """Gradient descent ``z <- z - (mu_k / ||z0||^2) g(z)`` from the spectral start.

    The trace has the same layout as the Gauss-Newton one; ``inner_iterations``
    is always 0.
    """
    cfg = cfg or WfConfig()
    t0 = time.perf_counter()
    x = None if x_opt is None else as_complex_vector(x_opt, "x_opt")
    xnorm = 0.0 if x is None else float(np.linalg.norm(x))
    trace = IterateTrace()
    if z0 is None:
        z, pres = spectral_initialize(e, ms, cfg.power, rng, return_result=True)
        trace.power_status = pres.status
    else:
        z = as_complex_vector(z0, "z0").copy()
    trace.z0 = z.copy()
    trace.records.append(_record(e, ms, z, x, 0, None, t0, xnorm))
    f0 = trace.records[0].residual
    z0_norm2 = float(np.sum(np.abs(z) ** 2))
    if z0_norm2 == 0:
        warnings.warn("zero initial point: gradient flow is stuck", RuntimeWarning, stacklevel=2)
        trace.status = "zero_iterate"
        return z, trace

    trace.status = "max_iters"
    for k in range(1, cfg.max_iters + 1):
        mu = min(1.0 - np.exp(-k / cfg.ramp), cfg.mu_max)
        step = -(mu / z0_norm2) * wirtinger_gradient(e, ms, z)
        defect = abs(float(np.imag(np.vdot(step, z))))
        z = z + step
        rec = _record(e, ms, z, x, k, StepInfo(float(np.linalg.norm(step)), defect, 0), t0, xnorm)
        trace.records.append(rec)
        if not np.isfinite(rec.residual):
            trace.status = "diverged"
            break
        if cfg.stop_error is not None and rec.relative_error is not None \
                and rec.relative_error <= cfg.stop_error:
            trace.status = "target_reached"
            break
        if rec.residual <= cfg.residual_tol * f0:
            trace.status = "converged"
            break
    return z, trace
