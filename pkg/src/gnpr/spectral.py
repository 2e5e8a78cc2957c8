"""Spectral initialization from the leading eigenpair of ``Y = (1/m) sum_j y_j a_j a_j^*``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, complex_gaussian_vector
from .errors import InvalidArgumentError

__all__ = ["PowerConfig", "PowerResult", "apply_Y", "power_method", "spectral_initialize"]


@dataclass
class PowerConfig:
    max_iters: int = 200
    tol: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidArgumentError("tol must be positive")


@dataclass
class PowerResult:
    """Outcome of :func:`power_method`; unpacks as ``(eigenvalue, vector)``."""

    eigenvalue: np.ndarray | float
    vector: np.ndarray
    iterations: np.ndarray | int
    converged: np.ndarray | bool
    status: str = "ok"
    rayleigh_history: list = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter((self.eigenvalue, self.vector))


def _check_y(e, y):
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != e.m:
        raise InvalidArgumentError(f"y has {y.shape[-1]} entries, ensemble has m={e.m}")
    return y


def apply_Y(e, y, v):
    """``(1/m) adjoint(e, y * forward(e, v))``."""
    y = _check_y(e, y)
    return e.adjoint(y * e.forward(v)) / e.m


def _norm(v):
    return np.linalg.norm(v, axis=-1)


def power_method(e, y, cfg: PowerConfig | None = None, rng: RngStream | None = None,
                 start=None) -> PowerResult:
    """Power iteration for the top eigenpair of ``Y``.

    Stops once ``||Yv - lambda v|| <= max(tol * lambda, tiny)`` or after
    ``cfg.max_iters`` applications of ``Y``. Leading axes of ``y`` (or of
    the ensemble weights) are treated as independent problems; converged
    problems are frozen while the others keep iterating. When ``y`` is all
    zero the result is ``(0, 0)`` with ``status="zero_measurements"``.
    """
    cfg = cfg or PowerConfig()
    y = _check_y(e, y)
    weights = getattr(e, "weights", None)
    y_eff = y if weights is None else y * weights
    batch = y_eff.shape[:-1]
    if start is None:
        start = complex_gaussian_vector(e.n, rng or RngStream(0))
    v = np.broadcast_to(np.asarray(start, dtype=np.complex128), batch + (e.n,)).copy()
    v /= _norm(v)[..., None]

    zero = np.all(y_eff == 0, axis=-1)
    tiny = np.finfo(float).tiny ** 0.5
    active = ~zero
    lam = np.zeros(batch)
    iters = np.zeros(batch, dtype=int)
    history = []
    for _ in range(cfg.max_iters):
        if not np.any(active):
            break
        w = apply_Y(e, y, v)
        rq = np.real(np.sum(np.conj(v) * w, axis=-1))
        lam = np.where(active, rq, lam)
        history.append(lam.copy())
        iters = iters + active
        res = _norm(w - rq[..., None] * v)
        done = res <= np.maximum(cfg.tol * np.abs(rq), tiny)
        wn = _norm(w)
        step = np.where((active & ~done)[..., None], w / np.where(wn > 0, wn, 1.0)[..., None], v)
        v = step
        active = active & ~done
    converged = ~active & ~zero
    v = np.where(zero[..., None], 0.0, v)
    lam = np.where(zero, 0.0, lam)
    status = "ok"
    if np.any(zero):
        status = "zero_measurements"
        warnings.warn("all measurements are zero; spectral estimate is the zero vector",
                      RuntimeWarning, stacklevel=2)
    elif not np.all(converged):
        status = "max_iters"
    if not batch:
        lam, iters, converged = float(lam), int(iters), bool(converged)
    return PowerResult(lam, v, iters, converged, status, history)


def spectral_initialize(e, ms, cfg: PowerConfig | None = None, rng: RngStream | None = None,
                        start=None, return_result=False):
    """``z0 = sqrt(max(lambda1, 0) / 2) * v1``."""
    y = ms.y if hasattr(ms, "y") else ms
    res = power_method(e, y, cfg, rng, start=start)
    scale = np.sqrt(np.maximum(res.eigenvalue, 0.0) / 2)
    z0 = np.asarray(scale)[..., None] * res.vector
    return (z0, res) if return_result else z0
