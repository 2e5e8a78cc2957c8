"""Minimal-norm Gauss-Newton for complex phase retrieval.

The loss is ``f(z) = ||F(z)||^2`` with residuals
``F_j(z) = (|a_j^* z|^2 - y_j) / sqrt(m)``. In the identification
``C^n ~ R^{2n}`` the linearisation of ``F`` at ``z`` is the real ``m x 2n``
operator ``M u = (2/sqrt(m)) Re(conj(b) * forward(complex_rep(u)))`` with
``b = forward(z)``. ``M`` annihilates ``real_rep(i z)``, so each step takes
the minimal-norm least-squares solution ``u = -M^+ F(z)``, which is the
step constrained to ``Im(delta^* z) = 0``.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, align_phase, as_complex_vector, complex_rep, real_rep
from .errors import GuardError, InvalidArgumentError
from .lsqr import lsqr_minnorm
from .spectral import PowerConfig, spectral_initialize

__all__ = [
    "INNER_MODES",
    "JacobianOperator",
    "SolverConfig",
    "StepInfo",
    "IterRecord",
    "IterateTrace",
    "residual",
    "loss",
    "jacobian_apply",
    "jacobian_adjoint",
    "gn_step",
    "solve",
    "dense_jacobian",
    "dense_min_norm_step_oracle",
    "incoherence",
]

INNER_MODES = ("capped", "to_convergence", "dense_oracle")
DENSE_MAX_N = 16
DENSE_MAX_M = 4096


def _y_of(ms):
    return np.asarray(ms.y if hasattr(ms, "y") else ms, dtype=np.float64)


def _weights(e):
    return getattr(e, "weights", None)


def residual(e, ms, z):
    """``F_j = (|a_j^* z|^2 - y_j) / sqrt(m)``; zero-weighted samples give 0."""
    y = _y_of(ms)
    if y.shape[-1] != e.m:
        raise InvalidArgumentError(f"y has {y.shape[-1]} entries, ensemble has m={e.m}")
    F = (np.abs(e.forward(z)) ** 2 - y) / np.sqrt(e.m)
    w = _weights(e)
    return F if w is None else F * w


def loss(e, ms, z):
    """``f(z) = (1/m) sum_j (|a_j^* z|^2 - y_j)^2``."""
    F = residual(e, ms, z)
    return np.sum(F**2, axis=-1)


class JacobianOperator:
    """Real-linear Jacobian of ``F`` at ``z`` acting on ``R^{2n}``."""

    def __init__(self, e, z):
        self.ensemble = e
        self.z = np.asarray(z, dtype=np.complex128)
        self.b = e.forward(self.z)
        self.m, self.n = e.m, e.n
        self._scale = 2.0 / np.sqrt(e.m)

    @property
    def shape(self):
        return (self.m, 2 * self.n)

    def apply(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape[-1] != 2 * self.n:
            raise InvalidArgumentError(f"expected length {2 * self.n}, got {u.shape[-1]}")
        c = self.ensemble.forward(complex_rep(u))
        return self._scale * np.real(np.conj(self.b) * c)

    def adjoint(self, r):
        r = np.asarray(r, dtype=np.float64)
        if r.shape[-1] != self.m:
            raise InvalidArgumentError(f"expected length {self.m}, got {r.shape[-1]}")
        return real_rep(self._scale * self.ensemble.adjoint(r * self.b))


def jacobian_apply(J: JacobianOperator, u):
    return J.apply(u)


def jacobian_adjoint(J: JacobianOperator, r):
    return J.adjoint(r)


def dense_jacobian(e, z):
    """Dense real ``m x 2n`` Jacobian assembled column by column."""
    n = e.n
    J = JacobianOperator(e, z)
    return J.apply(np.eye(2 * n)).T


def dense_min_norm_step_oracle(e, ms, z):
    """Reference step ``-M^+ F(z)`` from a full SVD of the dense Jacobian.

    Singular values below ``max(m, 2n) * eps * sigma_max`` are treated as
    zero. Only for small problems (``n <= 16``).
    """
    z = as_complex_vector(z)
    if e.n > DENSE_MAX_N or e.m > DENSE_MAX_M:
        raise GuardError(f"dense oracle limited to n <= {DENSE_MAX_N}, m <= {DENSE_MAX_M}")
    M = dense_jacobian(e, z)
    F = residual(e, ms, z)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = max(M.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    u = -(Vt.T @ (inv * (U.T @ F)))
    return complex_rep(u)


@dataclass
class SolverConfig:
    """Outer/inner iteration limits of the Gauss-Newton solver.

    ``inner_mode`` selects how each linearised problem is solved:
    ``capped`` runs at most ``inner_max_iters`` LSQR steps, ``to_convergence``
    runs LSQR until its ``inner_atol`` tests pass (at most
    ``inner_conv_max_iters``, default ``8n``), and ``dense_oracle`` uses the
    SVD reference (tiny problems only).
    """

    max_outer: int = 50
    inner_max_iters: int = 10
    inner_atol: float = 1e-14
    inner_mode: str = "capped"
    inner_conv_max_iters: int | None = None
    residual_tol: float = 1e-14
    step_tol: float = 1e-14
    stop_error: float | None = None
    power: PowerConfig = field(default_factory=PowerConfig)

    def __post_init__(self):
        if isinstance(self.power, dict):
            self.power = PowerConfig(**self.power)
        if self.inner_mode not in INNER_MODES:
            raise InvalidArgumentError(f"inner_mode must be one of {INNER_MODES}")
        if self.max_outer < 1 or self.inner_max_iters < 1:
            raise InvalidArgumentError("iteration limits must be positive")
        if self.inner_atol < 0 or self.residual_tol < 0 or self.step_tol < 0:
            raise InvalidArgumentError("tolerances must be non-negative")


@dataclass
class StepInfo:
    step_norm: float
    orthogonality_defect: float
    inner_iterations: int


def _inner_solve(e, y, z, cfg):
    J = JacobianOperator(e, z)
    F = residual(e, y, z)
    if cfg.inner_mode == "dense_oracle":
        if np.ndim(z) > 1:
            delta = np.stack([dense_min_norm_step_oracle(e, y, zi) for zi in z])
            return delta, np.zeros(z.shape[:-1], dtype=int)
        return dense_min_norm_step_oracle(e, y, z), 0
    if cfg.inner_mode == "capped":
        iters = cfg.inner_max_iters
    else:
        iters = cfg.inner_conv_max_iters or 8 * e.n
    res = lsqr_minnorm(J.apply, J.adjoint, -F, iters, atol=cfg.inner_atol)
    return complex_rep(res.x), res.iterations


def gn_step(e, ms, z, cfg: SolverConfig | None = None):
    """One minimal-norm Gauss-Newton step: ``z_next = z - M(z)^+ F(z)``.

    Returns ``(z_next, StepInfo)``. Accepts a batch of iterates with shape
    ``(..., n)``; ``StepInfo`` fields are then arrays.
    """
    cfg = cfg or SolverConfig()
    z = as_complex_vector(z)
    if z.shape[-1] != e.n:
        raise InvalidArgumentError(f"iterate length {z.shape[-1]} does not match n={e.n}")
    if np.any(np.linalg.norm(z, axis=-1) == 0):
        raise InvalidArgumentError("Gauss-Newton step undefined at z = 0")
    delta, iters = _inner_solve(e, _y_of(ms), z, cfg)
    defect = np.abs(np.imag(np.sum(np.conj(delta) * z, axis=-1)))
    step = np.linalg.norm(delta, axis=-1)
    if np.ndim(step) == 0:
        return z + delta, StepInfo(float(step), float(defect), int(iters))
    return z + delta, StepInfo(step, defect, iters)


def incoherence(e, z, x):
    """``max_j |a_j^* (z - x e^{i phi(z)})|`` over all samples of ``e``."""
    base = getattr(e, "base", e)
    _, aligned = align_phase(z, x)
    return np.max(np.abs(base.forward(z - aligned)), axis=-1)


@dataclass
class IterRecord:
    """Metrics of iterate ``z_k``; record 0 describes the initial point."""

    iteration: int
    residual: float
    step_norm: float
    orthogonality_defect: float
    inner_iterations: int
    elapsed: float
    relative_error: float | None = None
    incoherence: float | None = None


@dataclass
class IterateTrace:
    records: list = field(default_factory=list)
    status: str = "running"
    z0: np.ndarray | None = None
    power_status: str = "ok"

    def __len__(self):
        return len(self.records)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.relative_error for r in self.records], dtype=float)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def outer_iterations(self) -> int:
        return len(self.records) - 1

    def first_below(self, threshold):
        """First iteration whose relative error is ``<= threshold`` (None if never)."""
        for r in self.records:
            if r.relative_error is not None and r.relative_error <= threshold:
                return r.iteration
        return None


def _record(e, ms, z, x, k, info, t0, xnorm):
    rec = IterRecord(
        iteration=k,
        residual=float(np.linalg.norm(residual(e, ms, z))),
        step_norm=info.step_norm if info else 0.0,
        orthogonality_defect=info.orthogonality_defect if info else 0.0,
        inner_iterations=info.inner_iterations if info else 0,
        elapsed=time.perf_counter() - t0,
    )
    if x is not None:
        _, aligned = align_phase(z, x)
        rec.relative_error = float(np.linalg.norm(z - aligned) / xnorm) if xnorm > 0 else float("nan")
        rec.incoherence = float(incoherence(e, z, x))
    return rec


def solve(e, ms, cfg: SolverConfig | None = None, x_opt=None, rng: RngStream | None = None,
          z0=None):
    """Spectral initialization followed by minimal-norm Gauss-Newton steps.

    Stops when ``||F(z_k)|| <= residual_tol ||F(z_0)||``, when
    ``||delta_k|| <= step_tol ||z_{k-1}||``, when the relative error drops to
    ``stop_error`` (needs ``x_opt``) or after ``max_outer`` steps.
    Non-convergence is reported through ``trace.status``, never raised.

    Returns
    -------
    z : ndarray
        Final iterate.
    trace : IterateTrace
    """
    cfg = cfg or SolverConfig()
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

    if np.linalg.norm(z) == 0:
        warnings.warn("zero iterate: Gauss-Newton cannot step", RuntimeWarning, stacklevel=2)
        trace.status = "zero_iterate"
        return z, trace

    trace.status = "max_outer"
    for k in range(1, cfg.max_outer + 1):
        z_prev_norm = np.linalg.norm(z)
        z, info = gn_step(e, ms, z, cfg)
        rec = _record(e, ms, z, x, k, info, t0, xnorm)
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
        if info.step_norm <= cfg.step_tol * z_prev_norm:
            trace.status = "converged"
            break
    return z, trace
