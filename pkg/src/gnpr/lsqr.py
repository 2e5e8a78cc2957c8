"""LSQR (Paige & Saunders) for real least-squares problems ``min ||M u - b||``.

Started from ``u = 0`` the Krylov iterates stay in ``range(M^T)``, so the
converged solution is the minimal-norm least-squares solution. The
recurrences are vectorised over leading batch axes of ``rhs`` so many
independent systems with a shared (batched) operator can be solved at once;
each system stops on its own criteria and is frozen afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBreakdownError

__all__ = ["LsqrResult", "lsqr_minnorm"]


@dataclass
class LsqrResult:
    x: np.ndarray
    iterations: np.ndarray | int
    residual_norm: np.ndarray | float
    normal_residual_norm: np.ndarray | float
    converged: np.ndarray | bool


def _norm(v):
    return np.linalg.norm(v, axis=-1)


def _safe_div(a, b):
    return a / np.where(b > 0, b, 1.0)


def lsqr_minnorm(apply, adjoint_apply, rhs, max_iters, atol=1e-14, btol=None) -> LsqrResult:
    """Approximate the minimal-norm solution of ``min ||M u - rhs||``.

    Parameters
    ----------
    apply, adjoint_apply : callable
        ``u -> M u`` and ``r -> M^T r``; both must accept leading batch axes.
    rhs : ndarray, shape (..., m)
    max_iters : int
        Bidiagonalization steps allowed per system.
    atol : float
        Stops when ``||M^T r|| <= atol ||M|| ||r||`` (least-squares test) or
        ``||r|| <= btol ||rhs|| + atol ||M|| ||u||`` (consistent test), with
        ``||M||`` the usual Frobenius estimate. ``btol`` defaults to ``atol``.

    Raises
    ------
    NumericalBreakdownError
        When a non-finite value shows up; carries the iteration index.
    """
    btol = atol if btol is None else btol
    b = np.asarray(rhs, dtype=np.float64)
    batch = b.shape[:-1]

    beta = _norm(b)
    u = b / np.where(beta > 0, beta, 1.0)[..., None]
    v = np.asarray(adjoint_apply(u), dtype=np.float64)
    alpha = _norm(v)
    v = v / np.where(alpha > 0, alpha, 1.0)[..., None]
    x = np.zeros(batch + (v.shape[-1],))
    if not np.all(np.isfinite(v)):
        raise NumericalBreakdownError("non-finite value in LSQR start-up", iteration=0)

    w = v.copy()
    phibar = beta.copy()
    rhobar = alpha.copy()
    bnorm = beta.copy()
    anorm2 = np.zeros(batch)
    rnorm = beta.copy()
    arnorm = alpha * beta
    # rhs = 0, or rhs orthogonal to range(M): u = 0 is already optimal
    active = (beta > 0) & (alpha > 0)
    converged = ~active
    iters = np.zeros(batch, dtype=int)

    for k in range(1, int(max_iters) + 1):
        if not np.any(active):
            break
        u = np.asarray(apply(v), dtype=np.float64) - alpha[..., None] * u
        beta = _norm(u)
        u = u / np.where(beta > 0, beta, 1.0)[..., None]
        anorm2 = anorm2 + alpha**2 + beta**2

        v = np.asarray(adjoint_apply(u), dtype=np.float64) - beta[..., None] * v
        alpha = _norm(v)
        v = v / np.where(alpha > 0, alpha, 1.0)[..., None]

        rho = np.hypot(rhobar, beta)
        c = _safe_div(rhobar, rho)
        s = _safe_div(beta, rho)
        theta = s * alpha
        rhobar_new = -c * alpha
        phi = c * phibar
        phibar_new = s * phibar

        a = active[..., None]
        x = np.where(a, x + _safe_div(phi, rho)[..., None] * w, x)
        w = np.where(a, v - _safe_div(theta, rho)[..., None] * w, w)
        rhobar = np.where(active, rhobar_new, rhobar)
        phibar = np.where(active, phibar_new, phibar)
        iters = iters + active

        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(phibar))):
            raise NumericalBreakdownError("non-finite value in LSQR", iteration=k)

        rnorm = np.where(active, phibar, rnorm)
        arnorm = np.where(active, phibar * alpha * np.abs(c), arnorm)
        anorm = np.sqrt(anorm2)
        xnorm = _norm(x)
        test1 = rnorm <= btol * bnorm + atol * anorm * xnorm
        test2 = arnorm <= atol * anorm * rnorm
        # alpha or beta vanishing means the Krylov space is exhausted
        done = test1 | test2 | (alpha == 0) | (beta == 0)
        converged = converged | (active & done)
        active = active & ~done

    if not batch:
        return LsqrResult(x, int(iters), float(rnorm), float(arnorm), bool(converged))
    return LsqrResult(x, iters, rnorm, arnorm, converged)
