"""Desk-scale numerical checks of the convergence theory.

* tangent basis ``U(z)`` of ``S(z) = {w : Im(w^* z) = 0}`` and the reduced
  Gauss-Newton matrix ``H(z) = [U; conj(U)]^* A(z)^* A(z) [U; conj(U)]``;
* leave-one-out sequences, run for every sample at once by zero-masking;
* empirical convergence order of an error sequence.

Everything here is dense or exhaustive and size-guarded; none of it is on
the solver's hot path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_complex_vector, complex_gaussian_vector, complex_rep, dist, real_rep
from .errors import GuardError, InvalidArgumentError, NotEnoughPointsError
from .gauss_newton import JacobianOperator, SolverConfig, _inner_solve, _y_of, incoherence, solve
from .sensing import MaskedEnsemble
from .spectral import spectral_initialize

__all__ = [
    "TangentBasis",
    "build_tangent_basis",
    "dense_gn_matrix",
    "hessian_matrix",
    "HessianBounds",
    "hessian_bounds",
    "loo_solve",
    "LooReport",
    "loo_report",
    "convergence_order",
    "pooled_convergence_order",
]

HESSIAN_MAX_N = 64
LOO_MAX_M = 512


@dataclass
class TangentBasis:
    """Complex ``n x (2n-1)`` matrix with real-orthonormal columns spanning ``S(z)``."""

    U: np.ndarray
    z: np.ndarray

    @property
    def stacked(self):
        """``[U; conj(U)]``, shape ``(2n, 2n-1)``."""
        return np.vstack([self.U, self.U.conj()])


def build_tangent_basis(z) -> TangentBasis:
    """Householder construction of an orthonormal basis of ``real_rep(i z)^perp``."""
    z = as_complex_vector(z)
    if z.ndim != 1:
        raise InvalidArgumentError("z must be a single vector")
    nz = np.linalg.norm(z)
    if nz == 0:
        raise InvalidArgumentError("tangent space undefined at z = 0")
    t = real_rep(1j * z) / nz
    k = int(np.argmax(np.abs(t)))
    v = t.copy()
    v[k] += np.copysign(1.0, t[k])
    P = np.eye(t.size) - 2.0 * np.outer(v, v) / (v @ v)
    # P is an orthogonal reflector mapping t onto -sign(t_k) e_k; its other
    # columns span t^perp
    cols = np.delete(P, k, axis=1)
    return TangentBasis(U=complex_rep(cols.T).T, z=z)


def dense_gn_matrix(e, z):
    """Complex ``m x 2n`` Gauss-Newton matrix ``A(z)`` acting on ``[delta; conj(delta)]``."""
    z = as_complex_vector(z)
    rows = e.matrix()  # row j is a_j^*
    b = rows @ z
    return np.hstack([np.conj(b)[:, None] * rows, b[:, None] * rows.conj()]) / np.sqrt(e.m)


def hessian_matrix(e, z, method="dense"):
    """``H(z)`` by dense products (``"dense"``) or Jacobian column probes (``"probe"``)."""
    basis = build_tangent_basis(z)
    if method == "dense":
        A = dense_gn_matrix(e, z)
        V = basis.stacked
        H = V.conj().T @ (A.conj().T @ A) @ V
        return H
    if method == "probe":
        J = JacobianOperator(e, basis.z)
        P = J.apply(real_rep(basis.U.T))
        return P @ P.T
    raise InvalidArgumentError(f"unknown method {method!r}")


@dataclass
class HessianBounds:
    lambda_min_H: float
    lambda_max_AA: float
    asymmetry: float
    imag_part: float
    z_norm2: float

    def holds(self, lower=1.8, upper=5.0):
        """Check ``H >= lower |z|^2`` and ``A^*A <= upper |z|^2``."""
        return self.lambda_min_H >= lower * self.z_norm2 and self.lambda_max_AA <= upper * self.z_norm2


def hessian_bounds(e, z) -> HessianBounds:
    """Extreme eigenvalues ``lambda_min(H(z))`` and ``lambda_max(A(z)^* A(z))``."""
    z = as_complex_vector(z)
    if e.n > HESSIAN_MAX_N:
        raise GuardError(f"hessian_bounds is dense; n={e.n} exceeds {HESSIAN_MAX_N}, use a smaller n")
    if np.linalg.norm(z) == 0:
        raise InvalidArgumentError("z must be nonzero")
    A = dense_gn_matrix(e, z)
    AA = A.conj().T @ A
    lam_aa = np.linalg.eigvalsh(AA)[-1]
    basis = build_tangent_basis(z)
    V = basis.stacked
    H = V.conj().T @ AA @ V
    Hr = H.real
    lam_h = np.linalg.eigvalsh(0.5 * (Hr + Hr.T))[0]
    return HessianBounds(
        lambda_min_H=float(lam_h),
        lambda_max_AA=float(lam_aa),
        asymmetry=float(np.max(np.abs(Hr - Hr.T))),
        imag_part=float(np.max(np.abs(H.imag))),
        z_norm2=float(np.sum(np.abs(z) ** 2)),
    )


def _loo_weights(m, indices):
    W = np.ones((len(indices), m))
    for row, l in enumerate(indices):
        if l is not None:
            W[row, l - 1] = 0.0
    return W


def loo_solve(e, ms, l, cfg: SolverConfig | None = None, rng: RngStream | None = None,
              x_opt=None, z0=None):
    """Run the full pipeline on the objective that omits sample ``l`` (1-based).

    Sample ``l`` is zero-masked in forward, adjoint and residual; the ``1/m``
    and ``1/sqrt(m)`` scalings still use the full ``m``. Returns ``(z, trace)``
    exactly like :func:`~gnpr.gauss_newton.solve`.
    """
    if not 1 <= l <= e.m:
        raise InvalidArgumentError(f"leave-one-out index {l} outside 1..{e.m}")
    masked = MaskedEnsemble(e, _loo_weights(e.m, [l])[0])
    return solve(masked, ms, cfg, x_opt, rng, z0=z0)


@dataclass
class LooReport:
    """Leave-one-out statistics for iterations ``k = 0..k_max``.

    Distances are divided by ``||x||`` so the normalised columns estimate the
    constants of the unit-norm theory: ``c2 = max_l dist(z_k, z_k^(l)) sqrt(m / log m)``
    and ``c1 = max_l |a_l^*(z_k - x e^{i phi(z_k)})| / sqrt(log m)``.
    """

    m: int
    n: int
    x_norm: float
    dist_to_x: np.ndarray            # (K,) relative dist(z_k, x)
    proximity: np.ndarray            # (K, m) relative dist(z_k, z_k^(l))
    loo_dist_to_x: np.ndarray        # (K, m) relative dist(z_k^(l), x)
    incoherence: np.ndarray          # (K,) max_l |a_l^*(z_k - x e^{i phi})| / ||x||

    @property
    def iterations(self):
        return np.arange(self.dist_to_x.shape[0])

    @property
    def proximity_max(self):
        return self.proximity.max(axis=1)

    @property
    def c2(self):
        return self.proximity_max * np.sqrt(self.m / np.log(self.m))

    @property
    def c1(self):
        return self.incoherence / np.sqrt(np.log(self.m))

    def within(self, c1_max=10.0, c2_max=10.0):
        return bool(np.all(self.c1 <= c1_max) and np.all(self.c2 <= c2_max))


def loo_report(e, ms, x, cfg: SolverConfig | None = None, k_max=8, rng: RngStream | None = None):
    """Run the full sequence and all ``m`` leave-one-out sequences for ``k_max`` steps.

    All ``m + 1`` sequences share the same power-iteration start vector (one
    draw from ``rng``) so the masked sample is the only difference between
    them. They are advanced together as one batch.
    """
    cfg = cfg or SolverConfig(inner_mode="to_convergence")
    if e.m > LOO_MAX_M:
        raise GuardError(f"leave-one-out report runs m+1 solves; m={e.m} exceeds {LOO_MAX_M}, use a smaller n or ratio")
    x = as_complex_vector(x, "x")
    m = e.m
    masked = MaskedEnsemble(e, _loo_weights(m, [None] + list(range(1, m + 1))))
    y = _y_of(ms)
    start = complex_gaussian_vector(e.n, rng or RngStream(0))
    z = spectral_initialize(masked, y, cfg.power, start=start)

    xnorm = float(np.linalg.norm(x))
    d_x, prox, loo_x, inc = [], [], [], []
    for k in range(k_max + 1):
        if k:
            delta, _ = _inner_solve(masked, y, z, cfg)
            z = z + delta
        d_x.append(dist(z[0], x) / xnorm)
        prox.append(dist(z[1:], np.broadcast_to(z[0], z[1:].shape)) / xnorm)
        loo_x.append(dist(z[1:], np.broadcast_to(x, z[1:].shape)) / xnorm)
        inc.append(float(incoherence(e, z[0], x)) / xnorm)
    return LooReport(m=m, n=e.n, x_norm=xnorm, dist_to_x=np.array(d_x), proximity=np.array(prox),
                     loo_dist_to_x=np.array(loo_x), incoherence=np.array(inc))


def convergence_order(trace, lo=1e-10, hi=1e-2):
    """Least-squares slope of ``log e_{k+1}`` against ``log e_k``.

    Uses the longest run of consecutive errors inside ``[lo, hi]``. Accepts an
    :class:`~gnpr.gauss_newton.IterateTrace` or a plain error sequence.
    Returns ``(slope, (first, last))`` with the window as inclusive indices.
    """
    errors = np.asarray(trace.errors if hasattr(trace, "errors") else trace, dtype=float)
    inside = (errors >= lo) & (errors <= hi) & np.isfinite(errors)
    best = (0, -1)
    start = None
    for i, ok in enumerate(np.append(inside, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - 1 - start > best[1] - best[0]:
                best = (start, i - 1)
            start = None
    first, last = best
    if last - first + 1 < 3:
        raise NotEnoughPointsError("need at least 3 consecutive errors inside the window")
    le = np.log(errors[first:last + 1])
    slope = np.polyfit(le[:-1], le[1:], 1)[0]
    return float(slope), (first, last)


def pooled_convergence_order(traces, lo=1e-10, hi=1e-2):
    """Slope fitted to every consecutive pair ``(e_k, e_{k+1})`` inside ``[lo, hi]``
    across several runs.

    A quadratically convergent run typically crosses the window in two or
    three iterates, too few for a per-run fit; pooling recovers the estimate.
    Returns ``(slope, number_of_pairs)``.
    """
    pairs = []
    for tr in traces:
        e = np.asarray(tr.errors if hasattr(tr, "errors") else tr, dtype=float)
        ok = (e >= lo) & (e <= hi)
        pairs.extend((e[k], e[k + 1]) for k in range(e.size - 1) if ok[k] and ok[k + 1])
    if len(pairs) < 2:
        raise NotEnoughPointsError("need at least 2 transitions inside the window")
    p = np.log(np.array(pairs))
    return float(np.polyfit(p[:, 0], p[:, 1], 1)[0]), len(pairs)
