"""Measurement ensembles, intensity measurements and noise models.

An ensemble maps a signal ``z`` to the complex vector ``b`` with
``b_j = a_j^* z``; intensities are ``y_j = |b_j|^2``. Forward and adjoint
actions broadcast over leading batch axes of their input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_complex_vector, complex_gaussian_vector, dist
from .errors import InvalidArgumentError, InvalidStateError

__all__ = [
    "GaussianEnsemble",
    "CDPEnsemble",
    "MaskedEnsemble",
    "MeasurementSet",
    "gaussian_ensemble",
    "sample_octanary_masks",
    "forward",
    "adjoint",
    "measure",
    "add_gaussian_noise",
    "add_poisson_noise",
    "snr_db",
    "mse_db",
    "calibrate_sigma",
]

DB_CLAMP = 300.0


class _Ensemble:
    m: int
    n: int

    def _check_signal(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if z.ndim == 0 or z.shape[-1] != self.n:
            raise InvalidArgumentError(
                f"signal length {z.shape[-1] if z.ndim else 0} does not match n={self.n}"
            )
        return z

    def _check_measurement(self, w):
        w = np.asarray(w)
        if w.ndim == 0 or w.shape[-1] != self.m:
            raise InvalidArgumentError(
                f"measurement length {w.shape[-1] if w.ndim else 0} does not match m={self.m}"
            )
        return w

    def matrix(self) -> np.ndarray:
        """Dense ``m x n`` matrix whose j-th row is ``a_j^*`` (built by probing)."""
        return self.forward(np.eye(self.n, dtype=np.complex128)).T


class GaussianEnsemble(_Ensemble):
    """Explicit sensing vectors ``a_j`` stored as rows of ``vectors`` (m x n)."""

    def __init__(self, vectors):
        vectors = np.array(vectors, dtype=np.complex128, ndmin=2)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise InvalidArgumentError("vectors must be a non-empty m x n array")
        if not np.all(np.isfinite(vectors)):
            raise InvalidArgumentError("sensing vectors must be finite")
        vectors.setflags(write=False)
        self.vectors = vectors
        self.m, self.n = vectors.shape
        self._fwd = np.ascontiguousarray(vectors.conj().T)

    def forward(self, z):
        return self._check_signal(z) @ self._fwd

    def adjoint(self, w):
        return np.asarray(self._check_measurement(w), dtype=np.complex128) @ self.vectors

    def matrix(self):
        return self.vectors.conj()

    def __repr__(self):
        return f"GaussianEnsemble(m={self.m}, n={self.n})"


class CDPEnsemble(_Ensemble):
    """Coded diffraction patterns: block ``l`` of ``b`` is ``DFT(conj(d_l) * z)``.

    The DFT is the unitary (``norm="ortho"``) one, so ``m = L n`` and the
    ensemble has the same scaling as the Gaussian one when ``E|d|^2 = 1``.
    """

    def __init__(self, masks):
        masks = np.array(masks, dtype=np.complex128, ndmin=2)
        if masks.ndim != 2 or masks.shape[0] < 1 or masks.shape[1] < 1:
            raise InvalidArgumentError("masks must be a non-empty L x n array")
        masks.setflags(write=False)
        self.masks = masks
        self.L, self.n = masks.shape
        self.m = self.L * self.n
        self._conj = masks.conj()

    def forward(self, z):
        z = self._check_signal(z)
        blocks = np.fft.fft(self._conj * z[..., None, :], axis=-1, norm="ortho")
        return blocks.reshape(z.shape[:-1] + (self.m,))

    def adjoint(self, w):
        w = np.asarray(self._check_measurement(w), dtype=np.complex128)
        blocks = np.fft.ifft(w.reshape(w.shape[:-1] + (self.L, self.n)), axis=-1, norm="ortho")
        return np.sum(self.masks * blocks, axis=-2)

    def __repr__(self):
        return f"CDPEnsemble(L={self.L}, n={self.n})"


class MaskedEnsemble(_Ensemble):
    """Ensemble with some samples zeroed out.

    ``weights`` has shape ``(m,)`` or ``(batch, m)``; a zero weight removes the
    sample from every forward/adjoint action while ``m`` (and with it every
    ``1/m`` normalisation downstream) is left unchanged.
    """

    def __init__(self, base, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape[-1] != base.m:
            raise InvalidArgumentError("weights must have one entry per sample")
        self.base = base
        self.weights = weights
        self.m, self.n = base.m, base.n

    def forward(self, z):
        return self.base.forward(z) * self.weights

    def adjoint(self, w):
        return self.base.adjoint(self._check_measurement(w) * self.weights)

    def __repr__(self):
        return f"MaskedEnsemble({self.base!r}, zeros={int(np.sum(self.weights == 0))})"


def gaussian_ensemble(m: int, n: int, rng: RngStream) -> GaussianEnsemble:
    """``m`` i.i.d. standard complex Gaussian sensing vectors of length ``n``."""
    if m < 1 or n < 1:
        raise InvalidArgumentError("m and n must be positive")
    return GaussianEnsemble(complex_gaussian_vector(n, rng, size=int(m)))


_OCTANARY_PHASES = np.array([1, -1, 1j, -1j], dtype=np.complex128)


def sample_octanary_masks(L: int, n: int, rng: RngStream) -> CDPEnsemble:
    """Draw ``L`` octanary masks.

    Each entry is ``b1 * b2`` with ``b1`` uniform on ``{1, -1, i, -i}`` and
    ``b2 = sqrt(2)/2`` with probability 4/5, ``sqrt(3)`` with probability 1/5.
    """
    if int(L) != L or int(n) != n or L < 1 or n < 1:
        raise InvalidArgumentError("L and n must be positive integers")
    g = rng.generator
    phase = _OCTANARY_PHASES[g.integers(0, 4, size=(int(L), int(n)))]
    modulus = np.where(g.random(size=(int(L), int(n))) < 0.8, np.sqrt(2) / 2, np.sqrt(3))
    return CDPEnsemble(phase * modulus)


def forward(e, z):
    """``b_j = a_j^* z`` for every sample."""
    return e.forward(z)


def adjoint(e, w):
    """``sum_j w_j a_j``; satisfies ``<forward(e, z), w> = <z, adjoint(e, w)>``."""
    return e.adjoint(w)


@dataclass(frozen=True)
class MeasurementSet:
    """Observed intensities ``y`` with the clean values and noise description."""

    y: np.ndarray
    y_clean: np.ndarray | None = None
    noise: str = "none"
    sigma: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise InvalidArgumentError("y must be a vector")
        object.__setattr__(self, "y", y)
        if self.y_clean is not None:
            yc = np.asarray(self.y_clean, dtype=np.float64)
            if yc.shape != y.shape:
                raise InvalidArgumentError("y_clean must match y")
            object.__setattr__(self, "y_clean", yc)
        if self.noise not in ("none", "gaussian", "poisson"):
            raise InvalidArgumentError(f"unknown noise kind {self.noise!r}")

    @property
    def m(self):
        return self.y.shape[0]

    @property
    def xi(self) -> np.ndarray:
        """Realised noise ``y - y_clean``."""
        if self.y_clean is None:
            raise InvalidStateError("clean intensities unavailable")
        return self.y - self.y_clean


def measure(e, x) -> MeasurementSet:
    """Noiseless intensities ``|a_j^* x|^2``."""
    x = as_complex_vector(x, "x")
    y = np.abs(e.forward(x)) ** 2
    return MeasurementSet(y=y, y_clean=y.copy(), noise="none")


def _require_clean(ms):
    if ms.noise != "none":
        raise InvalidStateError(f"measurements already carry {ms.noise} noise")
    return ms.y if ms.y_clean is None else ms.y_clean


def add_gaussian_noise(ms: MeasurementSet, sigma: float, rng: RngStream) -> MeasurementSet:
    """``y_j = y_clean_j + sigma * N(0, 1)``."""
    clean = _require_clean(ms)
    if not sigma >= 0:
        raise InvalidArgumentError("sigma must be non-negative")
    y = clean + sigma * rng.standard_normal(clean.shape)
    return MeasurementSet(y=y, y_clean=clean.copy(), noise="gaussian", sigma=float(sigma))


def add_poisson_noise(ms: MeasurementSet, rng: RngStream) -> MeasurementSet:
    """``y_j ~ Poisson(y_clean_j)`` independently."""
    clean = _require_clean(ms)
    if np.any(clean < 0):
        raise InvalidArgumentError("Poisson rates must be non-negative")
    y = rng.generator.poisson(clean).astype(np.float64)
    return MeasurementSet(y=y, y_clean=clean.copy(), noise="poisson")


def calibrate_sigma(y_clean, target_snr_db: float) -> float:
    """Noise level whose expected SNR equals ``target_snr_db``."""
    y_clean = np.asarray(y_clean, dtype=np.float64)
    return float(np.sqrt(np.sum(y_clean**2) / 10 ** (target_snr_db / 10) / y_clean.size))


def snr_db(ms: MeasurementSet, b_clean=None) -> float:
    """``10 log10(sum |a_j^* x|^4 / ||xi||^2)``, clamped to +300 dB for zero noise."""
    signal = np.sum(ms.y_clean**2) if b_clean is None else np.sum(np.abs(b_clean) ** 4)
    noise = np.sum(ms.xi**2)
    if noise == 0:
        return DB_CLAMP
    return float(10 * np.log10(signal / noise))


def mse_db(z, x) -> float:
    """``10 log10(dist(z, x)^2 / ||x||^2)``, clamped to -300 dB at exact recovery."""
    xx = float(np.sum(np.abs(np.asarray(x)) ** 2))
    if xx == 0:
        raise InvalidArgumentError("reference signal must be nonzero")
    d2 = dist(z, x) ** 2
    if d2 == 0:
        return -DB_CLAMP
    return float(max(10 * np.log10(d2 / xx), -DB_CLAMP))
