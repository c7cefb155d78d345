"""Diagonal Gaussian POVM over the 256 intensity levels.

Each element ``E_k`` is diagonal in the intensity basis, so the whole family
is a ``K x 256`` table whose columns are probability vectors. Everything is
carried in the log domain: for distant intensities the raw Gaussians fall
below the double-precision range long before their normalised ratios do.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import IndexOutOfRange, InvalidGamma
from .estimation import IntensityModel
from .image_core import N_LEVELS

INF = math.inf

_LEVELS = np.arange(N_LEVELS, dtype=np.float64)
_TINY_WEIGHT = 1e-300


def parse_gamma(value) -> float:
    """Accept a positive number or the strings ``inf``/``INF``."""
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "infinity", "+inf"):
            return INF
        try:
            value = float(s)
        except ValueError:
            raise InvalidGamma(f"gamma must be a positive number or 'inf', got {value!r}") from None
    gamma = float(value)
    if not gamma > 0 or math.isnan(gamma):
        raise InvalidGamma(f"gamma must be > 0, got {gamma}")
    return gamma


def format_gamma(gamma: float) -> str:
    return "inf" if math.isinf(gamma) else f"{gamma:g}"


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ResponseTable:
    """Unnormalised Gaussian responses stored as ``log G_k(i)``."""

    log_g: np.ndarray
    mus: np.ndarray

    @property
    def k(self) -> int:
        return int(self.log_g.shape[0])

    @property
    def raw(self) -> np.ndarray:
        return np.exp(self.log_g)


@dataclass(frozen=True, eq=False)
class PovmTable:
    """POVM coefficients ``E_k(i)``; row k is outcome k, column i an intensity.

    ``log_coeffs`` is the primary storage; ``coeffs`` is its exponential.
    """

    log_coeffs: np.ndarray
    mus: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "log_coeffs", _frozen(self.log_coeffs))
        object.__setattr__(self, "mus", _frozen(self.mus))

    @property
    def k(self) -> int:
        return int(self.log_coeffs.shape[0])

    @property
    def coeffs(self) -> np.ndarray:
        c = np.exp(self.log_coeffs)
        c.setflags(write=False)
        return c

    def to_csv(self) -> str:
        """Rows are components, columns intensities 0..255, 17 significant digits."""
        buf = io.StringIO()
        buf.write(",".join(["component", "mu"] + [str(i) for i in range(N_LEVELS)]) + "\n")
        for j, row in enumerate(self.coeffs):
            cells = [str(j), f"{self.mus[j]:.17g}"] + [f"{v:.17g}" for v in row]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def gaussian_responses(model: IntensityModel) -> ResponseTable:
    """``log G_k(i) = log w_k - (i - mu_k)^2 / (2 sigma_k^2)``.

    K-means models carry ``sigma_k = delta`` and ``w_k = 1`` already, which
    gives the unweighted shared-spread branch.
    """
    mus = model.mus
    sig = model.sigmas
    logw = np.log(np.maximum(model.weights, _TINY_WEIGHT))
    log_g = logw[:, None] - (_LEVELS[None, :] - mus[:, None]) ** 2 / (2.0 * sig[:, None] ** 2)
    return ResponseTable(_frozen(log_g), _frozen(mus))


def _log_softmax(logits):
    return logits - logsumexp(logits, axis=0, keepdims=True)


def normalize(responses: ResponseTable) -> PovmTable:
    """Pointwise normalisation ``E_k(i) = G_k(i) / sum_j G_j(i)``."""
    return PovmTable(_log_softmax(responses.log_g), responses.mus, 1.0)


def _hard_argmax(log_coeffs):
    k = log_coeffs.shape[0]
    winner = np.argmax(log_coeffs, axis=0)  # first maximum wins ties
    out = np.full(log_coeffs.shape, -np.inf)
    out[winner, np.arange(log_coeffs.shape[1])] = 0.0
    if k == 1:
        out[:] = 0.0
    return out


def sharpen(povm: PovmTable, gamma) -> PovmTable:
    """``E_k(i) <- E_k(i)^gamma / sum_j E_j(i)^gamma``; ``gamma=INF`` is hard argmax.

    Ties under ``INF`` resolve to the lowest component index. The recorded
    ``gamma`` multiplies, since sharpening by ``a`` then ``b`` equals
    sharpening by ``a * b``.
    """
    g = parse_gamma(gamma)
    if math.isinf(g):
        log_c = _hard_argmax(povm.log_coeffs)
    elif g == 1.0:
        log_c = povm.log_coeffs
    else:
        log_c = _log_softmax(g * povm.log_coeffs)
    return PovmTable(log_c, povm.mus, povm.gamma * g)


def build_povm(model: IntensityModel, gamma=1.0) -> PovmTable:
    return sharpen(normalize(gaussian_responses(model)), gamma)


def observable_lut(povm: PovmTable) -> np.ndarray:
    """Expectation of ``A = sum_k mu_k E_k`` at each intensity level."""
    lut = (povm.mus[:, None] * povm.coeffs).sum(axis=0)
    # clamp away the last-ulp excursions of a convex combination
    return np.clip(lut, povm.mus.min(), povm.mus.max())


def measure_probabilities(povm: PovmTable, intensity: int) -> np.ndarray:
    i = int(intensity)
    if not 0 <= i < N_LEVELS:
        raise IndexOutOfRange(f"intensity {intensity} outside 0..255")
    return povm.coeffs[:, i].copy()


def completeness_error(povm: PovmTable) -> float:
    """Largest deviation of a column sum from one."""
    return float(np.max(np.abs(povm.coeffs.sum(axis=0) - 1.0)))
