"""Representative intensities from the histogram: 1-D K-means and GMM-EM.

Both estimators work on the 256-bin histogram with counts as weights, which is
identical to clustering the raw pixel list but costs O(256 K) per iteration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import EmDiverged, InvalidParamsError, TooFewDistinctLevels
from .image_core import N_LEVELS, Histogram

SIGMA_FLOOR = 0.5
MIN_DELTA = 8.0

KMEANS_TOL = 1e-4
KMEANS_MAX_ITER = 300
EM_REL_TOL = 1e-6
EM_MAX_ITER = 200
# Allowed per-iteration log-likelihood drop, relative to |ll|, before the
# monotonicity guard fires.
EM_MONOTONE_SLACK = 1e-9

_LEVELS = np.arange(N_LEVELS, dtype=np.float64)
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Component:
    mu: float
    sigma: float
    weight: float


@dataclass(frozen=True)
class IntensityModel:
    """K Gaussian components plus, for the K-means path, a shared spread.

    Components are kept sorted by ``mu``. For ``kind == "kmeans"`` every
    component carries ``sigma == delta`` and ``weight == 1``.
    """

    components: tuple
    kind: str
    delta: float | None = None

    def __post_init__(self):
        comps = tuple(sorted((Component(float(c.mu), float(c.sigma), float(c.weight)) for c in self.components),
                             key=lambda c: c.mu))
        object.__setattr__(self, "components", comps)
        k = len(comps)
        if not 1 <= k <= N_LEVELS:
            raise InvalidParamsError(f"need 1..256 components, got {k}")
        if self.kind not in ("kmeans", "gmm"):
            raise InvalidParamsError(f"unknown model kind {self.kind!r}")
        mus = self.mus
        if np.any(np.diff(mus) <= 0):
            raise InvalidParamsError("component means must be distinct")
        if np.any(mus < 0) or np.any(mus > 255):
            raise InvalidParamsError("component means must lie in [0, 255]")
        if np.any(self.sigmas < SIGMA_FLOOR - 1e-12):
            raise InvalidParamsError(f"sigma below floor {SIGMA_FLOOR}")
        w = self.weights
        if self.kind == "kmeans":
            if self.delta is None or not self.delta > 0:
                raise InvalidParamsError("kmeans models need a positive delta")
            if np.any(w != 1.0) or np.any(self.sigmas != self.delta):
                raise InvalidParamsError("kmeans components must have weight 1 and sigma == delta")
        else:
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise InvalidParamsError("gmm weights must be non-negative and sum to 1")

    @classmethod
    def from_means(cls, mus: Sequence[float], delta: float) -> "IntensityModel":
        """K-means style model from explicit centres and a shared spread."""
        return cls(tuple(Component(m, delta, 1.0) for m in mus), "kmeans", float(delta))

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def mus(self) -> np.ndarray:
        return np.array([c.mu for c in self.components])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([c.sigma for c in self.components])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "delta": self.delta,
            "components": [{"mu": c.mu, "sigma": c.sigma, "weight": c.weight} for c in self.components],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "IntensityModel":
        comps = tuple(Component(c["mu"], c["sigma"], c["weight"]) for c in doc["components"])
        return cls(comps, doc["kind"], doc.get("delta"))

    @classmethod
    def from_json(cls, text: str) -> "IntensityModel":
        return cls.from_dict(json.loads(text))


def default_delta(mus) -> float:
    """Shared spread for the K-means path: ``max(8, min_gap / 2)``."""
    mus = np.sort(np.asarray(mus, dtype=np.float64))
    if mus.size < 2:
        return MIN_DELTA
    return max(MIN_DELTA, 0.5 * float(np.min(np.diff(mus))))


def _check_levels(hist: Histogram, k: int):
    if k < 1:
        raise InvalidParamsError("k must be >= 1")
    if hist.n_distinct < k:
        raise TooFewDistinctLevels(f"histogram has {hist.n_distinct} populated levels, need at least {k}")


# ---------------------------------------------------------------------------
# K-means (Lloyd) on the histogram
# ---------------------------------------------------------------------------


@dataclass
class LloydResult:
    centers: np.ndarray
    labels: np.ndarray
    objective_trace: list = field(default_factory=list)
    n_iter: int = 0


def quantile_init(counts: np.ndarray, k: int) -> np.ndarray:
    """Smallest intensities whose CDF reaches the levels (j - 0.5) / k."""
    cum = np.cumsum(counts)
    total = int(cum[-1])
    # cum / total >= (2j - 1) / (2k), in exact integer arithmetic
    targets = (2 * np.arange(1, k + 1) - 1) * total
    return np.searchsorted(2 * k * cum, targets, side="left").astype(np.float64)


def _assign(centers):
    return np.argmin(np.abs(_LEVELS[None, :] - centers[:, None]), axis=0)


def _objective(w, centers, labels):
    return float(np.dot(w, (_LEVELS - centers[labels]) ** 2))


def lloyd_histogram(counts, k: int, tol: float = KMEANS_TOL, max_iter: int = KMEANS_MAX_ITER) -> LloydResult:
    """Histogram-weighted Lloyd iterations from the quantile initialiser.

    Empty clusters are reseeded at the intensity with the largest
    ``count * squared distance`` to its current centre. The returned
    ``objective_trace`` holds the within-cluster sum of squares after each
    assignment step.
    """
    w = np.asarray(counts, dtype=np.float64)
    centers = quantile_init(np.asarray(counts), k)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        labels = _assign(centers)
        mass = np.bincount(labels, weights=w, minlength=k)
        while np.any(mass == 0):
            j = int(np.flatnonzero(mass == 0)[0])
            far = w * (_LEVELS - centers[labels]) ** 2
            centers[j] = float(np.argmax(far))
            labels = _assign(centers)
            mass = np.bincount(labels, weights=w, minlength=k)
        trace.append(_objective(w, centers, labels))
        sums = np.bincount(labels, weights=w * _LEVELS, minlength=k)
        new = np.sort(sums / mass)
        shift = float(np.max(np.abs(new - np.sort(centers))))
        centers = new
        if shift < tol:
            break
    labels = _assign(centers)
    trace.append(_objective(w, centers, labels))
    return LloydResult(centers=centers, labels=labels, objective_trace=trace, n_iter=it)


def estimate_kmeans(hist: Histogram, k: int, delta: float | None = None) -> IntensityModel:
    _check_levels(hist, k)
    res = lloyd_histogram(hist.counts, k)
    d = default_delta(res.centers) if delta is None else float(delta)
    if not d > 0:
        raise InvalidParamsError("delta must be positive")
    return IntensityModel.from_means(res.centers, d)


# ---------------------------------------------------------------------------
# GMM via EM on the histogram
# ---------------------------------------------------------------------------


@dataclass
class EmResult:
    model: IntensityModel
    loglik_trace: list
    n_iter: int
    converged: bool


def _component_logpdf(x, mus, variances, weights):
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return (logw[:, None] - 0.5 * (_LOG_2PI + np.log(variances))[:, None]
            - (x[None, :] - mus[:, None]) ** 2 / (2.0 * variances[:, None]))


def _loglik(x, c, mus, variances, weights):
    lp = _component_logpdf(x, mus, variances, weights)
    lse = logsumexp(lp, axis=0)
    return float(np.dot(c, lse)), lp, lse


def em_log_likelihood(hist: Histogram, model: IntensityModel) -> float:
    """Histogram-weighted mixture log-likelihood ``sum_i n_i log p(i)``."""
    if model.kind != "gmm":
        raise InvalidParamsError("log-likelihood is defined for gmm models")
    x = hist.levels.astype(np.float64)
    c = hist.counts[hist.levels].astype(np.float64)
    return _loglik(x, c, model.mus, model.sigmas ** 2, model.weights)[0]


def fit_gmm(hist: Histogram, k: int, rel_tol: float = EM_REL_TOL, max_iter: int = EM_MAX_ITER) -> EmResult:
    """EM initialised from the K-means partition; variances floored each M-step.

    Flooring the variance is the exact constrained M-step (the per-component
    likelihood is unimodal in sigma**2), so the log-likelihood stays
    non-decreasing; a drop beyond round-off raises :class:`EmDiverged`.
    """
    _check_levels(hist, k)
    var_floor = SIGMA_FLOOR ** 2
    x = hist.levels.astype(np.float64)
    c = hist.counts[hist.levels].astype(np.float64)
    total = c.sum()

    init = lloyd_histogram(hist.counts, k)
    w_all = hist.counts.astype(np.float64)
    mass = np.bincount(init.labels, weights=w_all, minlength=k)
    sq = np.bincount(init.labels, weights=w_all * (_LEVELS - init.centers[init.labels]) ** 2, minlength=k)
    mus = init.centers.copy()
    variances = np.maximum(sq / mass, var_floor)
    weights = mass / total

    ll, lp, lse = _loglik(x, c, mus, variances, weights)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        resp = np.exp(lp - lse[None, :]) * c[None, :]
        nk = resp.sum(axis=1)
        alive = nk > 0
        new_mus = mus.copy()
        new_var = variances.copy()
        new_mus[alive] = resp[alive] @ x / nk[alive]
        new_var[alive] = np.maximum((resp[alive] * (x[None, :] - new_mus[alive, None]) ** 2).sum(axis=1) / nk[alive],
                                    var_floor)
        mus, variances, weights = new_mus, new_var, nk / total

        new_ll, lp, lse = _loglik(x, c, mus, variances, weights)
        if not math.isfinite(new_ll):
            raise EmDiverged(f"non-finite log-likelihood at iteration {it}")
        if new_ll < ll - EM_MONOTONE_SLACK * max(1.0, abs(ll)):
            raise EmDiverged(f"log-likelihood decreased at iteration {it}: {ll!r} -> {new_ll!r}")
        trace.append(new_ll)
        change = abs(new_ll - ll)
        ll = new_ll
        if change < rel_tol * max(abs(ll), 1e-300):
            converged = True
            break

    weights = weights / weights.sum()
    comps = tuple(Component(m, math.sqrt(v), wt) for m, v, wt in zip(mus, variances, weights))
    return EmResult(IntensityModel(comps, "gmm"), trace, it, converged)


def estimate_gmm(hist: Histogram, k: int) -> IntensityModel:
    return fit_gmm(hist, k).model


def estimate(hist: Histogram, k: int, estimator: str, delta: float | None = None) -> IntensityModel:
    if estimator == "kmeans":
        return estimate_kmeans(hist, k, delta=delta)
    if estimator == "gmm":
        return estimate_gmm(hist, k)
    raise InvalidParamsError(f"unknown estimator {estimator!r}")
