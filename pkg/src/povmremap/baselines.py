"""Hard-threshold baselines: Multi-Otsu and a recursive mean +/- kappa*sigma splitter.

A :class:`ThresholdSet` uses the convention that intensity ``i`` belongs to
class ``c`` when ``thresholds[c-1] < i <= thresholds[c]``; each pixel of a
class is replaced by the (rounded) class mean.

The recursive splitter is a reimplementation of a method known only by name
and outline; it is a representative stand-in and makes no claim to match
published numbers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateRangeWarning, InvalidParamsError, TooFewDistinctLevels
from .image_core import N_LEVELS, GrayImage, Histogram, round_half_away

_LEVELS = np.arange(N_LEVELS, dtype=np.float64)
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ThresholdSet:
    thresholds: tuple
    class_means: tuple

    @property
    def k(self) -> int:
        return len(self.class_means)

    def to_dict(self) -> dict:
        return {"thresholds": list(self.thresholds), "class_means": list(self.class_means)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ThresholdSet":
        doc = json.loads(text)
        return cls(tuple(int(t) for t in doc["thresholds"]), tuple(float(m) for m in doc["class_means"]))


def class_labels(thresholds) -> np.ndarray:
    """Class index of every intensity level 0..255."""
    return np.searchsorted(np.asarray(thresholds, dtype=np.int64), np.arange(N_LEVELS), side="left")


def between_class_variance(hist: Histogram, thresholds) -> float:
    """``sum_c w_c (mu_c - mu_T)^2`` for the partition induced by ``thresholds``.

    Empty classes contribute zero.
    """
    labels = class_labels(thresholds)
    k = len(thresholds) + 1
    w = np.bincount(labels, weights=hist.probs, minlength=k)
    s = np.bincount(labels, weights=hist.probs * _LEVELS, minlength=k)
    mu_t = float(s.sum())
    nz = w > 0
    return float(np.sum(s[nz] ** 2 / w[nz]) - mu_t ** 2)


def _from_partition(hist: Histogram, class_of_level: np.ndarray) -> ThresholdSet:
    """Turn a labelling of the populated levels into a canonical ThresholdSet.

    Classes without mass are merged into their neighbour; each cut is placed
    at the floor of the midpoint between the last populated level below it
    and the first populated level above it.
    """
    levels = hist.levels
    labels = np.asarray(class_of_level)
    # relabel to consecutive ids over non-empty classes (merges empty ones)
    _, labels = np.unique(labels, return_inverse=True)
    thresholds = []
    means = []
    counts = hist.counts[levels].astype(np.float64)
    for c in range(int(labels.max()) + 1):
        sel = labels == c
        means.append(float(np.dot(counts[sel], levels[sel]) / counts[sel].sum()))
        if c > 0:
            lo = int(levels[labels == c - 1].max())
            hi = int(levels[sel].min())
            thresholds.append((lo + hi) // 2)
    return ThresholdSet(tuple(thresholds), tuple(means))


def multi_otsu(hist: Histogram, k: int, backend: str | None = None) -> ThresholdSet:
    """Thresholds maximising between-class variance, by dynamic programming.

    The search runs over the populated levels only (empty bins never change
    the objective). Among optimal partitions the one with the
    lexicographically smallest cut positions is returned.
    """
    if not 2 <= k <= 8:
        raise InvalidParamsError("multi_otsu supports 2 <= k <= 8")
    levels = hist.levels
    n = levels.size
    if n < k:
        raise TooFewDistinctLevels(f"histogram has {n} populated levels, need at least {k}")
    c = hist.counts[levels].astype(np.float64)
    W = np.concatenate(([0.0], np.cumsum(c)))
    S = np.concatenate(([0.0], np.cumsum(c * levels)))
    table = kernels.otsu_table(W, S, k, backend=backend)

    cuts = []
    a = 0
    for j in range(k, 1, -1):
        b = np.arange(a + 1, n - j + 2)
        m = S[b] - S[a]
        vals = m * m / (W[b] - W[a]) + table[j - 1, b]
        best = table[j, a]
        pick = int(b[np.flatnonzero(vals >= best - TIE_RTOL * abs(best))[0]])
        cuts.append(pick)
        a = pick
    assign = np.zeros(n, dtype=np.int64)
    for cut in cuts:
        assign[cut:] += 1
    return _from_partition(hist, assign)


def _range_stats(counts, a, b):
    w = counts[a : b + 1]
    tot = w.sum()
    if tot == 0:
        return 0.0, 0.0, 0.0
    x = _LEVELS[a : b + 1]
    mu = float(np.dot(w, x) / tot)
    sd = float(np.sqrt(np.dot(w, (x - mu) ** 2) / tot))
    return float(tot), mu, sd


def recursive_statistical(hist: Histogram, k: int, kappa: float = 1.0) -> ThresholdSet:
    """Recursive range splitting at ``mean +/- kappa * std``.

    Each of the first ``k/2 - 1`` passes peels off the tails of the current
    range below ``mu - kappa*sigma`` and above ``mu + kappa*sigma`` as fixed
    classes and recurses into the middle; the final middle range is cut in
    two at its mean. A zero-variance range is cut at its midpoint instead
    (with a :class:`DegenerateRangeWarning`).
    """
    if k not in (2, 4, 8):
        raise InvalidParamsError("recursive_statistical needs k in {2, 4, 8}")
    if not kappa > 0:
        raise InvalidParamsError("kappa must be positive")
    counts = hist.counts.astype(np.float64)
    a, b = 0, N_LEVELS - 1
    cuts = []  # each cut c means: levels <= c go below
    degenerate = False

    def safe_cut(value, lo, hi):
        return int(min(max(np.floor(value), lo), hi - 1))

    for _ in range(k // 2 - 1):
        if b - a < 2:
            break
        _, mu, sd = _range_stats(counts, a, b)
        if sd == 0:
            degenerate = True
            mid = safe_cut((a + b) / 2, a, b)
            cuts.append(mid)
            a = mid + 1
            continue
        lo_cut = safe_cut(mu - kappa * sd, a, b - 1)
        hi_cut = max(safe_cut(np.ceil(mu + kappa * sd) - 1, a, b), lo_cut + 1)
        cuts.extend([lo_cut, hi_cut])
        a, b = lo_cut + 1, hi_cut
    if b > a:
        _, mu, sd = _range_stats(counts, a, b)
        if sd == 0:
            degenerate = True
            cuts.append(safe_cut((a + b) / 2, a, b))
        else:
            cuts.append(safe_cut(mu, a, b))
    if degenerate:
        warnings.warn("zero-variance range; split at midpoint", DegenerateRangeWarning, stacklevel=2)

    labels = class_labels(sorted(set(cuts)))[hist.levels]
    return _from_partition(hist, labels)


def threshold_lut(t: ThresholdSet) -> np.ndarray:
    means = round_half_away(np.asarray(t.class_means)).astype(np.uint8)
    return means[class_labels(t.thresholds)]


def apply_thresholds(img: GrayImage, t: ThresholdSet, threads: int = 1, backend: str | None = None) -> GrayImage:
    """Replace every pixel by the rounded mean of its class."""
    return GrayImage(kernels.apply_lut(img.pixels, threshold_lut(t), threads=threads, backend=backend))
