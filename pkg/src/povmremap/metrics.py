"""PSNR, SSIM (single-window and Gaussian-windowed) and Shannon entropy.

Entropies are in bits. ``C1 = (0.01 * 255)**2`` and ``C2 = (0.03 * 255)**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionMismatch, EmptyImageError, TooSmall, ZeroInputEntropy
from .image_core import N_LEVELS, GrayImage

MAX_VALUE = 255.0
C1 = (0.01 * MAX_VALUE) ** 2
C2 = (0.03 * MAX_VALUE) ** 2
WINDOW = 11
WINDOW_SIGMA = 1.5

CSV_HEADER = ("image", "method", "k", "gamma", "psnr_db", "ssim", "ssim_mode",
              "entropy_in", "entropy_out", "delta_entropy_pct", "elapsed_seconds")


def _pair(a, b):
    x = np.asarray(a.pixels if isinstance(a, GrayImage) else a, dtype=np.float64)
    y = np.asarray(b.pixels if isinstance(b, GrayImage) else b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    return x, y


def mse(a, b) -> float:
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr(a, b) -> float:
    """``10 log10(255^2 / MSE)``; ``inf`` for identical inputs."""
    err = mse(a, b)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(MAX_VALUE ** 2 / err)


def _ssim_formula(mx, my, vx, vy, cxy):
    return ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx ** 2 + my ** 2 + C1) * (vx + vy + C2))


def ssim_global(a, b) -> float:
    """SSIM from whole-image means, (population) variances and covariance."""
    x, y = _pair(a, b)
    if x.size < 2:
        raise TooSmall("global SSIM needs at least two pixels")
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    return float(_ssim_formula(mx, my, np.mean(dx * dx), np.mean(dy * dy), np.mean(dx * dy)))


def gaussian_window(size=WINDOW, sigma=WINDOW_SIGMA) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(r ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _smooth_valid(img, g):
    pad = (g.size - 1) // 2
    out = correlate1d(correlate1d(img, g, axis=0, mode="nearest"), g, axis=1, mode="nearest")
    return out[pad:-pad, pad:-pad]


def ssim_windowed(a, b) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian (sigma 1.5) windows."""
    x, y = _pair(a, b)
    if min(x.shape) < WINDOW:
        raise TooSmall(f"windowed SSIM needs both dimensions >= {WINDOW}")
    g = gaussian_window()
    mx, my = _smooth_valid(x, g), _smooth_valid(y, g)
    vx = _smooth_valid(x * x, g) - mx * mx
    vy = _smooth_valid(y * y, g) - my * my
    cxy = _smooth_valid(x * y, g) - mx * my
    return float(np.mean(_ssim_formula(mx, my, vx, vy, cxy)))


def ssim(a, b, mode: str = "windowed") -> float:
    if mode == "windowed":
        return ssim_windowed(a, b)
    if mode == "global":
        return ssim_global(a, b)
    raise ValueError(f"unknown ssim mode {mode!r}")


def shannon_entropy(img: GrayImage) -> float:
    if img.size == 0:
        raise EmptyImageError("image has no pixels")
    counts = np.bincount(img.data, minlength=N_LEVELS)
    p = counts[counts > 0] / img.size
    h = float(-np.sum(p * np.log2(p)))
    return h if h > 0 else 0.0


def delta_entropy_pct(input_img: GrayImage, output_img: GrayImage) -> float:
    h_in = shannon_entropy(input_img)
    if h_in == 0:
        raise ZeroInputEntropy("input image has zero entropy")
    return 100.0 * (shannon_entropy(output_img) - h_in) / h_in


def _fmt_metric(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{v:.4f}"


@dataclass
class MetricsReport:
    image: str
    method: str
    k: int
    gamma: str
    psnr_db: float
    ssim: float
    ssim_mode: str
    entropy_in: float
    entropy_out: float
    delta_entropy_pct: float
    elapsed_seconds: float | None

    def csv_cells(self) -> list:
        return [self.image, self.method, str(self.k), self.gamma, _fmt_metric(self.psnr_db),
                _fmt_metric(self.ssim), self.ssim_mode, _fmt_metric(self.entropy_in),
                _fmt_metric(self.entropy_out), _fmt_metric(self.delta_entropy_pct),
                _fmt_metric(self.elapsed_seconds)]


def evaluate(reference: GrayImage, output: GrayImage, *, image: str, method: str, k: int, gamma: str,
             ssim_mode: str = "windowed", elapsed: float | None = None, compare_to=None) -> MetricsReport:
    """Build a report for ``output`` against ``reference``.

    ``compare_to`` optionally replaces ``output`` for PSNR/SSIM (the float
    reconstruction); entropy always uses the 8-bit output. Windowed SSIM on
    images smaller than the window falls back to the global form, which the
    ``ssim_mode`` field records. A zero-entropy input yields ``nan`` for the
    percentage change.
    """
    target = output if compare_to is None else compare_to
    mode = ssim_mode
    if mode == "windowed" and min(reference.height, reference.width) < WINDOW:
        mode = "global"
    h_in = shannon_entropy(reference)
    h_out = shannon_entropy(output)
    d = 100.0 * (h_out - h_in) / h_in if h_in > 0 else math.nan
    return MetricsReport(image, method, k, gamma, psnr(reference, target), ssim(reference, target, mode), mode,
                         h_in, h_out, d, elapsed)
