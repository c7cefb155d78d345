"""End-to-end runs: estimate, build the POVM, sharpen, reconstruct, score.

Reported times cover estimation, operator construction and remapping only
(file I/O excluded).
"""

from __future__ import annotations

import io
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .baselines import apply_thresholds, multi_otsu, recursive_statistical
from .errors import DegenerateRangeWarning, PovmRemapError
from .estimation import IntensityModel, estimate
from .image_core import GrayImage, compute_histogram
from .metrics import CSV_HEADER, MetricsReport, evaluate
from .naimark import ancilla_distribution, dilate, kraus_from_povm, sample_from, total_variation
from .povm import PovmTable, build_povm, format_gamma, parse_gamma
from .remap import RemapResult, remap_image

METHODS = ("proposed-kmeans", "proposed-gmm", "multi-otsu", "recursive-statistical")
COMPARE_HEADER = CSV_HEADER + ("error",)
DILATE_HEADER = ("intensity", "k", "p_exact", "p_empirical", "n", "seed")


@dataclass
class ProposedRun:
    model: IntensityModel
    povm: PovmTable
    result: RemapResult
    elapsed: float


def run_proposed(img: GrayImage, estimator: str, k: int, gamma, delta: float | None = None,
                 threads: int = 1) -> ProposedRun:
    """Adaptive POVM remapping of ``img`` with ``k`` estimated components."""
    t0 = time.perf_counter()
    hist = compute_histogram(img)
    model = estimate(hist, k, estimator, delta=delta)
    povm = build_povm(model, gamma)
    result = remap_image(img, povm, model=model, threads=threads)
    return ProposedRun(model, povm, result, time.perf_counter() - t0)


def run_baseline(img: GrayImage, method: str, k: int, kappa: float = 1.0, threads: int = 1):
    t0 = time.perf_counter()
    hist = compute_histogram(img)
    if method == "multi-otsu":
        ts = multi_otsu(hist, k)
    elif method == "recursive-statistical":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateRangeWarning)
            ts = recursive_statistical(hist, k, kappa)
    else:
        raise ValueError(f"unknown baseline {method!r}")
    out = apply_thresholds(img, ts, threads=threads)
    return ts, out, time.perf_counter() - t0


def _fmt_row(cells) -> str:
    return ",".join(cells) + "\n"


def report_for(img, out, *, image, method, k, gamma, ssim_mode, elapsed, float_image=None) -> MetricsReport:
    return evaluate(img, out, image=image, method=method, k=k, gamma=gamma, ssim_mode=ssim_mode,
                    elapsed=elapsed, compare_to=float_image)


def compare_methods(img: GrayImage, image_name: str, k: int, gamma, *, delta=None, ssim_mode="windowed",
                    kappa=1.0, threads=1, use_float=False, timing=True):
    """One report (or error) per method in :data:`METHODS`.

    Returns a list of ``(method, MetricsReport | None, error | None)``.
    """
    g = parse_gamma(gamma)
    rows = []
    for method in METHODS:
        try:
            if method.startswith("proposed-"):
                run = run_proposed(img, method.split("-", 1)[1], k, g, delta=delta, threads=threads)
                out, elapsed = run.result.quantized, run.elapsed
                fl = run.result.float_image if use_float else None
                gamma_s = format_gamma(g)
            else:
                _, out, elapsed = run_baseline(img, method, k, kappa=kappa, threads=threads)
                fl = None
                gamma_s = ""
            rep = report_for(img, out, image=image_name, method=method, k=k, gamma=gamma_s,
                             ssim_mode=ssim_mode, elapsed=elapsed if timing else None, float_image=fl)
            rows.append((method, rep, None))
        except PovmRemapError as exc:
            rows.append((method, None, f"{type(exc).__name__}: {exc}"))
    return rows


def compare_csv(rows, image_name: str = "", k: int = 0) -> str:
    buf = io.StringIO()
    buf.write(_fmt_row(COMPARE_HEADER))
    for method, rep, err in rows:
        if rep is None:
            cells = [image_name, method, str(k)] + [""] * (len(CSV_HEADER) - 3) + [err.replace(",", ";")]
        else:
            cells = rep.csv_cells() + [""]
        buf.write(_fmt_row(cells))
    return buf.getvalue()


def sweep(img: GrayImage, image_name: str, estimator: str, ks, gammas, *, delta=None, ssim_mode="windowed",
          threads=1, use_float=False, timing=True):
    """Reports over the ``ks x gammas`` grid, ``k`` outer and ``gamma`` inner.

    The estimate for each ``k`` is shared across the ``gamma`` cells, and
    each cell's time covers that shared estimation plus its own POVM build
    and remap.
    """
    reports = []
    hist = compute_histogram(img)
    for k in ks:
        t0 = time.perf_counter()
        model = estimate(hist, int(k), estimator, delta=delta)
        t_est = time.perf_counter() - t0
        for gamma in gammas:
            g = parse_gamma(gamma)
            t1 = time.perf_counter()
            povm = build_povm(model, g)
            res = remap_image(img, povm, model=model, threads=threads)
            elapsed = t_est + time.perf_counter() - t1
            reports.append(report_for(img, res.quantized, image=image_name, method=f"proposed-{estimator}",
                                      k=int(k), gamma=format_gamma(g), ssim_mode=ssim_mode,
                                      elapsed=elapsed if timing else None,
                                      float_image=res.float_image if use_float else None))
    return reports


def reports_csv(reports) -> str:
    buf = io.StringIO()
    buf.write(_fmt_row(CSV_HEADER))
    for rep in reports:
        buf.write(_fmt_row(rep.csv_cells()))
    return buf.getvalue()


@dataclass
class DilationCheck:
    csv: str
    max_abs_diff: float
    max_tv: float
    max_exact_error: float


def dilation_verify(povm: PovmTable, n: int, seed: int, intensities=range(256)) -> DilationCheck:
    """Exact ancilla statistics versus seeded samples for each basis input.

    Intensity ``i`` is sampled with seed ``seed + i`` so cells are
    independent of each other and of iteration order.
    """
    kraus = kraus_from_povm(povm)
    buf = io.StringIO()
    buf.write(_fmt_row(DILATE_HEADER))
    max_diff = max_tv = max_exact = 0.0
    coeffs = povm.coeffs
    for i in intensities:
        p = ancilla_distribution(dilate(kraus, i))
        max_exact = max(max_exact, float(np.max(np.abs(p - coeffs[:, i]))))
        s = seed + int(i)
        emp = sample_from(p, n, s) / n
        max_diff = max(max_diff, float(np.max(np.abs(p - emp))))
        max_tv = max(max_tv, total_variation(p, emp))
        for j in range(povm.k):
            buf.write(_fmt_row([str(i), str(j), f"{p[j]:.17g}", f"{emp[j]:.17g}", str(n), str(s)]))
    return DilationCheck(buf.getvalue(), max_diff, max_tv, max_exact)


