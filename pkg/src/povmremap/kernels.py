"""Hot inner loops, each in a numba and a pure-numpy flavour.

The public dispatchers pick the numba path unless ``POVMREMAP_PURE_NUMPY`` is
set (see :mod:`povmremap._accel`) or an explicit ``backend`` is passed. Both
flavours perform the same floating-point operations in the same order, so
their outputs are bit-identical; the test-suite checks this.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _accel
from ._accel import njit, prange

BACKENDS = ("numba", "numpy")


def _resolve(backend):
    if backend is None:
        return _accel.default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not _accel.HAVE_NUMBA:
        return "numpy"
    return backend


# ---------------------------------------------------------------------------
# LUT application
# ---------------------------------------------------------------------------


@njit(parallel=True, cache=True)
def _apply_lut_numba(pixels, lut, out):
    h, w = pixels.shape
    for r in prange(h):
        for c in range(w):
            out[r, c] = lut[pixels[r, c]]
    return out


def _apply_lut_numpy(pixels, lut, out, threads=1):
    h = pixels.shape[0]
    if threads <= 1 or h < 2 * threads:
        np.take(lut, pixels, out=out)
        return out
    bounds = np.linspace(0, h, threads + 1).astype(np.int64)

    def work(i):
        lo, hi = bounds[i], bounds[i + 1]
        np.take(lut, pixels[lo:hi], out=out[lo:hi])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out


def apply_lut(pixels, lut, threads=1, backend=None):
    """Map every pixel of a 2-D uint8 array through a 256-entry table.

    The output dtype follows ``lut``. Rows may be processed concurrently;
    each output cell depends on one input cell only, so the result does not
    depend on ``threads``.
    """
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    lut = np.ascontiguousarray(lut)
    if lut.shape != (256,):
        raise ValueError("lut must have 256 entries")
    out = np.empty(pixels.shape, dtype=lut.dtype)
    if _resolve(backend) == "numba":
        n = max(1, min(int(threads), _accel.max_threads()))
        prev = _accel.numba.get_num_threads()
        _accel.numba.set_num_threads(n)
        try:
            return _apply_lut_numba(pixels, lut, out)
        finally:
            _accel.numba.set_num_threads(prev)
    return _apply_lut_numpy(pixels, lut, out, threads=int(threads))


# ---------------------------------------------------------------------------
# Multi-Otsu suffix dynamic programme
# ---------------------------------------------------------------------------
#
# Given prefix sums W (mass) and S (first moment) over n populated levels,
# table[j, a] is the largest value of sum_c S_c**2 / W_c obtainable by
# splitting levels a..n-1 into j contiguous non-empty classes.


@njit(cache=True)
def _otsu_table_numba(W, S, k):
    n = W.shape[0] - 1
    table = np.full((k + 1, n + 1), -np.inf)
    for a in range(n):
        m = S[n] - S[a]
        table[1, a] = m * m / (W[n] - W[a])
    for j in range(2, k + 1):
        for a in range(0, n - j + 1):
            best = -np.inf
            for b in range(a + 1, n - j + 2):
                m = S[b] - S[a]
                v = m * m / (W[b] - W[a]) + table[j - 1, b]
                if v > best:
                    best = v
            table[j, a] = best
    return table


def _segment_matrix(W, S):
    # seg[a, b] = class score of levels a..b-1; -inf for b <= a
    with np.errstate(divide="ignore", invalid="ignore"):
        m = S[None, :] - S[:, None]
        seg = m * m / (W[None, :] - W[:, None])
    n1 = W.shape[0]
    upper = np.triu(np.ones((n1, n1), dtype=bool), k=1)
    return np.where(upper, seg, -np.inf)


def _otsu_table_numpy(W, S, k):
    n = W.shape[0] - 1
    seg = _segment_matrix(W, S)
    table = np.full((k + 1, n + 1), -np.inf)
    table[1, :n] = seg[:n, n]
    for j in range(2, k + 1):
        cand = seg + table[j - 1][None, :]
        # b ranges a+1 .. n-j+1 ; columns beyond stay out of reach
        cand[:, n - j + 2 :] = -np.inf
        table[j, : n - j + 1] = cand[: n - j + 1].max(axis=1)
    return table


def otsu_table(W, S, k, backend=None):
    W = np.ascontiguousarray(W, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    if _resolve(backend) == "numba":
        return _otsu_table_numba(W, S, int(k))
    return _otsu_table_numpy(W, S, int(k))
