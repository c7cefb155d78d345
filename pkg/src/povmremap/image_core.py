"""Grayscale images, histograms, Netpbm/PNG I/O and synthetic fixtures.

A pixel with intensity ``i`` stands for the basis projector ``|i><i|``; the
image as a whole stands for the diagonal density operator whose diagonal is
the normalised histogram. Every operator used downstream is diagonal in that
basis, so the histogram is all that is ever materialised.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyImageError, FormatError, ImageIOError, InvalidParamsError

N_LEVELS = 256

#: Bit generator used by :func:`synth_mixture_image`. Documented so that
#: fixtures can be regenerated elsewhere: component labels come from
#: ``Generator.random`` (N draws) inverted through the cumulative weights, then
#: N ``Generator.standard_normal`` draws (numpy's ziggurat) scale the noise.
SYNTH_BIT_GENERATOR = "PCG64"


def round_half_away(x):
    """Round to nearest integer, halves away from zero."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable 8-bit single-channel image.

    ``pixels`` has shape ``(height, width)``; :attr:`data` is its row-major
    flattening.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise InvalidParamsError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255):
                raise InvalidParamsError("intensities must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and np.any(arr != np.round(arr)):
                raise InvalidParamsError("intensities must be integers")
        arr = np.array(arr, dtype=np.uint8, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, data: Iterable[int]) -> "GrayImage":
        flat = np.asarray(list(data) if not isinstance(data, np.ndarray) else data)
        if flat.size != width * height:
            raise InvalidParamsError("data length must equal width * height")
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def size(self) -> int:
        return int(self.pixels.size)

    @property
    def data(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"GrayImage(width={self.width}, height={self.height})"


@dataclass(frozen=True, eq=False)
class Histogram:
    """256-bin intensity histogram; ``probs`` is the density-operator diagonal."""

    counts: np.ndarray
    probs: np.ndarray
    total: int

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "Histogram":
        c = np.asarray(counts)
        if c.shape != (N_LEVELS,):
            raise InvalidParamsError("histogram needs exactly 256 bins")
        if np.any(c < 0) or np.any(c != np.round(c)):
            raise InvalidParamsError("counts must be non-negative integers")
        c = c.astype(np.int64)
        total = int(c.sum())
        if total == 0:
            raise EmptyImageError("histogram has zero mass")
        probs = c / total
        c.setflags(write=False)
        probs.setflags(write=False)
        return cls(counts=c, probs=probs, total=total)

    @property
    def levels(self) -> np.ndarray:
        """Populated intensities in increasing order."""
        return np.flatnonzero(self.counts)

    @property
    def n_distinct(self) -> int:
        return int(np.count_nonzero(self.counts))

    def mean(self) -> float:
        return float(np.dot(self.probs, np.arange(N_LEVELS)))

    def std(self) -> float:
        i = np.arange(N_LEVELS)
        m = self.mean()
        return float(np.sqrt(np.dot(self.probs, (i - m) ** 2)))


def compute_histogram(img: GrayImage) -> Histogram:
    if img.size == 0:
        raise EmptyImageError("image has no pixels")
    return Histogram.from_counts(np.bincount(img.data, minlength=N_LEVELS))


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _pgm_tokens(buf: bytes, count: int, start: int = 2):
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens = []
    pos = start
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        begin = pos
        while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        if begin == pos:
            raise FormatError("truncated PGM header")
        tokens.append(buf[begin:pos])
    return tokens, pos + 1


def _parse_pgm(buf: bytes) -> GrayImage:
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})")
    tokens, offset = _pgm_tokens(buf, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError("non-numeric PGM header field") from None
    if width <= 0 or height <= 0:
        raise FormatError("PGM dimensions must be positive")
    if maxval != 255:
        raise FormatError(f"only 8-bit PGM (maxval 255) is supported, got maxval {maxval}")
    n = width * height
    if magic == b"P5":
        raw = buf[offset : offset + n]
        if len(raw) != n:
            raise FormatError(f"expected {n} pixel bytes, found {len(raw)}")
        arr = np.frombuffer(raw, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\n\r]*", b" ", buf[offset - 1 :])
        try:
            vals = np.array([int(t) for t in body.split()], dtype=np.int64)
        except ValueError:
            raise FormatError("non-numeric sample in P2 body") from None
        if vals.size != n:
            raise FormatError(f"expected {n} samples, found {vals.size}")
        if vals.size and (vals.min() < 0 or vals.max() > maxval):
            raise FormatError("sample outside [0, maxval]")
        arr = vals
    return GrayImage(arr.reshape(height, width))


def _bt601_luma(rgb: np.ndarray) -> np.ndarray:
    r, g, b = (rgb[..., c].astype(np.float64) for c in range(3))
    return round_half_away(0.299 * r + 0.587 * g + 0.114 * b).clip(0, 255)


def _load_png(path) -> GrayImage:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode == "L":
                return GrayImage(np.asarray(im))
            if mode == "LA":
                return GrayImage(np.asarray(im)[..., 0])
            if mode in ("RGB", "RGBA"):
                return GrayImage(_bt601_luma(np.asarray(im)))
    except (OSError, SyntaxError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise ImageIOError(str(exc)) from exc
        raise FormatError(f"cannot decode PNG: {exc}") from exc
    raise FormatError(f"unsupported PNG mode {mode!r} (need 8-bit gray/RGB/RGBA)")


def load_image(path, format: str | None = None) -> GrayImage:
    """Read a P2/P5 PGM or an 8-bit PNG.

    ``format`` is one of ``"pgm_binary"``, ``"pgm_ascii"``, ``"png"`` or
    ``None`` to sniff the magic bytes. Colour PNGs are reduced with the
    BT.601 luma weights, rounded half away from zero.
    """
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc.strerror or exc}") from exc

    if format is None:
        if buf.startswith(_PNG_MAGIC):
            format = "png"
        elif buf[:2] == b"P5":
            format = "pgm_binary"
        elif buf[:2] == b"P2":
            format = "pgm_ascii"
        else:
            raise FormatError(f"{path}: unrecognised image format")
    if format == "png":
        if not buf.startswith(_PNG_MAGIC):
            raise FormatError(f"{path}: not a PNG file")
        return _load_png(path)
    if format in ("pgm_binary", "pgm_ascii"):
        want = b"P5" if format == "pgm_binary" else b"P2"
        if buf[:2] != want:
            raise FormatError(f"{path}: expected {want.decode()} magic")
        return _parse_pgm(buf)
    raise InvalidParamsError(f"unknown format {format!r}")


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def save_image(img: GrayImage, path) -> None:
    """Write ``img`` as a binary (P5) PGM."""
    payload = encode_pgm(img)
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------------
# Synthetic fixtures
# ---------------------------------------------------------------------------


def synth_mixture_image(width: int, height: int, components, seed: int) -> GrayImage:
    """Draw pixels i.i.d. from a Gaussian mixture, clip to [0, 255], round.

    ``components`` is a sequence of ``(mean, std, weight)``.
    """
    comps = np.asarray(components, dtype=np.float64).reshape(-1, 3)
    if comps.shape[0] == 0:
        raise InvalidParamsError("need at least one component")
    means, stds, weights = comps.T
    if np.any(stds < 0):
        raise InvalidParamsError("component std must be non-negative")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise InvalidParamsError("weights must be non-negative and sum to 1")
    if np.any(means < 0) or np.any(means > 255):
        raise InvalidParamsError("means must lie in [0, 255]")
    if width <= 0 or height <= 0:
        raise InvalidParamsError("dimensions must be positive")

    n = width * height
    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    label = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(cdf) - 1)
    noise = rng.standard_normal(n)
    values = means[label] + stds[label] * noise
    values = round_half_away(np.clip(values, 0.0, 255.0))
    return GrayImage(values.reshape(height, width))


def ramp_image() -> GrayImage:
    """16x16 image holding every intensity 0..255 exactly once."""
    return GrayImage(np.arange(N_LEVELS).reshape(16, 16))


FOUR_MODE_COMPONENTS = ((40.0, 20.0, 0.25), (100.0, 20.0, 0.25), (160.0, 20.0, 0.25), (220.0, 20.0, 0.25))
FOUR_MODE_SEED = 2024


def four_mode_fixture(size: int = 256) -> GrayImage:
    """Seeded four-mode benchmark image used by the comparison trend checks."""
    return synth_mixture_image(size, size, FOUR_MODE_COMPONENTS, FOUR_MODE_SEED)


def stem(path) -> str:
    return Path(os.fspath(path)).stem
