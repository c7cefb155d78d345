"""Expectation-value remapping of images through a POVM lookup table."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import IndexOutOfRange
from .estimation import IntensityModel
from .image_core import GrayImage, round_half_away
from .povm import PovmTable, observable_lut


@dataclass(frozen=True, eq=False)
class RemapResult:
    lut: np.ndarray
    float_image: np.ndarray
    quantized: GrayImage
    model: IntensityModel | None
    gamma: float

    def float_csv(self) -> str:
        """Row-major float image, 17 significant digits, no header."""
        buf = io.StringIO()
        for row in self.float_image:
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def quantize_lut(lut) -> np.ndarray:
    return round_half_away(np.clip(lut, 0.0, 255.0)).astype(np.uint8)


def remap_image(img: GrayImage, povm: PovmTable, model: IntensityModel | None = None,
                threads: int = 1, backend: str | None = None) -> RemapResult:
    """Replace each pixel by ``sum_k mu_k E_k(I(x, y))``.

    The sum depends on the intensity only, so it is evaluated once per level
    and then gathered per pixel.
    """
    lut = observable_lut(povm)
    lut.setflags(write=False)
    float_image = kernels.apply_lut(img.pixels, lut, threads=threads, backend=backend)
    q = kernels.apply_lut(img.pixels, quantize_lut(lut), threads=threads, backend=backend)
    float_image.setflags(write=False)
    return RemapResult(lut, float_image, GrayImage(q), model, povm.gamma)


def probability_map(img: GrayImage, povm: PovmTable, k: int, threads: int = 1,
                    backend: str | None = None) -> np.ndarray:
    """Per-pixel probability of outcome ``k`` (0-based component index)."""
    if not 0 <= k < povm.k:
        raise IndexOutOfRange(f"component {k} outside 0..{povm.k - 1}")
    row = np.ascontiguousarray(povm.coeffs[k])
    return kernels.apply_lut(img.pixels, row, threads=threads, backend=backend)


def probability_map_image(prob: np.ndarray) -> GrayImage:
    """Scale a probability map by 255 into an 8-bit image."""
    return GrayImage(round_half_away(np.clip(prob, 0.0, 1.0) * 255.0))
