"""Naimark dilation of the diagonal POVM.

The isometry ``V|i> = sum_k sqrt(E_k(i)) |i> (x) |k>`` maps a basis state to
exactly K nonzero amplitudes, all on system index ``i``, so the dilated state
is stored sparsely as a ``(levels, K)`` amplitude array. The unitary
completion of ``V`` is never built; the ancilla statistics only need ``V``'s
action on the ``|psi> (x) |0>`` sector.

Sampling uses numpy's ``Philox`` counter-based bit generator keyed by the
seed: ``n`` doubles from ``Generator.random`` are inverted through the
cumulative outcome distribution (``searchsorted`` with ``side="right"``), so
counts are reproducible in any language with a Philox4x64-10 implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, InvalidParamsError
from .image_core import N_LEVELS, Histogram
from .povm import PovmTable


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Diagonals of ``M_k = sqrt(E_k)``, shape ``(K, 256)``."""

    diag: np.ndarray

    @property
    def k(self) -> int:
        return int(self.diag.shape[0])

    def completeness_error(self) -> float:
        return float(np.max(np.abs((self.diag ** 2).sum(axis=0) - 1.0)))


@dataclass(frozen=True, eq=False)
class DilatedState:
    """``V rho V^dagger`` for a diagonal ``rho = sum_i p_i |i><i|``.

    ``levels[r]`` carries classical weight ``weights[r]`` and ancilla
    amplitudes ``amplitudes[r, :]``. A pure input has a single row of
    weight 1.
    """

    levels: np.ndarray
    weights: np.ndarray
    amplitudes: np.ndarray

    @property
    def k(self) -> int:
        return int(self.amplitudes.shape[1])

    @property
    def is_pure(self) -> bool:
        return self.levels.size == 1

    def norm(self) -> float:
        return float(np.dot(self.weights, (self.amplitudes ** 2).sum(axis=1)))

    def as_dict(self) -> dict:
        """Sparse ``(intensity, ancilla index) -> amplitude`` map (pure states)."""
        if not self.is_pure:
            raise InvalidParamsError("amplitude map is defined for pure inputs")
        i = int(self.levels[0])
        return {(i, j): float(a) for j, a in enumerate(self.amplitudes[0]) if a != 0.0}


def kraus_from_povm(povm: PovmTable) -> KrausSet:
    d = np.sqrt(povm.coeffs)
    d.setflags(write=False)
    return KrausSet(d)


def dilate(kraus: KrausSet, intensity) -> DilatedState:
    """Apply the isometry to ``|i>`` or, given a :class:`Histogram`, to the image state."""
    if isinstance(intensity, Histogram):
        levels = intensity.levels
        weights = intensity.probs[levels]
    else:
        i = int(intensity)
        if not 0 <= i < N_LEVELS:
            raise IndexOutOfRange(f"intensity {intensity} outside 0..255")
        levels = np.array([i])
        weights = np.array([1.0])
    amps = kraus.diag[:, levels].T.copy()
    return DilatedState(levels, weights, amps)


def ancilla_distribution(state: DilatedState) -> np.ndarray:
    """Outcome probabilities of a projective ancilla measurement."""
    return state.weights @ (state.amplitudes ** 2)


def sample_from(p, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise InvalidParamsError("need at least one sample")
    p = np.asarray(p, dtype=np.float64)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(n)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1)
    return np.bincount(idx, minlength=p.size)


def sample_outcomes(state: DilatedState, n: int, seed: int) -> np.ndarray:
    """Seeded ancilla readout counts (length K, summing to ``n``)."""
    return sample_from(ancilla_distribution(state), n, seed)


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64))))
