"""Trace-zero real sequences and the rearrangements that keep their prefix sums small.

Indices are 0-based throughout: a permutation ``perm`` reorders ``values``
into ``values[perm]``.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    LengthMismatch,
    NotMonotone,
    PairNotCentered,
    SumTooFarFromZero,
    TooLarge,
)

ZERO_SUM_TOL = 1e-12
CENTERING_TOL = 1e-6
BRUTE_FORCE_MAX = 9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpectrumSequence:
    """A real vector summing to zero.

    ``adjustment`` is the mean that was subtracted during validation.
    """

    values: np.ndarray
    adjustment: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.n else 0.0

    def permuted(self, perm) -> "SpectrumSequence":
        return SpectrumSequence(self.values[np.asarray(perm)], self.adjustment)

    def __len__(self):
        return self.n


def validate_spectrum(values) -> SpectrumSequence:
    """Check that ``values`` is (nearly) centered and return it exactly mean-centered.

    Raises ``SumTooFarFromZero`` if the mean exceeds ``CENTERING_TOL`` relative
    to the sup norm; smaller drifts are removed by subtracting the mean.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyInput("spectrum must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise SumTooFarFromZero("spectrum has non-finite entries")
    mean = math.fsum(arr) / arr.size
    scale = float(np.max(np.abs(arr)))
    if abs(mean) > CENTERING_TOL * scale:
        raise SumTooFarFromZero(
            f"mean {mean:.3e} exceeds {CENTERING_TOL:g} * max|value| = {CENTERING_TOL * scale:.3e}"
        )
    centered = arr - mean if mean != 0.0 else arr
    return SpectrumSequence(centered, adjustment=mean)


def as_spectrum(lam) -> SpectrumSequence:
    if isinstance(lam, SpectrumSequence):
        return lam
    return validate_spectrum(lam)


def prefix_sums(values) -> np.ndarray:
    return np.cumsum(np.asarray(values, dtype=float))


def prefix_sum_max(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(prefix_sums(values))))


def rotation_sum_max(values) -> float:
    """Largest |partial sum| over every cyclic rotation of a centered sequence.

    A partial sum of a rotation is a difference of two prefix sums (the wrap
    adds the total, which is zero), so the maximum is ``max P - min P`` over
    the prefix sums with ``P_0 = 0`` included.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    p = np.concatenate(([0.0], prefix_sums(values)))
    return float(np.max(p) - np.min(p))


@dataclass(frozen=True)
class RearrangementPlan:
    permutation: np.ndarray
    partial_sum_max: float
    rotation_sum_max: float

    def __post_init__(self):
        object.__setattr__(self, "permutation", _frozen(self.permutation, dtype=np.intp))

    def apply(self, lam) -> SpectrumSequence:
        return as_spectrum(lam).permuted(self.permutation)


def greedy_rearrange(lam) -> RearrangementPlan:
    """Order ``lam`` so that every prefix sum is at most ``max|lam|`` in absolute value.

    Two FIFO pools (nonnegative, negative) are drawn from: a positive running
    sum takes the next negative entry, otherwise the next nonnegative one.
    An exhausted pool falls back to the other.
    """
    lam = as_spectrum(lam)
    vals = lam.values
    nonneg = deque(i for i in range(lam.n) if vals[i] >= 0)
    neg = deque(i for i in range(lam.n) if vals[i] < 0)
    perm = []
    running = 0.0
    while nonneg or neg:
        if running > 0:
            pool = neg if neg else nonneg
        else:
            pool = nonneg if nonneg else neg
        i = pool.popleft()
        perm.append(i)
        running += vals[i]
    perm = np.array(perm, dtype=np.intp)
    ordered = vals[perm]
    return RearrangementPlan(perm, prefix_sum_max(ordered), rotation_sum_max(ordered))


@dataclass(frozen=True)
class PairedSpectrum:
    """``m`` pairs ``(x_i, y_i)`` with ``x_i + y_i = 0``."""

    pairs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pairs, dtype=float).reshape(-1, 2)
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        bad = np.nonzero(np.abs(arr.sum(axis=1)) > ZERO_SUM_TOL * scale)[0]
        if bad.size:
            i = int(bad[0])
            raise PairNotCentered(f"pair {i} = {tuple(arr[i])} does not sum to zero")
        object.__setattr__(self, "pairs", _frozen(arr))

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.pairs))) if self.m else 0.0

    @classmethod
    def from_sequence(cls, values) -> "PairedSpectrum":
        """Split a length-2m sequence into pairs ``(values[i], values[i + m])``."""
        values = np.asarray(values, dtype=float)
        if values.size % 2:
            raise LengthMismatch("paired sequence must have even length")
        m = values.size // 2
        return cls(np.column_stack([values[:m], values[m:]]))

    def interleaved(self) -> np.ndarray:
        return np.concatenate([self.pairs[:, 0], self.pairs[:, 1]])


def paired_rearrange(p: PairedSpectrum) -> tuple[SpectrumSequence, list[bool]]:
    """Flip pairs so the running sum of first entries alternates in sign.

    The first pair is never flipped; pair ``k`` is flipped when its first entry
    has the same strict sign as the running sum of the previous first entries.
    Returns ``kappa`` (all first entries, then all second entries) and the flips.
    """
    if not isinstance(p, PairedSpectrum):
        p = PairedSpectrum(p)
    flips = []
    running = 0.0
    firsts = np.empty(p.m)
    seconds = np.empty(p.m)
    for k, (x, y) in enumerate(p.pairs):
        flip = k > 0 and ((running > 0 and x > 0) or (running < 0 and x < 0))
        if flip:
            x, y = y, x
        flips.append(bool(flip))
        firsts[k], seconds[k] = x, y
        running += x
    kappa = np.concatenate([firsts, seconds])
    return SpectrumSequence(kappa), flips


def _distinct_orderings(values: np.ndarray):
    """Yield ``(perm, ordered)`` for each distinct ordering, lexicographically smallest perm first."""
    seen = set()
    for perm in itertools.permutations(range(len(values))):
        key = tuple(values[list(perm)])
        if key in seen:
            continue
        seen.add(key)
        yield perm, key


def bruteforce_optimal_rearrange(
    lam, norm_fn: Optional[Callable[[np.ndarray], float]] = None, *, rtol: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of ``norm_fn(lam[perm])`` over distinct orderings.

    ``norm_fn`` defaults to the operator norm of the triangular Toeplitz
    matrix built from the ordering. Ties (within ``rtol``) go to the
    lexicographically smallest permutation.
    """
    lam = as_spectrum(lam)
    if lam.n > BRUTE_FORCE_MAX:
        raise TooLarge(f"n = {lam.n} exceeds brute-force cap {BRUTE_FORCE_MAX}")
    perms, orders = zip(*_distinct_orderings(lam.values))
    orders = np.array(orders, dtype=float)
    if norm_fn is None:
        from .toeplitz import batch_t_norms

        norms = batch_t_norms(orders)
    else:
        norms = np.array([norm_fn(o) for o in orders])
    best = float(np.min(norms))
    idx = int(np.argmax(norms <= best + rtol * max(best, 1.0)))
    return np.array(perms[idx], dtype=np.intp), float(norms[idx])


def dirichlet_bound(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Summation-by-parts bound ``|sum a_j b_j| <= max_k |B_k| * |a_n - a_1|``.

    ``a`` must be monotone and ``b`` must sum to zero. Returns ``(bound, actual)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0, 0.0
    da = np.diff(a)
    if not (np.all(da >= 0) or np.all(da <= 0)):
        raise NotMonotone("first sequence must be monotone")
    scale = max(1.0, float(np.max(np.abs(b))))
    if abs(math.fsum(b)) > 1e-9 * scale * b.size:
        raise SumTooFarFromZero("second sequence must sum to zero")
    bound = prefix_sum_max(b) * abs(a[-1] - a[0])
    actual = abs(math.fsum(a * b))
    return float(bound), float(actual)
