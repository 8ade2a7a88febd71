"""Finite stages of the dyadic inductive-limit construction.

Stage ``j`` (1-based) lives on ``N_j = n1 * 2**(j-1)`` diagonal positions.
Going from stage ``j-1`` to ``j``, position ``p`` splits into positions ``p``
and ``p + N_{j-1}`` (the tiling convention of :func:`uttoeplitz.embed.beta_diagonal`).
Cells of a measure are kept in their natural left-to-right order inside
:class:`DyadicApproximation`; :meth:`DyadicApproximation.positions` maps them
to stage positions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .embed import dilate_strip
from .errors import (
    BoundViolation,
    DensityBelowDelta,
    LengthMismatch,
    MeasureError,
    NonUnitMass,
    NotNilpotentBlock,
    RefinementInconsistent,
    TooLarge,
)
from .spectra import PairedSpectrum, SpectrumSequence, as_spectrum, greedy_rearrange, paired_rearrange
from .toeplitz import C_PAIRED, K_THEOREM, operator_norm, strip_matrix, toeplitz_coefficients

MASS_TOL = 1e-12
MEAN_TOL = 1e-10
DENSITY_MASS_RTOL = 1e-9
REFINE_TOL = 1e-10
QUANTILE_TOL = 1e-12
QUANTILE_MAX_ITER = 200
N1_MAX = 4096


@dataclass(frozen=True)
class StagePlan:
    n1: int
    J: int

    def __post_init__(self):
        if self.n1 < 1 or self.J < 1:
            raise ValueError(f"need n1, J >= 1, got ({self.n1}, {self.J})")

    @property
    def sizes(self) -> list[int]:
        return [self.n1 * 2 ** (j - 1) for j in range(1, self.J + 1)]

    @property
    def N(self) -> int:
        return self.n1 * 2 ** (self.J - 1)


# --- measures --------------------------------------------------------------


@dataclass(frozen=True)
class ACPiece:
    """Absolutely continuous part on ``[a, b]`` with a piecewise-linear density table."""

    a: float
    b: float
    nodes: np.ndarray  # shape (k, 2): x, density
    delta: float
    mass: Fraction

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "mass", Fraction(self.mass))
        x, y = nodes[:, 0], nodes[:, 1]
        if not self.a < self.b:
            raise MeasureError(f"interval [{self.a}, {self.b}] is empty")
        if len(x) < 2 or x[0] != self.a or x[-1] != self.b or np.any(np.diff(x) <= 0):
            raise MeasureError("density nodes must increase strictly from a to b")
        if self.delta <= 0:
            raise MeasureError("delta must be positive")
        if self.mass <= 0:
            raise MeasureError("piece mass must be positive")
        if np.any(y < self.delta):
            raise DensityBelowDelta(f"density {y.min():g} below delta {self.delta:g}")
        total = float(self._cum_mass()[-1])
        if abs(total - float(self.mass)) > DENSITY_MASS_RTOL * float(self.mass):
            raise MeasureError(f"density integrates to {total!r}, declared mass is {self.mass}")

    def _cum_mass(self) -> np.ndarray:
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        seg = 0.5 * (y[:-1] + y[1:]) * np.diff(x)
        return np.concatenate(([0.0], np.cumsum(seg)))

    def _cum_moment(self) -> np.ndarray:
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        h = np.diff(x)
        s = np.diff(y) / h
        seg = x[:-1] * y[:-1] * h + (x[:-1] * s + y[:-1]) * h**2 / 2 + s * h**3 / 3
        return np.concatenate(([0.0], np.cumsum(seg)))

    def _locate(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.a, self.b)
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        u = t - x[i]
        s = (y[i + 1] - y[i]) / (x[i + 1] - x[i])
        return i, u, s

    def cdf(self, t) -> np.ndarray:
        """Mass of ``[a, t]``."""
        i, u, s = self._locate(t)
        y = self.nodes[:, 1]
        return self._cum_mass()[i] + y[i] * u + s * u**2 / 2

    def moment(self, t) -> np.ndarray:
        """``int_a^t x rho(x) dx``."""
        i, u, s = self._locate(t)
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        xi, yi = x[i], y[i]
        return self._cum_moment()[i] + xi * yi * u + (xi * s + yi) * u**2 / 2 + s * u**3 / 3

    def quantile(self, fractions) -> np.ndarray:
        """Points ``c`` with ``cdf(c) = fraction * total``, by bisection."""
        q = np.asarray(fractions, dtype=float)
        target = q * float(self._cum_mass()[-1])
        lo = np.full(q.shape, self.a)
        hi = np.full(q.shape, self.b)
        for _ in range(QUANTILE_MAX_ITER):
            if np.all(hi - lo <= QUANTILE_TOL):
                break
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        c = 0.5 * (lo + hi)
        c = np.where(q <= 0, self.a, c)
        return np.where(q >= 1, self.b, c)

    def cell_means(self, cuts) -> np.ndarray:
        cuts = np.asarray(cuts, dtype=float)
        F, M = self.cdf(cuts), self.moment(cuts)
        return np.diff(M) / np.diff(F)

    @property
    def mean_mass(self) -> float:
        """``int x rho(x) dx`` over the whole interval."""
        return float(self._cum_moment()[-1])


@dataclass(frozen=True)
class MeasureSpec:
    atoms: tuple = ()  # of (location, Fraction weight)
    pieces: tuple = ()  # of ACPiece

    def __post_init__(self):
        atoms = tuple((float(x), Fraction(w)) for x, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if any(w <= 0 for _, w in atoms):
            raise MeasureError("atom weights must be positive")
        total = sum((w for _, w in atoms), Fraction(0)) + sum((p.mass for p in self.pieces), Fraction(0))
        if abs(float(total) - 1.0) > MASS_TOL:
            raise NonUnitMass(f"total mass is {total}, not 1")
        spans = sorted((p.a, p.b) for p in self.pieces)
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            if a1 <= b0:
                raise MeasureError(f"intervals [{a0}, {b0}] and [{a1}, {b1}] overlap")
        if abs(self.mean()) > MEAN_TOL:
            raise MeasureError(f"measure has mean {self.mean():.3e}, not zero")

    def mean(self) -> float:
        return math.fsum([x * float(w) for x, w in self.atoms] + [p.mean_mass for p in self.pieces])

    def parts(self) -> list:
        """Atoms and pieces sorted by location."""
        items = [(x, "atom", (x, w)) for x, w in self.atoms] + [(p.a, "ac", p) for p in self.pieces]
        return [(kind, obj) for _, kind, obj in sorted(items, key=lambda t: (t[0], t[1]))]

    @classmethod
    def from_dict(cls, doc: dict) -> "MeasureSpec":
        try:
            atoms = [(float(a["x"]), Fraction(str(a["w"]))) for a in doc.get("atoms", [])]
            pieces = []
            for p in doc.get("ac", []):
                a, b = (float(v) for v in p["interval"])
                pieces.append(ACPiece(a, b, np.asarray(p["density"], dtype=float), float(p["delta"]), Fraction(str(p["mass"]))))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, MeasureError):
                raise
            raise MeasureError(f"malformed measure document: {exc}") from exc
        return cls(tuple(atoms), tuple(pieces))

    @classmethod
    def load(cls, path) -> "MeasureSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def uniform_measure(a: float = -0.5, b: float = 0.5) -> MeasureSpec:
    h = 1.0 / (b - a)
    return MeasureSpec(pieces=(ACPiece(a, b, [[a, h], [b, h]], h, Fraction(1)),))


def choose_n1(measure: MeasureSpec) -> int:
    """Least common denominator of all atom weights and piece masses.

    A purely continuous measure with unit denominator gets ``n1 = 2`` so
    that the first stage is not the trivial one-cell partition.
    """
    dens = [w.denominator for _, w in measure.atoms] + [p.mass.denominator for p in measure.pieces]
    n1 = reduce(math.lcm, dens, 1)
    if n1 == 1 and measure.pieces and not measure.atoms:
        n1 = 2
    if n1 > N1_MAX:
        raise TooLarge(f"required n1 = {n1} exceeds cap {N1_MAX}")
    return n1


# --- dyadic approximation --------------------------------------------------


def flip_positions(n1: int, j: int) -> np.ndarray:
    """Stage position of each natural cell index at stage ``j``.

    Natural cell ``c = c1 * 2**(j-1) + r`` sits at ``c1 + n1 * rev(r)``, where
    ``rev`` reverses the ``j-1`` refinement bits (the newest split is the
    most significant).
    """
    bits = j - 1
    r = np.arange(2**bits)
    rev = np.zeros_like(r)
    for b in range(bits):
        rev |= ((r >> b) & 1) << (bits - 1 - b)
    c1 = np.arange(n1)
    return (c1[:, None] + n1 * rev[None, :]).ravel()


def _lift(values: np.ndarray, size: int) -> np.ndarray:
    """Stage-``j-1`` values seen at stage ``j`` positions (period ``len(values)``)."""
    return np.tile(values, size // len(values))


@dataclass
class DyadicApproximation:
    """Cell averages ``E_j`` of the identity under a measure, per stage.

    ``stages[j-1]`` lists the ``n1 * 2**(j-1)`` stage-``j`` averages in
    natural (left-to-right) order; ``cuts[j-1][i]`` is the partition of the
    ``i``-th continuous piece at that stage.
    """

    n1: int
    stages: list
    cuts: list
    increment_norms: np.ndarray

    @property
    def J(self) -> int:
        return len(self.stages)

    def positions(self, j: int) -> np.ndarray:
        return flip_positions(self.n1, j)

    def stage_values(self, j: int) -> np.ndarray:
        """Stage-``j`` averages in stage-position order."""
        out = np.empty(self.n1 * 2 ** (j - 1))
        out[self.positions(j)] = self.stages[j - 1]
        return out

    def increment(self, j: int) -> SpectrumSequence:
        """``E_j - E_{j-1}`` in stage-position order (``E_0`` is the mean, zero)."""
        cur = self.stage_values(j)
        if j == 1:
            return SpectrumSequence(cur)
        return SpectrumSequence(cur - _lift(self.stage_values(j - 1), cur.size))

    def increments(self) -> list:
        return [self.increment(j) for j in range(1, self.J + 1)]

    def refinement_gap(self) -> float:
        """Max deviation between each stage and the pairwise averages of the next."""
        gap = 0.0
        for prev, cur in zip(self.stages, self.stages[1:]):
            gap = max(gap, float(np.max(np.abs(cur.reshape(-1, 2).mean(axis=1) - prev))))
        return gap


def dyadic_approximation(measure: MeasureSpec, J: int, n1: Optional[int] = None) -> DyadicApproximation:
    """Equal-mass dyadic partitions of ``measure`` and the cell averages at each stage."""
    if J < 1:
        raise ValueError("J must be >= 1")
    if n1 is None:
        n1 = choose_n1(measure)
    if n1 > N1_MAX:
        raise TooLarge(f"n1 = {n1} exceeds cap {N1_MAX}")
    parts = measure.parts()
    base_cells = []
    for kind, obj in parts:
        w = obj[1] if kind == "atom" else obj.mass
        k = n1 * w
        if k.denominator != 1:
            raise MeasureError(f"n1 = {n1} does not split a part of mass {w} into whole cells")
        base_cells.append(int(k))

    stages, cuts = [], []
    for j in range(1, J + 1):
        rep = 2 ** (j - 1)
        vals, stage_cuts = [], []
        for (kind, obj), k in zip(parts, base_cells):
            cells = k * rep
            if kind == "atom":
                vals.append(np.full(cells, obj[0]))
                continue
            frac = np.array([float(Fraction(i, cells)) for i in range(cells + 1)])
            c = obj.quantile(frac)
            stage_cuts.append(c)
            vals.append(obj.cell_means(c))
        stages.append(np.concatenate(vals))
        cuts.append(stage_cuts)

    norms = [float(np.max(np.abs(stages[0])))]
    for prev, cur in zip(stages, stages[1:]):
        norms.append(float(np.max(np.abs(cur - np.repeat(prev, 2)))))
    approx = DyadicApproximation(n1, stages, cuts, np.array(norms))
    if approx.refinement_gap() > REFINE_TOL:
        raise RefinementInconsistent(f"stage averages disagree by {approx.refinement_gap():.3e}")
    return approx


def increments_to_pairs(approx: DyadicApproximation, j: int) -> PairedSpectrum:
    """Stage-``j`` increment as pairs ``(child at p, child at p + N_{j-1})`` per parent position ``p``."""
    if j < 2:
        raise ValueError("increments split into pairs only from the second stage on")
    return _centered_pairs(approx.increment(j).values, f"stage {j}")


def _centered_pairs(values: np.ndarray, label: str) -> PairedSpectrum:
    m = values.size // 2
    pairs = np.column_stack([values[:m], values[m:]])
    scale = max(1.0, float(np.max(np.abs(pairs))))
    if np.max(np.abs(pairs.sum(axis=1))) > REFINE_TOL * scale:
        raise RefinementInconsistent(f"{label} increments are not centered on their parents")
    return PairedSpectrum(pairs - pairs.mean(axis=1, keepdims=True))


# --- assembly --------------------------------------------------------------


@dataclass
class StageAssembly:
    plan: StagePlan
    increments: list  # rearranged per-stage spectra, stage-position order
    stage_strips: list  # dilated to size N
    strip: np.ndarray
    stage_norms: np.ndarray  # ||T_{a_j}||
    increment_sups: np.ndarray  # ||a_j||_inf
    source: np.ndarray  # final position -> original position
    flips: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.plan.N

    def matrix(self) -> np.ndarray:
        return strip_matrix(self.strip)

    def stage_bounds(self) -> np.ndarray:
        consts = np.full(self.plan.J, C_PAIRED)
        consts[0] = K_THEOREM
        return consts * self.increment_sups

    @property
    def norm_budget(self) -> float:
        """``C * sum_j ||a_j||_inf``."""
        return C_PAIRED * float(np.sum(self.increment_sups))

    def realized_diagonal(self) -> np.ndarray:
        """Sum of the lifted rearranged increments; ``z + z*`` is its Fourier conjugate."""
        return sum(_lift(k.values, self.N) for k in self.increments)


def assemble(plan: StagePlan, increments: Sequence, *, check: bool = True) -> StageAssembly:
    """Rearrange each stage increment and sum the dilated strips into one UTTM strip.

    Stage 1 is ordered greedily; later stages flip children of each parent by
    :func:`paired_rearrange`. A flip moves the whole subtree, so the running
    ``source`` map keeps every stage consistent with the earlier choices.
    """
    if len(increments) != plan.J:
        raise LengthMismatch(f"expected {plan.J} stage increments, got {len(increments)}")
    sizes = plan.sizes
    N = plan.N
    rearranged, strips, flips_all = [], [], []
    source = None
    for j, (size, inc) in enumerate(zip(sizes, increments), start=1):
        inc = as_spectrum(inc)
        if inc.n != size:
            raise LengthMismatch(f"stage {j} increment has length {inc.n}, expected {size}")
        if j == 1:
            source = greedy_rearrange(inc).permutation.copy()
            kappa = inc.permuted(source)
            flips_all.append([])
        else:
            half = size // 2
            source = np.concatenate([source, source + half])
            kappa, flips = paired_rearrange(_centered_pairs(inc.values[source], f"stage {j}"))
            for i in np.flatnonzero(flips):
                source[[i, i + half]] = source[[i + half, i]]
            flips_all.append(flips)
        rearranged.append(kappa)
        strips.append(dilate_strip(toeplitz_coefficients(kappa).strip, N // size))
    strip = np.sum(strips, axis=0) if N > 1 else np.zeros(0, dtype=complex)
    stage_norms = np.array([operator_norm(strip_matrix(toeplitz_coefficients(k).strip)) for k in rearranged])
    sups = np.array([k.sup_norm for k in rearranged])
    asm = StageAssembly(plan, rearranged, strips, strip, stage_norms, sups, source, flips_all)
    if check:
        bounds = asm.stage_bounds()
        bad = np.flatnonzero(stage_norms > bounds + 1e-8)
        if bad.size:
            j = int(bad[0])
            raise BoundViolation(
                f"stage {j + 1}: ||T|| = {stage_norms[j]:.12g} exceeds {bounds[j]:.12g}",
                {"stage": j + 1, "increment": rearranged[j].values.tolist()},
            )
    return asm


def realize_measure(measure: MeasureSpec, J: int, n1: Optional[int] = None):
    approx = dyadic_approximation(measure, J, n1)
    plan = StagePlan(approx.n1, J)
    return approx, assemble(plan, approx.increments())


# --- quasinilpotency proxies -----------------------------------------------


def _strictly_upper(z: np.ndarray) -> bool:
    return not np.any(np.tril(z))


def power_norm_profile(z, m_max: int) -> np.ndarray:
    """``(||z^m||^(1/m))`` for ``m = 1..m_max``.

    For strictly upper triangular ``z`` the entries of ``z^m`` below the
    ``m``-th superdiagonal are structurally zero and are kept exactly zero.
    """
    z = np.asarray(z)
    nil = _strictly_upper(z)
    out = np.empty(m_max)
    P = np.eye(z.shape[0], dtype=z.dtype)
    for m in range(1, m_max + 1):
        P = P @ z
        if nil:
            P = np.triu(P, m)
        out[m - 1] = operator_norm(P) ** (1.0 / m) if P.any() else 0.0
    return out


def direct_sum_profile(blocks: Sequence, m_max: int) -> np.ndarray:
    """Power profile of a block-diagonal sum, computed block by block."""
    powers = np.zeros(m_max)
    for i, z in enumerate(blocks):
        z = np.asarray(z)
        if not _strictly_upper(z):
            raise NotNilpotentBlock(f"block {i} has entries on or below the diagonal")
        prof = power_norm_profile(z, m_max)
        powers = np.maximum(powers, prof ** np.arange(1, m_max + 1))
    return powers ** (1.0 / np.arange(1, m_max + 1))


# --- a diagonal element whose increments are not summable ----------------------


class CounterexampleRow(NamedTuple):
    N: int
    s_N: float
    increment_norm: float
    partial_sum: float
    cell_average_increment: float


def tail_sum(N: int) -> float:
    """``s_N = sum_{n > N} 1 / (n 2^n)`` by direct summation."""
    return math.fsum(1.0 / (n * 2.0**n) for n in range(N + 1, N + 80))


def tail_sum_identity(N: int) -> float:
    """``s_N = ln 2 - sum_{n <= N} 1 / (n 2^n)``; loses relative accuracy for large ``N``."""
    return math.fsum([math.log(2.0)] + [-1.0 / (n * 2.0**n) for n in range(1, N + 1)])


def scaled_tail(N: int) -> float:
    """``2^N s_N = sum_{k >= 1} 1 / ((N + k) 2^k)``: the average of the step function over ``(0, 2^-N)``."""
    return math.fsum(1.0 / ((N + k) * 2.0**k) for k in range(1, 80))


def counterexample_series(N_max: int) -> list[CounterexampleRow]:
    """Tail sums ``s_N`` and the increment norms ``max(s_N - s_{N+1}, |s_N - 1/(N+1)|)``.

    ``cell_average_increment`` is the sup-norm jump between consecutive dyadic
    cell averages of the underlying step function, computed from the exact
    averages ``+-2^N s_N`` of the two central cells.
    """
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    rows = []
    running = 0.0
    for N in range(1, N_max + 1):
        s, s_next = tail_sum(N), tail_sum(N + 1)
        if abs(s - tail_sum_identity(N)) > 1e-14:
            raise RefinementInconsistent(f"tail sum routes disagree at N = {N}")
        inc = max(s - s_next, abs(s - 1.0 / (N + 1)))
        running += inc
        avg_N, avg_next = scaled_tail(N), scaled_tail(N + 1)
        exact = max(abs(1.0 / (N + 1) - avg_N), abs(avg_next - avg_N))
        rows.append(CounterexampleRow(N, s, inc, running, exact))
    return rows
