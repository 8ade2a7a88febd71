"""Reproduction suites: bound sweeps, the log-growth family, batch realization."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolation
from .indlimit import direct_sum_profile, power_norm_profile
from .spectra import (
    PairedSpectrum,
    as_spectrum,
    bruteforce_optimal_rearrange,
    greedy_rearrange,
    paired_rearrange,
    rotation_sum_max,
)
from .toeplitz import C_PAIRED, K_THEOREM, SKEW_CONST, operator_norm, skew_norm_exact, t_matrix, toeplitz_coefficients

log = logging.getLogger(__name__)

BOUND_ATOL = 1e-8
DISTRIBUTIONS = ("uniform", "two-point")


def draw_spectrum(rng: np.random.Generator, n: int, distribution: str = "uniform") -> np.ndarray:
    if distribution == "uniform":
        lam = rng.uniform(-1.0, 1.0, n)
        return lam - lam.mean()
    if distribution == "two-point":
        if n % 2:
            raise ValueError("the balanced two-point family needs even n")
        return rng.permutation(np.repeat([1.0, -1.0], n // 2))
    raise ValueError(f"unknown distribution {distribution!r}; choose from {DISTRIBUTIONS}")


def _ratio(num: float, den: float) -> float:
    return 0.0 if den == 0 else num / den


def realize_trial(lam) -> dict:
    """Greedy-rearrange ``lam``, build ``T`` and collect every per-instance check."""
    lam = as_spectrum(lam)
    plan = greedy_rearrange(lam)
    kappa = plan.apply(lam)
    T = t_matrix(kappa)
    B = T + T.conj().T
    eig = np.linalg.eigvalsh(B)
    sup = lam.sup_norm
    norm = operator_norm(T)
    return {
        "n": lam.n,
        "sup": sup,
        "norm": norm,
        "ratio": _ratio(norm, sup),
        "skew_exact": skew_norm_exact(kappa),
        "skew_dense": operator_norm(T - T.conj().T),
        "eig_error": float(np.max(np.abs(np.sort(eig) - np.sort(lam.values)))),
        "real_norm_error": abs(float(np.max(np.abs(eig))) - sup),
        "partial_sum_max": plan.partial_sum_max,
        "rotation_sum_max": plan.rotation_sum_max,
    }


@dataclass
class SweepResult:
    n: int
    trials: int
    worst_ratio: float
    seed: int
    distribution: str = "uniform"
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    worst_skew_ratio: float = 0.0
    max_skew_gap: float = 0.0
    max_eig_error: float = 0.0
    max_real_norm_error: float = 0.0


def _trial(n, distribution, seed_seq):
    lam = draw_spectrum(np.random.default_rng(seed_seq), n, distribution)
    return lam, realize_trial(lam)


def bound_sweep(sizes, trials_per_size: int, distribution: str = "uniform", seed: int = 0,
                workers: int = 1, check: bool = True) -> list[SweepResult]:
    """Worst ``||T|| / ||lam||_inf`` after greedy rearrangement over random spectra.

    Trial seeds derive from ``(seed, n)`` so results do not depend on
    ``workers`` or on which other sizes are swept.
    """
    out = []
    for n in sizes:
        seeds = np.random.SeedSequence([seed, n]).spawn(trials_per_size)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(lambda s: _trial(n, distribution, s), seeds))
        else:
            results = [_trial(n, distribution, s) for s in seeds]
        recs = [r for _, r in results]
        ratios = np.array([r["ratio"] for r in recs])
        res = SweepResult(
            n=n, trials=trials_per_size, worst_ratio=float(ratios.max(initial=0.0)), seed=seed,
            distribution=distribution, ratios=ratios,
            worst_skew_ratio=max((_ratio(r["skew_exact"], r["sup"]) for r in recs), default=0.0),
            max_skew_gap=max((abs(r["skew_exact"] - r["skew_dense"]) for r in recs), default=0.0),
            max_eig_error=max((r["eig_error"] for r in recs), default=0.0),
            max_real_norm_error=max((r["real_norm_error"] for r in recs), default=0.0),
        )
        log.info("n=%d worst ratio %.6f", n, res.worst_ratio)
        if check and res.worst_ratio > K_THEOREM + BOUND_ATOL:
            i = int(np.argmax(ratios))
            raise BoundViolation(
                f"n = {n}: ratio {res.worst_ratio:.12g} exceeds K = {K_THEOREM:.12g}",
                {"n": n, "spectrum": results[i][0].tolist()},
            )
        out.append(res)
    return out


# --- the balanced family (1, ..., 1, -1, ..., -1) ---------------------------


def balanced_family(n: int) -> np.ndarray:
    """``n`` ones followed by ``n`` minus ones (length ``2n``)."""
    return np.concatenate([np.ones(n), -np.ones(n)])


def balanced_strip_closed_form(n: int) -> np.ndarray:
    """``t_d`` of the balanced family: 0 for even ``d``, ``(1 + i cot(pi d / 2n)) / n`` for odd ``d``."""
    d = np.arange(1, 2 * n)
    t = np.zeros(d.size, dtype=complex)
    odd = d % 2 == 1
    t[odd] = (1.0 + 1j / np.tan(np.pi * d[odd] / (2 * n))) / n
    return t


def lower_bound(n: int) -> float:
    return math.log(n) / math.pi - 3.0 / (2.0 * math.pi)


@dataclass
class GrowthResult:
    sizes: list
    norms: np.ndarray
    quad_forms: np.ndarray  # <T g, g>, g the normalized all-ones vector
    bounds: np.ndarray
    coeff_errors: np.ndarray
    slope: float
    monotone: bool

    def rows(self):
        for n, nm, q, b, e in zip(self.sizes, self.norms, self.quad_forms, self.bounds, self.coeff_errors):
            yield {"n": n, "size": 2 * n, "norm": nm, "re_quad": q.real, "im_quad": q.imag,
                   "lower_bound": b, "coeff_error": e}


def growth_slope(sizes, norms) -> float:
    """Least-squares slope of the norms against ``log(2n)``."""
    if len(sizes) < 2:
        return float("nan")
    return float(np.polyfit(np.log(2 * np.asarray(sizes, dtype=float)), np.asarray(norms), 1)[0])


def lowerbound_growth(n_list, check: bool = True) -> GrowthResult:
    norms, quads, bounds, errs = [], [], [], []
    for n in n_list:
        lam = balanced_family(n)
        c = toeplitz_coefficients(lam)
        errs.append(float(np.max(np.abs(c.strip - balanced_strip_closed_form(n)))))
        T = t_matrix(lam)
        g = np.full(2 * n, 1.0 / math.sqrt(2 * n))
        q = complex(g @ T @ g)
        nm = operator_norm(T)
        norms.append(nm)
        quads.append(q)
        bounds.append(lower_bound(n))
        if check:
            problems = []
            if abs(q.real - 0.5) > 1e-10:
                problems.append(f"Re<Tg,g> = {q.real!r}")
            if q.imag < bounds[-1]:
                problems.append(f"Im<Tg,g> = {q.imag!r} below {bounds[-1]!r}")
            if nm < abs(q) - 1e-12 or nm < bounds[-1]:
                problems.append(f"||T|| = {nm!r} below |<Tg,g>| or the log bound")
            if errs[-1] > 1e-10:
                problems.append(f"closed-form coefficient error {errs[-1]:.3e}")
            if problems:
                raise BoundViolation(f"n = {n}: " + "; ".join(problems), {"n": n})
    norms = np.array(norms)
    monotone = bool(np.all(np.diff(norms) >= -1e-9))
    if not monotone:
        log.warning("balanced-family norms are not monotone in n")
    return GrowthResult(list(n_list), norms, np.array(quads), np.array(bounds), np.array(errs),
                        growth_slope(n_list, norms), monotone)


def rearrangement_gap(n: int) -> tuple[float, float]:
    """``(||T_lam||, ||T_{lam o sigma}||)`` for the balanced family and its greedy rearrangement."""
    lam = balanced_family(n)
    plan = greedy_rearrange(lam)
    return operator_norm(t_matrix(lam)), operator_norm(t_matrix(plan.apply(lam)))


# --- paired rearrangement and brute-force comparisons --------------------------


def random_paired(rng: np.random.Generator, m: int) -> PairedSpectrum:
    x = rng.uniform(-1.0, 1.0, m)
    swap = rng.random(m) < 0.5
    first = np.where(swap, -x, x)
    return PairedSpectrum(np.column_stack([first, -first]))


def paired_sweep(trials: int, m_max: int = 256, seed: int = 0) -> list[dict]:
    rows = []
    for s in np.random.SeedSequence([seed, m_max]).spawn(trials):
        rng = np.random.default_rng(s)
        p = random_paired(rng, int(rng.integers(2, m_max + 1)))
        kappa, flips = paired_rearrange(p)
        sup = p.sup_norm
        rows.append({
            "m": p.m,
            "sup": sup,
            "rotation_sum_max": rotation_sum_max(kappa.values),
            "norm": operator_norm(t_matrix(kappa)),
            "bound": C_PAIRED * sup,
        })
    return rows


def oracle_comparison(trials: int, sizes=(4, 5, 6, 7, 8), seed: int = 0) -> list[dict]:
    """Exhaustive minimum vs greedy norm for small random spectra."""
    rows = []
    for i, s in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(s)
        n = int(sizes[i % len(sizes)])
        lam = as_spectrum(draw_spectrum(rng, n))
        _, best = bruteforce_optimal_rearrange(lam)
        greedy = operator_norm(t_matrix(greedy_rearrange(lam).apply(lam)))
        rows.append({"n": n, "sup": lam.sup_norm, "min_norm": best, "greedy_norm": greedy,
                     "greedy_over_min": _ratio(greedy, best)})
    return rows


# --- fiberwise realization ---------------------------------------------------


def batch_realize(fibers) -> list[tuple[np.ndarray, float]]:
    """Realize each fiber independently; every ratio must respect ``K``."""
    out = []
    for i, lam in enumerate(fibers):
        lam = as_spectrum(lam)
        T = t_matrix(greedy_rearrange(lam).apply(lam))
        ratio = _ratio(operator_norm(T), lam.sup_norm)
        if ratio > K_THEOREM + BOUND_ATOL:
            raise BoundViolation(f"fiber {i}: ratio {ratio:.12g} exceeds K", {"fiber": i, "spectrum": lam.values.tolist()})
        out.append((T, ratio))
    return out


def batch_profile(realized, m_max: int) -> np.ndarray:
    return direct_sum_profile([T for T, _ in realized], m_max)


# --- irrational trace explorer -------------------------------------------------


def irrational_family(tau: float, n: int) -> np.ndarray:
    """``round(tau n)`` entries ``1 - tau``, the rest ``-tau``, mean-centered."""
    k = int(round(tau * n))
    lam = np.concatenate([np.full(k, 1.0 - tau), np.full(n - k, -tau)])
    return lam - lam.mean()


def irrational_explorer(tau: float, n_list) -> list[dict]:
    """Exploratory: greedy realization of a projection minus its (approximate) trace."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    rows = []
    for n in n_list:
        lam = as_spectrum(irrational_family(tau, n))
        T = t_matrix(greedy_rearrange(lam).apply(lam))
        norm = operator_norm(T)
        prof = power_norm_profile(T, n)
        rows.append({
            "n": n,
            "ones": int(round(tau * n)),
            "norm": norm,
            "ratio": _ratio(norm, lam.sup_norm),
            "profile_m1": prof[0],
            "profile_mhalf": prof[max(n // 2, 1) - 1],
            "profile_mn": prof[n - 1],
            "flag": "EXPLORATORY",
        })
    return rows


def skew_bound_holds(lam) -> bool:
    lam = as_spectrum(lam)
    kappa = greedy_rearrange(lam).apply(lam)
    return skew_norm_exact(kappa) <= SKEW_CONST * lam.sup_norm + BOUND_ATOL
