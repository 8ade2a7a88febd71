"""Tensor embedding ``x -> x (x) I_n``, Fourier conjugation and their composite.

``beta = alpha_mn^{-1} . gamma . alpha_m`` carries diagonal matrices to
diagonal matrices by tiling: ``diag(d) -> diag(d, d, ..., d)``. This is the
index convention used when stages double in :mod:`uttoeplitz.indlimit`.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooLarge
from .toeplitz import fourier_matrix, operator_norm

DIAGRAM_MAX_DIM = 256


@dataclass(frozen=True)
class EmbeddingPair:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"need m, n >= 1, got ({self.m}, {self.n})")

    @property
    def total(self) -> int:
        return self.m * self.n


def _pair(pair) -> EmbeddingPair:
    return pair if isinstance(pair, EmbeddingPair) else EmbeddingPair(*pair)


def _check_square(x: np.ndarray, m: int):
    if x.ndim != 2 or x.shape != (m, m):
        raise DimensionMismatch(f"expected a {m}x{m} matrix, got shape {x.shape}")


def gamma_embed(x, pair) -> np.ndarray:
    """``e_ij -> sum_k e_{n i + k, n j + k}`` (0-based), i.e. ``kron(x, I_n)``."""
    pair = _pair(pair)
    x = np.asarray(x)
    _check_square(x, pair.m)
    return np.kron(x, np.eye(pair.n))


def dilate_strip(strip, n: int) -> np.ndarray:
    """Strip of ``gamma(T)`` for ``T`` with the given strip: ``t_d`` moves to offset ``n d``."""
    strip = np.asarray(strip, dtype=complex).ravel()
    m = strip.size + 1
    out = np.zeros(m * n - 1, dtype=complex)
    out[n - 1::n] = strip
    return out


def fourier_conjugate(x, inverse: bool = False) -> np.ndarray:
    """``U* x U``, or ``U x U*`` when ``inverse``."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {x.shape}")
    U = fourier_matrix(x.shape[0])
    if inverse:
        return U @ x @ U.conj().T
    return U.conj().T @ x @ U


def beta_embed(x, pair) -> np.ndarray:
    pair = _pair(pair)
    x = np.asarray(x)
    _check_square(x, pair.m)
    return fourier_conjugate(gamma_embed(fourier_conjugate(x), pair), inverse=True)


def beta_diagonal(values, n: int) -> np.ndarray:
    """Closed form of ``beta`` on diagonals, as the new diagonal."""
    return np.tile(np.asarray(values), n)


def triangular_projection(x) -> np.ndarray:
    """Keep entries strictly above the diagonal."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {x.shape}")
    return np.triu(x, 1)


def _complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _diagram_sample(pair: EmbeddingPair, seed_seq) -> float:
    rng = np.random.default_rng(seed_seq)
    m, n = pair.m, pair.n
    x = _complex_normal(rng, (m, m))
    upper = np.triu(_complex_normal(rng, (m, m)), 1)
    d = rng.standard_normal(m)
    D = np.diag(d)

    gx = gamma_embed(x, pair)
    resid = [
        # truncation commutes with the tensor embedding
        operator_norm(triangular_projection(gamma_embed(upper, pair)) - gamma_embed(triangular_projection(upper), pair)),
        operator_norm(triangular_projection(gx) - gamma_embed(triangular_projection(x), pair)),
        # alpha_mn . beta = gamma . alpha_m
        operator_norm(fourier_conjugate(beta_embed(x, pair)) - gamma_embed(fourier_conjugate(x), pair)),
    ]
    bd = beta_embed(D, pair)
    # diagonals go to diagonals, by tiling
    resid.append(operator_norm(bd - np.diag(beta_diagonal(d, n))))
    # whole ladder: triangular part of the conjugated embedded diagonal
    top = triangular_projection(fourier_conjugate(bd))
    resid.append(operator_norm(top - gamma_embed(triangular_projection(fourier_conjugate(D)), pair)))
    return max(resid)


def diagram_check(pair, samples: int = 10, seed: int = 0, workers: int = 1) -> float:
    """Max operator-norm residual of the commuting-diagram identities over random samples."""
    pair = _pair(pair)
    if pair.total > DIAGRAM_MAX_DIM:
        raise TooLarge(f"m*n = {pair.total} exceeds {DIAGRAM_MAX_DIM}")
    seeds = np.random.SeedSequence(seed).spawn(samples)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            res = list(pool.map(lambda s: _diagram_sample(pair, s), seeds))
    else:
        res = [_diagram_sample(pair, s) for s in seeds]
    return max(res, default=0.0)


def beta_diagonal_residual(pair) -> float:
    """Max residual between ``beta(e_ll)`` computed by conjugation and its tiled closed form."""
    pair = _pair(pair)
    worst = 0.0
    for l in range(pair.m):
        e = np.zeros(pair.m)
        e[l] = 1.0
        worst = max(worst, operator_norm(beta_embed(np.diag(e), pair) - np.diag(beta_diagonal(e, pair.n))))
    return worst
