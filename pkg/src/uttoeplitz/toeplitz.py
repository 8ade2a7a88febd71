"""Strictly upper triangular Toeplitz matrices built from a centered spectrum.

Conventions: ``omega_n = exp(2 pi i / n)``, and the strip coefficient of a
spectrum ``lam`` at offset ``d`` is ``t_d = (1/n) sum_p lam_p omega_n^(d p)``
(0-based ``p``), which is exactly ``numpy.fft.ifft(lam)[d]``. A strip is the
array ``(t_1, ..., t_{n-1})``; ``t_0`` is always zero for a centered spectrum.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, DomainError, SymmetryViolation
from .spectra import SpectrumSequence, as_spectrum

#: Universal bound ||T|| <= K ||lam||_inf after greedy rearrangement.
K_THEOREM = 0.5 + 4.0 / math.pi
#: Bound for paired (stage-doubling) rearrangements.
C_PAIRED = 0.5 + 12.0 / math.pi
#: Bound on ||T - T*|| / ||lam||_inf after greedy rearrangement.
SKEW_CONST = 8.0 / math.pi
#: Every eigenvalue of the H_n kernel lies strictly inside (-2/pi, 2/pi).
MU_BOUND = 2.0 / math.pi

SYMMETRY_TOL = 1e-9
DENSE_NORM_MAX = 1024
POWER_MAX_ITER = 50000
POWER_RTOL = 1e-12


def _omega(n: int) -> complex:
    return np.exp(2j * np.pi / n)


@dataclass(frozen=True)
class ToeplitzCoefficients:
    """Strip ``(t_1, ..., t_{n-1})`` of a member of UTTM_n^(1) with ``t_{n-d} = conj(t_d)``."""

    n: int
    strip: np.ndarray

    def __post_init__(self):
        strip = np.array(self.strip, dtype=complex).ravel()
        if strip.size != max(self.n - 1, 0):
            raise ValueError(f"strip length {strip.size} does not match n - 1 = {self.n - 1}")
        strip.setflags(write=False)
        object.__setattr__(self, "strip", strip)
        gap = self.symmetry_gap()
        scale = max(1.0, float(np.max(np.abs(strip)))) if strip.size else 1.0
        if gap > SYMMETRY_TOL * scale:
            raise SymmetryViolation(f"t_(n-d) deviates from conj(t_d) by {gap:.3e}")

    def symmetry_gap(self) -> float:
        if self.strip.size == 0:
            return 0.0
        return float(np.max(np.abs(self.strip[::-1] - np.conj(self.strip))))

    def full(self) -> np.ndarray:
        """``(t_0, t_1, ..., t_{n-1})`` with ``t_0 = 0``."""
        return np.concatenate(([0.0], self.strip))


def toeplitz_coefficients(lam, method: str = "fft") -> ToeplitzCoefficients:
    lam = as_spectrum(lam)
    n = lam.n
    if method == "fft":
        t = np.fft.ifft(lam.values)
    elif method == "direct":
        p = np.arange(n)
        t = (lam.values[None, :] * _omega(n) ** np.outer(p, p)).sum(axis=1) / n
    else:
        raise ValueError(f"unknown method {method!r}")
    return ToeplitzCoefficients(n, t[1:])


def strip_matrix(strip) -> np.ndarray:
    """Dense strictly upper triangular Toeplitz matrix with first row ``(0, *strip)``."""
    strip = np.asarray(strip, dtype=complex).ravel()
    n = strip.size + 1
    full = np.concatenate(([0.0], strip))
    offset = np.subtract.outer(np.arange(n), np.arange(n)) * -1
    return np.where(offset > 0, full[np.clip(offset, 0, n - 1)], 0.0)


def build_T(c) -> np.ndarray:
    strip = c.strip if isinstance(c, ToeplitzCoefficients) else c
    return strip_matrix(strip)


def t_matrix(lam) -> np.ndarray:
    """``T_lam``: the upper triangular part of the Fourier conjugate of ``diag(lam)``."""
    return build_T(toeplitz_coefficients(lam))


def build_B(lam) -> np.ndarray:
    """Hermitian Toeplitz ``T + T*`` with zero diagonal; unitarily equivalent to ``diag(lam)``."""
    T = t_matrix(lam)
    return T + T.conj().T


def recover_spectrum(c: ToeplitzCoefficients) -> SpectrumSequence:
    """Invert :func:`toeplitz_coefficients`: ``lam_p = sum_d t_d omega_n^(-d p)``."""
    if not isinstance(c, ToeplitzCoefficients):
        strip = np.asarray(c, dtype=complex)
        c = ToeplitzCoefficients(strip.size + 1, strip)
    lam = np.fft.fft(c.full()).real
    return SpectrumSequence(lam)


def fourier_matrix(n: int) -> np.ndarray:
    """Unitary ``U_n`` with entries ``omega_n^(jk) / sqrt(n)``; its columns are the Fourier basis."""
    if n < 1:
        raise ValueError("n must be positive")
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def fourier_conj(x: np.ndarray) -> np.ndarray:
    """``U* x U`` for square ``x``."""
    U = fourier_matrix(x.shape[0])
    return U.conj().T @ x @ U


# --- the H_n kernel --------------------------------------------------------


def hn_matrix(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("n must be at least 2")
    H = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    H[iu] = 1j / n
    H[(iu[1], iu[0])] = -1j / n
    return H


@functools.lru_cache(maxsize=256)
def _hn_mu(n: int) -> np.ndarray:
    k = np.arange(n)
    if n % 2:
        mu = np.tan(np.pi * k / n) / n
        mu[0] = 0.0
    else:
        mu = -1.0 / (n * np.tan(np.pi * (2 * k + 1) / (2 * n)))
    mu.setflags(write=False)
    return mu


@dataclass(frozen=True)
class HnSpectrum:
    """Closed-form eigensystem of :func:`hn_matrix`.

    ``mu[k]`` for ``k = 0..n-1`` pairs with eigenvector ``W^k v_0`` where
    ``W = diag(omega_n^j)``. :meth:`cyclic_mu` gives ``(mu_1, ..., mu_n)``
    with ``mu_n = mu_0``, the indexing used by the skew-norm identity.
    """

    n: int
    mu: np.ndarray
    odd: bool

    def base_vector(self) -> np.ndarray:
        j = np.arange(self.n)
        if self.odd:
            return (-1.0) ** j / np.sqrt(self.n) + 0j
        return np.exp(1j * np.pi * j / self.n) / np.sqrt(self.n)

    def vectors(self) -> np.ndarray:
        """Columns ``v_0, ..., v_{n-1}``."""
        j = np.arange(self.n)
        W_powers = np.exp(2j * np.pi * np.outer(j, j) / self.n)  # [j, k] = omega^(jk)
        return W_powers * self.base_vector()[:, None]

    def cyclic_mu(self) -> np.ndarray:
        return np.roll(self.mu, -1)


def hn_eigensystem(n: int) -> HnSpectrum:
    if n < 2:
        raise ValueError("n must be at least 2")
    return HnSpectrum(n, _hn_mu(n), bool(n % 2))


def hn_eigen_residual(n: int) -> float:
    """``max_k ||H_n v_k - mu_k v_k||``."""
    spec = hn_eigensystem(n)
    V = spec.vectors()
    R = hn_matrix(n) @ V - V * spec.mu[None, :]
    return float(np.max(np.linalg.norm(R, axis=0)))


def hn_reconstruct(n: int) -> float:
    """Operator-norm residual of ``H_n - sum_k mu_k W^k Q (W*)^k``."""
    spec = hn_eigensystem(n)
    V = spec.vectors()
    recon = (V * spec.mu[None, :]) @ V.conj().T
    return operator_norm(hn_matrix(n) - recon)


# --- norms -----------------------------------------------------------------


def power_iteration_norm(M: np.ndarray, *, max_iter: int = POWER_MAX_ITER, rtol: float = POWER_RTOL, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``M* M``."""
    rng = np.random.default_rng(seed)
    n = M.shape[1]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    prev = None
    for _ in range(max_iter):
        w = M.conj().T @ (M @ v)
        rq = float(np.vdot(v, w).real)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if prev is not None and abs(rq - prev) <= rtol * abs(rq):
            return math.sqrt(max(rq, 0.0))
        prev = rq
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations")


def operator_norm(M, method: str = "auto") -> float:
    """Spectral norm: dense SVD up to ``DENSE_NORM_MAX``, power iteration above."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    if method == "auto":
        method = "svd" if max(M.shape) <= DENSE_NORM_MAX else "power"
    if method == "svd":
        return float(scipy.linalg.svdvals(M, check_finite=True)[0])
    if method == "power":
        return power_iteration_norm(M)
    raise ValueError(f"unknown method {method!r}")


def t_norm(lam) -> float:
    return operator_norm(t_matrix(lam))


def batch_t_norms(orders: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """``||T_lam||`` for each row of ``orders`` using stacked SVDs."""
    orders = np.atleast_2d(np.asarray(orders, dtype=float))
    B, n = orders.shape
    if n < 2:
        return np.zeros(B)
    offset = np.subtract.outer(np.arange(n), np.arange(n)) * -1
    mask = offset > 0
    idx = np.clip(offset, 0, n - 1)
    out = np.empty(B)
    for start in range(0, B, chunk):
        t = np.fft.ifft(orders[start:start + chunk], axis=1)
        T = np.where(mask, t[:, idx], 0.0)
        out[start:start + chunk] = np.linalg.svd(T, compute_uv=False)[:, 0]
    return out


def skew_norm_exact(lam) -> float:
    """``||T_lam - T_lam*||`` as the largest rotated dot product with the H_n eigenvalues.

    The rotations are evaluated at once as a circular cross-correlation.
    """
    lam = as_spectrum(lam)
    n = lam.n
    if n < 2:
        return 0.0
    mu = hn_eigensystem(n).cyclic_mu()
    corr = np.fft.ifft(np.fft.fft(mu) * np.conj(np.fft.fft(lam.values))).real
    return float(np.max(np.abs(corr)))


def skew_norm_rotations(lam) -> np.ndarray:
    """The ``n`` rotated dot products, evaluated directly (O(n^2))."""
    lam = as_spectrum(lam)
    n = lam.n
    mu = hn_eigensystem(n).cyclic_mu()
    return np.array([np.dot(np.roll(lam.values, s), mu) for s in range(n)])


# --- cotangent partial fractions ---------------------------------------------


def f1_series(x: float, terms: int) -> float:
    """Truncation of ``(1/pi) sum_{k>=1} 2x / (k^2 - x^2)``, valid for ``0 <= x < 1``."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"x = {x} outside [0, 1)")
    if terms < 1:
        raise DomainError("terms must be >= 1")
    k = np.arange(terms, 0, -1, dtype=float)  # small terms first
    return float(np.sum(2.0 * x / (k * k - x * x)) / np.pi)


def cot_series(x: float, terms: int) -> tuple[float, float]:
    """Return ``(f1, |cot(pi x) - (1/(pi x) - f1)|)`` for ``0 < x < 1``."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"x = {x} outside (0, 1)")
    f1 = f1_series(x, terms)
    resid = abs(1.0 / math.tan(math.pi * x) - (1.0 / (math.pi * x) - f1))
    return f1, resid
