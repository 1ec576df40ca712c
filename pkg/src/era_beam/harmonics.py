"""Real spherical harmonics and truncated harmonic basis vectors.

Associated Legendre functions are evaluated *without* the Condon-Shortley
phase, so ``P_l^l(x) >= 0`` for ``|x| <= 1``.  Flat indices are 1-based:
``t = l**2 + l + m + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi, sqrt

import numpy as np

__all__ = [
    "HarmonicIndex",
    "TruncationSpec",
    "assoc_legendre",
    "real_sph_harmonic",
    "flat_index",
    "unflatten",
    "basis_vector",
    "basis_matrix",
    "pattern_eval",
]


@dataclass(frozen=True)
class HarmonicIndex:
    degree: int
    order: int

    def __post_init__(self):
        if self.degree < 0 or abs(self.order) > self.degree:
            raise ValueError(f"invalid harmonic index (l={self.degree}, m={self.order})")


@dataclass(frozen=True)
class TruncationSpec:
    """Maximum retained degree ``L``; ``T = (L + 1)**2`` coefficients."""

    L: int

    def __post_init__(self):
        if self.L < 0:
            raise ValueError(f"truncation degree must be nonnegative, got {self.L}")

    @property
    def T(self) -> int:
        return self.L * self.L + 2 * self.L + 1

    def indices(self) -> list[HarmonicIndex]:
        return [unflatten(t, self.L) for t in range(1, self.T + 1)]


def _legendre_column(lmax: int, m: int, x: np.ndarray) -> np.ndarray:
    """P_l^m(x) for l = m..lmax, shape (lmax - m + 1, *x.shape)."""
    out = np.empty((lmax - m + 1,) + x.shape)
    # seed P_m^m = (2m-1)!! (1 - x^2)^(m/2), no Condon-Shortley sign
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.ones_like(x)
    for k in range(1, m + 1):
        pmm = pmm * (2 * k - 1) * s
    out[0] = pmm
    if lmax == m:
        return out
    out[1] = x * (2 * m + 1) * pmm
    for l in range(m + 2, lmax + 1):
        out[l - m] = ((2 * l - 1) * x * out[l - m - 1] - (l + m - 1) * out[l - m - 2]) / (l - m)
    return out


def assoc_legendre(l: int, m: int, x):
    """Associated Legendre function P_l^m(x) by upward recurrence in degree.

    Accepts a scalar or array ``x``; returns the same shape.
    """
    if m < 0 or m > l:
        raise ValueError(f"order m={m} out of range for degree l={l}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("assoc_legendre requires |x| <= 1")
    val = _legendre_column(l, m, xa)[-1]
    return float(val) if val.ndim == 0 else val


def _norm(l: int, m: int) -> float:
    return sqrt((2 * l + 1) / (4 * pi) * factorial(l - m) / factorial(l + m))


def real_sph_harmonic(idx: HarmonicIndex, theta, phi):
    """Real orthonormal spherical harmonic Y_l^m at inclination ``theta``, azimuth ``phi``."""
    l, m = idx.degree, idx.order
    am = abs(m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    p = _legendre_column(l, am, np.clip(np.cos(theta), -1.0, 1.0))[-1]
    if m > 0:
        val = sqrt(2.0) * _norm(l, am) * p * np.cos(am * phi)
    elif m < 0:
        val = sqrt(2.0) * _norm(l, am) * p * np.sin(am * phi)
    else:
        val = _norm(l, 0) * p * np.ones_like(phi)
    return float(val) if np.ndim(val) == 0 else val


def flat_index(idx: HarmonicIndex) -> int:
    return idx.degree ** 2 + idx.degree + idx.order + 1


def unflatten(t: int, L: int) -> HarmonicIndex:
    T = (L + 1) ** 2
    if not 1 <= t <= T:
        raise IndexError(f"flat index {t} out of range 1..{T}")
    l = int(sqrt(t - 1))
    # guard against sqrt rounding for large t
    while (l + 1) ** 2 <= t - 1:
        l += 1
    while l * l > t - 1:
        l -= 1
    return HarmonicIndex(l, t - 1 - l * l - l)


def basis_matrix(spec: TruncationSpec, theta, phi) -> np.ndarray:
    """Basis vectors for many directions at once.

    ``theta`` and ``phi`` broadcast together; the result has shape
    ``(*broadcast_shape, T)`` with the last axis in flat-index order.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    x = np.clip(np.cos(theta), -1.0, 1.0)
    L = spec.L
    out = np.empty(theta.shape + (spec.T,))
    for m in range(L + 1):
        col = _legendre_column(L, m, x)
        if m > 0:
            c = np.cos(m * phi)
            s = np.sin(m * phi)
        for l in range(m, L + 1):
            p = col[l - m]
            base = l * l + l
            if m == 0:
                out[..., base] = _norm(l, 0) * p
            else:
                k = sqrt(2.0) * _norm(l, m) * p
                out[..., base + m] = k * c
                out[..., base - m] = k * s
    return out


def basis_vector(spec: TruncationSpec, theta: float, phi: float) -> np.ndarray:
    """Length-T vector of real harmonics at one direction, in flat-index order."""
    if np.ndim(theta) or np.ndim(phi):
        raise ValueError("basis_vector takes scalar angles; use basis_matrix for arrays")
    return basis_matrix(spec, theta, phi)


def pattern_eval(coeffs, theta, phi) -> float:
    """Element gain ``y(theta, phi) . coeffs``; may be negative."""
    coeffs = np.asarray(coeffs, dtype=float)
    L = int(round(sqrt(coeffs.size))) - 1
    if coeffs.ndim != 1 or (L + 1) ** 2 != coeffs.size:
        raise ValueError(f"coefficient length {coeffs.size} is not a perfect square (L+1)^2")
    val = basis_matrix(TruncationSpec(L), theta, phi) @ coeffs
    return float(val) if np.ndim(val) == 0 else val
