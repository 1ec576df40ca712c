"""Oblique manifold, complex circle manifold, and their product.

Both factors use the embedded Euclidean metric and the normalization
retraction.  A product point is ``(B, f)`` with ``B`` of shape (T, N) having
unit-norm columns and ``f`` a complex N-vector of unit-modulus entries.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class ProductPoint(NamedTuple):
    B: np.ndarray
    f: np.ndarray


class ProductTangent(NamedTuple):
    B: np.ndarray
    f: np.ndarray

    def __add__(self, other):
        return ProductTangent(self.B + other.B, self.f + other.f)

    def __mul__(self, alpha):
        return ProductTangent(alpha * self.B, alpha * self.f)

    __rmul__ = __mul__

    def __neg__(self):
        return ProductTangent(-self.B, -self.f)


def _check_shape(x, u):
    if np.shape(x) != np.shape(u):
        raise ValueError(f"shape mismatch: {np.shape(x)} vs {np.shape(u)}")


def oblique_project(B: np.ndarray, U: np.ndarray) -> np.ndarray:
    _check_shape(B, U)
    return U - B * np.sum(B * U, axis=0, keepdims=True)


def normalize_columns(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=0, keepdims=True)
    if np.any(norms == 0.0):
        raise FloatingPointError("zero-norm column in oblique retraction")
    return X / norms


def oblique_retract(B: np.ndarray, xi: np.ndarray, t: float = 1.0) -> np.ndarray:
    _check_shape(B, xi)
    return normalize_columns(B + t * xi)


def circle_project(f: np.ndarray, u: np.ndarray) -> np.ndarray:
    _check_shape(f, u)
    return u - (np.conj(f) * u).real * f


def normalize_entries(z: np.ndarray) -> np.ndarray:
    mag = np.abs(z)
    if np.any(mag == 0.0):
        raise FloatingPointError("zero-magnitude entry in circle retraction")
    return z / mag


def circle_retract(f: np.ndarray, xi: np.ndarray, t: float = 1.0) -> np.ndarray:
    _check_shape(f, xi)
    return normalize_entries(f + t * xi)


def product_project(x: ProductPoint, u: ProductTangent) -> ProductTangent:
    return ProductTangent(oblique_project(x.B, u.B), circle_project(x.f, u.f))


def product_retract(x: ProductPoint, xi: ProductTangent, t: float = 1.0) -> ProductPoint:
    # an empty B factor (no free coefficients) is a single point
    B = x.B if x.B.size == 0 else oblique_retract(x.B, xi.B, t)
    return ProductPoint(B, circle_retract(x.f, xi.f, t))


def product_inner(xi: ProductTangent, eta: ProductTangent) -> float:
    _check_shape(xi.B, eta.B)
    _check_shape(xi.f, eta.f)
    return float(np.sum(xi.B * eta.B) + np.vdot(xi.f, eta.f).real)


def product_norm(xi: ProductTangent) -> float:
    return float(np.sqrt(product_inner(xi, xi)))


def random_point(T: int, N: int, seed) -> ProductPoint:
    """Seeded random point; ``B`` and ``f`` come from independent child streams.

    Splitting the streams keeps ``f`` identical for every ``T`` with the same seed.
    """
    if T < 0 or N < 1:
        raise ValueError("need T >= 0 and N >= 1")
    rng_b, rng_f = np.random.default_rng(seed).spawn(2)
    B = rng_b.standard_normal((T, N))
    if T:
        B = normalize_columns(B)
    f = np.exp(1j * rng_f.uniform(0.0, 2.0 * np.pi, N))
    return ProductPoint(B, f)
