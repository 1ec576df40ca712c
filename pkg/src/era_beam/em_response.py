"""EM-domain array responses and beampattern evaluation.

The response matrix for one sample is block diagonal: column n carries
``a_n * y_n`` in rows of block n.  We keep only the pairs ``(a_n, y_n)``, so
``b^T A f = sum_n a_n f_n (y_n . b_n)`` costs O(NT).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence, Union

import numpy as np

from .geometry import ArrayGeometry, Direction, element_aods, far_field_arv, near_field_arv
from .harmonics import TruncationSpec, basis_matrix

Regime = Literal["far", "near"]


@dataclass(frozen=True)
class FarTarget:
    theta: float
    phi: float

    regime = "far"


@dataclass(frozen=True)
class NearTarget:
    x: float
    y: float
    z: float

    regime = "near"

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


SampleTarget = Union[FarTarget, NearTarget]


@dataclass(frozen=True)
class EMResponse:
    """Block form of one response matrix: ``a`` shape (N,), ``y`` shape (N, T)."""

    a: np.ndarray
    y: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.a.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    def dense(self) -> np.ndarray:
        """Materialize the NT-by-N matrix ``1 a^T (Hadamard) blkdiag(y_1..y_N)``."""
        N, T = self.y.shape
        blk = np.zeros((N * T, N))
        for n in range(N):
            blk[n * T:(n + 1) * T, n] = self.y[n]
        return np.ones((N * T, 1)) @ self.a[None, :] * blk


def build_response(geom: ArrayGeometry, spec: TruncationSpec, target: SampleTarget) -> EMResponse:
    if isinstance(target, FarTarget):
        direction = Direction(target.theta, target.phi)
        a = far_field_arv(geom, direction)
        y = np.broadcast_to(basis_matrix(spec, target.theta, target.phi), (geom.n_elements, spec.T)).copy()
    elif isinstance(target, NearTarget):
        p = target.position
        a = near_field_arv(geom, p)
        th, ph = element_aods(geom, p)
        y = basis_matrix(spec, th, ph)
    else:
        raise TypeError(f"unsupported target {target!r}")
    return EMResponse(a, y)


def _blocks(b: np.ndarray, N: int, T: int) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.size != N * T:
        raise ValueError(f"coefficient vector has length {b.size}, expected {N * T}")
    return b.reshape(N, T)


def complex_response(b, resp: EMResponse, f) -> complex:
    """``b^T A f`` via the block structure."""
    f = np.asarray(f)
    if f.shape != (resp.n_elements,):
        raise ValueError(f"phase vector has shape {f.shape}, expected ({resp.n_elements},)")
    gains = np.einsum("nt,nt->n", resp.y, _blocks(b, resp.n_elements, resp.T))
    return complex(np.sum(resp.a * f * gains))


def beampattern(b, resp: EMResponse, f) -> float:
    return abs(complex_response(b, resp, f))


def beampattern_grid(b, f, geom: ArrayGeometry, spec: TruncationSpec,
                     grid: Sequence[SampleTarget]) -> list[float]:
    return [beampattern(b, build_response(geom, spec, tgt), f) for tgt in grid]


@dataclass(frozen=True)
class ResponseStack:
    """Responses for S samples stacked: ``a`` (S, N) complex, ``y`` (S, N, T) real."""

    a: np.ndarray
    y: np.ndarray

    @classmethod
    def build(cls, geom: ArrayGeometry, spec: TruncationSpec,
              targets: Sequence[SampleTarget]) -> "ResponseStack":
        resps = [build_response(geom, spec, t) for t in targets]
        if not resps:
            return cls(np.zeros((0, geom.n_elements), complex), np.zeros((0, geom.n_elements, spec.T)))
        return cls(np.stack([r.a for r in resps]), np.stack([r.y for r in resps]))

    def __len__(self) -> int:
        return self.a.shape[0]

    def gains(self, bmat: np.ndarray) -> np.ndarray:
        """Element gains g[s, n] = y_{s,n} . b_n for coefficient matrix ``bmat`` (T, N)."""
        return np.einsum("snt,tn->sn", self.y, bmat)

    def fields(self, bmat: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Complex ``b^T A_s f`` for every sample."""
        return (self.a * self.gains(bmat)) @ f


def far_field_arv_many(geom: ArrayGeometry, theta, phi) -> np.ndarray:
    """Far-field response vectors for arrays of directions, shape (P, N)."""
    theta = np.ravel(theta)
    phi = np.ravel(phi)
    ratio = geom.spacing / geom.wavelength
    px = ratio * np.sin(theta) * np.sin(phi)
    py = ratio * np.sin(theta) * np.cos(phi)
    ax = np.exp(-2j * np.pi * px[:, None] * np.arange(geom.nx)[None, :])
    ay = np.exp(-2j * np.pi * py[:, None] * np.arange(geom.ny)[None, :])
    return (ax[:, :, None] * ay[:, None, :]).reshape(theta.size, -1)


def far_field_pattern(bmat: np.ndarray, f: np.ndarray, geom: ArrayGeometry,
                      spec: TruncationSpec, theta, phi) -> np.ndarray:
    """|b^T A(theta, phi) f| on many directions; ``bmat`` is (T, N)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    gains = basis_matrix(spec, theta.ravel(), phi.ravel()) @ bmat
    a = far_field_arv_many(geom, theta, phi)
    return np.abs((a * gains) @ f).reshape(theta.shape)


def near_field_pattern(bmat: np.ndarray, f: np.ndarray, geom: ArrayGeometry,
                       spec: TruncationSpec, points) -> np.ndarray:
    """|b^T A(p) f| for receiver positions ``points`` of shape (P, 3)."""
    points = np.atleast_2d(np.asarray(points, float))
    diff = points[:, None, :] - geom.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist == 0.0):
        raise ValueError("receiver position coincides with an array element")
    u = diff / dist[..., None]
    th = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
    ph = np.arctan2(u[..., 1], u[..., 0])
    gains = np.einsum("pnt,tn->pn", basis_matrix(spec, th, ph), bmat)
    a = np.exp(-2j * np.pi / geom.wavelength * dist)
    return np.abs((a * gains) @ f)
