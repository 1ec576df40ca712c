"""Planar array geometry and array response vectors (far and near field)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

__all__ = [
    "SPEED_OF_LIGHT",
    "ArrayGeometry",
    "Direction",
    "direction_to_unit",
    "unit_to_direction",
    "element_positions",
    "far_field_arv",
    "near_field_arv",
    "element_aod",
    "rayleigh_distance",
]


class Direction(NamedTuple):
    theta: float
    phi: float


def element_positions(nx: int, ny: int, d: float) -> np.ndarray:
    """Element coordinates, shape (nx*ny, 3); row n-1 holds (ix*d, iy*d, 0) with n = ix*ny + iy + 1."""
    if nx < 1 or ny < 1:
        raise ValueError("array dimensions must be positive")
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pos = np.zeros((nx * ny, 3))
    pos[:, 0] = ix.ravel() * d
    pos[:, 1] = iy.ravel() * d
    return pos


@dataclass(frozen=True)
class ArrayGeometry:
    """Nx-by-Ny uniform planar array on the z = 0 plane."""

    nx: int
    ny: int
    spacing: float
    wavelength: float
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("array dimensions must be positive")
        if self.spacing <= 0 or self.wavelength <= 0:
            raise ValueError("spacing and wavelength must be positive")
        object.__setattr__(self, "positions", element_positions(self.nx, self.ny, self.spacing))

    @classmethod
    def from_frequency(cls, nx: int, ny: int, frequency_hz: float, spacing_wavelengths: float = 0.5):
        lam = SPEED_OF_LIGHT / frequency_hz
        return cls(nx, ny, spacing_wavelengths * lam, lam)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny


def direction_to_unit(direction) -> np.ndarray:
    theta, phi = direction
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def unit_to_direction(q, atol: float = 1e-9) -> Direction:
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > atol:
        raise ValueError("unit_to_direction expects a unit vector")
    theta = float(np.arccos(np.clip(q[2], -1.0, 1.0)))
    # arctan2(0, 0) == 0 gives phi = 0 at the poles
    phi = float(np.arctan2(q[1], q[0]))
    return Direction(theta, phi)


def far_field_arv(geom: ArrayGeometry, direction) -> np.ndarray:
    """Planar-wave response exp(-j2pi px k(Nx)) kron exp(-j2pi py k(Ny)).

    Spatial angles: px = d/lambda sin(theta) sin(phi), py = d/lambda sin(theta) cos(phi).
    """
    theta, phi = direction
    ratio = geom.spacing / geom.wavelength
    px = ratio * np.sin(theta) * np.sin(phi)
    py = ratio * np.sin(theta) * np.cos(phi)
    ax = np.exp(-2j * np.pi * px * np.arange(geom.nx))
    ay = np.exp(-2j * np.pi * py * np.arange(geom.ny))
    return np.kron(ax, ay)


def _offsets(geom: ArrayGeometry, p_r) -> np.ndarray:
    p_r = np.asarray(p_r, dtype=float)
    diff = p_r[None, :] - geom.positions
    dist = np.linalg.norm(diff, axis=1)
    if np.any(dist == 0.0):
        raise ValueError("receiver position coincides with an array element")
    return diff


def near_field_arv(geom: ArrayGeometry, p_r) -> np.ndarray:
    """Spherical-wave response, entry n = exp(-j 2pi/lambda |p_n - p_R|)."""
    dist = np.linalg.norm(_offsets(geom, p_r), axis=1)
    return np.exp(-2j * np.pi / geom.wavelength * dist)


def element_aod(geom: ArrayGeometry, n: int, p_r) -> Direction:
    """Departure angles from element ``n`` (1-based) toward ``p_r``."""
    diff = _offsets(geom, p_r)[n - 1]
    u = diff / np.linalg.norm(diff)
    return Direction(float(np.arccos(np.clip(u[2], -1.0, 1.0))), float(np.arctan2(u[1], u[0])))


def element_aods(geom: ArrayGeometry, p_r) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`element_aod` over all elements."""
    diff = _offsets(geom, p_r)
    u = diff / np.linalg.norm(diff, axis=1, keepdims=True)
    return np.arccos(np.clip(u[:, 2], -1.0, 1.0)), np.arctan2(u[:, 1], u[:, 0])


def rayleigh_distance(geom: ArrayGeometry) -> float:
    """2 D^2 / lambda with D the aperture diagonal."""
    diag = geom.spacing * np.hypot(geom.nx - 1, geom.ny - 1)
    return float(2.0 * diag ** 2 / geom.wavelength)
