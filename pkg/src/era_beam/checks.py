"""Fast invariant checks behind ``era-beam validate``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .em_response import FarTarget
from .geometry import ArrayGeometry
from .harmonics import TruncationSpec, basis_matrix
from .manifold import (
    circle_project,
    oblique_project,
    random_point,
)
from .synthesis import (
    Sample,
    Scenario,
    SolverConfig,
    euclidean_gradient,
    objective,
    magnitude_residual,
    synthesize,
    update_phases,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_far_scenario(rng: np.random.Generator, nx: int, ny: int, L: int, S: int,
                        wavelength: float = 0.01) -> Scenario:
    """Random far-field scenario with directions in the front hemisphere."""
    geom = ArrayGeometry(nx, ny, wavelength / 2, wavelength)
    samples = []
    for _ in range(S):
        tgt = FarTarget(rng.uniform(0.0, np.pi / 2), rng.uniform(-np.pi, np.pi))
        samples.append(Sample(tgt, rng.uniform(0.0, 2.0 * nx * ny), rng.uniform(0.5, 2.0)))
    return Scenario(geom, TruncationSpec(L), tuple(samples))


def sphere_gram(L: int, n_theta: int | None = None, n_phi: int | None = None) -> np.ndarray:
    """Gram matrix of the truncated basis by Gauss-Legendre x uniform-azimuth quadrature."""
    n_theta = n_theta or 2 * L + 2
    n_phi = n_phi or 4 * L + 2
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    Y = basis_matrix(TruncationSpec(L), np.arccos(x)[:, None], phi[None, :])
    w = (wx[:, None] * np.full(n_phi, 2.0 * np.pi / n_phi)[None, :]).reshape(-1)
    Y = Y.reshape(-1, Y.shape[-1])
    return Y.T @ (w[:, None] * Y)


def orthonormality_check(L: int = 4, tol: float = 1e-9) -> CheckResult:
    gram = sphere_gram(L)
    err = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    return CheckResult(f"orthonormality L={L}", err < tol, f"max |G - I| = {err:.3e} (tol {tol:g})")


def finite_difference_gradient(B, f, psi, scn: Scenario, h: float = 1e-6):
    """Central differences of :func:`objective` in every real coordinate of (B, Re f, Im f)."""
    G = np.zeros_like(B)
    for idx in np.ndindex(*B.shape):
        Bp, Bm = B.copy(), B.copy()
        Bp[idx] += h
        Bm[idx] -= h
        G[idx] = (objective(Bp, f, psi, scn) - objective(Bm, f, psi, scn)) / (2 * h)
    g = np.zeros_like(f)
    for n in range(f.size):
        parts = []
        for step in (h, 1j * h):
            fp, fm = f.copy(), f.copy()
            fp[n] += step
            fm[n] -= step
            parts.append((objective(B, fp, psi, scn) - objective(B, fm, psi, scn)) / (2 * h))
        g[n] = parts[0] + 1j * parts[1]
    return G, g


def gradient_relative_error(grad_fn, B, f, psi, scn: Scenario, h: float = 1e-6) -> float:
    G, g = grad_fn(B, f, psi, scn)
    Gfd, gfd = finite_difference_gradient(B, f, psi, scn, h)
    num = np.sqrt(np.sum((G - Gfd) ** 2) + np.sum(np.abs(g - gfd) ** 2))
    den = np.sqrt(np.sum(Gfd ** 2) + np.sum(np.abs(gfd) ** 2))
    return float(num / den)


def gradient_check(grad_fn: Callable = euclidean_gradient, n_points: int = 10, tol: float = 1e-5,
                   seed: int = 1234) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_points):
        scn = random_far_scenario(rng, 2, 2, 2, 5)
        p = random_point(scn.T, scn.n_elements, int(rng.integers(2**31)))
        psi = rng.uniform(-np.pi, np.pi, len(scn.samples))
        worst = max(worst, gradient_relative_error(grad_fn, p.B, p.f, psi, scn))
    return CheckResult("gradient vs central differences", worst < tol,
                       f"worst relative error {worst:.3e} over {n_points} points (tol {tol:g})")


def manifold_hygiene_check(tol: float = 1e-8, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_tangent = 0.0
    for _ in range(100):
        p = random_point(5, 3, int(rng.integers(2**31)))
        U = rng.standard_normal((5, 3))
        u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        xi_B = oblique_project(p.B, U)
        xi_f = circle_project(p.f, u)
        worst_tangent = max(worst_tangent, np.max(np.abs(np.sum(p.B * xi_B, axis=0))),
                            np.max(np.abs((np.conj(p.f) * xi_f).real)))
    scn = random_far_scenario(rng, 2, 2, 2, 6)
    res = synthesize(scn, SolverConfig(outer_max=20, seed=seed))
    col_err = float(np.max(np.abs(np.sum(res.bmat ** 2, axis=0) - scn.power)))
    mod_err = float(np.max(np.abs(np.abs(res.f) - 1.0)))
    ok = worst_tangent < 1e-12 and col_err < tol * scn.power and mod_err < tol
    return CheckResult("manifold hygiene", ok,
                       f"tangency {worst_tangent:.1e}, |b_n|^2-P {col_err:.1e}, |f_n|-1 {mod_err:.1e}")


def phase_update_check(n_trials: int = 100, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    scn = random_far_scenario(rng, 2, 2, 2, 5)
    p = random_point(scn.T, scn.n_elements, seed)
    b = np.sqrt(scn.power) * p.B
    best = objective(p.B, p.f, update_phases(b, p.f, scn), scn)
    others = [objective(p.B, p.f, rng.uniform(-np.pi, np.pi, len(scn.samples)), scn)
              for _ in range(n_trials)]
    identity_gap = abs(best - magnitude_residual(b, p.f, scn))
    ok = best <= min(others) and identity_gap <= 1e-9 * max(1.0, best)
    return CheckResult("phase-update optimality", ok,
                       f"objective at update {best:.6g} vs best random {min(others):.6g}; "
                       f"residual identity gap {identity_gap:.1e}")


def run_all() -> list[CheckResult]:
    return [orthonormality_check(), gradient_check(), manifold_hygiene_check(), phase_update_check()]
