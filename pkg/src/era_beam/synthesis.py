"""Beampattern synthesis by alternating phase updates and manifold solves.

The magnitude-matching problem

    min_{b, f}  sum_s w_s (D_s - |b^T A_s f|)^2,   |b_n|^2 = P,  |f_n| = 1

is lifted with auxiliary phases ``psi_s``.  Each outer iteration sets
``psi_s = arg(b^T A_s f)`` (the exact minimizer over ``psi``) and then
decreases ``sum_s w_s |D_s exp(j psi_s) - b^T A_s f|^2`` over the product of
an oblique manifold (coefficients) and a complex circle (phase shifts).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from math import pi, sqrt
from typing import Literal, Optional

import numpy as np

from .em_response import FarTarget, NearTarget, ResponseStack, SampleTarget
from .geometry import ArrayGeometry
from .harmonics import TruncationSpec, basis_matrix
from .manifold import (
    ProductPoint,
    ProductTangent,
    normalize_columns,
    normalize_entries,
    product_inner,
    product_norm,
    product_project,
    product_retract,
    random_point,
)

logger = logging.getLogger(__name__)

DEFAULT_POWER = 4.0 * pi
_TINY = 1e-300


@dataclass(frozen=True)
class Sample:
    target: SampleTarget
    desired: float
    weight: float = 1.0
    kind: Literal["focal", "null"] = "focal"

    def __post_init__(self):
        if self.desired < 0:
            raise ValueError("desired magnitude must be nonnegative")
        if self.weight <= 0:
            raise ValueError("sample weight must be positive")


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    truncation: TruncationSpec
    samples: tuple[Sample, ...]
    power: float = DEFAULT_POWER
    regime: Literal["far", "near"] = "far"

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValueError("scenario needs at least one sample")
        if self.power <= 0:
            raise ValueError("element power must be positive")
        want = FarTarget if self.regime == "far" else NearTarget
        if self.regime not in ("far", "near"):
            raise ValueError(f"unknown regime {self.regime!r}")
        for s in self.samples:
            if not isinstance(s.target, want):
                raise ValueError(f"{self.regime}-field scenario got target {s.target!r}")

    @cached_property
    def responses(self) -> ResponseStack:
        return ResponseStack.build(self.geometry, self.truncation, [s.target for s in self.samples])

    @cached_property
    def desired(self) -> np.ndarray:
        return np.array([s.desired for s in self.samples], dtype=float)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.samples], dtype=float)

    @property
    def n_elements(self) -> int:
        return self.geometry.n_elements

    @property
    def T(self) -> int:
        return self.truncation.T

    def with_truncation(self, L: int) -> "Scenario":
        return replace(self, truncation=TruncationSpec(L))

    def with_array(self, nx: int, ny: int) -> "Scenario":
        g = self.geometry
        return replace(self, geometry=ArrayGeometry(nx, ny, g.spacing, g.wavelength))


@dataclass(frozen=True)
class SolverConfig:
    outer_max: int = 200
    inner_max: int = 100
    grad_tol: float = 1e-8
    obj_tol: float = 1e-10
    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 50
    solver: Literal["cg", "gd"] = "cg"
    seed: int = 0
    positivity_mode: Literal["off", "fixed-b00"] = "off"
    rho: float = 0.8
    warm_start: Literal["none", "isotropic"] = "none"
    restarts: int = 1

    def __post_init__(self):
        if self.outer_max < 0 or self.inner_max < 0:
            raise ValueError("iteration limits must be nonnegative")
        for name in ("grad_tol", "obj_tol", "initial_step", "sufficient_decrease"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")
        if self.solver not in ("cg", "gd"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.positivity_mode not in ("off", "fixed-b00"):
            raise ValueError(f"unknown positivity mode {self.positivity_mode!r}")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.warm_start not in ("none", "isotropic"):
            raise ValueError(f"unknown warm start {self.warm_start!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class SolveResult:
    mode: str
    bmat: np.ndarray  # (T, N); column n is b_n
    f: np.ndarray
    psi: np.ndarray
    objective_history: list[float]
    residual: float
    achieved: np.ndarray
    outer_iterations: int
    inner_iterations: int
    converged: bool
    solver: str
    linesearch_failures: int = 0
    min_gain: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def b(self) -> np.ndarray:
        """Stacked coefficient vector [b_1; ...; b_N]."""
        return self.bmat.T.reshape(-1).copy()


# -- coefficient parameterizations -------------------------------------------

@dataclass(frozen=True)
class Parameterization:
    """Maps a free oblique point ``X`` (rows ``start:`` of each block) to coefficients.

    ``bmat = head[:, None] + radius * embed(X)``; ``head`` is zero outside the
    frozen rows so the power constraint ``|b_n|^2 = |head|^2 + radius^2`` holds.
    """

    T: int
    start: int
    radius: float
    head: np.ndarray

    @property
    def free_rows(self) -> int:
        return self.T - self.start

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        N = X.shape[1]
        bmat = np.repeat(self.head[:, None], N, axis=1)
        if self.free_rows:
            bmat[self.start:] += self.radius * X
        return bmat

    def pullback(self, G: np.ndarray) -> np.ndarray:
        return self.radius * G[self.start:]


def standard_param(T: int, power: float) -> Parameterization:
    return Parameterization(T, 0, sqrt(power), np.zeros(T))


def isotropic_block(T: int, power: float) -> np.ndarray:
    """Coefficient block with constant gain: sqrt(P) on the l=0 term only."""
    e = np.zeros(T)
    e[0] = sqrt(power)
    return e


def isotropic_param(T: int, power: float) -> Parameterization:
    return Parameterization(T, T, 0.0, isotropic_block(T, power))


def positivity_param(T: int, power: float, rho: float) -> Parameterization:
    """Freeze b_00 at sqrt(P)*rho; the other T-1 terms live on a sphere of radius sqrt(P(1-rho^2))."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    return Parameterization(T, 1, sqrt(power) * sqrt(1.0 - rho * rho), rho * isotropic_block(T, power))


def positivity_mode_transform(cfg: SolverConfig, T: int, power: float) -> Parameterization:
    if cfg.positivity_mode == "fixed-b00":
        return positivity_param(T, power, cfg.rho)
    return standard_param(T, power)


# -- objective pieces ----------------------------------------------------------

def _fields(stack: ResponseStack, bmat: np.ndarray, f: np.ndarray) -> np.ndarray:
    return stack.fields(bmat, f)


def _lifted_cost(stack, target, w, bmat, f):
    r = target - _fields(stack, bmat, f)
    return float(np.sum(w * (r.real ** 2 + r.imag ** 2)))


def _lifted_grad(stack, target, w, bmat, f):
    """Cost, gradient w.r.t. the (T, N) coefficient matrix, gradient w.r.t. f."""
    g = stack.gains(bmat)  # (S, N)
    af = stack.a * f[None, :]
    z = np.sum(af * g, axis=1)
    r = target - z
    cost = float(np.sum(w * (r.real ** 2 + r.imag ** 2)))
    wr = w * np.conj(r)
    G_b = -2.0 * np.einsum("sn,snt->tn", (wr[:, None] * af).real, stack.y)
    g_f = -2.0 * np.einsum("s,sn->n", w * r, np.conj(stack.a * g))
    return cost, G_b, g_f


def _as_bmat(b, T: int, N: int) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape == (T, N):
        return b
    if b.size != T * N:
        raise ValueError(f"coefficient vector has length {b.size}, expected {T * N}")
    return b.reshape(N, T).T


def _check_dims(scn: Scenario, B, f, psi=None):
    N, T = scn.n_elements, scn.T
    if np.shape(B) != (T, N):
        raise ValueError(f"B has shape {np.shape(B)}, expected {(T, N)}")
    if np.shape(f) != (N,):
        raise ValueError(f"f has shape {np.shape(f)}, expected ({N},)")
    if psi is not None and np.shape(psi) != (len(scn.samples),):
        raise ValueError(f"psi has shape {np.shape(psi)}, expected ({len(scn.samples)},)")


def objective(B, f, psi, scn: Scenario) -> float:
    """Lifted objective sum_s w_s |D_s e^{j psi_s} - sqrt(P) vec(B)^T A_s f|^2."""
    _check_dims(scn, B, f, psi)
    target = scn.desired * np.exp(1j * np.asarray(psi, float))
    return _lifted_cost(scn.responses, target, scn.weights, sqrt(scn.power) * np.asarray(B), np.asarray(f))


def magnitude_residual(b, f, scn: Scenario) -> float:
    """Magnitude-mismatch residual sum_s w_s (D_s - |b^T A_s f|)^2."""
    bmat = _as_bmat(b, scn.T, scn.n_elements)
    mag = np.abs(_fields(scn.responses, bmat, np.asarray(f)))
    return float(np.sum(scn.weights * (scn.desired - mag) ** 2))


def achieved_magnitudes(b, f, scn: Scenario) -> np.ndarray:
    return np.abs(_fields(scn.responses, _as_bmat(b, scn.T, scn.n_elements), np.asarray(f)))


def _phases(z: np.ndarray) -> np.ndarray:
    # angle(0) is 0 in numpy, which is the convention we want
    return np.angle(z)


def update_phases(b, f, scn: Scenario) -> np.ndarray:
    """psi_s = arg(b^T A_s f), with arg(0) = 0."""
    return _phases(_fields(scn.responses, _as_bmat(b, scn.T, scn.n_elements), np.asarray(f)))


def euclidean_gradient(B, f, psi, scn: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean gradient of :func:`objective` w.r.t. ``B`` (real) and ``f`` (complex).

    The complex gradient is the real-embedding gradient written as a complex
    number: the directional derivative along ``df`` is ``Re(vdot(g_f, df))``.
    """
    _check_dims(scn, B, f, psi)
    target = scn.desired * np.exp(1j * np.asarray(psi, float))
    rootp = sqrt(scn.power)
    _, G_b, g_f = _lifted_grad(scn.responses, target, scn.weights, rootp * np.asarray(B), np.asarray(f))
    return rootp * G_b, g_f


# -- inner Riemannian solver ---------------------------------------------------

@dataclass
class InnerResult:
    point: ProductPoint
    cost: float
    iterations: int
    reason: str
    history: list[float] = field(default_factory=list)


def inner_solve(start: ProductPoint, psi, scn: Scenario, cfg: SolverConfig,
                param: Optional[Parameterization] = None) -> InnerResult:
    """Riemannian CG (Polak-Ribiere+) or gradient descent with Armijo backtracking.

    ``start.B`` holds the free coefficients of ``param`` (default: all of them,
    scaled by sqrt(P)).  The returned cost never exceeds the starting cost.
    """
    if param is None:
        param = standard_param(scn.T, scn.power)
    stack, w = scn.responses, scn.weights
    target = scn.desired * np.exp(1j * np.asarray(psi, float))
    return _inner(start, stack, target, w, param, cfg)


def _riemannian_grad(x, stack, target, w, param):
    cost, G_b, g_f = _lifted_grad(stack, target, w, param.coefficients(x.B), x.f)
    egrad = ProductTangent(param.pullback(G_b), g_f)
    return cost, product_project(x, egrad)


def _inner(x, stack, target, w, param, cfg) -> InnerResult:
    cost, grad = _riemannian_grad(x, stack, target, w, param)
    history = [cost]
    direction = -grad
    alpha = cfg.initial_step
    reason = "max_iter"
    it = 0
    while it < cfg.inner_max:
        gnorm = product_norm(grad)
        if gnorm <= cfg.grad_tol:
            reason = "grad_tol"
            break
        slope = product_inner(grad, direction)
        if slope >= 0.0:
            direction = -grad
            slope = -gnorm * gnorm

        step = alpha
        accepted = None
        for _ in range(cfg.max_backtracks + 1):
            cand = product_retract(x, direction, step)
            c_cost = _lifted_cost(stack, target, w, param.coefficients(cand.B), cand.f)
            if c_cost <= cost + cfg.sufficient_decrease * step * slope:
                accepted = cand
                break
            step *= cfg.contraction
        if accepted is None:
            reason = "linesearch_failed"
            break
        it += 1
        # remember the scale of accepted steps; grow after an immediate accept
        alpha = 2.0 * step if step == alpha else step

        decrease = cost - c_cost
        x_old_grad, x_old_dir = grad, direction
        x = accepted
        cost, grad = _riemannian_grad(x, stack, target, w, param)
        history.append(cost)
        if cfg.solver == "cg":
            # vector transport by projection onto the new tangent space
            t_grad = product_project(x, x_old_grad)
            t_dir = product_project(x, x_old_dir)
            beta = product_inner(grad, grad + (-t_grad)) / max(gnorm * gnorm, _TINY)
            direction = -grad + max(beta, 0.0) * t_dir
        else:
            direction = -grad
        if decrease <= cfg.obj_tol * max(cost + decrease, _TINY):
            reason = "obj_tol"
            break
    return InnerResult(x, cost, it, reason, history)


# -- outer alternating loop ----------------------------------------------------

def _gauge_fix(B: np.ndarray, f: np.ndarray):
    """(b_n, f_n) -> (-b_n, -f_n) leaves every field unchanged; pick b_00 >= 0."""
    if B.shape[0] == 0:
        return B, f
    sign = np.where(B[0] < 0, -1.0, 1.0)
    return B * sign, f * sign


_PHASE_GRID = 2.0 ** -40


def _canonical_phases(f0: np.ndarray) -> tuple[complex, np.ndarray]:
    """Split ``f0`` into a global phase and a canonical start with f_1 = 1.

    The cost is blind to a global phase on f, but CG and the stopping tests make
    discrete decisions that round-off can flip.  Relative phases are snapped to a
    2^-40 rad grid so gauge-equivalent starts share one bit-identical iterate.
    """
    f0 = normalize_entries(np.asarray(f0, dtype=complex))
    if f0.size == 0:
        return 1.0 + 0j, f0
    gauge = f0[0]
    rel = np.angle(f0 * np.conj(gauge))
    rel = np.round(rel / _PHASE_GRID) * _PHASE_GRID
    rel[0] = 0.0
    return gauge, np.exp(1j * rel)


def _solve(scn: Scenario, cfg: SolverConfig, param: Parameterization, X0: np.ndarray,
           f0: np.ndarray, mode: str) -> SolveResult:
    stack, D, w = scn.responses, scn.desired, scn.weights
    f0 = np.array(f0, dtype=complex)
    gauge, f_rel = _canonical_phases(f0)
    x = ProductPoint(np.array(X0, dtype=float), f_rel)

    def residual(pt):
        mag = np.abs(_fields(stack, param.coefficients(pt.B), pt.f))
        return float(np.sum(w * (D - mag) ** 2))

    history = [residual(x)]
    inner_total = 0
    failures = 0
    converged = False
    k = 0
    for k in range(1, cfg.outer_max + 1):
        psi = _phases(_fields(stack, param.coefficients(x.B), x.f))
        res = _inner(x, stack, D * np.exp(1j * psi), w, param, cfg)
        inner_total += res.iterations
        failures += res.reason == "linesearch_failed"
        x = res.point
        history.append(residual(x))
        logger.debug("%s outer %d: residual %.6e (%d inner, %s)", mode, k, history[-1],
                     res.iterations, res.reason)
        prev = history[-2]
        if prev - history[-1] <= cfg.obj_tol * max(prev, _TINY):
            converged = True
            break
    else:
        k = cfg.outer_max

    bmat = param.coefficients(x.B)
    f = x.f * gauge
    z = _fields(stack, bmat, f)
    return SolveResult(
        mode=mode,
        bmat=bmat,
        f=f,
        psi=_phases(z),
        objective_history=history,
        residual=history[-1],
        achieved=np.abs(z),
        outer_iterations=k,
        inner_iterations=inner_total,
        converged=converged,
        solver=cfg.solver,
        linesearch_failures=failures,
    )


def synthesize_isotropic(scn: Scenario, cfg: SolverConfig,
                         f0: Optional[np.ndarray] = None) -> SolveResult:
    """Phase-only baseline: every element keeps the constant-gain block sqrt(P) e_1."""
    param = isotropic_param(scn.T, scn.power)
    if f0 is None:
        # same start as the reconfigurable solve: its b_00 >= 0 gauge applied to the seeded draw
        f0 = _gauge_fix(*random_point(scn.T, scn.n_elements, cfg.seed))[1]
    X0 = np.zeros((0, scn.n_elements))
    return _solve(scn, cfg, param, X0, f0, "isotropic")


def _free_start(param: Parameterization, B: np.ndarray, seed) -> np.ndarray:
    """Free oblique coordinates for a standard (T, N) unit-column start ``B``."""
    if param.start == 0:
        return B
    if param.free_rows == 0:
        return np.zeros((0, B.shape[1]))
    X = np.array(B[param.start:], dtype=float)
    norms = np.linalg.norm(X, axis=0)
    fill = random_point(param.free_rows, X.shape[1], seed).B
    X[:, norms == 0] = fill[:, norms == 0]
    return normalize_columns(X)


def synthesize(scn: Scenario, cfg: SolverConfig,
               initial: Optional[ProductPoint] = None) -> SolveResult:
    """Joint coefficient/phase synthesis for reconfigurable elements.

    ``initial`` overrides the configured start; its ``B`` is a (T, N) matrix
    with unit-norm columns (coefficients divided by sqrt(P)).
    """
    param = positivity_mode_transform(cfg, scn.T, scn.power)
    N, T = scn.n_elements, scn.T
    starts: list[tuple[np.ndarray, np.ndarray]] = []
    baseline = None
    if initial is not None:
        starts.append((np.asarray(initial.B, float), np.asarray(initial.f, complex)))
    elif cfg.warm_start == "isotropic":
        baseline = synthesize_isotropic(scn, cfg)
        B0 = np.zeros((T, N))
        B0[0] = 1.0
        starts.append((B0, baseline.f))
    else:
        for r in range(cfg.restarts):
            p = random_point(T, N, cfg.seed + r)
            starts.append(_gauge_fix(p.B, p.f))

    best = None
    for B0, f0 in starts:
        X0 = _free_start(param, B0, cfg.seed)
        result = _solve(scn, cfg, param, X0, f0, "era")
        if best is None or result.residual < best.residual:
            best = result
    if baseline is not None:
        best.extra["isotropic_residual"] = baseline.residual
    if cfg.positivity_mode != "off":
        best.min_gain = min_pattern_gain(best.bmat, scn.truncation)
    return best


def min_pattern_gain(bmat: np.ndarray, spec: TruncationSpec, step_deg: float = 1.0) -> float:
    """Smallest element gain over a regular (theta, phi) grid, all elements."""
    th = np.radians(np.arange(0.0, 180.0 + step_deg / 2, step_deg))
    ph = np.radians(np.arange(0.0, 360.0, step_deg))
    Y = basis_matrix(spec, th[:, None], ph[None, :]).reshape(-1, spec.T)
    return float(np.min(Y @ bmat))


def embed_truncation(B: np.ndarray, T_new: int) -> np.ndarray:
    """Pad a (T, N) coefficient matrix with zero rows for a higher truncation degree."""
    T, N = B.shape
    if T_new < T:
        raise ValueError("cannot embed into a smaller truncation")
    out = np.zeros((T_new, N))
    out[:T] = B
    return out
