import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import Polynomial
from scipy.special import sph_harm_y

from era_beam.checks import sphere_gram
from era_beam.harmonics import (
    HarmonicIndex,
    TruncationSpec,
    assoc_legendre,
    basis_matrix,
    basis_vector,
    flat_index,
    pattern_eval,
    real_sph_harmonic,
    unflatten,
)

Y00 = 0.5 / math.sqrt(math.pi)


def rodrigues(l, m, x):
    """(1 - x^2)^(m/2) d^m/dx^m P_l(x), with P_l from Rodrigues' formula."""
    base = Polynomial([-1.0, 0.0, 1.0]) ** l
    p_l = base.deriv(l) / (2 ** l * math.factorial(l)) if l else Polynomial([1.0])
    return (1 - x * x) ** (m / 2) * p_l.deriv(m)(x)


@pytest.mark.parametrize("l, m, x, expected", [
    (0, 0, 0.3, 1.0),
    (1, 0, 0.5, 0.5),
    (1, 1, 0.0, 1.0),
])
def test_assoc_legendre_examples(l, m, x, expected):
    assert assoc_legendre(l, m, x) == pytest.approx(expected, abs=1e-15)


def test_assoc_legendre_matches_rodrigues():
    xs = np.linspace(-1.0, 1.0, 100)
    for l in range(7):
        for m in range(l + 1):
            ref = rodrigues(l, m, xs)
            # P_6^6 reaches ~1e4, so the 1e-12 bound is relative to max(1, |P|)
            err = np.abs(assoc_legendre(l, m, xs) - ref) / np.maximum(1.0, np.abs(ref))
            assert np.max(err) < 1e-12


def test_assoc_legendre_no_condon_shortley():
    for l in range(1, 8):
        assert assoc_legendre(l, l, 0.0) > 0


@pytest.mark.parametrize("l, m, x", [(1, 0, 1.5), (1, 2, 0.2), (2, -1, 0.0)])
def test_assoc_legendre_domain_errors(l, m, x):
    with pytest.raises(ValueError):
        assoc_legendre(l, m, x)


def test_real_sph_harmonic_examples():
    for th, ph in [(0.0, 0.0), (1.1, 2.2), (math.pi, 5.0)]:
        assert real_sph_harmonic(HarmonicIndex(0, 0), th, ph) == pytest.approx(0.2820948, abs=1e-7)
    assert real_sph_harmonic(HarmonicIndex(1, 0), 0.0, 0.0) == pytest.approx(0.4886025, abs=1e-7)
    assert real_sph_harmonic(HarmonicIndex(1, -1), math.pi / 2, 0.0) == 0.0


def test_real_sph_harmonic_against_scipy_complex():
    # scipy includes the Condon-Shortley phase; undo it with (-1)^m
    rng = np.random.default_rng(3)
    th = rng.uniform(0, math.pi, 20)
    ph = rng.uniform(0, 2 * math.pi, 20)
    for l in range(6):
        for m in range(-l, l + 1):
            am = abs(m)
            z = sph_harm_y(l, am, th, ph)
            if m > 0:
                ref = math.sqrt(2) * (-1) ** am * z.real
            elif m < 0:
                ref = math.sqrt(2) * (-1) ** am * z.imag
            else:
                ref = z.real
            got = real_sph_harmonic(HarmonicIndex(l, m), th, ph)
            np.testing.assert_allclose(got, ref, atol=1e-12)


def test_real_sph_harmonic_periodic_and_finite_at_poles():
    rng = np.random.default_rng(0)
    for l in range(5):
        for m in range(-l, l + 1):
            idx = HarmonicIndex(l, m)
            th = rng.uniform(0, math.pi, 10)
            ph = rng.uniform(0, 2 * math.pi, 10)
            np.testing.assert_allclose(real_sph_harmonic(idx, th, ph + 2 * math.pi),
                                       real_sph_harmonic(idx, th, ph), atol=1e-12)
            for pole in (0.0, math.pi):
                val = real_sph_harmonic(idx, pole, 1.234)
                assert np.isfinite(val)
                if m != 0:
                    assert abs(val) < 1e-15


@pytest.mark.parametrize("l, m, t", [(0, 0, 1), (1, -1, 2), (4, 4, 25)])
def test_flat_index_examples(l, m, t):
    assert flat_index(HarmonicIndex(l, m)) == t
    assert unflatten(t, 4) == HarmonicIndex(l, m)


def test_flat_index_bijection():
    for L in range(11):
        T = TruncationSpec(L).T
        assert T == (L + 1) ** 2
        seen = set()
        for l in range(L + 1):
            for m in range(-l, l + 1):
                t = flat_index(HarmonicIndex(l, m))
                assert 1 <= t <= T
                assert unflatten(t, L) == HarmonicIndex(l, m)
                seen.add(t)
        assert seen == set(range(1, T + 1))


@given(st.integers(0, 30).flatmap(lambda L: st.tuples(st.just(L), st.integers(1, (L + 1) ** 2))))
def test_unflatten_roundtrip_property(args):
    L, t = args
    assert flat_index(unflatten(t, L)) == t


def test_unflatten_out_of_range():
    with pytest.raises(IndexError):
        unflatten(0, 2)
    with pytest.raises(IndexError):
        unflatten(10, 2)
    with pytest.raises(ValueError):
        HarmonicIndex(1, 2)


def test_basis_vector_examples():
    np.testing.assert_allclose(basis_vector(TruncationSpec(0), 1.0, 2.0), [0.2820948], atol=1e-7)
    np.testing.assert_allclose(basis_vector(TruncationSpec(1), 0.0, 0.0),
                               [0.2820948, 0.0, 0.4886025, 0.0], atol=1e-7)
    assert basis_vector(TruncationSpec(4), 0.7, -0.3).shape == (25,)


def test_basis_vector_entries_match_scalar_harmonics():
    spec = TruncationSpec(5)
    th, ph = 0.83, 2.41
    vec = basis_vector(spec, th, ph)
    for t in range(1, spec.T + 1):
        assert vec[t - 1] == pytest.approx(real_sph_harmonic(unflatten(t, spec.L), th, ph), abs=1e-14)


def test_basis_matrix_broadcasts():
    spec = TruncationSpec(3)
    th = np.linspace(0, math.pi, 7)[:, None]
    ph = np.linspace(0, 2 * math.pi, 5)[None, :]
    Y = basis_matrix(spec, th, ph)
    assert Y.shape == (7, 5, 16)
    np.testing.assert_allclose(Y[3, 2], basis_vector(spec, th[3, 0], ph[0, 2]))


def test_pattern_eval_examples():
    iso = np.zeros(25)
    iso[0] = 2 * math.sqrt(math.pi)
    for th, ph in [(0.0, 0.0), (0.4, 1.0), (math.pi, -2.0)]:
        assert pattern_eval(iso, th, ph) == pytest.approx(1.0, abs=1e-14)
        assert pattern_eval(np.zeros(25), th, ph) == 0.0
    e7 = np.zeros(25)
    e7[6] = 1.0
    assert pattern_eval(e7, 0.9, 0.2) == pytest.approx(
        real_sph_harmonic(unflatten(7, 4), 0.9, 0.2), abs=1e-15)
    with pytest.raises(ValueError):
        pattern_eval(np.ones(5), 0.1, 0.1)


@pytest.mark.parametrize("L", range(6))
def test_orthonormality(L):
    gram = sphere_gram(L)
    assert np.max(np.abs(gram - np.eye((L + 1) ** 2))) < 1e-9


def test_sum_rule_gives_max_gain():
    # addition theorem: |y|^2 = (L+1)^2 / (4 pi) in every direction
    spec = TruncationSpec(4)
    y = basis_vector(spec, 0.37, 1.9)
    assert y @ y == pytest.approx(25 / (4 * math.pi), rel=1e-13)
