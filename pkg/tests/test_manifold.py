import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from era_beam.manifold import (
    ProductPoint,
    ProductTangent,
    circle_project,
    circle_retract,
    oblique_project,
    oblique_retract,
    product_inner,
    product_norm,
    product_project,
    product_retract,
    random_point,
)


def test_oblique_project_examples():
    B = np.array([[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(oblique_project(B, np.array([[2.0], [3.0], [4.0]])), [[0], [3], [4]])
    p = random_point(4, 3, 0)
    np.testing.assert_allclose(oblique_project(p.B, p.B), 0, atol=1e-15)
    xi = oblique_project(p.B, np.ones((4, 3)))
    np.testing.assert_allclose(oblique_project(p.B, xi), xi, atol=1e-12)
    with pytest.raises(ValueError):
        oblique_project(p.B, np.ones((3, 3)))


def test_oblique_retract_examples():
    p = random_point(4, 3, 1)
    xi = oblique_project(p.B, np.arange(12.0).reshape(4, 3))
    np.testing.assert_allclose(oblique_retract(p.B, xi, 0.0), p.B, rtol=0, atol=1e-15)
    B = np.array([[1.0], [0.0]])
    np.testing.assert_allclose(oblique_retract(B, np.array([[2.0], [4.0]]), 1.0), [[0.6], [0.8]])
    R = oblique_retract(p.B, xi, 0.7)
    np.testing.assert_allclose(np.sum(R * R, axis=0), 1.0, atol=1e-12)
    with pytest.raises(FloatingPointError):
        oblique_retract(B, np.array([[-1.0], [0.0]]), 1.0)


def test_circle_project_examples():
    f = np.array([1.0 + 0j])
    np.testing.assert_allclose(circle_project(f, np.array([2.0 + 3.0j])), [3.0j])
    p = random_point(1, 5, 2)
    np.testing.assert_allclose(circle_project(p.f, p.f), 0, atol=1e-15)
    xi = circle_project(p.f, np.arange(5) * (1 + 2j))
    np.testing.assert_allclose(circle_project(p.f, xi), xi, atol=1e-12)


def test_circle_retract_examples():
    p = random_point(1, 4, 3)
    xi = circle_project(p.f, np.ones(4, complex))
    np.testing.assert_allclose(circle_retract(p.f, xi, 0.0), p.f, rtol=0, atol=1e-15)
    out = circle_retract(np.array([1.0 + 0j]), np.array([1j]), 1.0)
    np.testing.assert_allclose(out, [(1 + 1j) / np.sqrt(2)])
    np.testing.assert_allclose(np.abs(circle_retract(p.f, xi, 2.3)), 1.0, atol=1e-12)
    with pytest.raises(FloatingPointError):
        circle_retract(np.array([1.0 + 0j]), np.array([-1.0 + 0j]), 1.0)


def test_product_inner_examples():
    rng = np.random.default_rng(0)
    x = random_point(3, 2, 4)
    xi = product_project(x, ProductTangent(rng.normal(size=(3, 2)), rng.normal(size=2) + 1j))
    eta = product_project(x, ProductTangent(rng.normal(size=(3, 2)), rng.normal(size=2) - 1j))
    assert product_inner(xi, xi) > 0
    zero = ProductTangent(np.zeros((3, 2)), np.zeros(2, complex))
    assert product_inner(zero, zero) == 0
    pure_b = ProductTangent(xi.B, np.zeros(2, complex))
    pure_f = ProductTangent(np.zeros((3, 2)), xi.f)
    assert product_inner(pure_b, pure_f) == 0
    assert product_inner(2 * xi, eta) == pytest.approx(2 * product_inner(xi, eta))
    assert product_norm(xi) == pytest.approx(np.sqrt(product_inner(xi, xi)))


def test_random_point_properties():
    a, b = random_point(5, 4, 9), random_point(5, 4, 9)
    np.testing.assert_array_equal(a.B, b.B)
    np.testing.assert_array_equal(a.f, b.f)
    c = random_point(5, 4, 10)
    assert not np.array_equal(a.B, c.B)
    np.testing.assert_allclose(np.linalg.norm(a.B, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(a.f), 1.0, atol=1e-12)
    # phase draws do not depend on the number of coefficient rows
    np.testing.assert_array_equal(random_point(1, 4, 9).f, a.f)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_projection_tangency_and_idempotence(T, N, seed):
    rng = np.random.default_rng(seed)
    x = random_point(T, N, seed)
    u = ProductTangent(rng.normal(size=(T, N)), rng.normal(size=N) + 1j * rng.normal(size=N))
    xi = product_project(x, u)
    assert np.max(np.abs(np.sum(x.B * xi.B, axis=0))) < 1e-12
    assert np.max(np.abs((np.conj(x.f) * xi.f).real)) < 1e-12
    again = product_project(x, xi)
    np.testing.assert_allclose(again.B, xi.B, atol=1e-12)
    np.testing.assert_allclose(again.f, xi.f, atol=1e-12)


def test_retraction_is_second_order_close():
    rng = np.random.default_rng(1)
    x = random_point(4, 3, 5)
    u = ProductTangent(rng.normal(size=(4, 3)), rng.normal(size=3) + 1j * rng.normal(size=3))
    xi = product_project(x, u)
    xi = xi * (1.0 / product_norm(xi))
    consts = []
    for t in (1e-2, 1e-3, 1e-4):
        y = product_retract(x, xi, t)
        gap = np.sqrt(np.sum((y.B - (x.B + t * xi.B)) ** 2) + np.sum(np.abs(y.f - (x.f + t * xi.f)) ** 2))
        consts.append(gap / t ** 2)
    assert max(consts) / min(consts) < 1.1


def test_empty_coefficient_factor():
    x = ProductPoint(np.zeros((0, 3)), random_point(1, 3, 0).f)
    xi = product_project(x, ProductTangent(np.zeros((0, 3)), np.ones(3, complex)))
    y = product_retract(x, xi, 0.5)
    assert y.B.shape == (0, 3)
    np.testing.assert_allclose(np.abs(y.f), 1.0)
