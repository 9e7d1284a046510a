"""Quadrature rules: exactness against closed-form monomial integrals.

The oracle is the factorial formula on the unit simplex:
  triangle: int x^a y^b dA           = a! b! / (a+b+2)!
  tet:      int x^a y^b z^c dV       = a! b! c! / (a+b+c+3)!
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eddyopt.quadrature import (
    gauss_01, map_to_tets, map_to_triangles, tet_rule, triangle_rule,
)


def tri_monomial(a, b):
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def tet_monomial(a, b, c):
    return (math.factorial(a) * math.factorial(b) * math.factorial(c)
            / math.factorial(a + b + c + 3))


def test_gauss_01_integrates_polynomials():
    for n in range(1, 9):
        x, w = gauss_01(n)
        assert abs(w.sum() - 1.0) < 1e-14
        for d in range(2 * n):
            exact = 1.0 / (d + 1)
            assert abs((w * x**d).sum() - exact) < 1e-14 * (d + 1)


def test_triangle_rule_weights_and_support():
    for deg in range(0, 11):
        pts, w = triangle_rule(deg)
        assert abs(w.sum() - 0.5) < 1e-14
        assert np.all(pts >= -1e-14)
        assert np.all(pts.sum(axis=1) <= 1 + 1e-14)


def test_triangle_rule_monomial_exactness():
    for deg in range(0, 11):
        pts, w = triangle_rule(deg)
        for a in range(deg + 1):
            for b in range(deg + 1 - a):
                got = (w * pts[:, 0]**a * pts[:, 1]**b).sum()
                assert got == pytest.approx(tri_monomial(a, b), abs=1e-15)


def test_tet_rule_monomial_exactness():
    for deg in range(0, 9):
        pts, w = tet_rule(deg)
        assert abs(w.sum() - 1.0 / 6.0) < 1e-14
        for a in range(deg + 1):
            for b in range(deg + 1 - a):
                for c in range(deg + 1 - a - b):
                    got = (w * pts[:, 0]**a * pts[:, 1]**b * pts[:, 2]**c).sum()
                    assert got == pytest.approx(tet_monomial(a, b, c),
                                                abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 8), st.integers(0, 8))
def test_triangle_rule_random_monomials(a, b):
    deg = a + b
    pts, w = triangle_rule(deg)
    got = (w * pts[:, 0]**a * pts[:, 1]**b).sum()
    assert got == pytest.approx(tri_monomial(a, b), rel=1e-13, abs=1e-16)


def test_map_to_triangles_area_jacobian():
    verts = np.array([[[0.0, 0, 0], [2, 0, 0], [0, 3, 0]],
                      [[1.0, 1, 1], [2, 1, 1], [1, 1, 3]]])
    pts_ref, w = triangle_rule(2)
    phys, jac = map_to_triangles(verts, pts_ref)
    # plane triangle areas: 3 and 1
    assert jac[0] == pytest.approx(2 * 3.0)
    assert jac[1] == pytest.approx(2 * 1.0)
    # constants integrate to the area
    assert (w * jac[0]).sum() == pytest.approx(3.0)
    # vertices map back: barycentric reproduction of an affine function
    f = phys[..., 0] + 2 * phys[..., 1]
    exact0 = 3.0 * (np.array([0, 2, 0]).mean() + 2 * np.array([0, 0, 3]).mean())
    assert (w * f[0] * jac[0]).sum() == pytest.approx(exact0)


def test_map_to_tets_volume_jacobian():
    verts = np.array([[[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]])
    pts_ref, w = tet_rule(2)
    phys, jac = map_to_tets(verts, pts_ref)
    assert jac[0] == pytest.approx(1.0)  # 6 * volume of unit simplex
    assert (w * jac[0]).sum() == pytest.approx(1.0 / 6.0)
    x = phys[0, :, 0]
    assert (w * x * jac[0]).sum() == pytest.approx(tet_monomial(1, 0, 0))
