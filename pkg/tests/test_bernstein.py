"""Bernstein basis kernels: conversion, product, elevation, hull bounds."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splinesep import bernstein as bz


def _rand_poly(rng, degree, dim=None):
    shape = (degree + 1,) if dim is None else (degree + 1, dim)
    return rng.standard_normal(shape)


class TestConversion:
    @pytest.mark.parametrize("degree", range(7))
    def test_round_trip_identity(self, degree):
        # Inverting the lower-triangular map must reproduce the monomial
        # coefficients to machine precision for degrees up to 6.
        rng = np.random.default_rng(degree)
        m = bz.monomial_to_bernstein_matrix(degree)
        for _ in range(50):
            b = _rand_poly(rng, degree)
            beta = m @ b
            back = np.linalg.solve(m, beta)
            assert np.abs(back - b).max() <= 1e-12 * max(1.0, np.abs(b).max())

    @pytest.mark.parametrize("degree", range(7))
    def test_conversion_pointwise(self, degree):
        rng = np.random.default_rng(100 + degree)
        mono = bz.MonomialPoly(_rand_poly(rng, degree))
        bern = bz.monomial_to_bernstein(mono)
        for tau in np.linspace(0, 1, 17):
            assert bz.evaluate(bern, tau) == pytest.approx(mono.eval(tau), abs=1e-12)

    def test_matrix_is_lower_triangular(self):
        m = bz.monomial_to_bernstein_matrix(5)
        assert np.allclose(m, np.tril(m))


class TestProduct:
    @pytest.mark.parametrize("da,db", [(1, 3), (2, 2), (3, 3), (0, 4), (4, 0)])
    def test_scalar_product_pointwise(self, da, db):
        rng = np.random.default_rng(da * 10 + db)
        a = bz.BernsteinPoly(_rand_poly(rng, da))
        b = bz.BernsteinPoly(_rand_poly(rng, db))
        c = bz.product(a, b)
        assert c.degree == da + db
        for tau in np.linspace(0, 1, 23):
            want = bz.evaluate(a, tau) * bz.evaluate(b, tau)
            assert abs(bz.evaluate(c, tau) - want) <= 1e-12

    def test_dot_product_pointwise(self):
        rng = np.random.default_rng(7)
        a = bz.BernsteinPoly(_rand_poly(rng, 1, dim=2))
        b = bz.BernsteinPoly(_rand_poly(rng, 3, dim=2))
        c = bz.product(a, b, mode="dot")
        assert c.degree == 4 and c.is_scalar
        for tau in np.linspace(0, 1, 23):
            want = float(bz.evaluate(a, tau) @ bz.evaluate(b, tau))
            assert abs(bz.evaluate(c, tau) - want) <= 1e-12

    def test_mode_validation(self):
        vec = bz.BernsteinPoly(np.ones((3, 2)))
        sca = bz.BernsteinPoly(np.ones(3))
        with pytest.raises(ValueError):
            bz.product(vec, sca)  # scale mode needs scalar a
        with pytest.raises(ValueError):
            bz.product(sca, sca, mode="dot")
        with pytest.raises(ValueError):
            bz.product(sca, sca, mode="nope")


class TestElevation:
    @pytest.mark.parametrize("degree,target", [(1, 4), (3, 4), (2, 6), (4, 4)])
    def test_elevation_preserves_polynomial(self, degree, target):
        rng = np.random.default_rng(degree + target)
        p = bz.BernsteinPoly(_rand_poly(rng, degree))
        q = bz.elevate(p, target)
        assert q.degree == target
        for tau in np.linspace(0, 1, 19):
            assert bz.evaluate(q, tau) == pytest.approx(bz.evaluate(p, tau), abs=1e-12)

    def test_elevation_rejects_lower_degree(self):
        with pytest.raises(ValueError):
            bz.elevate(bz.BernsteinPoly(np.ones(4)), 1)

    def test_elevation_shrinks_coefficient_range(self):
        # Elevated coefficients are convex combinations of the originals.
        rng = np.random.default_rng(3)
        p = bz.BernsteinPoly(_rand_poly(rng, 3))
        q = bz.elevate(p, 9)
        assert bz.coeff_min(q) >= bz.coeff_min(p) - 1e-12
        assert bz.coeff_max(q) <= bz.coeff_max(p) + 1e-12


class TestHullBound:
    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=7),
           st.floats(0, 1))
    @settings(max_examples=300, deadline=None)
    def test_coeff_min_bounds_value(self, coeffs, tau):
        p = bz.BernsteinPoly(np.asarray(coeffs))
        val = bz.evaluate(p, tau)
        assert bz.coeff_min(p) <= val + 1e-9
        assert bz.coeff_max(p) >= val - 1e-9

    def test_evaluate_rejects_outside_unit_interval(self):
        p = bz.BernsteinPoly(np.ones(3))
        with pytest.raises(ValueError):
            bz.evaluate(p, 1.5)

    def test_endpoint_interpolation(self):
        p = bz.BernsteinPoly(np.array([2.0, -1.0, 5.0, 3.0]))
        assert bz.evaluate(p, 0.0) == 2.0
        assert bz.evaluate(p, 1.0) == 3.0
