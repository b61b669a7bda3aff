import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lpmv

from quasilab.legendre import (
    composite_gauss_legendre,
    gauss_legendre,
    log_norm_plm_seed,
    norm_plm_band,
    norm_plm_table,
)


@pytest.mark.parametrize("n", [1, 2, 5, 16, 65, 200])
def test_rule_weights_sum_to_two(n):
    x, w = gauss_legendre(n)
    assert abs(w.sum() - 2.0) < 1e-14
    assert np.all(np.diff(x) > 0)
    assert np.all((-1 < x) & (x < 1))


def test_rule_is_antisymmetric_with_exact_equator_node():
    x, w = gauss_legendre(65)
    assert np.max(np.abs(x + x[::-1])) == 0.0
    assert x[32] == 0.0
    assert np.max(np.abs(w - w[::-1])) < 1e-16


@pytest.mark.parametrize("n", [2, 5, 12, 40])
def test_exact_monomial_moments(n):
    # independent oracle: int_{-1}^{1} x^j dx = 2/(j+1) for even j, 0 for odd
    x, w = gauss_legendre(n)
    for j in range(2 * n):
        exact = 2.0 / (j + 1) if j % 2 == 0 else 0.0
        assert abs(np.sum(w * x**j) - exact) < 1e-13


def test_matches_numpy_leggauss():
    for n in (3, 17, 64, 257):
        x, w = gauss_legendre(n)
        xr, wr = np.polynomial.legendre.leggauss(n)
        assert np.max(np.abs(x - xr)) < 1e-13
        assert np.max(np.abs(w - wr)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=-9, max_value=9), min_size=1, max_size=12))
def test_polynomial_exactness_property(coeffs):
    n = 8
    x, w = gauss_legendre(n)
    coeffs = coeffs[: 2 * n]  # degree <= 2n - 1
    vals = np.polyval(coeffs, x)
    exact = sum(
        c * (2.0 / (d + 1) if d % 2 == 0 else 0.0)
        for d, c in enumerate(reversed(coeffs))
    )
    assert abs(np.sum(w * vals) - exact) < 1e-11


def test_composite_rule_integrates_exponential():
    x, w = composite_gauss_legendre(0.0, 1.0, panels=4, nodes=12)
    assert abs(np.sum(w * np.exp(x)) - (math.e - 1.0)) < 1e-14


def test_invalid_sizes_rejected():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        composite_gauss_legendre(0, 1, panels=0)


def test_normalized_plm_orthonormal_under_rule():
    l_max = 14
    x, w = gauss_legendre(l_max + 1)
    table = norm_plm_table(l_max, x)
    for m in range(0, l_max + 1, 3):
        rows = table[m:, m, :]
        gram = (rows * w) @ rows.T
        assert np.max(np.abs(gram - np.eye(rows.shape[0]))) < 1e-12


def test_plm_matches_scipy_up_to_condon_shortley():
    x = np.linspace(-0.95, 0.95, 7)
    for l, m in [(0, 0), (3, 0), (5, 2), (9, 9), (12, 7)]:
        norm = math.sqrt(
            (2 * l + 1) / 2.0 * math.factorial(l - m) / math.factorial(l + m)
        )
        ref = (-1.0) ** m * norm * lpmv(m, l, x)
        got = norm_plm_band(m, l, x)[-1]
        assert np.max(np.abs(got - ref)) < 1e-12


def test_seed_constant_matches_exact_rational():
    # c_m^2 = (2m+1)/2 * (2m)! / (4^m (m!)^2), exact in big integers
    for m in (1, 5, 40, 150):
        exact = Fraction(2 * m + 1, 2) * Fraction(
            math.factorial(2 * m), 4**m * math.factorial(m) ** 2
        )
        got = math.exp(2.0 * log_norm_plm_seed(m))
        assert abs(got - float(exact)) < 1e-12 * float(exact)


def test_band_consistent_with_table():
    x, _ = gauss_legendre(40)
    table = norm_plm_table(20, x)
    for m in (0, 4, 17):
        band = norm_plm_band(m, 20, x)
        assert np.max(np.abs(band - table[m:, m, :])) < 1e-13


def test_large_order_band_orthonormality():
    # at m = 1e5 the functions live within |x| <~ 1e-2; a local rule sees
    # all their mass, so the Gram matrix must still be the identity
    m = 100_000
    x, w = composite_gauss_legendre(-0.05, 0.05, panels=64, nodes=24)
    rows = norm_plm_band(m, m + 4, x)
    gram = (rows * w) @ rows.T
    assert np.max(np.abs(gram - np.eye(5))) < 1e-9


def test_band_rejects_bad_orders():
    with pytest.raises(ValueError):
        norm_plm_band(-1, 3, np.array([0.0]))
    with pytest.raises(ValueError):
        norm_plm_band(5, 3, np.array([0.0]))
