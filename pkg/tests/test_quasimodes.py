import math
from fractions import Fraction

import numpy as np
import pytest

from quasilab.errors import GridError, GridMismatchError, ResolutionError
from quasilab.grids import field_from_function, l2_norm, sphere_grid
from quasilab.quasimodes import (
    ConcentrationMeasure,
    equator_average,
    equatorial_norm_sq,
    make_equatorial,
    measure_pairing,
    weakstar_limit_gap,
)
from quasilab.transforms import lm_index, sphere_analyze


def exact_norm_sq_d2(n: int) -> float:
    return float(
        4 * Fraction(4**n * math.factorial(n) ** 2, math.factorial(2 * n + 1))
    ) * math.pi


class TestClosedFormNorm:
    def test_small_values(self):
        assert abs(equatorial_norm_sq(0, 2) - 4 * math.pi) < 1e-14
        assert abs(equatorial_norm_sq(1, 2) - 8 * math.pi / 3) < 1e-14

    def test_matches_exact_rational_d2(self):
        for n in range(0, 31):
            exact = exact_norm_sq_d2(n)
            assert abs(equatorial_norm_sq(n, 2) - exact) < 1e-12 * exact

    def test_d3_sphere_area(self):
        # n = 0 reduces to the volume of S^3
        assert abs(equatorial_norm_sq(0, 3) - 2 * math.pi**2) < 1e-12

    def test_large_n_no_overflow(self):
        v = equatorial_norm_sq(200_000, 2)
        assert 0.0 < v < 1.0  # decays like n^{-1/2} times constants

    def test_matches_quadrature_at_n10(self):
        g = sphere_grid(16, 4)
        f = field_from_function(g, lambda th, ph: np.sin(th) ** 20 + 0 * ph)
        from quasilab.grids import quadrature_integrate

        quad = quadrature_integrate(f).real
        assert abs(quad - equatorial_norm_sq(10, 2)) < 1e-10 * quad

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            equatorial_norm_sq(-1, 2)
        with pytest.raises(ValueError):
            equatorial_norm_sq(3, 1)


class TestMakeEquatorial:
    def test_unit_norm_and_eigenvalue(self):
        g = sphere_grid(40, 80)
        for n in (1, 7, 30):
            harm, u = make_equatorial(n, g)
            assert abs(l2_norm(u) - 1.0) < 1e-12
            assert harm.eigenvalue == n * (n + 1)

    def test_degree16_eigenvalue_value(self):
        g = sphere_grid(20, 40)
        harm, _ = make_equatorial(3, g)
        assert harm.eigenvalue == 12.0  # n (n + d - 1) at d = 2

    def test_single_spectral_line(self):
        g = sphere_grid(16, 16)
        _, u = make_equatorial(2, g)
        st = sphere_analyze(u, 6)
        c = st.coeffs.copy()
        i = lm_index(2, 2)
        assert abs(abs(c[i]) - 1.0) < 1e-12
        c[i] = 0
        assert np.max(np.abs(c)) < 1e-12

    def test_spectral_residual(self):
        for n in (1, 5, 12):
            l_max = n + 8
            g = sphere_grid(l_max + 1, 2 * l_max + 2)
            harm, u = make_equatorial(n, g)
            st = sphere_analyze(u, l_max)
            ls = np.array([l for l in range(l_max + 1) for _ in range(2 * l + 1)])
            gaps = ls * (ls + 1.0) - harm.eigenvalue
            resid = math.sqrt(float(np.sum(np.abs(st.coeffs) ** 2 * gaps**2)))
            assert resid < 1e-10

    def test_resolution_errors(self):
        g = sphere_grid(8, 64)
        with pytest.raises(ResolutionError):
            make_equatorial(9, g)
        g2 = sphere_grid(64, 8)
        with pytest.raises(ResolutionError):
            make_equatorial(9, g2)
        with pytest.raises(ValueError):
            make_equatorial(0, g)


class TestMeasurePairing:
    def test_normalization(self):
        g = sphere_grid(64, 64)
        one = field_from_function(g, lambda th, ph: np.ones_like(th) + 0 * ph)
        for n in (1, 9, 25):
            _, u = make_equatorial(n, g)
            assert abs(measure_pairing(one, u) - 1.0) < 1e-13

    def test_cos2_exact_ratio(self):
        # Wallis ratio: int cos^2 sin^{2n+1} / int sin^{2n+1} = 1/(2n+3)
        g = sphere_grid(64, 128)
        f = field_from_function(g, lambda th, ph: np.cos(th) ** 2 + 0 * ph)
        for n in (1, 10, 50):
            _, u = make_equatorial(n, g)
            assert abs(measure_pairing(f, u) - 1.0 / (2 * n + 3)) < 1e-13

    def test_odd_function_vanishes(self):
        g = sphere_grid(16, 16)
        f = field_from_function(g, lambda th, ph: np.sin(th) * np.cos(ph))
        _, u = make_equatorial(4, g)
        assert abs(measure_pairing(f, u)) < 1e-14

    def test_grid_mismatch(self):
        g1, g2 = sphere_grid(16, 16), sphere_grid(16, 16)
        f = field_from_function(g1, lambda th, ph: np.cos(th) + 0 * ph)
        _, u = make_equatorial(2, g2)
        with pytest.raises(GridMismatchError):
            measure_pairing(f, u)


class TestWeakStarGap:
    def test_cos2_gap(self):
        g = sphere_grid(65, 32)
        f = field_from_function(g, lambda th, ph: np.cos(th) ** 2 + 0 * ph)
        for n in (1, 10):
            assert abs(weakstar_limit_gap(f, n) - 1.0 / (2 * n + 3)) < 1e-13

    def test_constant_gap_zero(self):
        g = sphere_grid(33, 16)
        f = field_from_function(g, lambda th, ph: np.ones_like(th) + 0 * ph)
        assert weakstar_limit_gap(f, 5) < 1e-13

    def test_sin2cos2_pairing_average_and_gap(self):
        g = sphere_grid(65, 128)
        f = field_from_function(g, lambda th, ph: (np.sin(th) * np.cos(ph)) ** 2)
        n = 50
        _, u = make_equatorial(n, g)
        assert abs(measure_pairing(f, u) - 0.5 * (2 * n + 2) / (2 * n + 3)) < 1e-13
        assert abs(equator_average(f) - 0.5) < 1e-14
        assert abs(weakstar_limit_gap(f, n) - 0.5 / (2 * n + 3)) < 1e-13

    def test_monotone_concentration(self):
        g = sphere_grid(129, 128)
        f = field_from_function(g, lambda th, ph: np.cos(th) ** 2 + 0 * ph)
        gaps = [weakstar_limit_gap(f, n) for n in range(1, 51)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.01

    def test_needs_equator_row(self):
        g = sphere_grid(16, 16)
        f = field_from_function(g, lambda th, ph: np.cos(th) + 0 * ph)
        with pytest.raises(GridError):
            weakstar_limit_gap(f, 2)


def test_concentration_measure_records():
    nu = ConcentrationMeasure.equator()
    assert nu.nu_gamma == 1.0
    circ = ConcentrationMeasure.parallel(0.0)
    assert circ.t0 == 0.0 and circ.kind == "parallel"
