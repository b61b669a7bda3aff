import math

import numpy as np
import pytest

from quasilab.errors import ResolutionError
from quasilab.grids import GridField, box_grid, field_from_function, l2_norm, sphere_grid
from quasilab.transforms import (
    ModeIndex,
    SpectralState,
    box_analyze,
    box_laplacian,
    box_synthesize,
    lm_index,
    sphere_analyze,
    sphere_mode_count,
    sphere_synthesize,
)


def y21(theta, phi):
    # standard orthonormal Y_{2,1} up to sign convention
    return (
        math.sqrt(15.0 / (8.0 * np.pi)) * np.sin(theta) * np.cos(theta) * np.exp(1j * phi)
    )


class TestSphereTransforms:
    def test_single_mode_is_delta(self):
        g = sphere_grid(16, 16)
        f = field_from_function(g, y21)
        st = sphere_analyze(f, 6)
        c = st.coeffs.copy()
        i = lm_index(2, 1)
        assert abs(abs(c[i]) - 1.0) < 1e-12
        c[i] = 0.0
        assert np.max(np.abs(c)) < 1e-12

    def test_constant_mode(self):
        g = sphere_grid(8, 8)
        f = field_from_function(
            g, lambda th, ph: np.full_like(th, 1.0 / math.sqrt(4 * np.pi)) + 0 * ph
        )
        st = sphere_analyze(f, 3)
        assert abs(st.coeffs[lm_index(0, 0)] - 1.0) < 1e-13

    def test_equatorial_degree_one_modulus(self):
        # ||sin(theta) e^{i phi}||^2 = 8 pi / 3 from the Wallis integral
        # int_0^pi sin^3 = 4/3; verified against the quadrature itself
        g = sphere_grid(16, 16)
        f = field_from_function(g, lambda th, ph: np.sin(th) * np.exp(1j * ph))
        st = sphere_analyze(f, 4)
        expected = math.sqrt(8 * np.pi / 3)
        assert abs(abs(st.coeffs[lm_index(1, 1)]) - expected) < 1e-12
        assert abs(l2_norm(f) - expected) < 1e-12

    def test_round_trip_on_band_limited_field(self):
        g = sphere_grid(20, 24)
        rng = np.random.default_rng(7)
        l_max = 9
        coeffs = rng.standard_normal(sphere_mode_count(l_max)) + 1j * rng.standard_normal(
            sphere_mode_count(l_max)
        )
        state = SpectralState(geometry="sphere", coeffs=coeffs, grid=g, l_max=l_max)
        f = sphere_synthesize(state)
        back = sphere_analyze(f, l_max)
        assert np.max(np.abs(back.coeffs - coeffs)) < 1e-12 * np.max(np.abs(coeffs))

    def test_zero_state(self):
        g = sphere_grid(8, 8)
        state = SpectralState(
            geometry="sphere", coeffs=np.zeros(sphere_mode_count(2), complex), grid=g, l_max=2
        )
        assert np.all(sphere_synthesize(state).values == 0)

    def test_single_30_matches_closed_form(self):
        # Y_{3,0} = sqrt(7/(16 pi)) (5 cos^3 - 3 cos)
        g = sphere_grid(10, 12)
        coeffs = np.zeros(sphere_mode_count(4), complex)
        coeffs[lm_index(3, 0)] = 1.0
        state = SpectralState(geometry="sphere", coeffs=coeffs, grid=g, l_max=4)
        f = sphere_synthesize(state)
        x = g.x
        ref = math.sqrt(7.0 / (16.0 * np.pi)) * (5 * x**3 - 3 * x)
        assert np.max(np.abs(f.values - ref[:, None])) < 1e-13

    def test_parseval(self):
        g = sphere_grid(20, 24)
        rng = np.random.default_rng(11)
        l_max = 8
        coeffs = rng.standard_normal(sphere_mode_count(l_max)) * (1 + 0j)
        state = SpectralState(geometry="sphere", coeffs=coeffs, grid=g, l_max=l_max)
        f = sphere_synthesize(state)
        assert abs(l2_norm(f) - np.linalg.norm(coeffs)) < 1e-12 * np.linalg.norm(coeffs)

    def test_resolution_preconditions(self):
        g = sphere_grid(8, 8)
        f = field_from_function(g, lambda th, ph: np.cos(th) + 0 * ph)
        with pytest.raises(ResolutionError):
            sphere_analyze(f, 8)  # needs n_theta >= 9
        with pytest.raises(ResolutionError):
            sphere_analyze(f, 4)  # needs n_phi >= 9


class TestBoxTransforms:
    def test_plane_wave_delta(self):
        b = box_grid(2.0, 8)
        k = (2, -1, 3)
        f = field_from_function(
            b,
            lambda x, y, z: np.exp(2j * np.pi * (k[0] * x + k[1] * y + k[2] * z) / b.length),
        )
        st = box_analyze(f)
        c = st.coeffs.copy()
        idx = tuple(ki % b.n for ki in k)
        assert abs(c[idx] - b.length**1.5) < 1e-12 * b.length**1.5
        c[idx] = 0.0
        assert np.max(np.abs(c)) < 1e-11

    def test_parseval_and_round_trip(self):
        b = box_grid(5.0, 16)
        rng = np.random.default_rng(5)
        f = GridField(b, rng.standard_normal((16,) * 3) + 1j * rng.standard_normal((16,) * 3))
        st = box_analyze(f)
        assert abs(np.linalg.norm(st.coeffs) - l2_norm(f)) < 1e-12 * l2_norm(f)
        back = box_synthesize(st)
        assert np.max(np.abs(back.values - f.values)) < 1e-12

    def test_laplacian_symbol_on_plane_wave(self):
        b = box_grid(2.0, 8)
        k = (1, 0, -2)
        f = field_from_function(
            b,
            lambda x, y, z: np.exp(2j * np.pi * (k[0] * x + k[1] * y + k[2] * z) / b.length),
        )
        lap = box_laplacian(f)
        sym = -((2 * np.pi / b.length) ** 2) * (k[0] ** 2 + k[1] ** 2 + k[2] ** 2)
        assert np.max(np.abs(lap.values - sym * f.values)) < 1e-10


class TestModeIndex:
    def test_sphere_bounds(self):
        ModeIndex("sphere", l=3, m=-3)
        with pytest.raises(ValueError):
            ModeIndex("sphere", l=2, m=3)

    def test_other_geometries(self):
        ModeIndex("box", k=(0, -4, 7))
        ModeIndex("cylinder", m=2, j=0)
        with pytest.raises(ValueError):
            ModeIndex("cylinder", m=2, j=-1)
        with pytest.raises(ValueError):
            ModeIndex("klein-bottle")

    def test_packing(self):
        seen = set()
        l_max = 5
        for l in range(l_max + 1):
            for m in range(-l, l + 1):
                seen.add(lm_index(l, m))
        assert seen == set(range(sphere_mode_count(l_max)))
