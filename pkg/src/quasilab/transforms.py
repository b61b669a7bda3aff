"""Forward and inverse mode transforms on the sphere and the periodic box.

Sphere basis: Y_{l,m}(theta, phi) = P̄_{l,|m|}(cos theta) e^{i m phi} / sqrt(2 pi)
with P̄ normalized to unit L^2([-1,1]) norm, so ||Y_{l,m}||_{L^2(S^2)} = 1.
Coefficients are packed into a vector of length (l_max + 1)^2 via
lm_index(l, m) = l^2 + l + m.

Box transform is the unitary discrete Fourier pair: the coefficient l^2
norm equals the grid L^2 norm exactly (up to roundoff).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, ResolutionError
from .grids import BoxGrid, GridField, SphereGrid
from .legendre import norm_plm_table


@dataclass(frozen=True)
class ModeIndex:
    """A single basis label on one of the three geometries."""

    geometry: str
    l: int | None = None
    m: int | None = None
    k: tuple[int, int, int] | None = None
    j: int | None = None

    def __post_init__(self):
        if self.geometry == "sphere":
            if self.l is None or self.m is None or not 0 <= self.l:
                raise ValueError("sphere mode needs l >= 0 and m")
            if abs(self.m) > self.l:
                raise ValueError(f"sphere mode needs |m| <= l, got l={self.l}, m={self.m}")
        elif self.geometry == "box":
            if self.k is None or len(self.k) != 3:
                raise ValueError("box mode needs an integer frequency triple")
        elif self.geometry == "cylinder":
            if self.m is None or self.j is None or self.j < 0:
                raise ValueError("cylinder mode needs angular order m and index j >= 0")
        else:
            raise ValueError(f"unknown geometry {self.geometry!r}")


def lm_index(l: int, m: int) -> int:
    return l * l + l + m


def sphere_mode_count(l_max: int) -> int:
    return (l_max + 1) ** 2


@dataclass
class SpectralState:
    """Complex coefficient vector over an indexed mode basis."""

    geometry: str
    coeffs: np.ndarray
    grid: SphereGrid | BoxGrid
    l_max: int | None = field(default=None)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


# cache holds the grid object itself so a recycled id can never alias a
# table built for a different grid
_plm_cache: dict[tuple[int, int], tuple[SphereGrid, np.ndarray]] = {}


def _plm_for(grid: SphereGrid, l_max: int) -> np.ndarray:
    key = (id(grid), l_max)
    hit = _plm_cache.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    if len(_plm_cache) > 32:
        _plm_cache.clear()
    table = norm_plm_table(l_max, grid.x)
    _plm_cache[key] = (grid, table)
    return table


def _check_sphere_resolution(grid: SphereGrid, l_max: int) -> None:
    if grid.n_theta < l_max + 1 or grid.n_phi < 2 * l_max + 1:
        raise ResolutionError(
            f"grid ({grid.n_theta}, {grid.n_phi}) cannot resolve l_max={l_max}; "
            f"need n_theta >= {l_max + 1} and n_phi >= {2 * l_max + 1}"
        )


def sphere_analyze(f: GridField, l_max: int) -> SpectralState:
    """Coefficients c_{l,m} = <Y_{l,m}, f> under the d-mu inner product."""
    grid = f.grid
    if not isinstance(grid, SphereGrid):
        raise GridError("sphere_analyze needs a field on a SphereGrid")
    _check_sphere_resolution(grid, l_max)
    # longitude integral per order m: (2 pi / n_phi) sum_j f_ij e^{-i m phi_j}
    fhat = np.fft.fft(np.asarray(f.values, dtype=complex), axis=1) * grid.phi_weight
    plm = _plm_for(grid, l_max)
    coeffs = np.zeros(sphere_mode_count(l_max), dtype=complex)
    inv_sqrt2pi = 1.0 / np.sqrt(2.0 * np.pi)
    for m in range(-l_max, l_max + 1):
        col = grid.w * fhat[:, m % grid.n_phi]
        am = abs(m)
        proj = plm[am:, am, :] @ col * inv_sqrt2pi
        for l in range(am, l_max + 1):
            coeffs[lm_index(l, m)] = proj[l - am]
    return SpectralState(geometry="sphere", coeffs=coeffs, grid=grid, l_max=l_max)


def sphere_synthesize(state: SpectralState, grid: SphereGrid | None = None) -> GridField:
    """Pointwise sum of c_{l,m} Y_{l,m} on the grid; inverse of sphere_analyze
    on band-limited fields."""
    if state.geometry != "sphere":
        raise GridError("sphere_synthesize needs a sphere state")
    grid = grid if grid is not None else state.grid
    l_max = state.l_max
    _check_sphere_resolution(grid, l_max)
    plm = _plm_for(grid, l_max)
    ghat = np.zeros((grid.n_theta, grid.n_phi), dtype=complex)
    inv_sqrt2pi = 1.0 / np.sqrt(2.0 * np.pi)
    for m in range(-l_max, l_max + 1):
        am = abs(m)
        cs = np.array([state.coeffs[lm_index(l, m)] for l in range(am, l_max + 1)])
        ghat[:, m % grid.n_phi] += (cs @ plm[am:, am, :]) * inv_sqrt2pi
    values = np.fft.ifft(ghat * grid.n_phi, axis=1)
    return GridField(grid=grid, values=values)


def box_analyze(f: GridField) -> SpectralState:
    grid = f.grid
    if not isinstance(grid, BoxGrid):
        raise GridError("box_analyze needs a field on a BoxGrid")
    coeffs = np.fft.fftn(np.asarray(f.values, dtype=complex)) * (
        grid.length**1.5 / grid.n**3
    )
    return SpectralState(geometry="box", coeffs=coeffs, grid=grid)


def box_synthesize(state: SpectralState) -> GridField:
    if state.geometry != "box":
        raise GridError("box_synthesize needs a box state")
    grid = state.grid
    values = np.fft.ifftn(state.coeffs) * (grid.n**3 / grid.length**1.5)
    return GridField(grid=grid, values=values)


def box_laplacian(f: GridField) -> GridField:
    """Apply the Laplacian through its Fourier symbol -|2 pi k / L|^2."""
    grid = f.grid
    if not isinstance(grid, BoxGrid):
        raise GridError("box_laplacian needs a field on a BoxGrid")
    values = np.fft.ifftn(grid.laplacian_symbol * np.fft.fftn(f.values))
    return GridField(grid=grid, values=values)
