"""Quadrature grids for the three geometries and sampled fields on them.

Conventions:
  * sphere: colatitude theta in [0, pi] measured from the pole, equator at
    theta = pi/2; measure dmu = sin(theta) dtheta dphi.  Colatitude nodes
    are Gauss-Legendre in x = cos(theta) (ascending x), longitudes are
    equispaced on [0, 2*pi).
  * box: periodic cube [0, L)^3 with N points per side, N a power of two.
  * cylinder: interval [a, b] times the unit circle with metric weight
    f(t) dt dtheta, Dirichlet ends, uniform interior t-nodes.  Cylinder
    fields hold samples of theta-independent functions g(t); the angular
    factor 2*pi is applied by the quadrature.

All grids are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import GridError, GridMismatchError
from .legendre import gauss_legendre


@dataclass(frozen=True, eq=False)
class SphereGrid:
    n_theta: int
    n_phi: int
    x: np.ndarray = field(repr=False)      # cos(theta), ascending
    w: np.ndarray = field(repr=False)      # Gauss-Legendre weights, sum = 2
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def phi_weight(self) -> float:
        return 2.0 * np.pi / self.n_phi

    @property
    def has_equator_row(self) -> bool:
        return self.n_theta % 2 == 1

    @property
    def equator_index(self) -> int:
        if not self.has_equator_row:
            raise GridError(
                f"n_theta={self.n_theta} is even, no node sits exactly on the equator"
            )
        return self.n_theta // 2

    def field_shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)


def sphere_grid(n_theta: int, n_phi: int) -> SphereGrid:
    if n_theta < 1 or n_phi < 1:
        raise GridError(f"invalid sphere grid sizes ({n_theta}, {n_phi})")
    x, w = gauss_legendre(n_theta)
    theta = np.arccos(x)
    theta.setflags(write=False)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    phi.setflags(write=False)
    return SphereGrid(n_theta=n_theta, n_phi=n_phi, x=x, w=w, theta=theta, phi=phi)


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Periodic cube [0, L)^3, N points per side (power of two)."""

    length: float
    n: int
    guard_fraction: float = 1.0 / 16.0

    def __post_init__(self):
        if self.length <= 0:
            raise GridError(f"box length must be positive, got {self.length}")
        n = self.n
        if n < 4 or (n & (n - 1)) != 0:
            raise GridError(f"points per side must be a power of two >= 4, got {n}")
        if not 0 < self.guard_fraction < 0.5:
            raise GridError(f"guard fraction out of range: {self.guard_fraction}")

    @property
    def h(self) -> float:
        return self.length / self.n

    @cached_property
    def axis(self) -> np.ndarray:
        ax = self.h * np.arange(self.n)
        ax.setflags(write=False)
        return ax

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        """-|2*pi*k/L|^2 per Fourier mode, in numpy fftn layout."""
        k = np.fft.fftfreq(self.n) * self.n
        xi = (2.0 * np.pi / self.length) * k
        sym = -(
            xi[:, None, None] ** 2 + xi[None, :, None] ** 2 + xi[None, None, :] ** 2
        )
        sym.setflags(write=False)
        return sym

    @property
    def guard_width(self) -> float:
        return self.length * self.guard_fraction

    @cached_property
    def guard_mask(self) -> np.ndarray:
        """Cells within guard_width of the periodic boundary, any axis."""
        near = (self.axis < self.guard_width) | (
            self.axis >= self.length - self.guard_width
        )
        mask = (
            near[:, None, None] | near[None, :, None] | near[None, None, :]
        )
        mask.setflags(write=False)
        return mask

    def field_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def radial_distance(self, center: tuple[float, float, float]) -> np.ndarray:
        dx = self.axis - center[0]
        dy = self.axis - center[1]
        dz = self.axis - center[2]
        return np.sqrt(
            dx[:, None, None] ** 2 + dy[None, :, None] ** 2 + dz[None, None, :] ** 2
        )


def box_grid(length: float, n: int, guard_fraction: float = 1.0 / 16.0) -> BoxGrid:
    return BoxGrid(length=length, n=n, guard_fraction=guard_fraction)


@dataclass(frozen=True, eq=False)
class CylinderGrid:
    """Interval [a, b] x S^1 with metric weight f(t), Dirichlet ends.

    t_full and f_full include the two boundary points; fields live on the
    n_t interior nodes.
    """

    a: float
    b: float
    n_t: int
    t_full: np.ndarray = field(repr=False)
    f_full: np.ndarray = field(repr=False)
    profile: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_t + 1)

    @property
    def t(self) -> np.ndarray:
        return self.t_full[1:-1]

    @property
    def f(self) -> np.ndarray:
        return self.f_full[1:-1]

    def field_shape(self) -> tuple[int]:
        return (self.n_t,)


def cylinder_grid(
    a: float, b: float, n_t: int, profile: Callable[[np.ndarray], np.ndarray]
) -> CylinderGrid:
    if not b > a:
        raise GridError(f"need a < b, got [{a}, {b}]")
    if n_t < 3:
        raise GridError(f"need at least 3 interior nodes, got {n_t}")
    t_full = a + (b - a) * np.arange(n_t + 2) / (n_t + 1)
    f_full = np.asarray(profile(t_full), dtype=float)
    if f_full.shape != t_full.shape:
        raise GridError("profile must return one sample per node")
    if not np.all(f_full > 0):
        raise GridError("metric profile f must be strictly positive")
    t_full.setflags(write=False)
    f_full.setflags(write=False)
    return CylinderGrid(a=a, b=b, n_t=n_t, t_full=t_full, f_full=f_full, profile=profile)


Grid = SphereGrid | BoxGrid | CylinderGrid


@dataclass
class GridField:
    """Samples of a function on one of the three grids."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        expected = self.grid.field_shape()
        if tuple(self.values.shape) != expected:
            raise GridError(
                f"field shape {self.values.shape} does not match grid shape {expected}"
            )


def field_from_function(grid: Grid, fn) -> GridField:
    """Sample a callable on the grid.

    sphere: fn(theta, phi) with broadcasting arrays; box: fn(x, y, z);
    cylinder: fn(t).
    """
    if isinstance(grid, SphereGrid):
        values = np.asarray(fn(grid.theta[:, None], grid.phi[None, :]))
        values = np.broadcast_to(values, grid.field_shape()).copy()
    elif isinstance(grid, BoxGrid):
        ax = grid.axis
        values = np.asarray(
            fn(ax[:, None, None], ax[None, :, None], ax[None, None, :])
        )
        values = np.broadcast_to(values, grid.field_shape()).copy()
    elif isinstance(grid, CylinderGrid):
        values = np.asarray(fn(grid.t))
    else:
        raise TypeError(f"unknown grid type {type(grid)!r}")
    return GridField(grid=grid, values=values)


def quadrature_integrate(f: GridField):
    """∫ f dmu over the field's geometry.

    Exact for band-limited integrands per the grid invariants (sphere:
    polynomials in cos(theta) up to degree 2*n_theta - 1 times resolved
    longitude modes; box: trigonometric polynomials below Nyquist).
    """
    grid, v = f.grid, f.values
    if isinstance(grid, SphereGrid):
        return grid.phi_weight * np.sum(grid.w @ v)
    if isinstance(grid, BoxGrid):
        return grid.h**3 * np.sum(v)
    if isinstance(grid, CylinderGrid):
        # trapezoid rule with the field extended by zero at the Dirichlet
        # endpoints (all cylinder fields here are eigenfunction densities)
        return 2.0 * np.pi * grid.h * np.sum(grid.f * v)
    raise TypeError(f"unknown grid type {type(grid)!r}")


def l2_norm(f: GridField) -> float:
    return float(np.sqrt(quadrature_integrate(GridField(f.grid, np.abs(f.values) ** 2)).real))


def same_grid(a: GridField, b: GridField) -> None:
    if a.grid is not b.grid:
        raise GridMismatchError("fields live on different grids")
