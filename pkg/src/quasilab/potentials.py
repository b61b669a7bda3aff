"""Perturbation potential families with exact support and norm accounting.

Two families drive the experiments:

  * equatorial cutoffs: smooth kappa * phi_k on the sphere, phi_k = 1 on a
    plateau around the equator, supported in a band whose sphere area is
    min(1/k, 4 pi) * (1 - margin), so mu(supp phi_k) <= 1/k holds exactly.
  * scaled bump pairs on the box: u0_n(x) = n^{3/2} u0(n x) (unit L^2 mass)
    together with W_n(x) = n^2 ln(n+1) W0(n x), where W0 is a plateau bump
    equal to 1 on twice the u0 radius, so W_n equals its full amplitude at
    every point of supp u0_n.

All profiles are built from the exp(-1/u) mollifier family, so they are
C-infinity with values in [0, 1] and exactly compactly supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError, SupportError
from .grids import BoxGrid, GridField, SphereGrid
from .legendre import composite_gauss_legendre


def _psi(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)


def smooth_step(u):
    """C-infinity monotone ramp: 1 for u <= 0, 0 for u >= 1."""
    a = _psi(1.0 - np.asarray(u, dtype=float))
    b = _psi(u)
    return a / (a + b)


def mollifier_bump(s):
    """exp(-1/(1 - s^2)) inside |s| < 1, zero outside (unnormalized)."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(
            np.abs(s) < 1.0, np.exp(-1.0 / np.maximum(1.0 - s * s, 1e-300)), 0.0
        )


def plateau_bump(s):
    """1 on |s| <= 2, smooth descent to 0 on 2 < |s| < 3, zero beyond."""
    return np.where(np.abs(s) <= 2.0, 1.0, smooth_step(np.abs(s) - 2.0))


# ---------------------------------------------------------------------------
# equatorial cutoffs on the sphere
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquatorialCutoff:
    """kappa * phi_k: plateau 1 on |theta - pi/2| <= half_width/2, supported
    in |theta - pi/2| <= half_width."""

    k: int
    kappa: float
    half_width: float
    margin: float

    @property
    def plateau_half_width(self) -> float:
        return 0.5 * self.half_width

    @property
    def support_area(self) -> float:
        """mu(supp phi_k) = 4 pi sin(half_width), exactly <= 1/k by construction."""
        return 4.0 * np.pi * math.sin(self.half_width)

    def profile(self, theta):
        """phi_k(theta) in [0, 1] (the kappa factor is NOT included)."""
        s = np.abs(np.asarray(theta, dtype=float) - 0.5 * np.pi) / self.plateau_half_width
        return np.where(s <= 1.0, 1.0, smooth_step(s - 1.0))

    def band_rule(self, oversample: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss-Legendre rule in x = cos(theta) over the support band."""
        xs = math.sin(self.half_width)
        panels = 8 * max(1, oversample)
        return composite_gauss_legendre(-xs, xs, panels, nodes=24)

    def lp_norm(self, p: float) -> float:
        """||kappa phi_k||_{L^p(S^2)} by exact band quadrature (max norm for p = inf)."""
        if p != np.inf and p < 1:
            raise ValueError(f"L^p norm needs p >= 1 or p = inf, got {p}")
        if p == np.inf:
            return self.kappa
        x, w = self.band_rule(oversample=2)
        phi = self.profile(np.arccos(x))
        integral = 2.0 * np.pi * float(np.sum(w * phi**p))
        return self.kappa * integral ** (1.0 / p)


def make_equatorial_cutoff(
    k: int, kappa: float, grid: SphereGrid, margin: float = 1e-3
) -> tuple[EquatorialCutoff, GridField]:
    """Build kappa * phi_k and sample it on the grid.

    The band half-width solves 4 pi sin(Delta) = min(1/k, 4 pi) (1 - margin),
    which pins the exact support area strictly below 1/k.
    """
    if k < 1:
        raise ValueError(f"shrink index must be >= 1, got {k}")
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"amplitude must lie in (0, 1], got {kappa}")
    if not 0.0 < margin < 1.0:
        raise ValueError(f"margin must lie in (0, 1), got {margin}")
    target = min(1.0 / k, 4.0 * np.pi) * (1.0 - margin)
    half_width = math.asin(target / (4.0 * np.pi))
    cutoff = EquatorialCutoff(k=k, kappa=kappa, half_width=half_width, margin=margin)
    values = np.broadcast_to(
        (kappa * cutoff.profile(grid.theta))[:, None], grid.field_shape()
    ).copy()
    return cutoff, GridField(grid=grid, values=values)


# ---------------------------------------------------------------------------
# scaled bump pairs on the box
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledBumpPair:
    """u0_n = n^{3/2} u0(n .) and W_n = n^2 ln(n+1) W0(n .), centered in the box."""

    n: int
    base_radius: float           # r_u of the n = 1 profile
    amplitude: float             # n^2 ln(n+1)
    center: tuple[float, float, float]

    @property
    def u_radius(self) -> float:
        return self.base_radius / self.n

    @property
    def plateau_radius(self) -> float:
        return 2.0 * self.base_radius / self.n

    @property
    def support_radius(self) -> float:
        return 3.0 * self.base_radius / self.n


def make_scaled_pair(
    n: int,
    box: BoxGrid,
    base_radius: float | None = None,
    center: tuple[float, float, float] | None = None,
) -> tuple[ScaledBumpPair, GridField, GridField]:
    """Sample (u0_n, W_n) on the box; u0_n is renormalized so its discrete
    L^2 norm is exactly 1."""
    if n < 1:
        raise ValueError(f"scale index must be >= 1, got {n}")
    r_u = 0.25 * box.length if base_radius is None else float(base_radius)
    c = (
        (0.5 * box.length,) * 3 if center is None else tuple(float(v) for v in center)
    )
    pair = ScaledBumpPair(
        n=n,
        base_radius=r_u,
        amplitude=float(n) * n * math.log(n + 1.0),
        center=c,
    )
    if 2.0 * pair.u_radius < 8.0 * box.h:
        raise ResolutionError(
            f"supp u0_{n} spans {2.0 * pair.u_radius / box.h:.2f} cells, need >= 8; "
            f"refine the box or reduce n"
        )
    wall = min(min(v, box.length - v) for v in c)
    if pair.support_radius + box.guard_width > wall:
        raise SupportError(
            f"supp W_{n} (radius {pair.support_radius:g}) does not fit inside the "
            f"box with the guard band ({box.guard_width:g})"
        )
    rho = box.radial_distance(c)
    u = mollifier_bump(rho / pair.u_radius).astype(complex)
    u /= math.sqrt(box.h**3 * float(np.sum(np.abs(u) ** 2)))
    w = pair.amplitude * plateau_bump(rho / pair.u_radius)
    return pair, GridField(box, u), GridField(box, w)


def bump_pair_reference_norm(p: float, base_radius: float, which: str = "W") -> float:
    """||W0||_{L^p} (or ||u0_raw||) of the radial base profile by 1D quadrature.

    Serves as the scale-1 reference for the change-of-variables law
    ||W_n||_p = n^{2 - 3/p} ln(n+1) ||W0||_p even when W0 itself would not
    fit the box.  u0_raw is the unnormalized mollifier bump.
    """
    if p != np.inf and p < 1:
        raise ValueError(f"L^p norm needs p >= 1 or p = inf, got {p}")
    if which == "W":
        prof, outer = plateau_bump, 3.0 * base_radius
    elif which == "u":
        prof, outer = mollifier_bump, base_radius
    else:
        raise ValueError(f"unknown profile {which!r}")
    if p == np.inf:
        return 1.0 if which == "W" else float(np.exp(-1.0))
    rho, w = composite_gauss_legendre(0.0, outer, panels=48, nodes=24)
    vals = prof(rho / base_radius)
    integral = 4.0 * np.pi * float(np.sum(w * rho**2 * vals**p))
    return integral ** (1.0 / p)


# ---------------------------------------------------------------------------
# grid L^p norms
# ---------------------------------------------------------------------------

def lp_norm(f: GridField, p: float) -> float:
    """Quadrature L^p norm of a sampled field (max norm for p = inf)."""
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1 or p = inf, got {p}")
    grid, v = f.grid, np.abs(f.values) ** p
    if isinstance(grid, SphereGrid):
        total = grid.phi_weight * float(np.sum(grid.w @ v))
    elif isinstance(grid, BoxGrid):
        total = grid.h**3 * float(np.sum(v))
    else:
        total = 2.0 * np.pi * grid.h * float(np.sum(grid.f * v))
    return total ** (1.0 / p)
