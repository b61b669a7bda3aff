"""Concentrating eigenfunctions: equatorial harmonics on the sphere and
Sturm-Liouville modes on surfaces of revolution.

Equatorial harmonics are the restrictions of (x1 + i x2)^n to S^2; in
colatitude coordinates u_n is proportional to sin^n(theta) e^{i n phi},
an exact eigenfunction of -Laplacian with eigenvalue n(n + d - 1), whose
density |u_n|^2 dmu concentrates on the equator circle as n grows.

On the cylinder [a, b] x S^1 with metric dt^2 + f^2(t) dtheta^2 the
Laplacian separates: u = v(t) e^{i m theta} / sqrt(2 pi) reduces
-Laplacian u = lambda u to the weighted Dirichlet problem

    -(f v')' + (m^2 / f) v = lambda f v,  v(a) = v(b) = 0,

discretized here with second-order central differences in symmetric form
so the discrete pencil (A, B) is symmetric with B positive definite.
Note the angular term m^2 / f(t)^2 (after dividing by f) acts as the
effective potential: per-m low-lying modes localize where f is LARGEST,
while eigenfunctions with eigenvalues near the ridge value m^2 / min(f)^2
are the ones associated with a neck of the profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ConvergenceError, GridError, ResolutionError
from .grids import CylinderGrid, GridField, SphereGrid, quadrature_integrate, same_grid


# ---------------------------------------------------------------------------
# equatorial harmonics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquatorialHarmonic:
    """Normalized restriction of (x1 + i x2)^n to the sphere."""

    n: int
    d: int
    eigenvalue: float      # n (n + d - 1)
    norm_sq: float         # ||e_n||^2 before normalization


def equatorial_norm_sq(n: int, d: int = 2) -> float:
    """||e_n||^2_{L^2(S^d)} in closed form: 2 pi^{(d+1)/2} Gamma(n+1) / Gamma(n + (d+1)/2).

    Evaluated in log space, so large n neither overflows nor loses digits.
    At d = 2 this equals 4 pi 4^n (n!)^2 / (2n+1)!.
    """
    if n < 0 or d < 2:
        raise ValueError(f"need n >= 0 and d >= 2, got n={n}, d={d}")
    return float(
        2.0
        * np.pi ** ((d + 1) / 2.0)
        * np.exp(gammaln(n + 1) - gammaln(n + (d + 1) / 2.0))
    )


def make_equatorial(n: int, grid: SphereGrid) -> tuple[EquatorialHarmonic, GridField]:
    """Sample the normalized equatorial harmonic u_n on the grid (d = 2)."""
    if n < 1:
        raise ValueError(f"degree must be >= 1, got {n}")
    if 2 * n + 1 > 2 * grid.n_theta - 1:
        raise ResolutionError(
            f"quadrature exact only to degree {2 * grid.n_theta - 1}, "
            f"|u_{n}|^2 needs degree {2 * n + 1}"
        )
    if grid.n_phi < 2 * n + 1:
        raise ResolutionError(
            f"n_phi={grid.n_phi} aliases the e^(i {n} phi) factor; need >= {2 * n + 1}"
        )
    harmonic = EquatorialHarmonic(
        n=n, d=2, eigenvalue=float(n) * (n + 1), norm_sq=equatorial_norm_sq(n, 2)
    )
    s2 = np.clip(1.0 - grid.x * grid.x, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        radial = np.exp(0.5 * n * np.log(s2) - 0.5 * np.log(harmonic.norm_sq))
    radial[s2 == 0.0] = 0.0
    values = radial[:, None] * np.exp(1j * n * grid.phi)[None, :]
    return harmonic, GridField(grid=grid, values=values)


@dataclass(frozen=True)
class ConcentrationMeasure:
    """Weak-* limit of |u_n|^2 dmu: a probability measure on a circle of
    zero surface measure."""

    kind: str              # "equator" or "parallel"
    nu_gamma: float        # mass the limit puts on the concentration circle
    t0: float | None = None

    @staticmethod
    def equator() -> "ConcentrationMeasure":
        return ConcentrationMeasure(kind="equator", nu_gamma=1.0)

    @staticmethod
    def parallel(t0: float) -> "ConcentrationMeasure":
        return ConcentrationMeasure(kind="parallel", nu_gamma=1.0, t0=t0)


def measure_pairing(f: GridField, u: GridField) -> float:
    """∫ f |u|^2 dmu by quadrature; f real, u normalized, same grid."""
    same_grid(f, u)
    dens = GridField(f.grid, f.values.real * np.abs(u.values) ** 2)
    return float(quadrature_integrate(dens).real)


def equator_average(f: GridField) -> float:
    """(1/2 pi) ∫ f(equator) dphi by the periodic trapezoid rule on the
    grid's longitude nodes (the grid must carry an exact equator row)."""
    grid = f.grid
    if not isinstance(grid, SphereGrid):
        raise GridError("equator_average needs a sphere field")
    return float(np.mean(f.values[grid.equator_index, :]).real)


def weakstar_limit_gap(f: GridField, n: int) -> float:
    """|∫ f |u_n|^2 dmu  -  equator average of f|."""
    _, u = make_equatorial(n, f.grid)
    return abs(measure_pairing(f, u) - equator_average(f))


# ---------------------------------------------------------------------------
# Sturm-Liouville modes on the cylinder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SturmLiouvilleMode:
    """Eigenpair of the weighted Dirichlet problem; full eigenfunction is
    v(t) e^{i m theta} / sqrt(2 pi), normalized in L^2(f dt dtheta)."""

    grid: CylinderGrid
    m: int
    j: int
    eigenvalue: float
    v: np.ndarray          # interior node values


def _pencil(grid: CylinderGrid, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Main/off diagonals of A and the diagonal of B for -(f v')' + (m^2/f) v = lam f v."""
    h = grid.h
    ff = grid.f_full
    fi = grid.f
    fmid = 0.5 * (ff[:-1] + ff[1:])
    main = (fmid[:-1] + fmid[1:]) / h**2 + (float(m) * m) / fi
    off = -fmid[1:-1] / h**2
    return main, off, fi


def _thomas_floored(diag, off, rhs):
    """Tridiagonal solve without pivoting, tiny pivots floored away from
    zero (the usual inverse-iteration convention for shifted systems)."""
    n = diag.size
    floor = np.longdouble(1e-18) * (np.max(np.abs(diag)) + np.max(np.abs(off)))
    c = np.zeros(n, dtype=np.longdouble)
    x = np.empty(n, dtype=np.longdouble)
    piv = diag[0] if abs(diag[0]) > floor else floor
    c[0] = off[0] / piv
    x[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - off[i - 1] * c[i - 1]
        if abs(piv) < floor:
            piv = floor
        if i < n - 1:
            c[i] = off[i] / piv
        x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x


def solve_sturm_liouville(
    grid: CylinderGrid, m: int, count: int
) -> list[SturmLiouvilleMode]:
    """Lowest `count` eigenpairs of the discrete symmetric pencil,
    orthonormal in the f-weighted inner product.

    One inverse-iteration sweep in extended precision (followed by
    B-weighted Gram-Schmidt so nearly degenerate pairs stay orthogonal)
    pushes the pencil residual down to the floor set by storing the
    eigenvector in doubles, eps * ||A|| / ||B||; the 1e-10 residual
    contract therefore holds for grids with 1/h^2 below roughly 1e6.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count > grid.n_t:
        raise ValueError(f"only {grid.n_t} discrete modes exist, asked for {count}")
    main, off, b_diag = _pencil(grid, m)
    d = np.sqrt(b_diag)
    try:
        lam, vt = eigh_tridiagonal(
            main / b_diag,
            off / (d[:-1] * d[1:]),
            select="i",
            select_range=(0, count - 1),
        )
    except Exception as exc:  # LAPACK failure surfaces explicitly
        raise ConvergenceError(f"tridiagonal eigensolver failed: {exc}") from exc
    h = np.longdouble(grid.h)
    main_l = main.astype(np.longdouble)
    off_l = off.astype(np.longdouble)
    b_l = b_diag.astype(np.longdouble)

    def b_dot(a, b):
        return h * np.sum(b_l * a * b)

    def apply_a(v):
        av = main_l * v
        av[:-1] += off_l * v[1:]
        av[1:] += off_l * v[:-1]
        return av

    modes = []
    kept: list[np.ndarray] = []
    for j in range(count):
        v0 = (vt[:, j] / d).astype(np.longdouble)
        v0 /= np.sqrt(b_dot(v0, v0))
        x = _thomas_floored(main_l - np.longdouble(lam[j]) * b_l, off_l, b_l * v0)
        if not np.all(np.isfinite(x)):
            x = v0
        nrm0 = np.sqrt(b_dot(x, x))
        for u in kept:
            x = x - u * b_dot(u, x)
        nrm = np.sqrt(b_dot(x, x))
        if not nrm > 0.25 * nrm0:
            x = v0
            for u in kept:
                x = x - u * b_dot(u, x)
            nrm = np.sqrt(b_dot(x, x))
        x /= nrm
        kept.append(x)
        lam_j = float(b_dot(x, apply_a(x) / b_l))
        v = np.asarray(x, dtype=float)
        if v[int(np.argmax(np.abs(v)))] < 0:
            v = -v
        modes.append(SturmLiouvilleMode(grid=grid, m=m, j=j, eigenvalue=lam_j, v=v))
    return modes


def sl_residual(mode: SturmLiouvilleMode) -> float:
    """||(A - lam B) v|| / ||B v|| for the discrete pencil."""
    main, off, b_diag = _pencil(mode.grid, mode.m)
    v = mode.v
    av = main * v
    av[:-1] += off * v[1:]
    av[1:] += off * v[:-1]
    r = av - mode.eigenvalue * (b_diag * v)
    return float(np.linalg.norm(r) / np.linalg.norm(b_diag * v))


def profile_minimum(grid: CylinderGrid) -> float:
    """Node location of the minimum of f (the short circle of the surface)."""
    return float(grid.t_full[int(np.argmin(grid.f_full))])


def profile_maximum(grid: CylinderGrid) -> float:
    """Node location of the maximum of f, i.e. the minimum of the effective
    angular potential m^2/f^2, where the per-m ground states localize."""
    return float(grid.t_full[int(np.argmax(grid.f_full))])


def concentration_profile(
    mode: SturmLiouvilleMode, window: float, center: float | None = None
) -> float:
    """Weighted mass ∫_{|t - t0| <= w} |v|^2 f dt, in [0, 1].

    Window edges are handled by linear interpolation of the cumulative
    trapezoid mass, so the value is second-order accurate in h.
    """
    grid = mode.grid
    if window <= 0:
        raise ValueError("window half-width must be positive")
    t0 = profile_minimum(grid) if center is None else center
    rho_full = np.zeros(grid.n_t + 2)
    rho_full[1:-1] = grid.f * mode.v**2
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (rho_full[1:] + rho_full[:-1]) * grid.h)]
    )
    lo = max(t0 - window, grid.a)
    hi = min(t0 + window, grid.b)
    mass_hi = float(np.interp(hi, grid.t_full, cum))
    mass_lo = float(np.interp(lo, grid.t_full, cum))
    total = float(cum[-1])
    return (mass_hi - mass_lo) / total


def sl_pairing(mode: SturmLiouvilleMode, g) -> float:
    """∫ g(t) |u|^2 dmu for a theta-independent test function g."""
    grid = mode.grid
    gv = np.asarray(g(grid.t), dtype=float)
    return float(grid.h * np.sum(gv * grid.f * mode.v**2))


def barrier_top_mode(grid: CylinderGrid, m: int, t_ridge: float | None = None) -> SturmLiouvilleMode:
    """Eigenpair with eigenvalue closest to the angular ridge m^2 / min(f)^2.

    For a profile with an interior minimum this is the sequence that
    concentrates (slowly) on the short circle at the neck.
    """
    t0 = profile_minimum(grid) if t_ridge is None else t_ridge
    f0 = float(np.min(grid.f_full)) if t_ridge is None else float(
        np.interp(t_ridge, grid.t_full, grid.f_full)
    )
    target = (float(m) / f0) ** 2
    # Weyl count of eigenvalues below the ridge, plus slack
    integrand = np.sqrt(np.maximum(0.0, target - (float(m) / grid.f) ** 2))
    count = int(np.ceil(grid.h * np.sum(integrand) / np.pi)) + 8
    count = min(max(count, 4), grid.n_t)
    modes = solve_sturm_liouville(grid, m, count)
    lams = np.array([md.eigenvalue for md in modes])
    return modes[int(np.argmin(np.abs(lams - target)))]
