"""Gauss-Legendre quadrature and normalized associated Legendre functions.

The quadrature nodes are computed by Newton iteration on the Legendre
polynomial (no table lookup), so any order is available at machine
precision.  Associated Legendre functions are normalized to unit L^2 norm
on [-1, 1]; the degree-m seed is evaluated in log space so that very large
orders (m ~ 1e7, needed for sharply concentrated equatorial states) neither
underflow nor lose the normalization.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError

_rule_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _legendre_pair(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) by the three-term recurrence, valid for |x| < 1."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if n == 0:
        return p_prev, np.zeros_like(x)
    for l in range(2, n + 1):
        p_prev, p = p, ((2 * l - 1) * x * p - (l - 1) * p_prev) / l
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Exact for polynomials of degree <= 2n - 1.  Nodes are returned in
    ascending order and are exactly antisymmetric (odd n gets an exact 0
    node, which the sphere grid uses as its equator row).
    """
    if n < 1:
        raise ValueError(f"rule needs at least one node, got n={n}")
    if n in _rule_cache:
        return _rule_cache[n]
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(60):
        p, dp = _legendre_pair(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < 5e-16:
            break
    else:
        raise ConvergenceError(f"Gauss-Legendre Newton iteration stalled at n={n}")
    p, dp = _legendre_pair(n, x)
    x -= p / dp
    x = 0.5 * (x - x[::-1])  # enforce exact antisymmetry of the root set
    _, dp = _legendre_pair(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x, w = x[::-1].copy(), w[::-1].copy()
    x.setflags(write=False)
    w.setflags(write=False)
    _rule_cache[n] = (x, w)
    return x, w


def composite_gauss_legendre(
    a: float, b: float, panels: int, nodes: int = 24
) -> tuple[np.ndarray, np.ndarray]:
    """Panel-composite Gauss-Legendre rule on [a, b]."""
    if panels < 1:
        raise ValueError("need at least one panel")
    xg, wg = gauss_legendre(nodes)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return x, w


def log_norm_plm_seed(m: int) -> float:
    """log of the constant c_m in P̄_{m,m}(x) = c_m (1 - x^2)^{m/2}.

    c_m = sqrt((2m+1)/2) * sqrt((2m)!) / (2^m m!); evaluated via log-gamma
    so arbitrary m is safe.
    """
    if m == 0:
        return -0.5 * np.log(2.0)
    return (
        0.5 * np.log((2 * m + 1) / 2.0)
        + 0.5 * gammaln(2 * m + 1)
        - m * np.log(2.0)
        - gammaln(m + 1)
    )


def norm_plm_band(m: int, l_max: int, x: np.ndarray) -> np.ndarray:
    """P̄_{l,m}(x) for l = m..l_max as rows of a (l_max - m + 1, len(x)) array.

    Normalization: ∫_{-1}^{1} P̄_{l,m}^2 dx = 1, no Condon-Shortley phase.
    Upward l-recursion from the log-space seed; the recursion runs toward
    growing magnitude, which keeps it stable through the evanescent region
    near the turning points.
    """
    if m < 0 or l_max < m:
        raise ValueError(f"need 0 <= m <= l_max, got m={m}, l_max={l_max}")
    x = np.asarray(x, dtype=float)
    s2 = np.clip(1.0 - x * x, 0.0, 1.0)
    rows = np.empty((l_max - m + 1, x.size), dtype=float)
    if m == 0:
        rows[0] = 1.0 / np.sqrt(2.0)
    else:
        with np.errstate(divide="ignore"):
            logp = log_norm_plm_seed(m) + 0.5 * m * np.log(s2)
        rows[0] = np.exp(logp)
    if l_max > m:
        rows[1] = np.sqrt(2 * m + 3.0) * x * rows[0]
    for l in range(m + 2, l_max + 1):
        a = np.sqrt((4.0 * l * l - 1.0) / (float(l) * l - float(m) * m))
        b = np.sqrt(((l - 1.0) ** 2 - float(m) * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        rows[l - m] = a * (x * rows[l - m - 1] - b * rows[l - m - 2])
    return rows


def norm_plm_table(l_max: int, x: np.ndarray) -> np.ndarray:
    """Dense table P̄[l, m, i] for all 0 <= m <= l <= l_max on nodes x."""
    x = np.asarray(x, dtype=float)
    table = np.zeros((l_max + 1, l_max + 1, x.size), dtype=float)
    for m in range(l_max + 1):
        table[m:, m, :] = norm_plm_band(m, l_max, x)
    return table
