"""Small numerical helpers shared across modules."""

import numpy as np
from numpy.polynomial.legendre import leggauss


def unit_sphere_area(n):
    """Area of the unit n-sphere, by the recursion w_n = 2*pi*w_{n-2}/(n-1).

    Exact for every integer n >= 0 without special functions
    (w_0 = 2, w_1 = 2*pi).
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"sphere dimension must be a non-negative integer, got {n}")
    n = int(n)
    if n == 0:
        return 2.0
    if n == 1:
        return 2.0 * np.pi
    return 2.0 * np.pi * unit_sphere_area(n - 2) / (n - 1)


def panel_cumulative_gauss(fun, nodes, npts=8):
    """Cumulative integral of ``fun`` at ``nodes``, by per-panel Gauss-Legendre.

    ``nodes`` must be increasing.  Returns an array ``F`` with ``F[0] = 0`` and
    ``F[i] = integral(fun, nodes[0] .. nodes[i])``.  The integrand is evaluated
    vectorized on an (npanels, npts) array, so ``fun`` must accept ndarrays.
    """
    x, w = leggauss(npts)
    a = nodes[:-1]
    b = nodes[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = fun(pts)
    panel = half * (vals @ w)
    out = np.empty_like(nodes)
    out[0] = 0.0
    np.cumsum(panel, out=out[1:])
    return out


def gauss_tail(fun, a, b, npts=8):
    """Vectorized Gauss-Legendre integral of ``fun`` on each interval [a_i, b_i]."""
    x, w = leggauss(npts)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[..., None] + half[..., None] * x
    return half * (fun(pts) @ w)


class StackedPPoly:
    """Several cubic interpolants sharing one breakpoint search.

    Wraps the coefficient arrays of scipy CubicSpline objects built on a
    common set of breakpoints, so that evaluating k functions at the same
    query points costs a single ``searchsorted`` plus k Horner passes.
    Extrapolates with the boundary polynomial (queries are expected to stay
    inside or within roundoff of the table).
    """

    def __init__(self, splines):
        self.breaks = splines[0].x
        for s in splines[1:]:
            if s.x.shape != self.breaks.shape or not np.array_equal(s.x, self.breaks):
                raise ValueError("stacked splines must share breakpoints")
        self.coefs = np.stack([s.c for s in splines])  # (k, 4, m-1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, x) - 1, 0, len(self.breaks) - 2)
        t = x - self.breaks[idx]
        c = self.coefs[:, :, idx]  # (k, 4, ...)
        return ((c[:, 0] * t + c[:, 1]) * t + c[:, 2]) * t + c[:, 3]


def elementary_symmetric(kappa, k):
    """k-th elementary symmetric polynomial of the rows of ``kappa``.

    ``kappa`` has shape (nodes, n).  Uses the Newton-style column recursion
    e_j(x_1..x_m) = e_j(x_1..x_{m-1}) + x_m e_{j-1}(x_1..x_{m-1}),
    which is exact in exact arithmetic and stable for the small n used here.
    """
    kappa = np.asarray(kappa, dtype=float)
    nodes, n = kappa.shape
    if k < 0 or k > n:
        return np.zeros(nodes)
    e = np.zeros((k + 1, nodes))
    e[0] = 1.0
    for m in range(n):
        upper = min(k, m + 1)
        for j in range(upper, 0, -1):
            e[j] += kappa[:, m] * e[j - 1]
    return e[k]
