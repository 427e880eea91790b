"""Weighted volume and area functionals, and slice comparison profiles.

For a domain bounded by the graph and the inner slice, the weighted
alpha-volume is the double integral over the sphere of the radial
antiderivative of (phi')^alpha phi^n; surface functionals integrate against
the graph area element phi^n omega.  Slice profiles tabulate the same
functionals on centred balls B(r) and invert them monotonically to produce
the comparison functions used by the geometric inequalities:

    xi_alpha(x)   = V^alpha(ball with V^1 = x)
    chi_{i,alpha}(x) = A_i(ball with V^alpha = x)
"""

import numpy as np

from ._numutil import gauss_tail, panel_cumulative_gauss, unit_sphere_area
from .errors import RangeError, StateError

_PROFILE_SIZE = 4097


class _RadialAntiderivative:
    """G(r) = integral from r_min to r of (phi'(s))^alpha phi(s)^n ds, vectorized."""

    def __init__(self, space, alpha, size=_PROFILE_SIZE):
        self.space = space
        self.alpha = float(alpha)
        self.nodes = np.linspace(space.r_min, space.r_max, size)
        self.cum = panel_cumulative_gauss(self._f, self.nodes)

    def _f(self, s):
        phi, p1, _, _ = self.space._model.eval(s)
        if self.alpha == 0.0:
            return phi**self.space.n
        if self.alpha == 1.0:
            return p1 * phi**self.space.n
        return p1**self.alpha * phi**self.space.n

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(self.nodes, r) - 1, 0, len(self.nodes) - 2)
        lower = self.nodes[idx]
        return self.cum[idx] + gauss_tail(self._f, lower, r)

    def derivative(self, r):
        return self._f(np.asarray(r, dtype=float))


def _antiderivative(space, alpha):
    cache = getattr(space, "_radial_cache", None)
    if cache is None:
        cache = {}
        space._radial_cache = cache
    key = float(alpha)
    if key not in cache:
        cache[key] = _RadialAntiderivative(space, alpha)
    return cache[key]


def weighted_volume_alpha(space, state, alpha):
    """Weighted alpha-volume of the domain between the graph and the inner slice."""
    fields_r = space.r_of_gamma(state.gamma)
    space._check_radius(fields_r, "graph radius")
    G = _antiderivative(space, alpha)
    return float(state.grid.integrate(G(fields_r)))


def weighted_area(space, fields):
    """A_0 = integral of phi' over the graph."""
    return float(fields.grid.integrate(fields.phi1 * fields.area_element))


def weighted_mean_curvature_integral(space, fields):
    """A_1 = integral of phi' H over the graph."""
    return float(fields.grid.integrate(fields.phi1 * fields.H * fields.area_element))


def slice_area_functionals(space, r):
    """(A_0, A_1) of the slice at radius r: (w_n phi^n phi', n w_n phi^(n-1) phi'^2)."""
    phi, p1, _, _ = space.phi(r)
    wn = unit_sphere_area(space.n)
    return wn * phi**space.n * p1, space.n * wn * phi ** (space.n - 1) * p1**2


class SliceProfile:
    """Monotone tables of V^alpha, A_0, A_1 on slices, with inversion.

    Inversion never extrapolates: arguments outside the tabulated range raise
    :class:`RangeError` so a too-small working interval cannot silently
    corrupt inequality verdicts.
    """

    def __init__(self, space, alpha):
        self.space = space
        self.alpha = float(alpha)
        self._G_alpha = _antiderivative(space, alpha)
        self._G_one = _antiderivative(space, 1.0)
        self.wn = unit_sphere_area(space.n)
        rs = self._G_alpha.nodes
        self.r_table = rs
        self.v_alpha_table = self.wn * self._G_alpha.cum
        self.v_table = self.wn * self._G_one.cum
        a0, a1 = slice_area_functionals(space, rs)
        self.a0_table = a0
        self.a1_table = a1
        for name, tab in (("V_phi^alpha", self.v_alpha_table),
                          ("V_phi", self.v_table),
                          ("A0_phi", self.a0_table), ("A1_phi", self.a1_table)):
            if np.any(np.diff(tab) <= 0.0):
                raise StateError(
                    f"slice table {name} is not strictly increasing on "
                    f"[{space.r_min}, {space.r_max}]")

    def v_alpha_slice(self, r):
        return self.wn * self._G_alpha(r)

    def v_slice(self, r):
        return self.wn * self._G_one(r)

    def _invert(self, table, anti, x):
        x_arr = np.asarray(x, dtype=float)
        scale = max(abs(table[0]), abs(table[-1]), 1e-300)
        if np.any(x_arr < table[0] - 1e-9 * scale) or np.any(x_arr > table[-1] + 1e-9 * scale):
            raise RangeError(
                f"value {float(np.ravel(x_arr)[0]):.6g} outside the tabulated "
                f"range [{table[0]:.6g}, {table[-1]:.6g}]; widen [r_min, r_max]")
        r = np.interp(x_arr, table, self.r_table)
        # Newton polish on the monotone antiderivative (bisection-free because
        # the interp bracket already lands within one table cell)
        for _ in range(3):
            val = self.wn * anti(r)
            der = self.wn * anti.derivative(r)
            step = (val - x_arr) / np.maximum(der, 1e-300)
            r = np.clip(r - step, self.space.r_min, self.space.r_max)
        return r

    def r_of_volume(self, x):
        """Radius of the ball with weighted volume x."""
        return self._invert(self.v_table, self._G_one, x)

    def r_of_volume_alpha(self, x):
        return self._invert(self.v_alpha_table, self._G_alpha, x)

    def xi(self, x):
        """xi_alpha(x) = V^alpha of the ball whose weighted volume is x."""
        return self.wn * self._G_alpha(self.r_of_volume(x))

    def chi(self, i, x):
        """chi_{i,alpha}(x) = A_i of the ball whose V^alpha is x (i in {0, 1})."""
        r = self.r_of_volume_alpha(x)
        a0, a1 = slice_area_functionals(self.space, r)
        if i == 0:
            return a0
        if i == 1:
            return a1
        raise ValueError(f"i must be 0 or 1, got {i}")

    def export_rows(self):
        """(r, V_phi, V_phi_alpha, A0_phi, A1_phi) rows for CSV export."""
        return np.column_stack([self.r_table, self.v_table, self.v_alpha_table,
                                self.a0_table, self.a1_table])


class MinkowskiResiduals:
    """Quadrature residuals of the integral identities on a closed graph."""

    def __init__(self, res1, res2, res3, has2, has3):
        self.res1 = res1
        self.res2 = res2
        self.res3 = res3
        self.has2 = has2
        self.has3 = has3

    def as_tuple(self):
        return (self.res1, self.res2, self.res3)


def minkowski_residuals(space, fields):
    """Residuals of the three curvature integral identities.

    res1 = n Int phi' - Int u H
    res2 = (n-1) Int phi' H - 2 Int sigma2 u - Int u dRic        (needs n >= 2)
    res3 = (n-2) Int phi' sigma2 - 3 Int u sigma3 - (n-2) Int u qhat Q2  (needs n >= 3)

    with dRic = (n-1) qhat (1 - u^2/phi^2), qhat = ((phi')^2 - phi phi'' - 1)/phi^2
    the difference of radial and normal Ricci eigenvalues, and
    Q2 = sigma2^{ij} r_i r_j the radial contraction of the second Newton tensor.
    All integrals are with respect to the graph area element.  The sigma3
    term carries the support function u (as the divergence computation shows:
    sigma3^{ij} h_ij = 3 sigma3 enters through u h_ij); without it the
    identity already fails on slices.
    """
    grid = fields.grid
    n = space.n
    w = fields.area_element

    def surf(f):
        return grid.integrate(f * w)

    res1 = n * surf(fields.phi1) - surf(fields.u * fields.H)
    qhat = (fields.phi1**2 - fields.phi * fields.phi2 - 1.0) / fields.phi**2
    res2 = None
    res3 = None
    if n >= 2:
        dric = (n - 1) * qhat * (1.0 - fields.u**2 / fields.phi**2)
        res2 = ((n - 1) * surf(fields.phi1 * fields.H)
                - 2.0 * surf(fields.sigma2 * fields.u)
                - surf(fields.u * dric))
    if n >= 3:
        v = fields.phi[:, None] * fields.grad  # frame components of r_i
        ginv_v = np.einsum("iab,ib->ia", fields.g_inv, v)
        vgv = np.einsum("ia,ia->i", v, ginv_v)
        vghgv = np.einsum("ia,iab,ib->i", ginv_v, fields.h, ginv_v)
        q2 = fields.H * vgv - vghgv
        res3 = ((n - 2) * surf(fields.phi1 * fields.sigma2)
                - 3.0 * surf(fields.u * fields.sigma3)
                - (n - 2) * surf(fields.u * qhat * q2))
    return MinkowskiResiduals(res1, res2, res3, n >= 2, n >= 3)
