"""Rotationally symmetric ambient spaces dr^2 + phi(r)^2 sigma.

A :class:`WarpedSpace` bundles the warping function phi (with three radial
derivatives), the working interval [r_min, r_max], the change of variable
gamma (d gamma / d r = 1/phi), the ambient curvature tensors, and staticity
diagnostics.  All tables are built eagerly at construction; instances are
immutable afterwards and safe to share between threads.

Families:

* ``euclidean``             phi = r
* ``sphere(c)``             phi = sin(sqrt(c) r)/sqrt(c)
* ``hyperbolic(c)``         phi = sinh(sqrt(c) r)/sqrt(c)
* ``schwarzschild(m)``      phi = lambda(r) with lambda' = sqrt(1 - 2m lambda^(1-n))
* ``ads_schwarzschild(m,k)``  lambda' = sqrt(1 + k^2 lambda^2 - 2m lambda^(1-n))
* ``custom``                tabulated (r, phi, phi', phi'', phi''')

For the two black-hole families the radial coordinate is reconstructed from
the tabulated inverse map r(lambda); derivatives are always taken from the
closed forms in lambda, never by numerical differentiation.  The map is
tabulated in the variable tau = sqrt(lambda - s0), which removes the
inverse-square-root degeneracy of dr/dlambda at the neck lambda = s0.
"""

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ._numutil import StackedPPoly, gauss_tail, panel_cumulative_gauss
from .errors import ConfigError, DomainError, RangeError, StateError

_DOMAIN_SLACK = 1e-9
_STATIC_TOL = 1e-8
_LAMBDA_TABLE_SIZE = 8193
_GAMMA_TABLE_SIZE = 16385


class StaticityReport:
    """Result of sampling the staticity ODE over the working interval."""

    def __init__(self, is_substatic, is_static, c0, max_residual, c0_deviation):
        self.is_substatic = bool(is_substatic)
        self.is_static = bool(is_static)
        self.c0 = float(c0)
        self.max_residual = float(max_residual)
        self.c0_deviation = float(c0_deviation)

    def __repr__(self):
        return (
            f"StaticityReport(is_substatic={self.is_substatic}, "
            f"is_static={self.is_static}, c0={self.c0:.12g}, "
            f"max_residual={self.max_residual:.3e}, "
            f"c0_deviation={self.c0_deviation:.3e})"
        )


class _ClosedFormPhi:
    """phi given by elementary closed forms (euclidean / sphere / hyperbolic)."""

    def __init__(self, kind, c=1.0):
        self.kind = kind
        self.c = float(c)
        if kind in ("sphere", "hyperbolic") and self.c <= 0:
            raise ConfigError(f"curvature parameter c must be positive, got {c}")

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "euclidean":
            one = np.ones_like(r)
            zero = np.zeros_like(r)
            return r.copy(), one, zero, zero
        q = np.sqrt(self.c)
        if self.kind == "sphere":
            phi = np.sin(q * r) / q
            p1 = np.cos(q * r)
            return phi, p1, -self.c * phi, -self.c * p1
        phi = np.sinh(q * r) / q
        p1 = np.cosh(q * r)
        return phi, p1, self.c * phi, self.c * p1


class _BlackHolePhi:
    """phi = lambda(r) for the Schwarzschild-type families.

    ``kappa = 0`` gives the Schwarzschild family, ``kappa > 0`` its
    anti-de-Sitter variant.  The metric function is
    f(s) = 1 + kappa^2 s^2 - 2 m s^(1-n), with lambda' = sqrt(f(lambda)),
    lambda'' = kappa^2 lambda + (n-1) m lambda^(-n).
    """

    def __init__(self, n, m, kappa, r_cover):
        if m <= 0:
            raise ConfigError(f"mass parameter m must be positive, got {m}")
        if n < 2:
            raise ConfigError("black-hole families require sphere dimension n >= 2")
        self.n = int(n)
        self.m = float(m)
        self.kappa = float(kappa)
        self.s0 = self._solve_neck_radius()
        self._build_table(r_cover)

    def _solve_neck_radius(self):
        n, m, kap = self.n, self.m, self.kappa
        if kap == 0.0:
            return (2.0 * m) ** (1.0 / (n - 1))
        s_plain = (2.0 * m) ** (1.0 / (n - 1))

        def f(s):
            return 1.0 + kap**2 * s**2 - 2.0 * m * s ** (1 - n)

        hi = s_plain
        while f(hi) < 0:
            hi *= 2.0
        return brentq(f, s_plain * 1e-8, hi, xtol=1e-15, rtol=1e-15)

    def _f_shifted(self, sig2):
        """f(s0 + sig2), written without cancellation near the neck."""
        n, m, kap, s0 = self.n, self.m, self.kappa, self.s0
        # 2 m s^(1-n) = 2 m s0^(1-n) (1 + sig2/s0)^(1-n); at s0 the constant
        # part equals 1 + kap^2 s0^2 exactly, so group terms accordingly.
        c0 = 2.0 * m * s0 ** (1 - n)
        pow_term = -np.expm1((1 - n) * np.log1p(sig2 / s0))
        return kap**2 * sig2 * (2.0 * s0 + sig2) + c0 * pow_term

    def _build_table(self, r_cover):
        s0 = self.s0
        # extend the lambda range until the tabulated r covers the request
        lam_hi = s0 + max(1.0, s0)
        while True:
            tau_hi = np.sqrt(lam_hi - s0)
            tau = np.linspace(0.0, tau_hi, _LAMBDA_TABLE_SIZE)

            def integrand(sig):
                return 2.0 * sig / np.sqrt(self._f_shifted(sig * sig))

            r_nodes = panel_cumulative_gauss(integrand, tau)
            if r_nodes[-1] >= r_cover * 1.02 + 0.25:
                break
            lam_hi = s0 + 4.0 * (lam_hi - s0)
        self.tau_nodes = tau
        self.r_nodes = r_nodes
        self.r_cover = float(r_nodes[-1])
        self._tau_of_r = CubicSpline(r_nodes, tau)

    def lam(self, r):
        tau = np.maximum(self._tau_of_r(r), 0.0)
        return self.s0 + tau * tau

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        lam = self.lam(r)
        sig2 = np.maximum(lam - self.s0, 0.0)
        p1 = np.sqrt(self._f_shifted(sig2))
        n, m, kap = self.n, self.m, self.kappa
        p2 = kap**2 * lam + (n - 1) * m * lam ** (-n)
        p3 = (kap**2 - n * (n - 1) * m * lam ** (-n - 1)) * p1
        return lam, p1, p2, p3


class _TabulatedPhi:
    """phi interpolated from user-supplied (r, phi, phi', phi'', phi''') records."""

    def __init__(self, r, phi, p1, p2, p3):
        r = np.asarray(r, dtype=float)
        if r.ndim != 1 or len(r) < 4:
            raise ConfigError("custom phi table needs at least 4 rows")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("custom phi table must have strictly increasing r")
        cols = [np.asarray(c, dtype=float) for c in (phi, p1, p2, p3)]
        for c in cols:
            if c.shape != r.shape:
                raise ConfigError("custom phi table columns must share the length of r")
        self.r_lo = float(r[0])
        self.r_hi = float(r[-1])
        self._splines = [CubicSpline(r, c) for c in cols]

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_lo - _DOMAIN_SLACK) or np.any(r > self.r_hi + _DOMAIN_SLACK):
            raise DomainError("radius outside the tabulated custom phi range")
        return tuple(s(r) for s in self._splines)


class WarpedSpace:
    """Ambient warped product [r_min, r_max] x S^n with metric dr^2 + phi^2 sigma.

    Use the classmethod factories (:meth:`euclidean`, :meth:`hyperbolic`,
    :meth:`sphere`, :meth:`schwarzschild`, :meth:`ads_schwarzschild`,
    :meth:`custom`) rather than the bare constructor.

    The left endpoint ``r_min`` plays the role of the inner boundary: domain
    volumes integrate from it.  It may sit at a degenerate pole of the polar
    coordinate (phi(r_min) = 0 for the space forms with r_min = 0), in which
    case positivity of phi and phi' is enforced on the open interval and the
    gamma anchor ``r_ref`` must be supplied explicitly.
    """

    def __init__(self, family, n, model, r_min, r_max, r_ref=None, params=None):
        if r_max <= r_min:
            raise ConfigError(f"need r_min < r_max, got [{r_min}, {r_max}]")
        if n < 1 or int(n) != n:
            raise ConfigError(f"sphere dimension must be a positive integer, got {n}")
        self.family = family
        self.n = int(n)
        self.params = dict(params or {})
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self._model = model

        self._check_positivity()
        self._setup_gamma(r_ref)
        self._report = self._compute_staticity()
        self.c0 = self._report.c0 if self._report.is_static else 0.0
        self._flags = self._compute_admissibility()

    # -- factories ---------------------------------------------------------

    @classmethod
    def euclidean(cls, n, r_max, r_min=0.0, r_ref=None):
        return cls("euclidean", n, _ClosedFormPhi("euclidean"), r_min, r_max, r_ref)

    @classmethod
    def sphere(cls, n, r_max, c=1.0, r_min=0.0, r_ref=None):
        return cls("sphere", n, _ClosedFormPhi("sphere", c), r_min, r_max, r_ref,
                   params={"c": c})

    @classmethod
    def hyperbolic(cls, n, r_max, c=1.0, r_min=0.0, r_ref=None):
        return cls("hyperbolic", n, _ClosedFormPhi("hyperbolic", c), r_min, r_max, r_ref,
                   params={"c": c})

    @classmethod
    def schwarzschild(cls, n, r_max, m=1.0, r_min=0.0, r_ref=None):
        model = _BlackHolePhi(n, m, 0.0, r_max)
        return cls("schwarzschild", n, model, r_min, r_max, r_ref, params={"m": m})

    @classmethod
    def ads_schwarzschild(cls, n, r_max, m=1.0, kappa=1.0, r_min=0.0, r_ref=None):
        if kappa <= 0:
            raise ConfigError(f"kappa must be positive, got {kappa}")
        model = _BlackHolePhi(n, m, kappa, r_max)
        return cls("ads_schwarzschild", n, model, r_min, r_max, r_ref,
                   params={"m": m, "kappa": kappa})

    @classmethod
    def custom(cls, n, r, phi, phi1, phi2, phi3, r_min=None, r_max=None, r_ref=None):
        model = _TabulatedPhi(r, phi, phi1, phi2, phi3)
        r_min = model.r_lo if r_min is None else r_min
        r_max = model.r_hi if r_max is None else r_max
        if r_min < model.r_lo - _DOMAIN_SLACK or r_max > model.r_hi + _DOMAIN_SLACK:
            raise ConfigError("working interval exceeds the custom phi table")
        return cls("custom", n, model, r_min, r_max, r_ref)

    # -- construction helpers ------------------------------------------------

    def _sample_radii(self, count=2001, open_left=True):
        rs = np.linspace(self.r_min, self.r_max, count + 1)
        return rs[1:] if open_left else rs

    def _check_positivity(self):
        rs = self._sample_radii()
        phi, p1, _, _ = self._model.eval(rs)
        if np.any(phi <= 0.0):
            raise ConfigError(
                f"{self.family}: phi is not positive on ({self.r_min}, {self.r_max}]")
        if np.any(p1 <= 0.0):
            raise ConfigError(
                f"{self.family}: phi' is not positive on ({self.r_min}, {self.r_max}]"
                " (shrink r_max or raise r_min)")

    def _setup_gamma(self, r_ref):
        phi_at_min = float(self._model.eval(np.asarray(self.r_min))[0])
        if phi_at_min > 1e-12:
            g_lo = self.r_min
            if r_ref is None:
                r_ref = self.r_min
        else:
            g_lo = self.r_min + (self.r_max - self.r_min) / 4096.0
            if r_ref is None:
                raise ConfigError(
                    "phi vanishes at r_min; supply an explicit gamma anchor r_ref")
        if not (g_lo <= r_ref <= self.r_max):
            raise ConfigError(f"r_ref={r_ref} outside the usable gamma range")
        self.r_ref = float(r_ref)
        self._gamma_lo = float(g_lo)

        nodes = np.linspace(g_lo, self.r_max, _GAMMA_TABLE_SIZE)

        def inv_phi(r):
            return 1.0 / self._model.eval(r)[0]

        gam = panel_cumulative_gauss(inv_phi, nodes)
        idx = int(np.searchsorted(nodes, self.r_ref))
        if idx < len(nodes) and abs(nodes[idx] - self.r_ref) < 1e-13:
            anchor = gam[idx]
        else:
            lower = max(idx - 1, 0)
            anchor = gam[lower] + float(gauss_tail(inv_phi, nodes[lower], self.r_ref))
        gam = gam - anchor
        self._gamma_nodes = nodes
        self._gamma_vals = gam
        self._gamma_spline = CubicSpline(nodes, gam)
        self._r_of_gamma_spline = CubicSpline(gam, nodes)
        phi, p1, p2, p3 = self._model.eval(nodes)
        self._phi_pair_g = StackedPPoly([CubicSpline(gam, phi), CubicSpline(gam, p1)])
        self.gamma_min = float(gam[0])
        self.gamma_max = float(gam[-1])

    def _compute_staticity(self):
        rs = self._sample_radii()
        phi, p1, p2, p3 = self._model.eval(rs)
        res = phi**2 * p3 + (self.n - 2) * phi * p1 * p2 - (self.n - 1) * p1 * (p1**2 - 1.0)
        scale = max(1.0, float(np.max(phi)) ** 3)
        tol = _STATIC_TOL * scale
        is_static = bool(np.max(np.abs(res)) < tol)
        is_substatic = bool(np.min(res) > -tol)
        c0_samples = -(phi ** (self.n - 1)) * (p1**2 - phi * p2 - 1.0)
        c0 = float(np.mean(c0_samples))
        c0_dev = float(np.max(np.abs(c0_samples - c0)))
        return StaticityReport(is_substatic, is_static, c0,
                               float(np.max(np.abs(res))), c0_dev)

    def _compute_admissibility(self):
        rs = self._sample_radii()
        phi, p1, p2, _ = self._model.eval(rs)
        q = p1**2 - phi * p2
        tol = 1e-10 * max(1.0, float(np.max(np.abs(q))))
        return {
            "phi_pp_positive": bool(np.all(p2 > 0.0)),
            "convexity_lower": bool(np.min(q) > -tol),
            "convexity_upper": bool(np.max(q) < 1.0 + tol),
        }

    # -- basic queries -------------------------------------------------------

    @property
    def is_static(self):
        return self._report.is_static

    @property
    def is_substatic(self):
        return self._report.is_substatic

    @property
    def is_admissible(self):
        """Whether phi'' > 0 and 0 <= (phi')^2 - phi phi'' <= 1 hold on the interval."""
        f = self._flags
        return f["phi_pp_positive"] and f["convexity_lower"] and f["convexity_upper"]

    @property
    def convexity_lower_ok(self):
        """(phi')^2 - phi phi'' >= 0 on the working interval."""
        return self._flags["convexity_lower"]

    def staticity_report(self):
        return self._report

    def _check_radius(self, r, what="radius"):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min - _DOMAIN_SLACK) or np.any(r > self.r_max + _DOMAIN_SLACK):
            bad = r[(r < self.r_min - _DOMAIN_SLACK) | (r > self.r_max + _DOMAIN_SLACK)]
            raise DomainError(
                f"{what} {float(np.ravel(bad)[0]):.6g} outside "
                f"[{self.r_min:.6g}, {self.r_max:.6g}]")
        return r

    def phi(self, r):
        """Warping function and its first three radial derivatives at r."""
        r = self._check_radius(r)
        return self._model.eval(r)

    # -- gamma <-> r ----------------------------------------------------------

    def gamma_of_r(self, r):
        """The reparametrized radius gamma(r) = integral of 1/phi from r_ref."""
        r = np.asarray(r, dtype=float)
        if np.any(r < self._gamma_lo - _DOMAIN_SLACK) or np.any(r > self.r_max + _DOMAIN_SLACK):
            raise DomainError("radius outside the tabulated gamma range")
        return self._gamma_spline(r)

    def r_of_gamma(self, gamma):
        """Inverse of :meth:`gamma_of_r` (monotone table plus Newton polish)."""
        gamma = np.asarray(gamma, dtype=float)
        slack = _DOMAIN_SLACK * max(1.0, abs(self.gamma_min), abs(self.gamma_max))
        if np.any(gamma < self.gamma_min - slack) or np.any(gamma > self.gamma_max + slack):
            raise DomainError("gamma outside the tabulated range")
        r = np.clip(self._r_of_gamma_spline(gamma), self._gamma_lo, self.r_max)
        for _ in range(2):
            phi = self._model.eval(r)[0]
            r = np.clip(r - (self._gamma_spline(r) - gamma) * phi,
                        self._gamma_lo, self.r_max)
        return r

    def phi_pair_of_gamma(self, gamma):
        """(phi, phi') as direct spline functions of gamma (flow hot path)."""
        out = self._phi_pair_g(gamma)
        return out[0], out[1]

    # -- curvature -------------------------------------------------------------

    def _curv_coeffs(self, r):
        phi, p1, p2, _ = self.phi(r)
        c1 = (p1**2 - phi * p2 - 1.0) / phi**2
        c2 = (p1**2 - 1.0) / phi**2
        return c1, c2

    def riemann(self, r, X, Y, Z, W):
        """Ambient curvature R(X, Y, Z, W) at radius r.

        Vectors are given in components with respect to the orthonormal frame
        (d_r, e_1, ..., e_n), i.e. arrays of length n+1 whose first entry is
        the radial component.
        """
        X, Y, Z, W = (np.asarray(v, dtype=float) for v in (X, Y, Z, W))
        for v in (X, Y, Z, W):
            if v.shape != (self.n + 1,):
                raise DomainError(f"tangent vectors must have length n+1 = {self.n + 1}")
        c1, c2 = self._curv_coeffs(r)
        ax, ay, az, aw = X[0], Y[0], Z[0], W[0]
        gxz = float(X @ Z)
        gyw = float(Y @ W)
        gxw = float(X @ W)
        gyz = float(Y @ Z)
        term1 = ax * az * gyw + ay * aw * gxz - ax * aw * gyz - ay * az * gxw
        term2 = gxz * gyw - gxw * gyz
        return float(c1 * term1 - c2 * term2)

    def ricci_scalar(self, r):
        """(radial Ricci eigenvalue, tangential Ricci eigenvalue, scalar curvature)."""
        phi, p1, p2, _ = self.phi(r)
        rad = -self.n * p2 / phi
        tan = -((self.n - 1) * (p1**2 - 1.0) + phi * p2) / phi**2
        scal = -self.n * (2.0 * p2 / phi + (self.n - 1) * (p1**2 - 1.0) / phi**2)
        return rad, tan, scal

    # -- family-specific -------------------------------------------------------

    def schwarzschild_r0(self):
        """Radius where (phi')^2 - phi phi'' vanishes for black-hole families.

        Solves phi(r0) = (m (n+1))^(1/(n-1)) through the tabulated r(lambda)
        map; left of r0 the space fails the convexity lower bound.
        """
        if not isinstance(self._model, _BlackHolePhi):
            raise StateError("r0 is defined only for the black-hole families")
        model = self._model
        lam_target = (model.m * (self.n + 1)) ** (1.0 / (self.n - 1))
        lam_hi = model.s0 + model.tau_nodes[-1] ** 2
        if lam_target < model.s0 or lam_target > lam_hi:
            raise RangeError(
                f"target lambda {lam_target:.6g} outside the tabulated range "
                f"[{model.s0:.6g}, {lam_hi:.6g}]")
        tau_target = np.sqrt(lam_target - model.s0)
        return float(CubicSpline(model.tau_nodes, model.r_nodes)(tau_target))


def load_custom_table(path, n, r_min=None, r_max=None, r_ref=None):
    """Build a custom space from a whitespace-separated (r, phi, phi', phi'', phi''') file."""
    data = np.loadtxt(path, dtype=float)
    if data.ndim != 2 or data.shape[1] != 5:
        raise ConfigError("custom phi file must have five columns: r phi phi' phi'' phi'''")
    return WarpedSpace.custom(n, data[:, 0], data[:, 1], data[:, 2], data[:, 3],
                              data[:, 4], r_min=r_min, r_max=r_max, r_ref=r_ref)
