"""Discretizations of the round sphere S^n with covariant operators.

Three modes:

* ``circle``   n = 1, periodic uniform grid on [0, 2 pi); 4th-order stencils.
* ``axisym``   any n >= 1, uniform grid in the polar angle on [0, pi] with
  the endpoints included; fields depend on the polar angle only.  4th-order
  stencils with even-reflection ghost nodes at both poles.
* ``latlong``  n = 2, tensor grid in (polar, azimuth).  The latitude rows sit
  at cell midpoints (offset grid), so no node coincides with a pole; values
  across a pole are obtained from the antipodal meridian.  2nd-order stencils.

Tensor fields are represented by their components in the sigma-orthonormal
frame.  On circle and axisym grids every tensor arising from axisymmetric
data is diagonal in that frame with one polar entry and one fiber entry of
multiplicity n - 1, so block fields have shape (nodes, m, m) with m = 1 or 2
and a per-grid multiplicity vector; on latlong grids blocks are full 2 x 2.

Quadrature weights fold the sin^(n-1) area factor into Clenshaw-Curtis type
product rules built from the exact cosine moments of the weight function, so
smooth integrands are integrated with spectral accuracy and polynomials in
cos(theta) up to the rule size exactly.
"""

import numpy as np
import scipy.fft
import scipy.sparse as sp
from scipy.special import gammaln, gammasgn

from ._numutil import unit_sphere_area
from .errors import ConfigError, FieldShapeError

# integer-valued stencils; the 1/(12 h) and 1/(12 h^2) scales are applied
# after the matvec so that constant fields are annihilated exactly
_D1_INT = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
_D2_INT = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])


def _cos_sin_moments(kmax, p):
    """Moments mu_k = integral_0^pi cos(k t) sin(t)^p dt for k = 0..kmax.

    Closed form via the Gamma function:
    mu_k = pi cos(k pi / 2) Gamma(p+1) / (2^p Gamma(1+(p+k)/2) Gamma(1+(p-k)/2)),
    evaluated in log space so large k does not overflow.
    """
    k = np.arange(kmax + 1)
    mu = np.zeros(kmax + 1)
    cosf = np.cos(k * np.pi / 2.0)
    # odd k vanish exactly; (p-k)/2+1 at a non-positive integer vanishes too
    a = 1.0 + (p + k) / 2.0
    b = 1.0 + (p - k) / 2.0
    nonzero = np.abs(cosf) > 0.5
    pole = (b <= 0) & (np.abs(b - np.round(b)) < 1e-12)
    nonzero &= ~pole
    logmag = (np.log(np.pi) + gammaln(p + 1.0) - p * np.log(2.0)
              - gammaln(a) - gammaln(np.where(pole, 1.0, b)))
    sign = np.where(cosf > 0, 1.0, -1.0) * gammasgn(a) * gammasgn(np.where(pole, 1.0, b))
    mu[nonzero] = sign[nonzero] * np.exp(logmag[nonzero])
    return mu


def _weighted_cc_endpoint(npanels, p):
    """Product-rule weights on theta_i = pi i / N (i = 0..N) for weight sin^p."""
    N = npanels
    mu = _cos_sin_moments(N, p)
    x = scipy.fft.dct(mu, type=1)
    eps = np.ones(N + 1)
    eps[0] = eps[-1] = 0.5
    return (eps / N) * x


def _weighted_cc_midpoint(ncells, p):
    """Product-rule weights on theta_j = (j + 1/2) pi / N for weight sin^p.

    With cosine-series coefficients b_0 = (1/N) sum f_j and
    b_k = (2/N) sum f_j cos(k theta_j), the integral sum_k b_k mu_k collapses
    to w_j = (1/N) [mu_0 + 2 sum_{k>=1} mu_k cos(k theta_j)], which is the
    DCT-III of the moment vector divided by N.
    """
    N = ncells
    mu = _cos_sin_moments(N - 1, p)
    return scipy.fft.dct(mu, type=3) / N


def _diff_d1(d):
    """12 h f' from the first-difference array of the padded field.

    Abel summation of the stencil (1, -8, 0, 8, -1): annihilates constants
    exactly because only differences of neighbouring values enter.
    """
    return -d[:-3] + 7.0 * d[1:-2] + 7.0 * d[2:-1] - d[3:]


def _diff_d2(d):
    """12 h^2 f'' from the first-difference array of the padded field."""
    return d[:-3] - 15.0 * d[1:-2] + 15.0 * d[2:-1] - d[3:]


def _fd_matrices_reflect(npts):
    """Integer 4th-order first/second derivative stencils, even reflection at ends."""
    rows1, cols1, vals1 = [], [], []
    rows2, cols2, vals2 = [], [], []
    for i in range(npts):
        for off in range(-2, 3):
            j = i + off
            if j < 0:
                j = -j
            elif j > npts - 1:
                j = 2 * (npts - 1) - j
            rows1.append(i)
            cols1.append(j)
            vals1.append(_D1_INT[off + 2])
            rows2.append(i)
            cols2.append(j)
            vals2.append(_D2_INT[off + 2])
    d1 = sp.csr_matrix((vals1, (rows1, cols1)), shape=(npts, npts))
    d2 = sp.csr_matrix((vals2, (rows2, cols2)), shape=(npts, npts))
    return d1, d2


def _fd_matrices_periodic(npts):
    rows1, cols1, vals1 = [], [], []
    rows2, cols2, vals2 = [], [], []
    for i in range(npts):
        for off in range(-2, 3):
            j = (i + off) % npts
            rows1.append(i)
            cols1.append(j)
            vals1.append(_D1_INT[off + 2])
            rows2.append(i)
            cols2.append(j)
            vals2.append(_D2_INT[off + 2])
    d1 = sp.csr_matrix((vals1, (rows1, cols1)), shape=(npts, npts))
    d2 = sp.csr_matrix((vals2, (rows2, cols2)), shape=(npts, npts))
    return d1, d2


class SphereGrid:
    """Base class; use :func:`build_grid`."""

    mode = None

    def __init__(self, n, resolution):
        self.n = int(n)
        self.resolution = int(resolution)

    # subclasses fill: node_count, coords, quad_weights, frame_dim, frame_mult,
    # theta (polar angle per node), stencil_order

    def check_field(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != (self.node_count,):
            raise FieldShapeError(
                f"field shape {f.shape} does not match node count {self.node_count}")
        return f

    def integrate(self, f):
        """Quadrature for integral over S^n of f with respect to sigma."""
        f = self.check_field(f)
        return float(self.quad_weights @ f)

    def gradient(self, f):
        """Frame components of the covariant gradient, shape (nodes, frame_dim)."""
        raise NotImplementedError

    def gradient_sq(self, f):
        """(|Df|^2 node field, frame components of Df)."""
        comps = self.gradient(f)
        return np.einsum("ia,ia->i", comps, comps), comps

    def hessian(self, f):
        """Covariant Hessian blocks in the sigma-orthonormal frame, (nodes, m, m)."""
        raise NotImplementedError

    def laplacian(self, f):
        """Trace of the covariant Hessian."""
        hess = self.hessian(f)
        diag = np.einsum("iaa->ia", hess)
        return diag @ self.frame_mult

    def block_trace(self, blocks):
        """Trace of a block field, honoring fiber multiplicity."""
        diag = np.einsum("iaa->ia", np.asarray(blocks, dtype=float))
        return diag @ self.frame_mult

    def block_eye(self):
        """Identity block field (the round metric in its orthonormal frame)."""
        m = self.frame_dim
        out = np.zeros((self.node_count, m, m))
        idx = np.arange(m)
        out[:, idx, idx] = 1.0
        return out

    def block_norm_sq(self, T):
        """Squared tensor norm |T|^2 per node, honoring fiber multiplicity."""
        T = np.asarray(T, dtype=float)
        if self.mode == "latlong":
            return np.einsum("iab,iab->i", T, T)
        diag = np.einsum("iaa->ia", T)
        return (diag**2) @ self.frame_mult


class CircleGrid(SphereGrid):
    """Periodic uniform grid on S^1 (n = 1)."""

    mode = "circle"

    def __init__(self, resolution):
        super().__init__(1, resolution)
        N = resolution
        self.node_count = N
        self.h = 2.0 * np.pi / N
        self.theta = np.arange(N) * self.h
        self.coords = self.theta[:, None]
        self.quad_weights = np.full(N, self.h)
        self.frame_dim = 1
        self.frame_mult = np.array([1.0])
        self.stencil_order = 4
        self.min_spacing = self.h
        self._s1 = 1.0 / (12.0 * self.h)
        self._s2 = 1.0 / (12.0 * self.h**2)

    def _pad(self, f):
        return np.concatenate([f[-2:], f, f[:2]])

    def d1(self, f):
        return _diff_d1(np.diff(self._pad(f))) * self._s1

    def d2(self, f):
        return _diff_d2(np.diff(self._pad(f))) * self._s2

    def d12(self, f):
        d = np.diff(self._pad(f))
        return _diff_d1(d) * self._s1, _diff_d2(d) * self._s2

    def laplacian_matrix(self):
        m1, m2 = _fd_matrices_periodic(self.node_count)
        return (m2 * self._s2).tocsr()

    def gradient(self, f):
        f = self.check_field(f)
        return self.d1(f)[:, None]

    def hessian(self, f):
        f = self.check_field(f)
        return self.d2(f)[:, None, None]

    def fiber_rate(self, f, d1f=None):
        return np.zeros(self.node_count)


class AxisymGrid(SphereGrid):
    """Axisymmetric fields on S^n: 1-D grid in the polar angle, endpoints included.

    Smooth axisymmetric functions have vanishing odd derivatives at the
    poles, so ghost nodes are filled by even reflection; the cot(theta) f'
    terms are closed at the poles with their L'Hopital limit f''.
    """

    mode = "axisym"

    def __init__(self, n, resolution):
        super().__init__(n, resolution)
        N = resolution
        self.node_count = N + 1
        self.h = np.pi / N
        self.theta = np.linspace(0.0, np.pi, N + 1)
        self.coords = self.theta[:, None]
        self.quad_weights = unit_sphere_area(n - 1) * _weighted_cc_endpoint(N, n - 1)
        self.frame_dim = 2 if n >= 2 else 1
        self.frame_mult = np.array([1.0, float(n - 1)])[: self.frame_dim]
        self.stencil_order = 4
        self.min_spacing = self.h
        self._s1 = 1.0 / (12.0 * self.h)
        self._s2 = 1.0 / (12.0 * self.h**2)
        with np.errstate(divide="ignore"):
            self._cot = np.where(
                (self.theta > 1e-14) & (np.pi - self.theta > 1e-14),
                np.cos(self.theta) / np.sin(self.theta), 0.0)
        self._pole_mask = np.zeros(N + 1, dtype=bool)
        self._pole_mask[0] = self._pole_mask[-1] = True

    def _pad(self, f):
        return np.concatenate([f[2:0:-1], f, f[-2:-4:-1]])

    def _pad_odd(self, f):
        return np.concatenate([-f[2:0:-1], f, -f[-2:-4:-1]])

    def d1(self, f):
        return _diff_d1(np.diff(self._pad(f))) * self._s1

    def d1_odd(self, f):
        """First derivative of a field that is odd across the poles
        (polar covector components such as df/dtheta of a scalar)."""
        return _diff_d1(np.diff(self._pad_odd(f))) * self._s1

    def d2(self, f):
        return _diff_d2(np.diff(self._pad(f))) * self._s2

    def d12(self, f):
        d = np.diff(self._pad(f))
        return _diff_d1(d) * self._s1, _diff_d2(d) * self._s2

    def laplacian_matrix(self):
        """Sparse matrix of the round Laplacian acting on axisymmetric fields."""
        m1, m2 = _fd_matrices_reflect(self.node_count)
        d1 = (m1 * self._s1).tocsr()
        d2 = (m2 * self._s2).tocsr()
        L = (d2 + (self.n - 1) * sp.diags(self._cot) @ d1).tolil()
        for i in np.flatnonzero(self._pole_mask):
            L[i, :] = self.n * d2[i, :].toarray().ravel()
        return L.tocsr()

    def fiber_rate(self, f, d1f=None, d2f=None):
        """cot(theta) f', with the L'Hopital closure f'' at the poles."""
        if d1f is None:
            d1f = self.d1(f)
        out = self._cot * d1f
        if d2f is None:
            d2f = self.d2(f)
        out[self._pole_mask] = d2f[self._pole_mask]
        return out

    def gradient(self, f):
        f = self.check_field(f)
        g = np.zeros((self.node_count, self.frame_dim))
        g[:, 0] = self.d1(f)
        return g

    def hessian(self, f):
        f = self.check_field(f)
        d1f, d2f = self.d12(f)
        m = self.frame_dim
        out = np.zeros((self.node_count, m, m))
        out[:, 0, 0] = d2f
        if m == 2:
            out[:, 1, 1] = self.fiber_rate(f, d1f, d2f)
        return out


class LatLongGrid(SphereGrid):
    """Tensor grid on S^2 (polar midpoint rows x periodic azimuth columns)."""

    mode = "latlong"

    def __init__(self, resolution):
        super().__init__(2, resolution)
        Nt = resolution
        Np = 2 * resolution
        if Np % 2:
            raise ConfigError("latlong azimuth count must be even")
        self.n_theta = Nt
        self.n_psi = Np
        self.node_count = Nt * Np
        self.h_theta = np.pi / Nt
        self.h_psi = 2.0 * np.pi / Np
        self.theta_1d = (np.arange(Nt) + 0.5) * self.h_theta
        self.psi_1d = np.arange(Np) * self.h_psi
        tt, pp = np.meshgrid(self.theta_1d, self.psi_1d, indexing="ij")
        self.theta = tt.ravel()
        self.psi = pp.ravel()
        self.coords = np.column_stack([self.theta, self.psi])
        w_theta = _weighted_cc_midpoint(Nt, 1)
        self.quad_weights = np.repeat(w_theta * self.h_psi, Np)
        self.frame_dim = 2
        self.frame_mult = np.array([1.0, 1.0])
        self.stencil_order = 2
        self._sin = np.sin(self.theta_1d)[:, None]
        self._cot = (np.cos(self.theta_1d) / np.sin(self.theta_1d))[:, None]
        self.min_spacing = min(self.h_theta, self.h_psi * float(np.min(self._sin)))

    def _as_2d(self, f):
        return self.check_field(f).reshape(self.n_theta, self.n_psi)

    def _pad_theta(self, F, parity=1.0):
        """Ghost rows beyond each pole: f(-t, psi) = parity * f(t, psi + pi).

        parity is +1 for scalars and even tensor components, -1 for
        components carrying one polar covector index.
        """
        shift = self.n_psi // 2
        top = parity * np.roll(F[0], shift)[None, :]
        bot = parity * np.roll(F[-1], shift)[None, :]
        return np.concatenate([top, F, bot], axis=0)

    def d_theta(self, F, parity=1.0):
        P = self._pad_theta(F, parity)
        return (P[2:] - P[:-2]) / (2.0 * self.h_theta)

    def d2_theta(self, F, parity=1.0):
        P = self._pad_theta(F, parity)
        return (P[2:] - 2.0 * P[1:-1] + P[:-2]) / self.h_theta**2

    def d_psi(self, F):
        return (np.roll(F, -1, axis=1) - np.roll(F, 1, axis=1)) / (2.0 * self.h_psi)

    def d2_psi(self, F):
        return (np.roll(F, -1, axis=1) - 2.0 * F + np.roll(F, 1, axis=1)) / self.h_psi**2

    def gradient(self, f):
        F = self._as_2d(f)
        g = np.empty((self.n_theta, self.n_psi, 2))
        g[:, :, 0] = self.d_theta(F)
        g[:, :, 1] = self.d_psi(F) / self._sin
        return g.reshape(self.node_count, 2)

    def hessian(self, f):
        F = self._as_2d(f)
        ft = self.d_theta(F)
        fp = self.d_psi(F)
        ftt = self.d2_theta(F)
        fpp = self.d2_psi(F)
        ftp = self.d_psi(ft)
        out = np.empty((self.n_theta, self.n_psi, 2, 2))
        out[:, :, 0, 0] = ftt
        cross = (ftp - self._cot * fp) / self._sin
        out[:, :, 0, 1] = cross
        out[:, :, 1, 0] = cross
        out[:, :, 1, 1] = fpp / self._sin**2 + self._cot * ft
        return out.reshape(self.node_count, 2, 2)

    def laplacian(self, f):
        F = self._as_2d(f)
        lap = (self.d2_theta(F) + self._cot * self.d_theta(F)
               + self.d2_psi(F) / self._sin**2)
        return lap.ravel()

    def rotate_psi(self, f, k):
        """Rotate a node field by k azimuth steps (a grid symmetry)."""
        return np.roll(self._as_2d(f), k, axis=1).ravel()

    def laplacian_matrix(self):
        """Sparse round Laplacian with the cross-pole ghost coupling built in."""
        Nt, Np = self.n_theta, self.n_psi
        ht2 = self.h_theta**2
        hp2 = self.h_psi**2
        sin = self._sin.ravel()
        cot = self._cot.ravel()
        L = sp.lil_matrix((self.node_count, self.node_count))

        def node(j, k):
            if j == -1:
                return node(0, k + Np // 2)
            if j == Nt:
                return node(Nt - 1, k + Np // 2)
            return j * Np + (k % Np)

        for j in range(Nt):
            ct = cot[j]
            isin2 = 1.0 / sin[j] ** 2
            for k in range(Np):
                i = node(j, k)
                L[i, node(j + 1, k)] += 1.0 / ht2 + ct / (2.0 * self.h_theta)
                L[i, node(j - 1, k)] += 1.0 / ht2 - ct / (2.0 * self.h_theta)
                L[i, i] += -2.0 / ht2 - 2.0 * isin2 / hp2
                L[i, node(j, k + 1)] += isin2 / hp2
                L[i, node(j, k - 1)] += isin2 / hp2
        return L.tocsr()


def build_grid(mode, n, resolution):
    """Construct a sphere grid.

    ``resolution`` is the number of cells along the principal direction
    (nodes on an axisym grid number resolution + 1; a latlong grid has
    resolution x 2 resolution nodes).
    """
    if resolution < 8:
        raise ConfigError(f"resolution must be at least 8, got {resolution}")
    if mode == "circle":
        if n != 1:
            raise ConfigError("circle mode requires n = 1")
        return CircleGrid(resolution)
    if mode == "axisym":
        if n < 1:
            raise ConfigError("axisym mode requires n >= 1")
        return AxisymGrid(n, resolution)
    if mode == "latlong":
        if n != 2:
            raise ConfigError("latlong mode requires n = 2")
        return LatLongGrid(resolution)
    raise ConfigError(f"unknown grid mode {mode!r}")
