"""Hypersurface geometry of radial graphs r = r(theta) over the sphere.

The graph is carried as the reparametrized field gamma (d gamma/d r = 1/phi).
With omega = sqrt(1 + |D gamma|^2) the induced metric, unit normal, support
function and second fundamental form of the graph are

    g_ij  = phi^2 (sigma_ij + gamma_i gamma_j)
    u     = phi / omega
    h_ij  = (phi/omega) (phi' sigma_ij + phi' gamma_i gamma_j - gamma_ij)

with all tensors handled in the sigma-orthonormal frame blocks provided by
the grid.  Principal curvatures come from the symmetrized eigenvalue problem
g^(-1/2) h g^(-1/2), which is real by construction; the static-convexity
margin is the smallest eigenvalue of h - (u phi''/(phi phi')) g relative to g,
i.e. min_i kappa_i - u phi''/(phi phi').
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainEscapeError
from ._numutil import elementary_symmetric

_ESCAPE_SLACK = 1e-12


@dataclass(frozen=True)
class GraphState:
    """An evolving graph: the gamma field on a grid at time t."""

    grid: object
    gamma: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", self.grid.check_field(self.gamma))


@dataclass
class GeometryFields:
    """All per-node geometry of one graph snapshot."""

    grid: object
    r: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    grad: np.ndarray          # (nodes, m) frame components of D gamma
    grad_sq: np.ndarray
    hess: np.ndarray          # (nodes, m, m) covariant Hessian of gamma
    omega: np.ndarray
    u: np.ndarray
    g: np.ndarray             # induced metric blocks
    g_inv: np.ndarray
    h: np.ndarray             # second fundamental form blocks
    weingarten: np.ndarray
    kappa: np.ndarray         # (nodes, n) sorted principal curvatures
    H: np.ndarray
    sigma2: np.ndarray
    sigma3: np.ndarray
    s_min: np.ndarray
    area_element: np.ndarray  # d mu relative to d sigma: phi^n omega

    @property
    def node_count(self):
        return self.grid.node_count


def _outer(grad):
    return np.einsum("ia,ib->iab", grad, grad)


def _eye_like(grid):
    return grid.block_eye()


def _sym_eig_2x2(blocks):
    a = blocks[:, 0, 0]
    c = blocks[:, 1, 1]
    b = blocks[:, 0, 1]
    mean = 0.5 * (a + c)
    rad = np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    return np.stack([mean - rad, mean + rad], axis=1)


def _inv_sqrt_spd_2x2(g):
    """Inverse square root of symmetric positive-definite 2x2 blocks."""
    a = g[:, 0, 0]
    c = g[:, 1, 1]
    b = g[:, 0, 1]
    s = np.sqrt(np.maximum(a * c - b * b, 0.0))
    t = np.sqrt(a + c + 2.0 * s)
    out = np.empty_like(g)
    out[:, 0, 0] = c + s
    out[:, 1, 1] = a + s
    out[:, 0, 1] = -b
    out[:, 1, 0] = -b
    out /= (t * s)[:, None, None]
    return out


def principal_curvatures(grid, g, h):
    """Eigenvalues of the shape operator from the symmetrized problem.

    Returns (nodes, frame_dim) representative values aligned with the frame
    directions on diagonal-frame grids, or the eigenvalue pair on latlong.
    """
    if grid.frame_dim == 1:
        return (h[:, 0, 0] / g[:, 0, 0])[:, None]
    if grid.mode == "latlong":
        gis = _inv_sqrt_spd_2x2(g)
        b = np.einsum("iab,ibc,icd->iad", gis, h, gis)
        return _sym_eig_2x2(b)
    # diagonal blocks: the symmetrized matrix is diagonal already
    return np.stack([h[:, 0, 0] / g[:, 0, 0], h[:, 1, 1] / g[:, 1, 1]], axis=1)


def _expand_multiplicity(grid, rep):
    """(nodes, frame_dim) representative values -> (nodes, n) full list."""
    cols = []
    for a, mult in enumerate(grid.frame_mult.astype(int)):
        cols.extend([rep[:, a]] * mult)
    return np.stack(cols, axis=1)


def compute_fields(space, state):
    """All hypersurface geometry of a graph state.

    Raises :class:`DomainEscapeError` (carrying the offending node) if the
    graph leaves the working radial interval.
    """
    grid = state.grid
    gamma = state.gamma
    _check_in_domain(space, state)
    r = space.r_of_gamma(gamma)
    phi, p1, p2, p3 = space.phi(r)

    grad_sq, grad = grid.gradient_sq(gamma)
    hess = grid.hessian(gamma)
    omega = np.sqrt(1.0 + grad_sq)
    u = phi / omega

    eye = _eye_like(grid)
    outer = _outer(grad)
    sig_plus = eye + outer
    g = (phi**2)[:, None, None] * sig_plus
    g_inv = (1.0 / phi**2)[:, None, None] * (eye - outer / (omega**2)[:, None, None])
    h = (phi / omega)[:, None, None] * (p1[:, None, None] * sig_plus - hess)
    wein = np.einsum("iab,ibc->iac", g_inv, h)

    rep = principal_curvatures(grid, g, h)
    kappa = np.sort(_expand_multiplicity(grid, rep), axis=1)
    H = kappa.sum(axis=1)
    sigma2 = elementary_symmetric(kappa, 2)
    sigma3 = elementary_symmetric(kappa, 3)
    s_min = kappa[:, 0] - u * p2 / (phi * p1)
    area_element = phi**space.n * omega

    return GeometryFields(
        grid=grid, r=r, phi=phi, phi1=p1, phi2=p2, phi3=p3,
        grad=grad, grad_sq=grad_sq, hess=hess, omega=omega, u=u,
        g=g, g_inv=g_inv, h=h, weingarten=wein, kappa=kappa, H=H,
        sigma2=sigma2, sigma3=sigma3, s_min=s_min, area_element=area_element,
    )


def _check_in_domain(space, state):
    gamma = np.asarray(state.gamma, dtype=float)
    scale = max(1.0, abs(space.gamma_min), abs(space.gamma_max))
    lo = space.gamma_min - _ESCAPE_SLACK * scale
    hi = space.gamma_max + _ESCAPE_SLACK * scale
    bad = (gamma < lo) | (gamma > hi)
    if np.any(bad):
        node = int(np.argmax(np.where(bad, np.abs(gamma), -np.inf)))
        raise DomainEscapeError(
            f"graph left the working interval at node {node} (t={state.t:.6g})",
            node=node, radius=None, t=state.t)


def mean_curvature_graphform(space, state):
    """Mean curvature from the scalar graph formula.

    H = n phi'/(phi omega) - (1/(phi omega)) (sigma^ik - gamma^i gamma^k/omega^2) gamma_ik,
    which must agree with the trace of the Weingarten map.
    """
    grid = state.grid
    _check_in_domain(space, state)
    r = space.r_of_gamma(state.gamma)
    phi, p1, _, _ = space.phi(r)
    grad_sq, grad = grid.gradient_sq(state.gamma)
    hess = grid.hessian(state.gamma)
    omega = np.sqrt(1.0 + grad_sq)
    contr = grid.block_trace(hess) - np.einsum(
        "ia,iab,ib->i", grad, hess, grad) / omega**2
    return space.n * p1 / (phi * omega) - contr / (phi * omega)


def closeness(space, state):
    """Largest |D gamma|^2 over the nodes (the epsilon of slice-closeness)."""
    grad_sq, _ = state.grid.gradient_sq(state.gamma)
    return float(np.max(grad_sq))


def _covariant_dT(space, state, fields):
    """Covariant derivative along M of the tangential field T_i = <phi d_r, e_i>.

    Returns blocks in the sigma-orthonormal frame.  T is the M-gradient of
    the radial antiderivative of phi, so this is an M-Hessian assembled from
    the Christoffel symbols of the induced metric (computed by finite
    differences), independent of the identity it is checked against.
    """
    grid = state.grid
    gamma = state.gamma
    phi = fields.phi
    omega2 = fields.omega**2

    if grid.mode in ("circle", "axisym"):
        # coordinates: polar angle (unit for sigma) plus a round fiber
        T = phi**2 * grid.d1(gamma)
        A = phi**2 * omega2                      # polar metric coefficient
        dA = grid.d1(A)
        # T carries one polar covector index, so it is odd across the poles
        dT = grid.d1_odd(T) if hasattr(grid, "d1_odd") else grid.d1(T)
        m = grid.frame_dim
        out = np.zeros((grid.node_count, m, m))
        out[:, 0, 0] = dT - 0.5 * dA / A * T
        if m == 2:
            dphi = grid.d1(phi)
            fib = (T * dphi / phi + phi**2 * grid.fiber_rate(gamma)) / omega2
            out[:, 1, 1] = fib
        return out

    # latlong: full coordinate computation in (theta, psi)
    Nt, Np = grid.n_theta, grid.n_psi
    G = gamma.reshape(Nt, Np)
    P = phi.reshape(Nt, Np)
    sin = grid._sin
    gt = grid.d_theta(G)
    gp = grid.d_psi(G)
    # coordinate components of the induced metric
    g = np.empty((Nt, Np, 2, 2))
    g[..., 0, 0] = P**2 * (1.0 + gt * gt)
    g[..., 0, 1] = P**2 * gt * gp
    g[..., 1, 0] = g[..., 0, 1]
    g[..., 1, 1] = P**2 * (sin**2 + gp * gp)
    dg = np.empty((2, Nt, Np, 2, 2))
    for a in range(2):
        for b in range(2):
            parity = -1.0 if (a == 0) != (b == 0) else 1.0
            dg[0, ..., a, b] = grid.d_theta(g[..., a, b], parity)
            dg[1, ..., a, b] = grid.d_psi(g[..., a, b])
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    ginv = np.empty_like(g)
    ginv[..., 0, 0] = g[..., 1, 1] / det
    ginv[..., 1, 1] = g[..., 0, 0] / det
    ginv[..., 0, 1] = -g[..., 0, 1] / det
    ginv[..., 1, 0] = ginv[..., 0, 1]
    gam_sym = np.empty((Nt, Np, 2, 2, 2))  # Gamma^k_ij
    for k in range(2):
        for i in range(2):
            for j in range(2):
                acc = 0.0
                for l in range(2):
                    acc = acc + ginv[..., k, l] * (
                        dg[i, ..., j, l] + dg[j, ..., i, l] - dg[l, ..., i, j])
                gam_sym[..., k, i, j] = 0.5 * acc
    T = np.empty((Nt, Np, 2))
    T[..., 0] = P**2 * gt
    T[..., 1] = P**2 * gp
    dT = np.empty((Nt, Np, 2, 2))
    for i in range(2):
        parity = -1.0 if i == 0 else 1.0
        dT[..., 0, i] = grid.d_theta(T[..., i], parity)
        dT[..., 1, i] = grid.d_psi(T[..., i])
    nabla = dT - np.einsum("...kij,...k->...ji", gam_sym, T)
    # symmetrize roundoff and convert coordinate components to the sigma frame
    nabla = 0.5 * (nabla + np.swapaxes(nabla, -1, -2))
    scale = np.stack([np.ones_like(grid.theta.reshape(Nt, Np)),
                      np.broadcast_to(sin, (Nt, Np))], axis=-1)
    nabla = nabla / (scale[..., :, None] * scale[..., None, :])
    return nabla.reshape(grid.node_count, 2, 2)


def conformal_identity_residual(space, state):
    """Largest deviation of the covariant derivative of T_i = <phi d_r, e_i>
    from phi' g_ij - u h_ij, over nodes and frame components.

    An end-to-end consistency check between the metric, the second
    fundamental form and the support function; it vanishes identically on
    slices and decays at the stencil order for smooth graphs.
    """
    fields = compute_fields(space, state)
    nabla = _covariant_dT(space, state, fields)
    rhs = fields.phi1[:, None, None] * fields.g - fields.u[:, None, None] * fields.h
    return float(np.max(np.abs(nabla - rhs)))


def conformal_trace_integral(space, state):
    """Surface integral of Delta_g Phi - (n phi' - u H) over the graph."""
    fields = compute_fields(space, state)
    nabla = _covariant_dT(space, state, fields)
    lap = state.grid.block_trace(np.einsum("iab,ibc->iac", fields.g_inv, nabla))
    integrand = lap - (space.n * fields.phi1 - fields.u * fields.H)
    return float(state.grid.integrate(integrand * fields.area_element))
