"""Time integration of the graphical flow and convergence detection.

The normal speed n - u H / phi' becomes, in the gamma variable,

    d gamma / dt = (sigma^ik - gamma^i gamma^k / omega^2) gamma_ik / (phi phi' omega)
                   + n |D gamma|^2 / (phi omega),

a quasilinear parabolic equation whose principal coefficient is
1/(phi phi' omega).  Explicit RK4 with an adaptive parabolic step is the
reference scheme; an IMEX variant (implicit frozen-coefficient Laplacian
core, explicit remainder) is provided for stiff high-resolution runs.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, DomainEscapeError, SchemeInstabilityError
from .functionals import (
    _antiderivative,
    weighted_area,
    weighted_mean_curvature_integral,
)
from .graphgeom import GraphState, compute_fields

try:
    import numba as _numba
    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is optional
    _numba = None
    _HAVE_NUMBA = False


@dataclass
class FlowConfig:
    """Integration policy for one run.

    The adaptive explicit step is dt = c_cfl (Delta theta)^2 min(phi phi' omega).
    The polar closure of the Laplacian makes its stiffest row n times an
    interior row, so the explicit scheme is stable only for roughly
    c_cfl <= 0.5/n; the default is safe for n <= 2 and should be lowered for
    higher dimensions (or switch to the imex scheme).
    """

    scheme: str = "rk4"                # "rk4" or "imex"
    dt_policy: str = "adaptive"        # "adaptive" or "fixed"
    dt: float = 0.0                    # used by the fixed policy
    c_cfl: float = 0.2
    t_max: float = 50.0
    grad_tol: float = 1e-12
    monitors_every: int = 200
    snapshot_every: int = 0
    alphas: tuple = (0.0, 2.0)

    def __post_init__(self):
        if self.scheme not in ("rk4", "imex"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.dt_policy not in ("adaptive", "fixed"):
            raise ConfigError(f"unknown dt policy {self.dt_policy!r}")
        if not (0.0 < self.c_cfl <= 1.0):
            raise ConfigError(f"c_cfl must lie in (0, 1], got {self.c_cfl}")
        if self.grad_tol <= 0.0:
            raise ConfigError("grad_tol must be positive")
        if self.dt_policy == "fixed" and self.dt <= 0.0:
            raise ConfigError("fixed dt policy requires dt > 0")
        if self.monitors_every < 1:
            raise ConfigError("monitors_every must be a positive integer")


class SpeedFields:
    """Normal speed and gamma-rate of one snapshot, in both algebraic forms."""

    def __init__(self, normal, rate, rate_expanded):
        self.normal = normal
        self.rate = rate
        self.rate_expanded = rate_expanded


def speed(space, state):
    """Normal speed F = n - u H / phi' and the gamma-rate F omega / phi.

    The rate is evaluated both as the product form and as the expanded
    quasilinear form; the two agree to roundoff and are returned together so
    callers can cross-check them.
    """
    fields = compute_fields(space, state)
    F = space.n - fields.u * fields.H / fields.phi1
    rate = F * fields.omega / fields.phi
    contr = (state.grid.block_trace(fields.hess)
             - np.einsum("ia,iab,ib->i", fields.grad, fields.hess, fields.grad)
             / fields.omega**2)
    rate_expanded = (contr / (fields.phi * fields.phi1 * fields.omega)
                     + space.n * fields.grad_sq / (fields.phi * fields.omega))
    return SpeedFields(F, rate, rate_expanded)


if _HAVE_NUMBA:

    @_numba.njit(cache=True, fastmath=False)
    def _rhs_kernel_1d(gamma, breaks, coefs, cot, s1, s2, n_dim, fib_mult,
                       periodic, out):
        """Fused gamma-rate for circle/axisym grids.

        Derivatives are assembled from neighbour differences (exact zero on
        constants); phi and phi' come from the shared cubic spline table in
        the gamma variable.  Returns (max |D gamma|^2, min phi phi' omega).
        """
        N = gamma.shape[0]
        M = breaks.shape[0]
        maxg2 = 0.0
        minpfo = 1e300
        for i in range(N):
            if periodic:
                jm2 = (i - 2) % N
                jm1 = (i - 1) % N
                jp1 = (i + 1) % N
                jp2 = (i + 2) % N
            else:
                jm2 = i - 2
                jm1 = i - 1
                jp1 = i + 1
                jp2 = i + 2
                if jm1 < 0:
                    jm1 = -jm1
                if jm2 < 0:
                    jm2 = -jm2
                if jp1 > N - 1:
                    jp1 = 2 * (N - 1) - jp1
                if jp2 > N - 1:
                    jp2 = 2 * (N - 1) - jp2
            f0 = gamma[i]
            dm2 = gamma[jm1] - gamma[jm2]
            dm1 = f0 - gamma[jm1]
            dp1 = gamma[jp1] - f0
            dp2 = gamma[jp2] - gamma[jp1]
            d1 = (-dm2 + 7.0 * dm1 + 7.0 * dp1 - dp2) * s1
            d2 = (dm2 - 15.0 * dm1 + 15.0 * dp1 - dp2) * s2

            # spline lookup for (phi, phi')
            lo = 0
            hi = M - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if breaks[mid] <= f0:
                    lo = mid
                else:
                    hi = mid
            t = f0 - breaks[lo]
            phi = ((coefs[0, 0, lo] * t + coefs[0, 1, lo]) * t
                   + coefs[0, 2, lo]) * t + coefs[0, 3, lo]
            p1 = ((coefs[1, 0, lo] * t + coefs[1, 1, lo]) * t
                  + coefs[1, 2, lo]) * t + coefs[1, 3, lo]

            g2 = d1 * d1
            om2 = 1.0 + g2
            om = np.sqrt(om2)
            if fib_mult > 0.0:
                if not periodic and (i == 0 or i == N - 1):
                    fib = d2
                else:
                    fib = cot[i] * d1
                lap = d2 + fib_mult * fib
            else:
                lap = d2
            contr = lap - g2 * d2 / om2
            out[i] = (contr + n_dim * g2 * p1) / (phi * p1 * om)
            if g2 > maxg2:
                maxg2 = g2
            pfo = phi * p1 * om
            if pfo < minpfo:
                minpfo = pfo
        return maxg2, minpfo


def _make_rhs(space, grid):
    """Compiled-ish right-hand side closure for the gamma equation."""
    n = space.n
    if _HAVE_NUMBA and grid.mode in ("circle", "axisym"):
        breaks = space._phi_pair_g.breaks
        coefs = np.ascontiguousarray(space._phi_pair_g.coefs)
        periodic = grid.mode == "circle"
        cot = getattr(grid, "_cot", np.zeros(grid.node_count))
        fib_mult = float(n - 1) if grid.frame_dim == 2 else 0.0
        s1 = grid._s1
        s2 = grid._s2
        n_dim = float(n)

        def rhs(gamma, diag=None):
            out = np.empty_like(gamma)
            maxg2, minpfo = _rhs_kernel_1d(gamma, breaks, coefs, cot, s1, s2,
                                           n_dim, fib_mult, periodic, out)
            if diag is not None:
                diag["max_grad_sq"] = maxg2
                diag["min_pfo"] = minpfo
            return out

        return rhs

    if grid.mode in ("circle", "axisym"):
        fiber = grid.frame_dim == 2
        if fiber:
            cot = grid._cot
            pole = grid._pole_mask
            mult = n - 1

        def rhs(gamma, diag=None):
            d1, d2 = grid.d12(gamma)
            phi, p1 = space.phi_pair_of_gamma(gamma)
            g2 = d1 * d1
            om2 = 1.0 + g2
            om = np.sqrt(om2)
            if fiber:
                fib = cot * d1
                fib[pole] = d2[pole]
                lap = d2 + mult * fib
            else:
                lap = d2
            contr = lap - g2 * d2 / om2
            if diag is not None:
                diag["max_grad_sq"] = float(np.max(g2))
                diag["min_pfo"] = float(np.min(phi * p1 * om))
            return contr / (phi * p1 * om) + n * g2 / (phi * om)

        return rhs

    def rhs(gamma, diag=None):
        gs, grad = grid.gradient_sq(gamma)
        hess = grid.hessian(gamma)
        phi, p1 = space.phi_pair_of_gamma(gamma)
        om2 = 1.0 + gs
        om = np.sqrt(om2)
        contr = (grid.block_trace(hess)
                 - np.einsum("ia,iab,ib->i", grad, hess, grad) / om2)
        if diag is not None:
            diag["max_grad_sq"] = float(np.max(gs))
            diag["min_pfo"] = float(np.min(phi * p1 * om))
        return contr / (phi * p1 * om) + n * gs / (phi * om)

    return rhs


class _Stepper:
    def __init__(self, space, grid, cfg):
        self.space = space
        self.grid = grid
        self.cfg = cfg
        self.rhs = _make_rhs(space, grid)
        self.h2 = grid.min_spacing**2
        if cfg.scheme == "imex":
            self.lap = grid.laplacian_matrix().tocsr()
            self.eye = sp.identity(grid.node_count, format="csr")

    def dt_from_diag(self, diag):
        cfg = self.cfg
        if cfg.dt_policy == "fixed":
            return cfg.dt
        base = cfg.c_cfl * self.h2 * diag["min_pfo"]
        if cfg.scheme == "imex":
            # the stiff core is implicit; step on the advective scale instead
            base = cfg.c_cfl * np.sqrt(self.h2) * np.sqrt(diag["min_pfo"])
        return base

    def advance_from_k1(self, gamma, k1, dt):
        """Complete one step given the stage-1 rate of the current state."""
        cfg = self.cfg
        rhs = self.rhs
        if cfg.scheme == "rk4":
            k2 = rhs(gamma + (0.5 * dt) * k1)
            k3 = rhs(gamma + (0.5 * dt) * k2)
            k4 = rhs(gamma + dt * k3)
            return gamma + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        # IMEX: implicit frozen-coefficient Laplacian, explicit remainder
        phi, p1 = self.space.phi_pair_of_gamma(gamma)
        if hasattr(self.grid, "d1"):
            d1 = self.grid.d1(gamma)
            om = np.sqrt(1.0 + d1 * d1)
        else:
            gs, _ = self.grid.gradient_sq(gamma)
            om = np.sqrt(1.0 + gs)
        coef = 1.0 / (phi * p1 * om)
        L = sp.diags(coef) @ self.lap
        explicit = k1 - L @ gamma
        A = (self.eye - dt * L).tocsc()
        return spla.spsolve(A, gamma + dt * explicit)

    def advance(self, gamma, diag):
        """One step from gamma; fills diag and returns (new_gamma, dt)."""
        k1 = self.rhs(gamma, diag)
        dt = self.dt_from_diag(diag)
        return self.advance_from_k1(gamma, k1, dt), dt


def step(space, state, cfg, dt=None):
    """Advance one step with the configured scheme.

    A slice input reproduces itself to roundoff for any dt.  Raises
    :class:`SchemeInstabilityError` on non-finite values and
    :class:`DomainEscapeError` when the graph leaves [r_min, r_max].
    """
    stepper = _Stepper(space, state.grid, cfg)
    diag = {}
    if dt is not None:
        cfg2 = FlowConfig(**{**cfg.__dict__, "dt_policy": "fixed", "dt": dt})
        stepper.cfg = cfg2
    new, used_dt = stepper.advance(state.gamma, diag)
    _check_step(space, new, state.t + used_dt)
    return GraphState(state.grid, new, state.t + used_dt)


def _check_step(space, gamma, t):
    lo = float(np.min(gamma))
    hi = float(np.max(gamma))
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise SchemeInstabilityError(
            f"non-finite gamma at t={t:.6g}; reduce c_cfl or the fixed dt")
    scale = max(1.0, abs(space.gamma_min), abs(space.gamma_max))
    if lo < space.gamma_min - 1e-12 * scale or hi > space.gamma_max + 1e-12 * scale:
        node = int(np.argmax(gamma) if hi > space.gamma_max else np.argmin(gamma))
        r_bad = None
        try:
            r_bad = float(space.r_of_gamma(np.clip(
                gamma[node], space.gamma_min, space.gamma_max)))
        except Exception:
            pass
        raise DomainEscapeError(
            f"graph left [r_min, r_max] at node {node} (t={t:.6g})",
            node=node, radius=r_bad, t=t)


@dataclass
class FlowTrace:
    """Time series of the monitored functionals plus end-of-run metadata."""

    alphas: tuple
    columns: dict = field(default_factory=dict)   # name -> ndarray, monitor rows
    grad_history: np.ndarray = None               # (steps+1, 2): t, max|Dgamma|^2
    va_rhs: dict = field(default_factory=dict)    # variational RHS integrals per row
    r_infinity: float = None
    converged: bool = False
    beta_hat: float = None
    measured_decay_rate: float = None
    t_final: float = 0.0
    snapshots: list = field(default_factory=list)  # (step, t, gamma array)
    final_state: object = None
    verdicts: list = field(default_factory=list)

    COLUMN_ORDER_HEAD = ["t", "dt", "max_grad_sq", "V_phi"]
    COLUMN_ORDER_TAIL = ["A0_phi", "A1_phi", "min_smin", "max_speed",
                         "r_min_node", "r_max_node"]

    def column_names(self):
        alpha_cols = [f"V_phi_alpha_{format_alpha(a)}" for a in self.alphas]
        return self.COLUMN_ORDER_HEAD + alpha_cols + self.COLUMN_ORDER_TAIL

    @property
    def nrows(self):
        return len(self.columns["t"])

    def row_times(self):
        return self.columns["t"]

    def write_csv(self, path):
        names = self.column_names()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(names) + "\n")
            cols = [self.columns[c] for c in names]
            for i in range(self.nrows):
                fh.write(",".join("%.17g" % col[i] for col in cols) + "\n")


def format_alpha(alpha):
    return "%g" % alpha


def _beta_hat(space, gamma0, grad0_max):
    """Decay-rate bound 2(n-1)/max(phi phi' omega) over the initial slab.

    Vanishes for n = 1, where the gradient estimate supplies no explicit
    rate; the measured rate is still reported alongside it.
    """
    r0 = space.r_of_gamma(gamma0)
    rs = np.linspace(float(np.min(r0)), float(np.max(r0)) + 1e-15, 513)
    phi, p1, _, _ = space.phi(rs)
    om_max = np.sqrt(1.0 + grad0_max)
    denom = float(np.max(phi * p1)) * om_max
    return 2.0 * (space.n - 1) / denom


def run(space, state0, cfg):
    """Integrate until max|D gamma|^2 < grad_tol or t reaches t_max.

    Returns a :class:`FlowTrace` with one monitor row every
    ``cfg.monitors_every`` steps (plus the initial and final states), the
    per-step gradient history, and convergence metadata.  Aborts (domain
    escape, instability) propagate to the caller.
    """
    grid = state0.grid
    stepper = _Stepper(space, grid, cfg)
    antis = [_antiderivative(space, a) for a in cfg.alphas]
    anti_one = _antiderivative(space, 1.0)

    gamma = np.array(state0.gamma, dtype=float)
    t = 0.0
    step_idx = 0

    rows = {name: [] for name in FlowTrace(cfg.alphas).column_names()}
    va_rhs = {"V": [[] for _ in cfg.alphas], "A0": [], "A1": []}
    grad_hist_t = []
    grad_hist_v = []
    snapshots = []
    trace = FlowTrace(alphas=tuple(cfg.alphas))

    def monitor(dt_val):
        state = GraphState(grid, gamma, t)
        fields = compute_fields(space, state)
        F = space.n - fields.u * fields.H / fields.phi1
        gs_max = float(np.max(fields.grad_sq))
        w = fields.area_element
        vphi = float(grid.integrate(anti_one(fields.r)))
        rows["t"].append(t)
        rows["dt"].append(dt_val)
        rows["max_grad_sq"].append(gs_max)
        rows["V_phi"].append(vphi)
        for a, anti in zip(cfg.alphas, antis):
            rows[f"V_phi_alpha_{format_alpha(a)}"].append(
                float(grid.integrate(anti(fields.r))))
        rows["A0_phi"].append(weighted_area(space, fields))
        rows["A1_phi"].append(weighted_mean_curvature_integral(space, fields))
        rows["min_smin"].append(float(np.min(fields.s_min)))
        rows["max_speed"].append(float(np.max(np.abs(F))))
        rows["r_min_node"].append(float(np.min(fields.r)))
        rows["r_max_node"].append(float(np.max(fields.r)))
        _variational_rhs(space, fields, F, cfg.alphas, va_rhs)
        return fields

    _check_step(space, gamma, 0.0)
    diag = {}
    k1 = stepper.rhs(gamma, diag)
    trace.beta_hat = _beta_hat(space, gamma, diag["max_grad_sq"])
    monitor(0.0)
    if cfg.snapshot_every > 0:
        snapshots.append((0, t, gamma.copy()))

    converged = False
    last_dt = 0.0
    check_every = 16
    while True:
        gs_max = diag["max_grad_sq"]
        grad_hist_t.append(t)
        grad_hist_v.append(gs_max)
        if not np.isfinite(gs_max):
            _check_step(space, gamma, t)
        if gs_max < cfg.grad_tol:
            converged = True
            break
        if t >= cfg.t_max:
            break
        dt = stepper.dt_from_diag(diag)
        gamma = stepper.advance_from_k1(gamma, k1, dt)
        t += dt
        step_idx += 1
        last_dt = dt
        if step_idx % check_every == 0:
            _check_step(space, gamma, t)
        if cfg.snapshot_every > 0 and step_idx % cfg.snapshot_every == 0:
            snapshots.append((step_idx, t, gamma.copy()))
        if step_idx % cfg.monitors_every == 0:
            monitor(dt)
        diag = {}
        k1 = stepper.rhs(gamma, diag)
    _check_step(space, gamma, t)
    if step_idx % cfg.monitors_every != 0 or step_idx == 0:
        monitor(last_dt)
    if cfg.snapshot_every > 0 and (not snapshots or snapshots[-1][0] != step_idx):
        snapshots.append((step_idx, t, gamma.copy()))

    trace.columns = {k: np.asarray(v) for k, v in rows.items()}
    trace.grad_history = np.column_stack([grad_hist_t, grad_hist_v])
    trace.va_rhs = {
        "V": [np.asarray(col) for col in va_rhs["V"]],
        "A0": np.asarray(va_rhs["A0"]),
        "A1": np.asarray(va_rhs["A1"]),
    }
    trace.converged = bool(converged)
    trace.t_final = t
    trace.snapshots = snapshots
    final_state = GraphState(grid, gamma, t)
    trace.final_state = final_state

    fields = compute_fields(space, final_state)
    mu = fields.area_element
    total = grid.integrate(mu)
    trace.r_infinity = float(grid.integrate(fields.r * mu) / total)
    trace.measured_decay_rate = _fit_decay(trace.grad_history)
    return trace


def _variational_rhs(space, fields, F, alphas, va_rhs):
    """Surface integrals giving d/dt of the monitored functionals."""
    grid = fields.grid
    w = fields.area_element
    phi, p1, p2, p3 = fields.phi, fields.phi1, fields.phi2, fields.phi3
    u, H = fields.u, fields.H
    for k, a in enumerate(alphas):
        va_rhs["V"][k].append(float(grid.integrate(p1**a * F * w)))
    va_rhs["A0"].append(float(grid.integrate((u * p2 / phi + p1 * H) * F * w)))
    n = space.n
    qhat = (p1**2 - phi * p2 - 1.0) / phi**2
    if space.is_static:
        lap_p1 = (n - 1) * qhat * (1.0 - u**2 / phi**2) + p2 / phi * (n * p1 - u * H)
    else:
        lap_p1 = ((phi * p3 - p1 * p2) / phi**3 * (phi**2 - u**2)
                  + p2 / phi * (n * p1 - u * H))
    ric_nn = (-(phi * p2 + (n - 1) * (p1**2 - 1.0)) / phi**2
              + (n - 1) * u**2 * (p1**2 - phi * p2 - 1.0) / phi**4)
    integrand = (u * p2 * H / phi - lap_p1 + 2.0 * p1 * fields.sigma2
                 - p1 * ric_nn) * F
    va_rhs["A1"].append(float(grid.integrate(integrand * w)))


def _fit_decay(grad_history):
    """Least-squares slope of log max|Dgamma|^2 over the final half of the run."""
    t = grad_history[:, 0]
    v = grad_history[:, 1]
    keep = v > 0
    t, v = t[keep], v[keep]
    if len(t) < 8 or t[-1] <= t[0]:
        return None
    half = t >= 0.5 * (t[0] + t[-1])
    if np.count_nonzero(half) < 4:
        return None
    tt = t[half]
    yy = np.log(v[half])
    A = np.column_stack([tt, np.ones_like(tt)])
    sol, *_ = np.linalg.lstsq(A, yy, rcond=None)
    return float(sol[0])
