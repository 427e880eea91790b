"""Machine-checkable verdicts for the flow's conservation laws, monotonicity
statements, convexity preservation, and weighted geometric inequalities.

Every check records whether its preconditions held and reports
"not applicable" rather than a vacuous pass when they did not.  Monotonicity
checks compare consecutive monitor rows with a relative floor, because time
discretization breaks exact monotonicity at roundoff scale; each tolerance is
max(user floor, 10 x a caller-supplied discretization-error estimate).
"""

import math

import numpy as np
from scipy.optimize import brentq

from .errors import NotApplicableError, RangeError
from .flow import format_alpha
from .functionals import (
    weighted_area,
    weighted_mean_curvature_integral,
    weighted_volume_alpha,
)
from .graphgeom import closeness, compute_fields

_TOL_SCALE_K = 10.0


class Verdict:
    """Outcome of one check: pass/fail plus the worst violation seen."""

    def __init__(self, name, passed, worst_violation, tolerance, location=None,
                 preconditions_held=True, applicable=True, note=""):
        self.name = name
        self.passed = bool(passed)
        self.worst_violation = float(worst_violation)
        self.tolerance = float(tolerance)
        self.location = location
        self.preconditions_held = bool(preconditions_held)
        self.applicable = bool(applicable)
        self.note = note

    @classmethod
    def from_violation(cls, name, worst, tol, location=None, note=""):
        return cls(name, worst <= tol, worst, tol, location, True, True, note)

    @classmethod
    def not_applicable(cls, name, note=""):
        return cls(name, False, math.inf, 0.0, None, False, False, note)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "location": self.location,
            "preconditions_held": self.preconditions_held,
            "applicable": self.applicable,
            "note": self.note,
        }

    def __repr__(self):
        state = "PASS" if self.passed else ("N/A" if not self.applicable else "FAIL")
        return (f"Verdict({self.name}: {state}, worst={self.worst_violation:.3e}, "
                f"tol={self.tolerance:.3e})")


def _tolerance(floor, disc_error=0.0):
    return max(floor, _TOL_SCALE_K * disc_error)


def check_volume_conservation(trace, tol=1e-5):
    """Relative drift of the conserved weighted volume over the run."""
    v = trace.columns["V_phi"]
    if len(v) < 2:
        return Verdict.not_applicable("volume_conservation", "trace has fewer than 2 rows")
    drift = np.abs(v / v[0] - 1.0)
    i = int(np.argmax(drift))
    return Verdict.from_violation(
        "volume_conservation", float(drift[i]), tol,
        location={"kind": "time", "value": float(trace.columns["t"][i])})


def _phi2_sign_on_slab(space, trace):
    r_lo = float(np.min(trace.columns["r_min_node"]))
    r_hi = float(np.max(trace.columns["r_max_node"]))
    rs = np.linspace(r_lo, r_hi + 1e-15, 257)
    _, _, p2, _ = space.phi(rs)
    scale = max(1.0, float(np.max(np.abs(p2))))
    if np.all(np.abs(p2) < 1e-13 * scale):
        return 0
    if np.all(p2 > 0):
        return 1
    if np.all(p2 < 0):
        return -1
    return None


def _monotone_violation(t, v, direction):
    """Largest wrong-direction relative jump between consecutive rows.

    direction +1 requires non-decreasing values, -1 non-increasing.
    """
    scale = max(float(np.max(np.abs(v))), 1e-300)
    steps = np.diff(v) * direction
    viol = np.maximum(0.0, -steps) / scale
    if len(viol) == 0:
        return 0.0, None
    i = int(np.argmax(viol))
    return float(viol[i]), {"kind": "time", "value": float(t[i + 1])}


def check_alpha_monotonicity(trace, alpha, space, floor=1e-10, disc_error=0.0,
                             conservation_tol=1e-5):
    """Direction of the weighted alpha-volume per the sign of phi''(alpha-1).

    phi'' > 0 and alpha < 1 force non-decreasing values, alpha > 1
    non-increasing; alpha = 1 (or phi'' = 0) delegates to conservation.
    """
    name = f"alpha_monotonicity[alpha={format_alpha(alpha)}]"
    col = f"V_phi_alpha_{format_alpha(alpha)}"
    if col not in trace.columns:
        return Verdict.not_applicable(name, f"column {col} not monitored")
    sign_p2 = _phi2_sign_on_slab(space, trace)
    if sign_p2 is None:
        return Verdict.not_applicable(name, "phi'' changes sign on the traversed slab")
    case = sign_p2 * (1 if alpha > 1 else (-1 if alpha < 1 else 0))
    t = trace.columns["t"]
    v = trace.columns[col]
    if case == 0:
        drift = np.abs(v / v[0] - 1.0) if v[0] != 0 else np.abs(v - v[0])
        i = int(np.argmax(drift))
        return Verdict.from_violation(
            name, float(drift[i]), conservation_tol,
            location={"kind": "time", "value": float(t[i])},
            note="neutral sign case; delegated to conservation")
    direction = -1 if case > 0 else 1
    worst, loc = _monotone_violation(t, v, direction)
    return Verdict.from_violation(name, worst, _tolerance(floor, disc_error), loc)


def check_area_monotonicity(trace, which, space, floor=1e-10, disc_error=0.0,
                            smin_tol=1e-8):
    """Non-increase of A_0 (n >= 2) or A_1 (n >= 3) along static convex runs.

    Requires phi'' > 0, both convexity bounds of the admissible class, and
    static convexity of every monitored snapshot; otherwise the verdict is
    "not applicable" rather than a false pass.
    """
    which = which.upper()
    if which not in ("A0", "A1"):
        raise ValueError("which must be 'A0' or 'A1'")
    name = f"area_monotonicity[{which}]"
    n_needed = 2 if which == "A0" else 3
    if space.n < n_needed:
        return Verdict.not_applicable(name, f"requires n >= {n_needed}, space has n={space.n}")
    if not space.is_admissible:
        return Verdict.not_applicable(
            name, "space fails phi''>0 or the convexity bounds on [r_min, r_max]")
    min_smin = float(np.min(trace.columns["min_smin"]))
    if min_smin < -smin_tol:
        return Verdict.not_applicable(
            name, f"a monitored snapshot was not static convex (min s_min={min_smin:.3e})")
    col = "A0_phi" if which == "A0" else "A1_phi"
    worst, loc = _monotone_violation(trace.columns["t"], trace.columns[col], -1)
    return Verdict.from_violation(name, worst, _tolerance(floor, disc_error), loc)


def check_convexity_preservation(trace, space=None, smin_tol=1e-8):
    """min s_min >= -tol over the whole run, given convex epsilon-close data.

    When ``space`` is supplied the preconditions (initial static convexity
    and closeness below the sufficient threshold for the initial bounding
    ball) are verified; otherwise they are taken on trust and recorded.
    """
    name = "convexity_preservation"
    t = trace.columns["t"]
    smin = trace.columns["min_smin"]
    pre_held = smin[0] >= -smin_tol
    note = ""
    if space is not None:
        if not space.is_static:
            return Verdict.not_applicable(name, "space is not static")
        R = float(trace.columns["r_max_node"][0])
        eps0 = epsilon0_bound(space, min(R, space.r_max))
        eps_init = float(trace.columns["max_grad_sq"][0])
        if eps_init > eps0:
            pre_held = False
            note = f"initial closeness {eps_init:.3e} exceeds bound {eps0:.3e}"
    if not pre_held:
        return Verdict(name, False, math.inf, smin_tol, None, False, False,
                       note or "initial data not static convex")
    i = int(np.argmin(smin))
    worst = max(0.0, -float(smin[i]))
    return Verdict.from_violation(
        name, worst, smin_tol, location={"kind": "time", "value": float(t[i])})


def check_strict_convexity(trace, smin_tol=1e-8):
    """Strict static convexity for t > 0 (non-slice runs become strict)."""
    name = "convexity_strictness"
    t = trace.columns["t"]
    smin = trace.columns["min_smin"]
    later = t > 0
    if not np.any(later):
        return Verdict.not_applicable(name, "no monitor rows with t > 0")
    vals = smin[later]
    i = int(np.argmin(vals))
    # worst_violation is -min(s_min): negative margin when strictly convex
    return Verdict.from_violation(
        name, -float(vals[i]), 0.0,
        location={"kind": "time", "value": float(t[later][i])})


def epsilon0_bound(space, R):
    """Sufficient slice-closeness threshold for convexity preservation.

    For space forms (C0 = 0) no closeness constraint is needed and the bound
    is +inf.  Otherwise returns the largest eps < 2/(3n) with

        (2/(1+eps)) sqrt(C0 (2/eps - 3n)) >= 2 phi'(R) phi(R)^((n-1)/2),

    found by bisection on the monotone left-hand side, or 0 when no eps
    satisfies it (the caller must then shrink R).
    """
    if not space.is_static:
        raise NotApplicableError("epsilon0_bound requires a static space")
    if not (space.r_min < R <= space.r_max + 1e-12):
        raise RangeError(f"R={R} outside ({space.r_min}, {space.r_max}]")
    c0 = space.c0
    if c0 <= 1e-12:
        return math.inf
    n = space.n
    phi, p1, _, _ = space.phi(np.asarray(R, dtype=float))
    target = 2.0 * float(p1) * float(phi) ** ((n - 1) / 2.0)
    eps_cap = 2.0 / (3.0 * n)

    def g(eps):
        return (2.0 / (1.0 + eps)) * math.sqrt(c0 * (2.0 / eps - 3.0 * n)) - target

    lo = eps_cap * 1e-14
    hi = eps_cap * (1.0 - 1e-14)
    if g(hi) >= 0.0:
        return hi
    if g(lo) <= 0.0:
        return 0.0
    return float(brentq(g, lo, hi, xtol=1e-15, rtol=1e-14))


def check_inequalities(space, state, profiles, smin_tol=1e-8, floor=1e-8,
                       eps_requirement=None, slice_tol=1e-9):
    """Weighted geometric inequality verdicts for one graph snapshot.

    ``profiles`` maps alpha to a :class:`~wvpflow.functionals.SliceProfile`.
    The area comparisons need a static convex, epsilon-close snapshot in an
    admissible static space and alpha <= 1; the volume comparison only needs
    graphicality and records the sign case of phi''(alpha - 1).  The
    equality-case detector flags gaps below tolerance together with
    slice-ness of the snapshot.
    """
    fields = compute_fields(space, state)
    eps = closeness(space, state)
    is_slice = eps < slice_tol
    static_convex = float(np.min(fields.s_min)) >= -smin_tol
    v_phi = weighted_volume_alpha(space, state, 1.0)
    a0 = weighted_area(space, fields)
    a1 = weighted_mean_curvature_integral(space, fields)
    verdicts = []
    for alpha, prof in sorted(profiles.items()):
        tag = f"alpha={format_alpha(alpha)}"
        v_alpha = weighted_volume_alpha(space, state, alpha)

        # volume vs xi comparison, oriented by the sign of phi''(alpha-1)
        sign_p2 = _sign_phi2_range(space, fields)
        name_v = f"volume_vs_xi[{tag}]"
        if sign_p2 is None:
            verdicts.append(Verdict.not_applicable(name_v, "phi'' changes sign"))
        else:
            case = sign_p2 * (1 if alpha > 1 else (-1 if alpha < 1 else 0))
            xi_val = float(prof.xi(v_phi))
            if case == 0:
                gap = -abs(v_alpha - xi_val)
                note = "neutral sign case: equality expected"
            elif case < 0:
                gap = xi_val - v_alpha
                note = "expect V^alpha <= xi(V)"
            else:
                gap = v_alpha - xi_val
                note = "expect V^alpha >= xi(V)"
            if abs(gap) <= floor and is_slice:
                note += "; equality case (slice)"
            verdicts.append(Verdict.from_violation(
                name_v, max(0.0, -gap), floor,
                location={"kind": "node", "value": None}, note=note))

        # area comparisons require the convexity/closeness hypotheses
        applicable = (space.is_static and space.is_admissible and static_convex
                      and alpha <= 1.0 + 1e-12)
        if eps_requirement is not None and eps > eps_requirement:
            applicable = False
        for i_chi, (name_a, val, n_needed) in enumerate(
                ((f"A0_vs_chi0[{tag}]", a0, 2), (f"A1_vs_chi1[{tag}]", a1, 3))):
            if space.n < n_needed:
                verdicts.append(Verdict.not_applicable(
                    name_a, f"requires n >= {n_needed}"))
                continue
            if not applicable:
                verdicts.append(Verdict.not_applicable(
                    name_a, "snapshot not static convex / epsilon-close, "
                            "or space not admissible static, or alpha > 1"))
                continue
            chi_val = float(prof.chi(i_chi, v_alpha))
            gap = val - chi_val
            note = f"gap={gap:.6e}"
            if abs(gap) <= floor and is_slice:
                note += "; equality case (slice)"
            verdicts.append(Verdict.from_violation(
                name_a, max(0.0, -gap), floor, note=note))
    return verdicts


def _sign_phi2_range(space, fields):
    rs = np.linspace(float(np.min(fields.r)), float(np.max(fields.r)) + 1e-15, 129)
    _, _, p2, _ = space.phi(rs)
    scale = max(1.0, float(np.max(np.abs(p2))))
    if np.all(np.abs(p2) < 1e-13 * scale):
        return 0
    if np.all(p2 > 0):
        return 1
    if np.all(p2 < 0):
        return -1
    return None


def variational_mismatch(trace):
    """|central-difference d/dt - surface-integral RHS| for each functional.

    Uses the non-uniform three-point first-derivative formula at the interior
    monitor rows.  Returns a dict mapping functional names to (times,
    mismatch) arrays; feed traces with halved monitor spacing to observe the
    O(dt^2) shrink of the finite-difference truncation.
    """
    t = trace.columns["t"]
    if len(t) < 3:
        return {}
    out = {}
    names = []
    for k, a in enumerate(trace.alphas):
        names.append((f"V_phi_alpha_{format_alpha(a)}", trace.va_rhs["V"][k]))
    names.append(("A0_phi", trace.va_rhs["A0"]))
    names.append(("A1_phi", trace.va_rhs["A1"]))
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    for col, rhs_vals in names:
        f = trace.columns[col]
        fd = (-(h2 / (h1 * (h1 + h2))) * f[:-2]
              + ((h2 - h1) / (h1 * h2)) * f[1:-1]
              + (h1 / (h2 * (h1 + h2))) * f[2:])
        out[col] = (t[1:-1], np.abs(fd - rhs_vals[1:-1]))
    return out


def check_variational_formulas(trace, floor=1e-7, disc_error=None):
    """Worst mismatch between measured and predicted functional rates.

    When no discretization-error estimate is supplied, one is derived from
    the third differences of the monitored series, which scale like the
    truncation of the central first-derivative formula.
    """
    mism = variational_mismatch(trace)
    if not mism:
        return Verdict.not_applicable("variational_formulas", "fewer than 3 monitor rows")
    worst = 0.0
    est = 0.0
    loc = None
    t = trace.columns["t"]
    for col, (tt, vals) in mism.items():
        scale = max(float(np.max(np.abs(trace.columns[col]))), 1e-300)
        rel = vals / scale
        i = int(np.argmax(rel))
        if rel[i] > worst:
            worst = float(rel[i])
            loc = {"kind": "time", "value": float(tt[i]), "column": col}
        if disc_error is None:
            f = trace.columns[col]
            dtm = float(np.median(np.diff(t)))
            if len(t) >= 4:
                d3 = np.abs(f[3:] - 3.0 * f[2:-1] + 3.0 * f[1:-2] - f[:-3])
                est = max(est, float(np.max(d3)) / (6.0 * max(dtm, 1e-300) * scale))
            else:
                # too few rows for a third difference: use the cruder and more
                # conservative second-difference surrogate
                d2 = np.abs(f[2:] - 2.0 * f[1:-1] + f[:-2])
                est = max(est, float(np.max(d2)) / (max(dtm, 1e-300) * scale))
    if disc_error is None:
        disc_error = est
    return Verdict.from_violation("variational_formulas", worst,
                                  _tolerance(floor, disc_error), loc)


def run_verdicts(space, trace, profiles=None, volume_tol=1e-5, floor=1e-10,
                 smin_tol=1e-8, ineq_floor=1e-8):
    """The standard verdict batch for one completed run."""
    verdicts = [check_volume_conservation(trace, volume_tol)]
    for a in trace.alphas:
        verdicts.append(check_alpha_monotonicity(
            trace, a, space, floor, conservation_tol=volume_tol))
    verdicts.append(check_area_monotonicity(trace, "A0", space, floor, smin_tol=smin_tol))
    verdicts.append(check_area_monotonicity(trace, "A1", space, floor, smin_tol=smin_tol))
    if space.is_static:
        verdicts.append(check_convexity_preservation(trace, space, smin_tol))
        verdicts.append(check_strict_convexity(trace, smin_tol))
    verdicts.append(check_variational_formulas(trace))
    if profiles and trace.final_state is not None:
        verdicts.extend(check_inequalities(
            space, trace.final_state, profiles, smin_tol, ineq_floor))
    return verdicts
