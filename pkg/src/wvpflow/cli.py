"""Configuration, orchestration and file output.

Subcommands: ``simulate``, ``verify-space``, ``profiles``, ``inequalities``,
``sweep``; global flags ``--out``, ``--seed``, ``--quiet``.  Configs are JSON
with a strict schema: unknown keys are errors, because a silently ignored
typo could invalidate a verdict.  All randomness flows from one 64-bit seed
through a counter-based generator, so sweeps reproduce across platforms, and
every float is printed with 17 significant digits so identical configs give
byte-identical outputs.

Exit codes: 0 all applicable verdicts pass, 1 verdict failure, 2 bad
configuration, 3 run abort (domain escape or scheme instability).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import monitors
from .errors import (
    ConfigError,
    DomainEscapeError,
    SchemeInstabilityError,
    WvpflowError,
)
from .flow import FlowConfig, format_alpha, run
from .functionals import SliceProfile
from .graphgeom import GraphState, closeness, compute_fields
from .grid import build_grid
from .warp import WarpedSpace, load_custom_table

_SCHEMA = {
    "space": {"family", "n", "r_min", "r_max", "c", "m", "kappa", "table_file", "r_ref"},
    "grid": {"mode", "resolution"},
    "initial": {"r_base", "perturbations", "random_modes", "random_amplitude",
                "snapshot_file"},
    "flow": {"scheme", "dt_policy", "dt", "c_cfl", "t_max", "grad_tol",
             "monitors_every", "snapshot_every"},
    "monitors": {"alphas", "volume_tol", "floor", "smin_tol", "ineq_floor"},
    "ensemble": {"count", "require_static_convex", "epsilon", "max_modes", "amplitude"},
    "output": {"dir"},
}
_TOP_KEYS = set(_SCHEMA) | {"seed", "base", "runs", "workers"}


def _fmt(x):
    return "%.17g" % x


def _check_keys(obj, allowed, path):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)} under '{path}'")


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "<root>")
    for section, allowed in _SCHEMA.items():
        if section in cfg:
            if not isinstance(cfg[section], dict):
                raise ConfigError(f"config section '{section}' must be an object")
            _check_keys(cfg[section], allowed, section)
    if "initial" in cfg:
        for p in cfg["initial"].get("perturbations", []) or []:
            if not isinstance(p, dict):
                raise ConfigError("perturbations must be objects")
            _check_keys(p, {"mode", "amplitude"}, "initial.perturbations[]")
    if "runs" in cfg:
        for r in cfg["runs"]:
            if not isinstance(r, dict):
                raise ConfigError("sweep runs must be objects")
            _check_keys(r, {"name", "overrides"}, "runs[]")


def build_space(cfg):
    sc = dict(cfg.get("space") or {})
    family = sc.pop("family", None)
    if family is None:
        raise ConfigError("space.family is required")
    n = sc.pop("n", None)
    if n is None:
        raise ConfigError("space.n is required")
    r_min = sc.pop("r_min", 0.0)
    r_max = sc.pop("r_max", None)
    if r_max is None:
        raise ConfigError("space.r_max is required")
    r_ref = sc.pop("r_ref", None)
    try:
        if family == "euclidean":
            return WarpedSpace.euclidean(n, r_max, r_min=r_min, r_ref=r_ref)
        if family == "sphere":
            return WarpedSpace.sphere(n, r_max, c=sc.pop("c", 1.0), r_min=r_min,
                                      r_ref=r_ref)
        if family == "hyperbolic":
            return WarpedSpace.hyperbolic(n, r_max, c=sc.pop("c", 1.0), r_min=r_min,
                                          r_ref=r_ref)
        if family == "schwarzschild":
            return WarpedSpace.schwarzschild(n, r_max, m=sc.pop("m", 1.0), r_min=r_min,
                                             r_ref=r_ref)
        if family == "ads_schwarzschild":
            return WarpedSpace.ads_schwarzschild(
                n, r_max, m=sc.pop("m", 1.0), kappa=sc.pop("kappa", 1.0),
                r_min=r_min, r_ref=r_ref)
        if family == "custom":
            table = sc.pop("table_file", None)
            if table is None:
                raise ConfigError("custom family requires space.table_file")
            return load_custom_table(table, n, r_min=r_min, r_max=r_max, r_ref=r_ref)
    except WvpflowError:
        raise
    raise ConfigError(f"unknown space family {family!r}")


def build_gridspec(cfg):
    gc = cfg.get("grid") or {}
    mode = gc.get("mode")
    resolution = gc.get("resolution")
    if mode is None or resolution is None:
        raise ConfigError("grid.mode and grid.resolution are required")
    n = (cfg.get("space") or {}).get("n")
    return build_grid(mode, n, resolution)


def _real_sph_harm(l, m, theta, psi):
    """Real spherical harmonic on S^2 (unit L2 normalization up to sign)."""
    from scipy.special import sph_harm_y
    y = sph_harm_y(l, abs(m), theta, psi)
    if m == 0:
        return np.real(y)
    if m > 0:
        return np.sqrt(2.0) * np.real(y)
    return np.sqrt(2.0) * np.imag(y)


def perturbation_field(grid, mode):
    """One perturbation basis field: integer mode index, or (l, m) on latlong."""
    if grid.mode in ("circle", "axisym"):
        if not isinstance(mode, int):
            raise ConfigError(f"{grid.mode} perturbation mode must be an integer index")
        return np.cos(mode * grid.theta)
    if isinstance(mode, int):
        mode = (mode, 0)
    l, m = int(mode[0]), int(mode[1])
    return _real_sph_harm(l, m, grid.theta, grid.psi)


def build_initial(space, grid, cfg, rng=None):
    """Initial gamma from the config: slice value plus perturbation modes."""
    ic = cfg.get("initial") or {}
    snap = ic.get("snapshot_file")
    if snap:
        data = np.loadtxt(snap, delimiter=",", skiprows=1)
        gamma = data[:, -1]
        if gamma.shape != (grid.node_count,):
            raise ConfigError(
                f"snapshot has {gamma.shape[0]} nodes, grid has {grid.node_count}")
        return GraphState(grid, gamma)
    r_base = ic.get("r_base")
    if r_base is None:
        raise ConfigError("initial.r_base (or snapshot_file) is required")
    if not (space.r_min < r_base <= space.r_max):
        raise ConfigError(f"initial.r_base={r_base} outside ({space.r_min}, {space.r_max}]")
    gamma = np.full(grid.node_count, float(space.gamma_of_r(r_base)))
    for p in ic.get("perturbations", []) or []:
        mode = p.get("mode")
        amp = float(p.get("amplitude", 0.0))
        mode = tuple(mode) if isinstance(mode, list) else mode
        gamma = gamma + amp * perturbation_field(grid, mode)
    nmodes = int(ic.get("random_modes", 0) or 0)
    if nmodes:
        if rng is None:
            raise ConfigError("random perturbations need a seed")
        amp = float(ic.get("random_amplitude", 0.01))
        gamma = gamma + random_perturbation(grid, rng, nmodes, amp)
    state = GraphState(grid, gamma)
    _validate_initial(space, state)
    return state


def random_perturbation(grid, rng, max_modes, amplitude):
    """Seeded band-limited bump: mode k weighted like k^-2."""
    out = np.zeros(grid.node_count)
    for k in range(1, max_modes + 1):
        if grid.mode == "latlong":
            for m in range(-k, k + 1):
                out += (amplitude * rng.standard_normal() / k**2
                        ) * perturbation_field(grid, (k, m))
        else:
            out += (amplitude * rng.standard_normal() / k**2
                    ) * perturbation_field(grid, k)
    return out


def _validate_initial(space, state):
    eps = closeness(space, state)
    if not np.isfinite(eps):
        raise ConfigError("initial data has non-finite gradient")
    r = space.r_of_gamma(np.clip(state.gamma, space.gamma_min, space.gamma_max))
    raw = state.gamma
    if (np.any(raw < space.gamma_min - 1e-12) or np.any(raw > space.gamma_max + 1e-12)
            or np.any(r < space.r_min - 1e-9) or np.any(r > space.r_max + 1e-9)):
        raise ConfigError("initial graph leaves [r_min, r_max]; shrink the perturbation")


def build_flow_config(cfg):
    fc = dict(cfg.get("flow") or {})
    alphas = tuple((cfg.get("monitors") or {}).get("alphas", [0.0, 2.0]))
    kwargs = {
        "scheme": fc.get("scheme", "rk4"),
        "dt_policy": fc.get("dt_policy", "adaptive"),
        "dt": float(fc.get("dt", 0.0)),
        "c_cfl": float(fc.get("c_cfl", 0.2)),
        "t_max": float(fc.get("t_max", 50.0)),
        "grad_tol": float(fc.get("grad_tol", 1e-12)),
        "monitors_every": int(fc.get("monitors_every", 200)),
        "snapshot_every": int(fc.get("snapshot_every", 0)),
        "alphas": alphas,
    }
    return FlowConfig(**kwargs)


def _write_snapshot(path, grid, gamma):
    with open(path, "w", encoding="utf-8") as fh:
        if grid.mode == "latlong":
            fh.write("theta,psi,gamma\n")
            for i in range(grid.node_count):
                fh.write(f"{_fmt(grid.theta[i])},{_fmt(grid.psi[i])},{_fmt(gamma[i])}\n")
        else:
            fh.write("theta,gamma\n")
            for i in range(grid.node_count):
                fh.write(f"{_fmt(grid.theta[i])},{_fmt(gamma[i])}\n")


def _json_dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _say(quiet, msg):
    if not quiet:
        print(msg)


def cmd_simulate(cfg, out_dir, seed, quiet=False):
    space = build_space(cfg)
    grid = build_gridspec(cfg)
    rng = np.random.Generator(np.random.Philox(seed))
    state0 = build_initial(space, grid, cfg, rng)
    fcfg = build_flow_config(cfg)
    mon = cfg.get("monitors") or {}

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        trace = run(space, state0, fcfg)
    except (DomainEscapeError, SchemeInstabilityError) as exc:
        _say(quiet, f"run aborted: {exc}")
        return 3

    profiles = {}
    for a in fcfg.alphas:
        try:
            profiles[a] = SliceProfile(space, a)
        except WvpflowError:
            pass
    verdicts = monitors.run_verdicts(
        space, trace, profiles,
        volume_tol=float(mon.get("volume_tol", 1e-5)),
        floor=float(mon.get("floor", 1e-10)),
        smin_tol=float(mon.get("smin_tol", 1e-8)),
        ineq_floor=float(mon.get("ineq_floor", 1e-8)),
    )
    trace.verdicts = verdicts

    trace.write_csv(out / "trace.csv")
    for step_idx, _t, gamma in trace.snapshots:
        _write_snapshot(out / f"gamma_{step_idx}.csv", grid, gamma)
    _json_dump([v.to_dict() for v in verdicts], out / "verdicts.json")

    try:
        prof = profiles.get(1.0) or SliceProfile(space, 1.0)
        r_star = float(prof.r_of_volume(trace.columns["V_phi"][0]))
    except WvpflowError:
        r_star = None
    summary = {
        "r_infinity": trace.r_infinity,
        "r_star": r_star,
        "measured_decay_rate": trace.measured_decay_rate,
        "beta_hat": trace.beta_hat,
        "converged": trace.converged,
    }
    _json_dump(summary, out / "summary.json")

    ok = all(v.passed for v in verdicts if v.applicable)
    for v in verdicts:
        state = "PASS" if v.passed else ("n/a " if not v.applicable else "FAIL")
        _say(quiet, f"[{state}] {v.name}: worst={v.worst_violation:.3e} tol={v.tolerance:.3e}")
    _say(quiet, f"converged={trace.converged} r_infinity={trace.r_infinity} "
                f"r_star={r_star}")
    return 0 if ok else 1


def cmd_verify_space(cfg, out_dir, seed, quiet=False):
    space = build_space(cfg)
    rep = space.staticity_report()
    doc = {
        "family": space.family,
        "n": space.n,
        "r_min": space.r_min,
        "r_max": space.r_max,
        "is_static": rep.is_static,
        "is_substatic": rep.is_substatic,
        "is_admissible": space.is_admissible,
        "C0": rep.c0,
        "C0_deviation": rep.c0_deviation,
        "max_staticity_residual": rep.max_residual,
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _json_dump(doc, out / "space_report.json")
    _say(quiet, json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_profiles(cfg, out_dir, seed, quiet=False):
    space = build_space(cfg)
    alphas = (cfg.get("monitors") or {}).get("alphas", [0.0, 1.0])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for a in alphas:
        prof = SliceProfile(space, a)
        rows = prof.export_rows()
        path = out / f"profile_alpha_{format_alpha(a)}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("r,V_phi,V_phi_alpha,A0_phi,A1_phi\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        _say(quiet, f"wrote {path}")
    return 0


def cmd_inequalities(cfg, out_dir, seed, quiet=False):
    space = build_space(cfg)
    grid = build_gridspec(cfg)
    mon = cfg.get("monitors") or {}
    ens = cfg.get("ensemble") or {}
    count = int(ens.get("count", 20))
    need_convex = bool(ens.get("require_static_convex", True))
    eps_req = ens.get("epsilon", "auto")
    max_modes = int(ens.get("max_modes", 4))
    amplitude = float(ens.get("amplitude", 0.02))
    r_base = (cfg.get("initial") or {}).get("r_base")
    if r_base is None:
        raise ConfigError("inequalities needs initial.r_base")
    alphas = mon.get("alphas", [0.0, 0.5, 1.0])
    profiles = {a: SliceProfile(space, a) for a in alphas}
    if eps_req == "auto":
        eps_req = None
        if need_convex and space.is_static and space.c0 > 1e-12:
            eps_req = monitors.epsilon0_bound(space, space.r_max)
    rng = np.random.Generator(np.random.Philox(seed))
    base = float(space.gamma_of_r(r_base))
    reports = []
    all_ok = True
    for idx in range(count):
        state = _rejection_sample(space, grid, rng, base, max_modes, amplitude,
                                  need_convex, eps_req)
        verdicts = monitors.check_inequalities(
            space, state, profiles,
            smin_tol=float(mon.get("smin_tol", 1e-8)),
            floor=float(mon.get("ineq_floor", 1e-8)),
            eps_requirement=eps_req)
        ok = all(v.passed for v in verdicts if v.applicable)
        all_ok = all_ok and ok
        reports.append({
            "graph": idx,
            "closeness": closeness(space, state),
            "verdicts": [v.to_dict() for v in verdicts],
        })
        _say(quiet, f"graph {idx}: {'PASS' if ok else 'FAIL'}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _json_dump(reports, out / "inequalities.json")
    return 0 if all_ok else 1


def _rejection_sample(space, grid, rng, gamma_base, max_modes, amplitude,
                      need_convex, eps_req, max_tries=200):
    """Draw seeded band-limited graphs until static convex and epsilon-close."""
    for _ in range(max_tries):
        pert = random_perturbation(grid, rng, max_modes, amplitude)
        gamma = gamma_base + pert
        lo = space.gamma_min + 1e-9
        hi = space.gamma_max - 1e-9
        if np.min(gamma) < lo or np.max(gamma) > hi:
            amplitude *= 0.7
            continue
        state = GraphState(grid, gamma)
        if eps_req is not None and closeness(space, state) > 0.5 * eps_req:
            amplitude *= 0.7
            continue
        if need_convex:
            fields = compute_fields(space, state)
            if float(np.min(fields.s_min)) < 0.0:
                amplitude *= 0.7
                continue
        return state
    raise ConfigError("could not sample an admissible random graph; "
                      "reduce ensemble.amplitude")


def cmd_sweep(cfg, out_dir, seed, quiet=False):
    """Fan a list of overridden configs out across worker processes.

    Each run owns its output directory, so workers share no mutable state;
    ``workers: 1`` (the default) keeps everything in-process.
    """
    base = cfg.get("base")
    runs = cfg.get("runs")
    if not isinstance(base, dict) or not isinstance(runs, list):
        raise ConfigError("sweep config needs 'base' (object) and 'runs' (array)")
    validate_config(base)
    workers = int(cfg.get("workers", 1))
    jobs = []
    for entry in runs:
        name = entry.get("name")
        if not name:
            raise ConfigError("each sweep run needs a name")
        sub = json.loads(json.dumps(base))
        for path, value in (entry.get("overrides") or {}).items():
            _apply_override(sub, path, value)
        validate_config(sub)
        jobs.append((name, sub, str(Path(out_dir) / name), seed))

    status = 0
    if workers <= 1:
        results = [(name, cmd_simulate(sub, out, sd, quiet))
                   for name, sub, out, sd in jobs]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(name, pool.submit(_sweep_worker, sub, out, sd))
                       for name, sub, out, sd in jobs]
            results = [(name, fut.result()) for name, fut in futures]
    for name, rc in results:
        _say(quiet, f"sweep run {name}: exit {rc}")
        status = max(status, rc)
    return status


def _sweep_worker(sub_cfg, out_dir, seed):
    return cmd_simulate(sub_cfg, out_dir, seed, quiet=True)


def _apply_override(cfg, dotted, value):
    parts = dotted.split(".")
    node = cfg
    for key in parts[:-1]:
        if isinstance(node, list):
            node = node[int(key)]
        else:
            node = node.setdefault(key, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wvpflow",
        description="Weighted-volume-preserving curvature flow simulator")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify-space", "profiles", "inequalities", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON config file")
    args = parser.parse_args(argv)

    handlers = {
        "simulate": cmd_simulate,
        "verify-space": cmd_verify_space,
        "profiles": cmd_profiles,
        "inequalities": cmd_inequalities,
        "sweep": cmd_sweep,
    }
    try:
        cfg = load_config(args.config)
        out_dir = args.out or (cfg.get("output") or {}).get("dir") or "out"
        rc = handlers[args.command](cfg, out_dir, args.seed, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainEscapeError, SchemeInstabilityError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    return rc


if __name__ == "__main__":
    sys.exit(main())
