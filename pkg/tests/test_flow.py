import numpy as np
import pytest

from wvpflow.errors import ConfigError, DomainEscapeError, SchemeInstabilityError, WvpflowError
from wvpflow.flow import FlowConfig, run, speed, step
from wvpflow.functionals import SliceProfile
from wvpflow.graphgeom import GraphState
from wvpflow.grid import build_grid
from wvpflow.warp import WarpedSpace


@pytest.fixture(scope="module")
def hyp():
    return WarpedSpace.hyperbolic(2, r_max=5.0, r_min=0.0, r_ref=1.0)


def slice_state(space, grid, r):
    return GraphState(grid, np.full(grid.node_count, float(space.gamma_of_r(r))))


def bumpy_state(space, grid, r_base, coeffs):
    gamma = np.full(grid.node_count, float(space.gamma_of_r(r_base)))
    for k, a in coeffs:
        gamma = gamma + a * np.cos(k * grid.theta)
    return GraphState(grid, gamma)


def test_config_validation():
    with pytest.raises(ConfigError):
        FlowConfig(scheme="euler")
    with pytest.raises(ConfigError):
        FlowConfig(c_cfl=0.0)
    with pytest.raises(ConfigError):
        FlowConfig(dt_policy="fixed")  # needs dt > 0
    with pytest.raises(ConfigError):
        FlowConfig(grad_tol=-1.0)


def test_speed_vanishes_on_slices(hyp):
    grid = build_grid("axisym", 2, 64)
    st = slice_state(hyp, grid, 1.4)
    sp = speed(hyp, st)
    assert np.max(np.abs(sp.normal)) < 1e-11
    assert np.max(np.abs(sp.rate)) < 1e-11

    eu = WarpedSpace.euclidean(2, r_max=4.0, r_min=0.0, r_ref=1.0)
    st = slice_state(eu, grid, 1.0)
    assert np.max(np.abs(speed(eu, st).normal)) < 1e-12


def test_speed_dual_formulas(hyp):
    grid = build_grid("axisym", 2, 512)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.05), (3, -0.01)])
    sp = speed(hyp, st)
    rel = np.max(np.abs(sp.rate - sp.rate_expanded)) / np.max(np.abs(sp.rate))
    assert rel < 1e-8


def test_slice_is_stationary_rk4(hyp):
    grid = build_grid("axisym", 2, 64)
    st = slice_state(hyp, grid, 1.0)
    cfg = FlowConfig(dt_policy="fixed", dt=1e-3)
    cur = st
    for _ in range(50):
        cur = step(hyp, cur, cfg)
    assert np.max(np.abs(cur.gamma - st.gamma)) == 0.0


def test_slice_is_stationary_imex(hyp):
    grid = build_grid("axisym", 2, 64)
    st = slice_state(hyp, grid, 1.0)
    cfg = FlowConfig(scheme="imex", dt_policy="fixed", dt=5e-3)
    cur = st
    for _ in range(100):
        cur = step(hyp, cur, cfg)
    assert np.max(np.abs(cur.gamma - st.gamma)) < 1e-9


def test_rk4_dt_convergence_order(hyp):
    grid = build_grid("axisym", 2, 16)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.05), (2, -0.02)])

    def final_gamma(dt):
        cfg = FlowConfig(dt_policy="fixed", dt=dt)
        cur = st
        for _ in range(int(round(1.0 / dt))):
            cur = step(hyp, cur, cfg)
        return cur.gamma

    g1 = final_gamma(0.01)
    g2 = final_gamma(0.005)
    g3 = final_gamma(0.0025)
    e1 = np.max(np.abs(g1 - g2))
    e2 = np.max(np.abs(g2 - g3))
    order = np.log2(e1 / e2)
    assert 3.5 < order < 4.5


def test_imex_dt_convergence_order(hyp):
    grid = build_grid("axisym", 2, 16)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.05)])

    def final_gamma(dt):
        cfg = FlowConfig(scheme="imex", dt_policy="fixed", dt=dt)
        cur = st
        for _ in range(int(round(1.0 / dt))):
            cur = step(hyp, cur, cfg)
        return cur.gamma

    e1 = np.max(np.abs(final_gamma(0.02) - final_gamma(0.01)))
    e2 = np.max(np.abs(final_gamma(0.01) - final_gamma(0.005)))
    order = np.log2(e1 / e2)
    assert 0.6 < order < 1.5


def test_imex_stable_beyond_explicit_limit(hyp):
    grid = build_grid("axisym", 2, 128)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.05)])
    h2 = grid.min_spacing**2
    dt = 50 * h2  # far above the explicit parabolic limit
    cfg = FlowConfig(scheme="imex", dt_policy="fixed", dt=dt, t_max=2.0,
                     grad_tol=1e-9, monitors_every=50)
    tr = run(hyp, st, cfg)
    assert np.all(np.isfinite(tr.grad_history))
    assert tr.grad_history[-1, 1] < tr.grad_history[0, 1]


def _reference_run(hyp, resolution=64, grad_tol=1e-10):
    grid = build_grid("axisym", 2, resolution)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.05)])
    cfg = FlowConfig(t_max=50.0, grad_tol=grad_tol, monitors_every=500,
                     alphas=(0.0, 1.0, 2.0))
    return run(hyp, st, cfg), st


def test_run_converges_to_predicted_slice(hyp):
    tr, st0 = _reference_run(hyp)
    assert tr.converged
    prof = SliceProfile(hyp, 1.0)
    r_star = float(prof.r_of_volume(tr.columns["V_phi"][0]))
    assert abs(tr.r_infinity - r_star) < 1e-4
    # conserved weighted volume
    drift = np.max(np.abs(tr.columns["V_phi"] / tr.columns["V_phi"][0] - 1.0))
    assert drift < 1e-5


def test_run_gradient_monotone_and_decay(hyp):
    tr, _ = _reference_run(hyp)
    gh = tr.grad_history[:, 1]
    t = tr.grad_history[:, 0]
    assert not np.any(np.diff(gh) > gh[:-1] * 1e-13)
    # pointwise exponential bound with the slab rate
    assert np.all(gh <= gh[0] * np.exp(-tr.beta_hat * t) * (1 + 1e-9))
    # fitted rate beats the conservative bound
    assert tr.measured_decay_rate <= -0.9 * tr.beta_hat


def test_run_c0_sandwich(hyp):
    tr, st0 = _reference_run(hyp)
    r0 = hyp.r_of_gamma(st0.gamma)
    assert np.min(tr.columns["r_min_node"]) >= np.min(r0) - 1e-10
    assert np.max(tr.columns["r_max_node"]) <= np.max(r0) + 1e-10
    assert np.all(np.diff(tr.columns["t"]) > 0)
    assert np.all(tr.columns["dt"][1:] > 0)


def test_run_trace_columns(hyp):
    tr, _ = _reference_run(hyp)
    names = tr.column_names()
    assert names[:4] == ["t", "dt", "max_grad_sq", "V_phi"]
    assert "V_phi_alpha_0" in names and "V_phi_alpha_2" in names
    for c in names:
        assert len(tr.columns[c]) == tr.nrows
    assert tr.columns["max_speed"][-1] < 1e-4


def test_run_slice_input_trivial(hyp):
    grid = build_grid("axisym", 2, 64)
    st = slice_state(hyp, grid, 1.2)
    cfg = FlowConfig(t_max=1.0, grad_tol=1e-12)
    tr = run(hyp, st, cfg)
    assert tr.converged
    assert tr.t_final == 0.0
    assert abs(tr.r_infinity - 1.2) < 1e-9


def test_domain_escape_aborts(hyp):
    grid = build_grid("axisym", 2, 64)
    gamma = np.full(grid.node_count, float(hyp.gamma_of_r(4.9)))
    gamma[5] = hyp.gamma_max + 0.1
    cfg = FlowConfig(t_max=1.0)
    with pytest.raises(DomainEscapeError):
        run(hyp, GraphState(grid, gamma), cfg)


def test_nan_detection(hyp):
    grid = build_grid("axisym", 2, 64)
    gamma = np.full(grid.node_count, float(hyp.gamma_of_r(1.0)))
    gamma[3] = np.nan
    cfg = FlowConfig(t_max=1.0)
    with pytest.raises((SchemeInstabilityError, WvpflowError)):
        run(hyp, GraphState(grid, gamma), cfg)


def test_circle_flow_converges():
    hyp1 = WarpedSpace.hyperbolic(1, r_max=4.0, r_min=0.0, r_ref=1.0)
    grid = build_grid("circle", 1, 64)
    gamma = float(hyp1.gamma_of_r(1.0)) + 0.05 * np.cos(2 * grid.theta)
    cfg = FlowConfig(t_max=50.0, grad_tol=1e-10, monitors_every=500)
    tr = run(hyp1, GraphState(grid, gamma), cfg)
    assert tr.converged
    drift = np.max(np.abs(tr.columns["V_phi"] / tr.columns["V_phi"][0] - 1.0))
    assert drift < 1e-6


def test_latlong_flow_imex(hyp):
    grid = build_grid("latlong", 2, 16)
    gamma = np.full(grid.node_count, float(hyp.gamma_of_r(1.0)))
    gamma += 0.03 * np.cos(grid.theta)
    gamma += 0.02 * np.sin(grid.theta) ** 2 * np.cos(2 * grid.psi)
    cfg = FlowConfig(scheme="imex", dt_policy="fixed", dt=2e-3, t_max=3.0,
                     grad_tol=1e-8, monitors_every=200)
    tr = run(hyp, GraphState(grid, gamma), cfg)
    assert tr.grad_history[-1, 1] < 0.05 * tr.grad_history[0, 1]
    drift = np.max(np.abs(tr.columns["V_phi"] / tr.columns["V_phi"][0] - 1.0))
    assert drift < 1e-3
