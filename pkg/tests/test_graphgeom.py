import numpy as np
import pytest

from wvpflow.errors import DomainEscapeError
from wvpflow.graphgeom import (
    GraphState,
    closeness,
    compute_fields,
    conformal_identity_residual,
    conformal_trace_integral,
    mean_curvature_graphform,
)
from wvpflow.grid import build_grid
from wvpflow.warp import WarpedSpace


@pytest.fixture(scope="module")
def hyp():
    return WarpedSpace.hyperbolic(2, r_max=5.0, r_min=0.0, r_ref=1.0)


@pytest.fixture(scope="module")
def hyp3():
    return WarpedSpace.hyperbolic(3, r_max=5.0, r_min=0.0, r_ref=1.0)


def slice_state(space, grid, r):
    return GraphState(grid, np.full(grid.node_count, float(space.gamma_of_r(r))))


def bumpy_state(space, grid, r_base, coeffs):
    gamma = np.full(grid.node_count, float(space.gamma_of_r(r_base)))
    for k, a in coeffs:
        gamma = gamma + a * np.cos(k * grid.theta)
    return GraphState(grid, gamma)


def test_slice_fields_closed_forms(hyp):
    grid = build_grid("axisym", 2, 64)
    st = slice_state(hyp, grid, 1.3)
    f = compute_fields(hyp, st)
    phi, p1, p2, _ = (float(v[0]) for v in hyp.phi(np.full(1, 1.3)))
    assert np.allclose(f.omega, 1.0, atol=1e-14)
    assert np.allclose(f.u, phi, rtol=1e-11)
    assert np.allclose(f.kappa, p1 / phi, rtol=1e-11)
    assert np.allclose(f.H, 2 * p1 / phi, rtol=1e-11)
    assert np.allclose(f.s_min, (p1**2 - phi * p2) / (phi * p1), rtol=1e-9)


def test_euclidean_unit_sphere():
    eu = WarpedSpace.euclidean(2, r_max=4.0, r_min=0.0, r_ref=1.0)
    grid = build_grid("axisym", 2, 64)
    st = slice_state(eu, grid, 1.0)
    f = compute_fields(eu, st)
    assert np.allclose(f.H, 2.0, rtol=1e-11)
    assert np.allclose(f.u, 1.0, rtol=1e-11)
    assert np.allclose(f.sigma2, 1.0, rtol=1e-11)
    assert np.allclose(f.sigma3, 0.0, atol=1e-12)


def test_trace_consistency_and_eigen(hyp3):
    grid = build_grid("axisym", 3, 128)
    st = bumpy_state(hyp3, grid, 1.2, [(1, 0.05), (3, -0.02)])
    f = compute_fields(hyp3, st)
    tr = grid.block_trace(f.weingarten)
    assert np.max(np.abs(tr - f.H) / np.abs(f.H)) < 1e-10
    # kappa reproduces sigma_2 via pairwise products
    k = f.kappa
    e2 = (k.sum(axis=1) ** 2 - (k**2).sum(axis=1)) / 2.0
    assert np.max(np.abs(e2 - f.sigma2) / np.maximum(np.abs(f.sigma2), 1e-12)) < 1e-10


def test_mean_curvature_dual_formulas(hyp):
    grid = build_grid("axisym", 2, 512)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.04), (2, 0.02), (5, -0.005)])
    f = compute_fields(hyp, st)
    hg = mean_curvature_graphform(hyp, st)
    rel = np.max(np.abs(hg - f.H)) / np.max(np.abs(f.H))
    assert rel < 1e-8


def test_near_slice_graphs_mean_convex(hyp):
    grid = build_grid("axisym", 2, 128)
    rng = np.random.default_rng(4)
    for _ in range(5):
        coeffs = [(k, 0.05 * rng.standard_normal() / k**2) for k in range(1, 5)]
        st = bumpy_state(hyp, grid, 1.0, coeffs)
        if closeness(hyp, st) > 0.1:
            continue
        f = compute_fields(hyp, st)
        assert np.all(f.H > 0)


def test_closeness(hyp):
    grid = build_grid("axisym", 2, 256)
    st = slice_state(hyp, grid, 1.0)
    assert closeness(hyp, st) == 0.0
    st2 = bumpy_state(hyp, grid, 1.0, [(1, 0.05)])
    eps = closeness(hyp, st2)
    assert eps == pytest.approx(0.0025, rel=1e-6)
    f = compute_fields(hyp, st2)
    assert np.all(f.u**2 / f.phi**2 >= 1.0 / (1.0 + eps) - 1e-14)


def test_domain_escape(hyp):
    grid = build_grid("axisym", 2, 64)
    gamma = np.full(grid.node_count, float(hyp.gamma_of_r(4.9)))
    gamma[10] = hyp.gamma_max + 0.5
    with pytest.raises(DomainEscapeError) as exc:
        compute_fields(hyp, GraphState(grid, gamma))
    assert exc.value.node == 10


def test_conformal_identity_slice(hyp):
    grid = build_grid("axisym", 2, 64)
    st = slice_state(hyp, grid, 1.5)
    assert conformal_identity_residual(hyp, st) < 1e-11
    assert abs(conformal_trace_integral(hyp, st)) < 1e-10


def test_conformal_identity_refinement(hyp):
    coeffs = [(1, 0.04), (2, -0.02), (3, 0.01)]
    res = {}
    for n in (96, 192):
        grid = build_grid("axisym", 2, n)
        st = bumpy_state(hyp, grid, 1.0, coeffs)
        res[n] = conformal_identity_residual(hyp, st)
    assert res[96] / res[192] > 8.0  # 4th-order stencils


def test_conformal_trace_integral_small(hyp):
    grid = build_grid("axisym", 2, 256)
    st = bumpy_state(hyp, grid, 1.0, [(1, 0.04), (2, -0.02)])
    assert abs(conformal_trace_integral(hyp, st)) < 1e-6


def test_conformal_identity_latlong(hyp):
    res = {}
    for n in (24, 48):
        grid = build_grid("latlong", 2, n)
        gamma = np.full(grid.node_count, float(hyp.gamma_of_r(1.0)))
        gamma += 0.04 * np.cos(grid.theta)
        gamma += 0.02 * np.sin(grid.theta) ** 2 * np.cos(2 * grid.psi)
        res[n] = conformal_identity_residual(hyp, GraphState(grid, gamma))
    assert res[24] / res[48] > 2.5  # 2nd-order stencils


def test_strict_convex_point_detector(hyp):
    # any closed non-slice graph in an admissible static space has a strictly
    # static convex point where phi^2 is maximal
    grid = build_grid("axisym", 2, 128)
    rng = np.random.default_rng(12)
    found = 0
    for _ in range(10):
        coeffs = [(k, 0.2 * rng.standard_normal() / k**2) for k in range(1, 5)]
        st = bumpy_state(hyp, grid, 1.0, coeffs)
        try:
            f = compute_fields(hyp, st)
        except DomainEscapeError:
            continue
        node = int(np.argmax(f.phi**2))
        assert f.s_min[node] > 0.0
        found += 1
    assert found >= 5


def test_latlong_frame_covariance(hyp):
    grid = build_grid("latlong", 2, 16)
    gamma = np.full(grid.node_count, float(hyp.gamma_of_r(1.0)))
    gamma += 0.03 * np.cos(grid.theta)
    gamma += 0.02 * np.sin(grid.theta) ** 2 * np.cos(2 * grid.psi + 0.4)
    k = 7
    f1 = compute_fields(hyp, GraphState(grid, grid.rotate_psi(gamma, k)))
    f0 = compute_fields(hyp, GraphState(grid, gamma))
    for name in ("H", "u", "sigma2", "s_min"):
        a = getattr(f1, name)
        b = grid.rotate_psi(getattr(f0, name), k)
        assert np.max(np.abs(a - b)) < 1e-13


def test_circle_graph_geometry():
    hyp1 = WarpedSpace.hyperbolic(1, r_max=4.0, r_min=0.0, r_ref=1.0)
    grid = build_grid("circle", 1, 128)
    gamma = np.full(grid.node_count, float(hyp1.gamma_of_r(1.0)))
    st = GraphState(grid, gamma)
    f = compute_fields(hyp1, st)
    phi, p1, _, _ = (float(v) for v in hyp1.phi(1.0))
    assert np.allclose(f.H, p1 / phi, rtol=1e-11)
    assert f.kappa.shape == (grid.node_count, 1)
