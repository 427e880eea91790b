import numpy as np
import pytest

from wvpflow.errors import ConfigError, FieldShapeError
from wvpflow.grid import build_grid
from wvpflow._numutil import unit_sphere_area


def band_limited(theta, coeffs):
    f = np.zeros_like(theta)
    d1 = np.zeros_like(theta)
    d2 = np.zeros_like(theta)
    for k, a in coeffs:
        f += a * np.cos(k * theta)
        d1 += -a * k * np.sin(k * theta)
        d2 += -a * k**2 * np.cos(k * theta)
    return f, d1, d2


COEFFS = [(1, 0.7), (2, -0.4), (3, 0.2), (4, 0.1)]


def test_build_grid_validation():
    with pytest.raises(ConfigError):
        build_grid("circle", 2, 64)
    with pytest.raises(ConfigError):
        build_grid("latlong", 3, 16)
    with pytest.raises(ConfigError):
        build_grid("axisym", 2, 4)
    with pytest.raises(ConfigError):
        build_grid("mesh", 2, 64)


def test_weight_sums():
    assert build_grid("circle", 1, 64).node_count == 64
    assert build_grid("circle", 1, 64).quad_weights.sum() == pytest.approx(
        2 * np.pi, rel=1e-12)
    for n, total in ((2, 4 * np.pi), (3, 2 * np.pi**2), (4, unit_sphere_area(4))):
        g = build_grid("axisym", n, 256)
        assert g.quad_weights.sum() == pytest.approx(total, rel=1e-10)
    g = build_grid("latlong", 2, 24)
    assert g.quad_weights.sum() == pytest.approx(4 * np.pi, rel=1e-10)


def test_quadrature_exactness_cos_polynomials():
    g = build_grid("axisym", 2, 64)
    x = np.cos(g.theta)
    for k in range(0, 30):
        exact = 2 * np.pi * (1 - (-1) ** (k + 1)) / (k + 1)
        assert g.integrate(x**k) == pytest.approx(exact, abs=1e-10)
    # n = 3: integral of cos^k over S^3 has weight sin^2
    g3 = build_grid("axisym", 3, 64)
    x3 = np.cos(g3.theta)
    assert g3.integrate(x3**2) == pytest.approx(unit_sphere_area(3) / 4, rel=1e-10)


def test_integrate_examples():
    g = build_grid("axisym", 2, 128)
    assert g.integrate(np.ones(g.node_count)) == pytest.approx(4 * np.pi, rel=1e-12)
    assert g.integrate(np.cos(g.theta) ** 2) == pytest.approx(4 * np.pi / 3, rel=1e-11)
    assert abs(g.integrate(np.cos(g.theta))) < 1e-12


def test_integrate_shape_error():
    g = build_grid("axisym", 2, 32)
    with pytest.raises(FieldShapeError):
        g.integrate(np.ones(7))


def test_gradient_constant_and_analytic():
    g = build_grid("axisym", 2, 256)
    gs, comps = g.gradient_sq(np.full(g.node_count, 2.5))
    assert np.max(np.abs(gs)) == 0.0
    gs, _ = g.gradient_sq(np.cos(g.theta))
    assert np.max(np.abs(gs - np.sin(g.theta) ** 2)) < 1e-8

    c = build_grid("circle", 1, 512)
    gs, _ = c.gradient_sq(np.sin(c.theta))
    assert np.max(np.abs(gs - np.cos(c.theta) ** 2)) < 1e-8


def test_laplacian_eigenfunction():
    for n in (2, 3):
        g = build_grid("axisym", n, 256)
        f = np.cos(g.theta)
        assert np.max(np.abs(g.laplacian(f) + n * f)) < 2e-7
    c = build_grid("circle", 1, 128)
    f = np.sin(c.theta)
    assert np.max(np.abs(c.laplacian(f) + f)) < 1e-7
    ll = build_grid("latlong", 2, 64)
    f = np.sin(ll.theta) ** 2 * np.cos(2 * ll.psi)   # degree-2 harmonic
    assert np.max(np.abs(ll.laplacian(f) + 6 * f)) < 1e-2
    f1 = np.cos(ll.theta)
    assert np.max(np.abs(ll.laplacian(f1) + 2 * f1)) < 1e-2


def test_hessian_constant_zero_and_trace():
    g = build_grid("axisym", 2, 128)
    H = g.hessian(np.full(g.node_count, 1.3))
    assert np.max(np.abs(H)) == 0.0
    f, _, _ = band_limited(g.theta, COEFFS)
    assert np.max(np.abs(g.block_trace(g.hessian(f)) - g.laplacian(f))) < 1e-12


def test_pole_regularity():
    for n in (2, 3):
        g = build_grid("axisym", n, 64)
        f, _, _ = band_limited(g.theta, COEFFS)
        for arr in (g.laplacian(f), g.hessian(f).ravel(), g.gradient(f).ravel()):
            assert np.all(np.isfinite(arr))
    ll = build_grid("latlong", 2, 16)
    f = np.cos(ll.theta) + 0.3 * np.sin(ll.theta) ** 2 * np.cos(2 * ll.psi)
    for arr in (ll.laplacian(f), ll.hessian(f).ravel(), ll.gradient(f).ravel()):
        assert np.all(np.isfinite(arr))


def _op_errors(grid, n):
    f, d1, d2 = band_limited(grid.theta, COEFFS)
    lap_exact = d2 + (n - 1) * np.where(
        grid._pole_mask, d2,
        np.cos(grid.theta) / np.where(grid._pole_mask, 1.0, np.sin(grid.theta)) * d1)
    grad_err = np.max(np.abs(grid.gradient(f)[:, 0] - d1))
    lap_err = np.max(np.abs(grid.laplacian(f) - lap_exact))
    return grad_err, lap_err


@pytest.mark.parametrize("n", [2, 3])
def test_operator_convergence_order_axisym(n):
    p = 4
    e1 = _op_errors(build_grid("axisym", n, 64), n)
    e2 = _op_errors(build_grid("axisym", n, 128), n)
    for a, b in zip(e1, e2):
        ratio = a / b
        assert 2 ** (p - 0.5) < ratio < 2 ** (p + 1.5)


def test_operator_convergence_order_latlong():
    p = 2

    def errs(res):
        g = build_grid("latlong", 2, res)
        f = np.sin(g.theta) ** 2 * np.cos(2 * g.psi)
        return np.max(np.abs(g.laplacian(f) + 6 * f))

    ratio = errs(16) / errs(32)
    assert 2 ** (p - 0.5) < ratio < 2 ** (p + 0.5)


def ricci_identity_residual(grid, n, f):
    """Residual of Delta|Df|^2 = 2|D^2 f|^2 + 2<Df, D(Delta f)> + 2(n-1)|Df|^2."""
    gs, comps = grid.gradient_sq(f)
    lap_f = grid.laplacian(f)
    hess = grid.hessian(f)
    lhs = grid.laplacian(gs)
    grad_lap = grid.gradient(lap_f)
    inner = np.einsum("ia,ia->i", comps, grad_lap)
    rhs = 2.0 * grid.block_norm_sq(hess) + 2.0 * inner + 2.0 * (n - 1) * gs
    return np.max(np.abs(lhs - rhs))


def test_discrete_ricci_identity_refinement():
    coeffs = [(1, 0.05), (2, -0.03), (3, 0.015)]
    res_by_n = {}
    for res in (64, 128):
        g = build_grid("axisym", 2, res)
        f, _, _ = band_limited(g.theta, coeffs)
        res_by_n[res] = ricci_identity_residual(g, 2, f)
    ratio = res_by_n[64] / res_by_n[128]
    assert ratio > 8.0  # 4th-order stencils

    ll_res = {}
    for res in (16, 32):
        g = build_grid("latlong", 2, res)
        f = 0.05 * np.cos(g.theta) + 0.02 * np.sin(g.theta) ** 2 * np.cos(2 * g.psi)
        ll_res[res] = ricci_identity_residual(g, 2, f)
    assert ll_res[16] / ll_res[32] > 2.0  # 2nd-order stencils


def test_latlong_rotation_symmetry():
    g = build_grid("latlong", 2, 16)
    rng = np.random.default_rng(2)
    f = 0.1 * np.cos(g.theta)
    for k in (1, 3):
        f += 0.05 / k * np.sin(g.theta) ** k * np.cos(k * g.psi + 0.3)
    k = 5
    rot = g.rotate_psi(f, k)
    assert np.array_equal(g.laplacian(rot), g.rotate_psi(g.laplacian(f), k))
    gs_rot, _ = g.gradient_sq(rot)
    gs, _ = g.gradient_sq(f)
    assert np.array_equal(gs_rot, g.rotate_psi(gs, k))
