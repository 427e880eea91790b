import numpy as np
import pytest
from scipy.integrate import fixed_quad, quad

from wvpflow.errors import ConfigError, DomainError, RangeError, StateError
from wvpflow.warp import WarpedSpace

from oracles import gamma_quad, riemann_oracle_value


@pytest.fixture(scope="module")
def hyp():
    return WarpedSpace.hyperbolic(2, r_max=5.0, r_min=0.0, r_ref=1.0)


@pytest.fixture(scope="module")
def schw():
    return WarpedSpace.schwarzschild(2, r_max=5.0, m=1.0)


def test_eval_phi_elementary_values(hyp):
    phi, p1, p2, p3 = (float(v) for v in hyp.phi(0.0))
    assert (phi, p1, p2, p3) == (0.0, 1.0, 0.0, 1.0)
    eu = WarpedSpace.euclidean(2, r_max=4.0, r_min=0.0, r_ref=1.0)
    assert tuple(float(v) for v in eu.phi(2.0)) == (2.0, 1.0, 0.0, 0.0)


def test_eval_phi_schwarzschild_neck(schw):
    lam, p1, p2, p3 = (float(v) for v in schw.phi(0.0))
    assert lam == pytest.approx(2.0, abs=1e-12)
    assert p1 == pytest.approx(0.0, abs=1e-9)
    assert p2 == pytest.approx(0.25, rel=1e-10)
    assert p3 == pytest.approx(0.0, abs=1e-9)


def test_eval_phi_domain_error(hyp):
    with pytest.raises(DomainError):
        hyp.phi(6.0)
    with pytest.raises(DomainError):
        hyp.phi(-0.5)


def test_gamma_euclidean_is_log():
    eu = WarpedSpace.euclidean(2, r_max=4.0, r_min=0.0, r_ref=1.0)
    assert float(eu.gamma_of_r(np.e)) == pytest.approx(1.0, abs=1e-12)
    rs = np.linspace(0.2, 3.9, 50)
    assert np.allclose(eu.gamma_of_r(rs), np.log(rs), atol=1e-12)


def test_gamma_roundtrip(hyp, schw):
    rng = np.random.default_rng(7)
    for space, lo in ((hyp, 0.05), (schw, 0.0)):
        r = rng.uniform(lo + 0.05, space.r_max - 0.05, 100)
        back = space.r_of_gamma(space.gamma_of_r(r))
        assert np.max(np.abs(back - r)) < 1e-12


def test_gamma_hyperbolic_closed_form(hyp):
    # antiderivative of 1/sinh is log tanh(r/2)
    expected = np.log(np.tanh(1.0)) - np.log(np.tanh(0.5))
    assert float(hyp.gamma_of_r(2.0)) == pytest.approx(expected, abs=1e-11)
    val = gamma_quad(hyp, 3.7, 1.0)
    assert float(hyp.gamma_of_r(3.7)) == pytest.approx(val, abs=1e-10)


def test_gamma_monotone(hyp):
    rs = np.sort(np.random.default_rng(3).uniform(0.05, 4.9, 200))
    g = hyp.gamma_of_r(rs)
    assert np.all(np.diff(g) > 0)
    phi = hyp.phi(rs)[0]
    assert np.all(np.diff(phi) > 0)


def test_gamma_requires_anchor_when_phi_vanishes():
    with pytest.raises(ConfigError):
        WarpedSpace.hyperbolic(2, r_max=3.0, r_min=0.0)  # no r_ref


def test_gamma_range_errors(hyp):
    with pytest.raises(DomainError):
        hyp.r_of_gamma(hyp.gamma_max + 1.0)


def test_riemann_constant_curvature(hyp):
    e1 = np.array([0.0, 1.0, 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    val = hyp.riemann(1.3, e1, e2, e1, e2)
    assert val == pytest.approx(-1.0, rel=1e-12)


def test_riemann_radial_tangential_component(hyp, schw):
    er = np.array([1.0, 0.0, 0.0])
    for space in (hyp, schw):
        for r in (0.8, 2.0, 3.5):
            phi, p1, p2, _ = (float(v) for v in space.phi(r))
            for i in range(2):
                ei = np.zeros(3)
                ei[1 + i] = 1.0
                val = space.riemann(r, ei, er, ei, er)
                assert val == pytest.approx(-p2 / phi, rel=1e-11, abs=1e-13)


def test_riemann_symmetries(schw):
    rng = np.random.default_rng(11)
    for _ in range(25):
        r = rng.uniform(0.5, 4.5)
        X, Y, Z, W = (rng.uniform(-1, 1, 3) for _ in range(4))
        v = schw.riemann(r, X, Y, Z, W)
        assert schw.riemann(r, Y, X, Z, W) == pytest.approx(-v, abs=1e-12)
        assert schw.riemann(r, X, Y, W, Z) == pytest.approx(-v, abs=1e-12)
        assert schw.riemann(r, Z, W, X, Y) == pytest.approx(v, abs=1e-12)


def test_riemann_matches_fd_oracle(schw):
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = (rng.uniform(0.8, 4.0), rng.uniform(0.5, np.pi - 0.5),
             rng.uniform(0.3, 5.0))
        X, Y, Z, W = (rng.uniform(-1, 1, 3) for _ in range(4))
        closed = schw.riemann(x[0], X, Y, Z, W)
        oracle = riemann_oracle_value(schw, x, X, Y, Z, W)
        assert abs(closed - oracle) < 1e-6 * max(1.0, abs(closed), abs(oracle))


def test_ricci_scalar_values(hyp):
    rad, tan, scal = (float(v) for v in hyp.ricci_scalar(1.1))
    assert scal == pytest.approx(-6.0, rel=1e-12)
    assert rad == pytest.approx(-2.0, rel=1e-12)
    eu = WarpedSpace.euclidean(2, r_max=4.0, r_min=0.0, r_ref=1.0)
    assert np.allclose([float(v) for v in eu.ricci_scalar(2.0)], 0.0, atol=1e-14)


def test_ricci_scalar_constant_on_static(schw):
    rs = np.linspace(0.3, 4.8, 50)
    scal = schw.ricci_scalar(rs)[2]
    assert np.max(np.abs(scal - scal[0])) < 1e-10


def test_staticity_hyperbolic(hyp):
    rep = hyp.staticity_report()
    assert rep.is_static and rep.is_substatic
    assert abs(rep.c0) < 1e-10


def test_staticity_schwarzschild(schw):
    rep = schw.staticity_report()
    assert rep.is_static
    # C0 = m(n+1) from (phi')^2 - phi phi'' = 1 - m(n+1) lambda^(1-n)
    assert rep.c0 == pytest.approx(3.0, rel=1e-9)
    assert rep.c0_deviation < 1e-9 * 3.0 + 1e-12


def test_static_constancy_sample_std(schw):
    rs = np.linspace(0.2, 4.9, 400)
    phi, p1, p2, _ = schw.phi(rs)
    samples = phi ** (schw.n - 1) * (p1**2 - phi * p2 - 1.0)
    assert np.std(samples) < 1e-9 * abs(schw.c0) + 1e-12


def test_custom_exponential_substatic_not_static():
    rs = np.linspace(0.1, 2.0, 800)
    e = np.exp(rs)
    space = WarpedSpace.custom(2, rs, e, e, e, e)
    rep = space.staticity_report()
    assert rep.is_substatic and not rep.is_static
    # residual of the staticity ODE is (n-1) e^r for phi = e^r
    r_test = np.array([0.5, 1.0, 1.5])
    phi, p1, p2, p3 = space.phi(r_test)
    res = phi**2 * p3 + (space.n - 2) * phi * p1 * p2 - (space.n - 1) * p1 * (p1**2 - 1)
    assert np.allclose(res, (space.n - 1) * np.exp(r_test), rtol=1e-7)


def test_schwarzschild_r0(schw):
    r0 = schw.schwarzschild_r0()
    lam_r0 = float(schw.phi(r0)[0])
    assert lam_r0 == pytest.approx(3.0, rel=1e-10)

    # independent oracle: r0 = integral_2^3 dlam / sqrt(1 - 2/lam), computed
    # with the sqrt-singularity substitution lam = 2 + tau^2 by two rules
    def g(tau):
        return 2.0 * tau / np.sqrt(1.0 - 2.0 / (2.0 + tau**2))

    v1 = quad(g, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)[0]
    v2 = fixed_quad(g, 0.0, 1.0, n=60)[0]
    assert abs(v1 - v2) < 1e-8
    assert r0 == pytest.approx(v1, abs=1e-8)


def test_schwarzschild_r0_n3():
    sp = WarpedSpace.schwarzschild(3, r_max=4.0, m=1.0)
    lam_r0 = float(sp.phi(sp.schwarzschild_r0())[0])
    assert lam_r0 == pytest.approx(2.0, rel=1e-10)


def test_r0_requires_black_hole_family(hyp):
    with pytest.raises(StateError):
        hyp.schwarzschild_r0()


def test_ads_schwarzschild_static_and_admissible():
    sp = WarpedSpace.ads_schwarzschild(2, r_max=3.0, m=1.0, kappa=0.5)
    rep = sp.staticity_report()
    assert rep.is_static
    assert rep.c0 == pytest.approx(3.0, rel=1e-8)
    r0 = sp.schwarzschild_r0()
    q = sp.phi(r0)[1] ** 2 - sp.phi(r0)[0] * sp.phi(r0)[2]
    assert abs(q) < 1e-9


def test_sphere_flags():
    sp = WarpedSpace.sphere(2, r_max=1.4, r_min=0.0, r_ref=0.7)
    assert sp.is_static
    assert abs(sp.c0) < 1e-10
    assert not sp.is_admissible  # phi'' < 0
    with pytest.raises(ConfigError):
        WarpedSpace.sphere(2, r_max=1.8, r_min=0.0, r_ref=0.7)  # phi' < 0 inside


def test_admissibility_flags(hyp, schw):
    assert hyp.is_admissible
    assert hyp.convexity_lower_ok
    assert not schw.is_admissible  # interval includes r < r0
    schw_adm = WarpedSpace.schwarzschild(2, r_max=5.0, m=1.0,
                                         r_min=schw.schwarzschild_r0())
    assert schw_adm.is_admissible


def test_custom_table_file_roundtrip(tmp_path):
    rs = np.linspace(0.5, 2.5, 600)
    cosh, sinh = np.cosh(rs), np.sinh(rs)
    path = tmp_path / "phi.txt"
    np.savetxt(path, np.column_stack([rs, sinh, cosh, sinh, cosh]))
    from wvpflow.warp import load_custom_table
    sp = load_custom_table(path, 2, r_ref=1.0)
    assert sp.is_static
    phi, p1, _, _ = (float(v) for v in sp.phi(1.3))
    assert phi == pytest.approx(np.sinh(1.3), rel=1e-9)
    assert p1 == pytest.approx(np.cosh(1.3), rel=1e-9)
