import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sci

from hoskip import analytic
from hoskip.analytic import (
    Exact,
    ExactPolarJ,
    Interpolated,
    LowerBound,
    ModeUnsupported,
    NoInteriorMaximum,
    TauTable,
    small_speed_residual,
    eta,
    h0,
    h1,
    ho_probability,
    j_integral,
    k_beta,
    mu,
    skipped_area,
    sopt,
    sopt_integral,
    sopt_numeric,
    t0,
    t1,
    tau,
    utility,
)
from hoskip.model import (
    Constant,
    Erlang2,
    Exponential,
    HyperExp2,
    MobilityModel,
    NetworkParams,
    ValidationError,
)
from hoskip.quadrature import QuadratureSpec, integrate_nested

# independent oracle: scipy's QUADPACK on the closed-form beta = 4 integrand
# 1 / ((1+z)(1 + sqrt(z) atan(sqrt(z)))), frozen here
T0_BETA4_ORACLE = 1.4889876246658136


def test_k_beta_examples():
    assert k_beta(4) == pytest.approx(math.pi / 2, rel=1e-15)
    assert k_beta(3) == pytest.approx(4 * math.pi / (3 * math.sqrt(3)), rel=1e-15)
    assert k_beta(2.01) > 100
    with pytest.raises(ValidationError):
        k_beta(2.0)


def test_t0_beta4_matches_arctan_form(net_l1b4):
    v = t0(net_l1b4)
    assert v == pytest.approx(T0_BETA4_ORACLE, rel=1e-6)
    check, _ = sci.quad(lambda z: 1 / ((1 + z) * (1 + math.sqrt(z) * math.atan(math.sqrt(z)))),
                        0, math.inf, limit=200)
    assert v == pytest.approx(check, rel=1e-6)
    assert round(v, 2) == 1.49


def test_t0_noise_free_is_lambda_free():
    assert t0(NetworkParams(2, 4)) == t0(NetworkParams(1, 4))


def test_t0_double_integral_equals_reduced_form(net_l1b4):
    a = lambda z: float(analytic._interference_factor(z, 4.0))
    r = integrate_nested(lambda z, w: np.exp(-w * a(z)) / (1 + z),
                         [(0.0, math.inf), (0.0, math.inf)],
                         scales=[1.0, lambda z: 1 / a(z)])
    assert r.value == pytest.approx(t0(net_l1b4), rel=1e-4)


def test_t0_noise_lowers_rate_and_vanishes_with_lambda():
    clean = t0(NetworkParams(10, 3, 0))
    noisy = t0(NetworkParams(10, 3, 25))
    assert noisy < clean
    # more BSs per km^2 shrink the serving distance, so noise matters less
    assert t0(NetworkParams(1000, 3, 25)) == pytest.approx(clean, rel=1e-3)


def test_t0_full_output_reports_error(net_l1b3):
    r = t0(net_l1b3, full_output=True)
    assert 0 < r.err_est < 1e-5
    assert r.tail_bound <= 1e-6 * r.value


def test_j_zero_radius_and_u_zero(net_l1b3):
    assert j_integral(0.0, 2.0, 0.5, net_l1b3) == 0.0
    for r, z in [(0.3, 0.5), (1.0, 3.0), (2.0, 10.0)]:
        rad = j_integral(r, z, 0.0, net_l1b3, "radial")
        pol = j_integral(r, z, 0.0, net_l1b3, "polar")
        assert pol == pytest.approx(rad, rel=1e-6)


def test_j_domain_errors(net_l1b3):
    with pytest.raises(ValidationError):
        j_integral(-1, 1, 1, net_l1b3)
    with pytest.raises(ValidationError):
        j_integral(1, 0, 1, net_l1b3)
    with pytest.raises(ValidationError):
        j_integral(1, 1, 1, net_l1b3, method="spherical")


@settings(max_examples=100, deadline=None)
@given(r=st.floats(1e-3, 2.0), z=st.floats(1e-3, 10.0), u=st.floats(1e-3, 2.0),
       beta=st.sampled_from([3.0, 4.0]))
def test_j_polar_equals_radial(r, z, u, beta):
    net = NetworkParams(1.0, beta)
    rad = j_integral(r, z, u, net, "radial")
    pol = j_integral(r, z, u, net, "polar")
    assert abs(pol - rad) <= 1e-5 * abs(rad)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(1e-3, 3.0), z=st.floats(1e-4, 50.0), u=st.floats(0.0, 3.0))
def test_batched_j_matches_adaptive_j(r, z, u):
    net = NetworkParams(1.0, 3.0)
    ref = j_integral(r, z, u, net, "radial", QuadratureSpec(rel_tol=1e-10))
    fast = analytic._j_batch(np.array([r]), z, u, 3.0)[0]
    assert fast == pytest.approx(ref, rel=1e-7)


def test_mu_limits(net_l1b4):
    gaps = [mu(z, 0.3, net_l1b4) - 1 for z in (1e-4, 1e-8, 1e-12)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 1e-5
    for z in (0.01, 1.0, 30.0):
        for u in (0.0, 0.4):
            assert mu(z, u, net_l1b4) >= 1.0


def test_mu_at_unit_z_consistent_with_gap(net_l1b4):
    z = 1.0
    m = mu(z, 0.0, net_l1b4)
    gap = analytic._laplace_gap(z, 0.0, net_l1b4, QuadratureSpec(rel_tol=1e-9))
    assert gap == pytest.approx(math.exp(-math.pi * k_beta(4)) * (m - 1), rel=1e-6)


@pytest.mark.parametrize("beta", [3.0, 4.0])
def test_tau_at_zero_is_t0(beta):
    net = NetworkParams(1.0, beta)
    assert tau(0.0, net) == pytest.approx(t0(net), rel=1e-6)


def test_tau_bounds_and_monotonicity(net_l1b3):
    us = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    exact = [tau(u, net_l1b3) for u in us]
    lower = [tau(u, net_l1b3, LowerBound()) for u in us]
    assert all(lb <= ex + 1e-4 for lb, ex in zip(lower, exact))
    assert all(a > b for a, b in zip(exact, exact[1:]))


def test_tau_polar_mode_matches_radial(net_l1b4):
    spec = QuadratureSpec(rel_tol=1e-4)
    assert tau(0.3, net_l1b4, ExactPolarJ(), spec) == pytest.approx(tau(0.3, net_l1b4), rel=1e-3)


def test_tau_with_noise_at_zero_is_t0(net_dense_noisy):
    assert tau(0.0, net_dense_noisy) == pytest.approx(t0(net_dense_noisy), rel=1e-5)


def test_interpolated_mode(net_l1b3):
    assert tau(0.0, net_l1b3, Interpolated()) == t0(net_l1b3)
    assert Interpolated().eps(1.0) < 1e-4
    far = tau(1.5, net_l1b3, Interpolated())
    assert far == pytest.approx(tau(1.5, net_l1b3, LowerBound()), rel=1e-6)
    with pytest.raises(ValidationError):
        Interpolated(a=0)


def test_noise_rejects_bound_modes(net_dense_noisy):
    for mode in (LowerBound(), Interpolated()):
        with pytest.raises(ModeUnsupported):
            tau(0.1, net_dense_noisy, mode)


def test_negative_u_rejected(net_l1b3):
    with pytest.raises(ValidationError):
        tau(-0.1, net_l1b3)


def test_tau_table_interpolates_within_tolerance(net_l1b3):
    tab = TauTable(net_l1b3, LowerBound(), 2.0)
    assert tab.max_err < 1e-4
    for u in (0.013, 0.37, 1.234, 1.99):
        direct = tau(u, net_l1b3, LowerBound())
        assert abs(tab(u) - direct) <= 1e-4 * tab.values[0]
    with pytest.raises(ValueError):
        tab(2.5)


def test_t1_trivial_cases(net_l1b3):
    base = t0(net_l1b3)
    assert t1(1, net_l1b3, MobilityModel(Constant(0.3))) == pytest.approx(base, rel=1e-6)
    assert t1(500, net_l1b3, MobilityModel(Constant(0.0))) == pytest.approx(base, rel=1e-6)
    with pytest.raises(ValidationError):
        t1(0, net_l1b3, MobilityModel(Constant(0.1)))


def test_t1_constant_speed_is_slot_average(net_l1b3):
    s, v = 5, 0.1
    direct = np.mean([tau(t * v, net_l1b3, LowerBound()) for t in range(s)])
    got = t1(s, net_l1b3, MobilityModel(Constant(v)), LowerBound())
    assert got == pytest.approx(direct, rel=1e-4)


def test_t1_speed_expectation_matches_sampled_average(net_l1b3):
    s, mean = 4, 0.1
    tab = TauTable(net_l1b3, LowerBound(), 3 * (mean + 10 * mean * math.sqrt(1.5)))
    rng = np.random.default_rng(5)
    for dist in (Exponential(mean), Erlang2(mean), HyperExp2(mean)):
        v = dist.sample(rng, 200_000)
        v = v[v <= analytic.speed_support_max(dist)]
        mc = np.mean(np.mean([tab(t * v) for t in range(s)], axis=0))
        got = t1(s, net_l1b3, MobilityModel(dist), LowerBound(), table=tab)
        assert got == pytest.approx(mc, rel=3e-3)


def test_t1_nonincreasing_in_s(net_l1b3):
    mob = MobilityModel(Constant(1e-3))
    tab = TauTable(net_l1b3, LowerBound(), 1.0)
    vals = [t1(s, net_l1b3, mob, LowerBound(), table=tab) for s in (1, 10, 100, 400, 1000)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_h0_examples():
    assert h0(NetworkParams(10, 3), MobilityModel(Constant(1e-5))) == pytest.approx(
        4 * math.sqrt(10) * 1e-5 / math.pi, rel=1e-15)
    assert h0(NetworkParams(10, 3), MobilityModel(Constant(0.0))) == 0.0
    assert 4 * math.sqrt(10) * 1e-5 / math.pi == pytest.approx(4.0265e-5, rel=1e-4)


def test_eta_zero_displacement():
    for r, phi in [(0.5, 0.3), (2.0, 2.0), (1.0, math.pi)]:
        assert eta(r, 0.0, phi) == pytest.approx(math.pi * r * r, rel=1e-14)


def test_eta_continuity_point():
    assert eta(1.0, 1.0, 0.0) == pytest.approx(math.pi)


def test_eta_domain():
    with pytest.raises(ValidationError):
        eta(-1, 1, 1)
    with pytest.raises(ValidationError):
        eta(1, 1, 4.0)


def _closed_form_eta(r, l, phi):
    w = math.sqrt(r * r + l * l - 2 * r * l * math.cos(phi))
    return w * w * math.acos((r * math.cos(phi) - l) / w) + r * r * (math.pi - phi) + r * l * math.sin(phi)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.01, 3), l=st.floats(0.01, 3), phi=st.floats(0.01, math.pi - 0.01))
def test_eta_stable_form_matches_closed_form(r, l, phi):
    assert eta(r, l, phi) == pytest.approx(_closed_form_eta(r, l, phi), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.0, 3), l=st.floats(0.0, 3), phi=st.floats(0.0, math.pi))
def test_eta_at_least_disk_area(r, l, phi):
    assert eta(r, l, phi) >= math.pi * r * r * (1 - 1e-12) - 1e-15


@pytest.mark.parametrize("seed", range(6))
def test_skipped_area_matches_geometric_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    r, l, phi = rng.uniform(0.2, 2), rng.uniform(0.2, 2), rng.uniform(0.1, math.pi - 0.1)
    bs = np.array([r * math.cos(phi), r * math.sin(phi)])
    y = np.array([l, 0.0])
    w = np.linalg.norm(bs - y)
    # uniform points in the new disk b_y(w); count those outside b_0(r)
    n = 4_000_000
    rad = w * np.sqrt(rng.random(n))
    ang = rng.uniform(0, 2 * math.pi, n)
    pts = y + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    outside = np.sum(pts ** 2, axis=1) > r * r
    area = math.pi * w * w * np.mean(outside)
    assert skipped_area(r, l, phi) == pytest.approx(area, rel=0.01)


def test_ho_probability_first_order():
    net = NetworkParams(2.0, 3.0)
    l = 1e-4
    assert ho_probability(l, net).value == pytest.approx(4 * math.sqrt(2.0) * l / math.pi, rel=1e-3)
    assert ho_probability(0.0, net).value == 0.0


def test_h1_zero_speed_is_exactly_zero(net_l1b3):
    for s in (1, 7, 4000):
        assert h1(s, net_l1b3, MobilityModel(Constant(0.0))) == 0.0


@settings(max_examples=25, deadline=None)
@given(s=st.integers(1, 100_000), v=st.floats(1e-6, 1e-1), lam=st.floats(0.1, 20),
       kind=st.sampled_from(["constant", "exponential"]))
def test_s_h1_is_a_probability(s, v, lam, kind):
    dist = Constant(v) if kind == "constant" else Exponential(v)
    p = s * h1(s, NetworkParams(lam, 3.0), MobilityModel(dist))
    assert -1e-12 <= p <= 1 + 1e-9


def test_h1_nonincreasing_in_s_and_below_h0():
    net = NetworkParams(10, 3)
    mob = MobilityModel(Constant(1e-5))
    vals = [h1(s, net, mob) for s in (1, 100, 1000, 4000, 10000, 20000)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[0] <= h0(net, mob) * (1 + 1e-6)


def test_utility_examples():
    assert utility(1.0, 0.0, 10) == 1.0
    assert utility(0.5, 0.1, 10) == pytest.approx(-0.5)
    with pytest.raises(ValidationError):
        utility(1, 1, 0)


def test_scenario0_utility_is_linear_in_speed(net_l1b3):
    base = t0(net_l1b3)
    vs = np.array([0.0, 0.01, 0.02, 0.05])
    u = [utility(base, h0(net_l1b3, MobilityModel(Constant(v))), 10) for v in vs]
    slope = np.diff(u) / np.diff(vs)
    assert np.allclose(slope, -10 * 4 / math.pi, rtol=1e-12)


def test_sopt_values_and_shape():
    expected = {3: 2.6113, 4: 1.6076, 5: 1.1877, 6: 0.9496}
    vals = {b: sopt(b, 10).s_star for b in expected}
    for b, v in expected.items():
        assert vals[b] == pytest.approx(v, rel=1e-4)
    assert vals[3] > vals[4] > vals[5] > vals[6]
    assert sopt(3, 20).s_star == pytest.approx(2 * vals[3], rel=1e-14)
    assert sopt(3, 10).nearest == 3


def test_sopt_integral_beta4():
    # z^2 / ((1+z)^2 (pi^2/4 + z^2)) has an elementary antiderivative
    b = (math.pi / 2) ** 2
    ref, _ = sci.quad(lambda z: z * z / ((1 + z) ** 2 * (b + z * z)), 0, math.inf, epsabs=0,
                      epsrel=1e-12, limit=200)
    assert sopt_integral(4.0) == pytest.approx(ref, rel=1e-8)


def test_residual_root_is_sopt():
    net = NetworkParams(1, 3)
    s_star = sopt(3, 10).s_star
    v = 1e-5
    scale = abs(small_speed_residual(s_star / 2, net, v, 10))
    assert abs(small_speed_residual(s_star, net, v, 10)) <= 1e-8 * scale
    assert small_speed_residual(s_star / 2, net, v, 10) > 0
    assert small_speed_residual(2 * s_star, net, v, 10) < 0
    r = [small_speed_residual(s, net, v, 10) for s in (1.0, 2.0, 3.0)]
    assert r[0] > r[1] > r[2]
    assert r[0] - r[1] == pytest.approx(r[1] - r[2], rel=1e-9)


def test_sopt_numeric_local_maximum():
    net = NetworkParams(1, 3)
    res = sopt_numeric(net, 1e-5, 10)
    d = 0.05 * res.s
    u = [analytic.lower_bound_utility(x, net, 1e-5, 10,
                                      spec=QuadratureSpec(rel_tol=1e-11, abs_tol=1e-300))
         for x in (res.s - d, res.s, res.s + d)]
    assert u[0] < u[1] > u[2]


def test_sopt_numeric_boundary_maximum_raises():
    with pytest.raises(NoInteriorMaximum):
        sopt_numeric(NetworkParams(1, 3), 1e-5, 10, s_range=(10, 100))


def test_sopt_numeric_discrete_relaxation():
    res = sopt_numeric(NetworkParams(1, 3), 1e-5, 10, s_range=(1, 40), relaxation="discrete")
    assert res.s == res.s_int
    assert 2 <= res.s_int <= 5


def test_lower_bound_utility_relative_and_absolute_agree(net_l1b3):
    v, c, s = 1e-3, 10.0, 50
    rel = analytic.lower_bound_utility(s, net_l1b3, v, c, relaxation="discrete")
    ab = analytic.lower_bound_utility(s, net_l1b3, v, c, relaxation="discrete", relative=False)
    tab = TauTable(net_l1b3, LowerBound(), s * v)
    direct = t1(s, net_l1b3, MobilityModel(Constant(v)), LowerBound(), table=tab) - c * h1(
        s, net_l1b3, MobilityModel(Constant(v)))
    assert ab == pytest.approx(direct, rel=1e-5)
    assert ab - rel == pytest.approx(tau(0, net_l1b3, LowerBound()) - c * 4 * v / math.pi,
                                     rel=1e-10)
