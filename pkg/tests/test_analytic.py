import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st
from scipy import integrate

from conftest import rel, stable_params
from relayage import NearDegenerateRoots, SystemParams, TruncationInsufficient, Unstable
from relayage import analytic as an
from relayage.ctmc import arrival_state_moments, stationary_distribution
from relayage.model import max_stable_lambda1


def kaul_mm1(lam, mu):
    rho = lam / mu
    return (1 + 1 / rho + rho**2 / (1 - rho)) / mu


# -- stationary law -------------------------------------------------------


def test_pgf_is_one_at_one(p_ref):
    assert an.pgf_eval(p_ref, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_pgf_mm1_value(p_mm1):
    # (1 - rho) / (1 - rho x) at rho = x = 1/2
    assert an.pgf_eval(p_mm1, 0.5) == pytest.approx(2 / 3, rel=1e-12)


def test_pgf_rejects_outside_unit_interval(p_ref):
    with pytest.raises(ValueError):
        an.pgf_eval(p_ref, 1.5)


def test_pi_b0_reference(p_ref):
    assert an.pi_b0(p_ref) == pytest.approx(0.1, abs=1e-15)


def test_empty_probability_against_chain(p_ref):
    dist = stationary_distribution(p_ref)
    assert an.pgf_eval(p_ref, 0.0) == pytest.approx(dist.pi[0], abs=1e-10)
    assert an.pi_b0(p_ref) == pytest.approx(dist.pi_b[0], abs=1e-10)
    assert an.pi_v0(p_ref) == pytest.approx(dist.pi_v[0], abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.1, 10), st.floats(0.05, 20), st.floats(0.01, 20), st.floats(0.05, 0.9)
)
def test_pgf_coefficients_match_chain(mu1, w, s, frac):
    p = SystemParams(frac * max_stable_lambda1(mu1, s, w), mu1, s, w)
    try:
        coef = an.pgf_coefficients(p, 60)
        dist = stationary_distribution(p, n_max=500, tol=1e-10, max_n_max=4000)
    except (NearDegenerateRoots, TruncationInsufficient):
        assume(False)
    assert np.max(np.abs(coef - dist.pi[:60])) < 1e-8


@given(stable_params())
def test_pgf_coefficients_sum_to_pgf(p):
    try:
        coef = an.pgf_coefficients(p, 40)
    except NearDegenerateRoots:
        assume(False)
    x = 0.3
    assert float(np.sum(coef * x ** np.arange(40))) == pytest.approx(an.pgf_eval(p, x), rel=1e-9)


def test_pgf_coefficients_mm1_geometric(p_mm1):
    assert np.allclose(an.pgf_coefficients(p_mm1, 10), 0.5 ** np.arange(1, 11), rtol=1e-14, atol=0)


# -- sojourn time ----------------------------------------------------------


def test_mm1_mixture():
    m = an.sojourn_mixture(SystemParams(0.5, 1, 0, 1))
    assert {m.alpha1, m.alpha2} == {-0.5, -1.0}
    assert m.alpha1 >= m.alpha2
    assert m.c1 == 0.5 and m.c2 == 0.0


@given(stable_params(min_s=1e-3))
def test_mixture_exponents_negative_and_ordered(p):
    try:
        m = an.sojourn_mixture(p)
    except NearDegenerateRoots:
        assume(False)
    assert m.alpha2 <= m.alpha1 < 0
    b, c = an._sojourn_quadratic(p)
    assert m.alpha1 + m.alpha2 == pytest.approx(-b, rel=1e-12)
    assert m.alpha1 * m.alpha2 == pytest.approx(c, rel=1e-12)


@pytest.mark.parametrize("rates", [(0.4, 1, 1, 1), (0.2, 1, 0.5, 2), (0.1, 1, 4, 1), (0.3, 1, 1, 4)])
def test_mixture_density_integrates_to_one(rates):
    m = an.sojourn_mixture(SystemParams(*rates))
    mass, _ = integrate.quad(m.pdf, 0, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert m.total_mass() == pytest.approx(1.0, abs=1e-12)
    mean, _ = integrate.quad(lambda t: t * m.pdf(t), 0, np.inf, epsabs=1e-13)
    assert m.mean() == pytest.approx(mean, rel=1e-9)


def test_mean_sojourn_is_littles_law(p_ref):
    dist = stationary_distribution(p_ref)
    mean_n = float(np.arange(dist.n_max + 1) @ dist.pi)
    assert an.sojourn_mixture(p_ref).mean() == pytest.approx(mean_n / p_ref.lambda1, rel=1e-9)


@given(stable_params(min_s=1e-3))
def test_distributional_littles_law(p):
    # queue-length pgf equals the sojourn transform at lambda1 - lambda1 * x
    try:
        m = an.sojourn_mixture(p)
    except NearDegenerateRoots:
        assume(False)
    xs = np.linspace(0, 1, 11)
    lhs = an.pgf_eval(p, xs)
    rhs = m.laplace(p.lambda1 * (1 - xs))
    assert np.max(np.abs(lhs - rhs)) < 1e-10
    assert np.max(np.abs(an.sojourn_laplace(p, p.lambda1 * (1 - xs)) - lhs)) < 1e-10


def test_near_degenerate_roots_detected():
    p = SystemParams(0.5, 1, 1e-13, 0.5)
    with pytest.raises(NearDegenerateRoots):
        an.sojourn_mixture(p)
    # continuity with the s = 0 limit through the root-free branch
    assert an.expected_ab(p) == pytest.approx(an.expected_ab(SystemParams(0.5, 1, 0, 0.5)), rel=1e-9)
    assert math.isfinite(an.average_age_stream1(p))


# -- E(AB) -----------------------------------------------------------------


def e_ab_quadrature(p):
    """E(A*B) with B = (T_prev - A)^+ and A ~ Exp(lambda1) independent of T_prev."""
    m = an.sojourn_mixture(p)
    lam = p.lambda1

    def excess(a):
        # E[(T - a)^+] = int_a^inf (1 - F(t)) dt
        return integrate.quad(lambda t: 1 - m.cdf(t), a, np.inf, epsabs=1e-14)[0]

    return integrate.quad(lambda a: a * excess(a) * lam * math.exp(-lam * a), 0, np.inf, epsabs=1e-13)[0]


def test_e_ab_mm1():
    assert an.expected_ab(SystemParams(0.5, 1, 0, 1)) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("rates", [(0.4, 1, 1, 1), (0.2, 1, 0.5, 2), (0.15, 1, 4, 1), (0.5, 2, 1, 3)])
def test_e_ab_against_quadrature(rates):
    p = SystemParams(*rates)
    assert an.expected_ab(p) == pytest.approx(e_ab_quadrature(p), rel=1e-7)


@given(stable_params(min_s=1e-3))
def test_root_free_e_ab_matches_root_form(p):
    try:
        an.sojourn_mixture(p)
    except NearDegenerateRoots:
        assume(False)
    assert an._expected_ab_combined(p) == pytest.approx(an.expected_ab(p), rel=1e-8)


# -- E(AY) and the age -----------------------------------------------------


def test_e_ay_without_vacations():
    p = SystemParams(0.5, 1, 0, 1)
    assert an.expected_ay(p) == pytest.approx(1 / (0.5 * 1), rel=1e-14)
    assert an.corrected_expected_ay(p) == pytest.approx(2.0, rel=1e-14)


def test_mm1_age_matches_kaul():
    assert an.average_age_stream1(SystemParams(0.5, 1, 0, 1)) == pytest.approx(3.5, rel=1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.1, 10))
def test_no_vacation_age_matches_kaul(rho, mu):
    p = SystemParams(rho * mu, mu, 0, 1)
    assert an.average_age_stream1(p) == pytest.approx(kaul_mm1(rho * mu, mu), rel=1e-10)
    assert an.corrected_average_age(p) == pytest.approx(kaul_mm1(rho * mu, mu), rel=1e-10)


@given(stable_params())
def test_age_decomposition(p):
    lam = p.lambda1
    direct = lam * (an.expected_ab(p) + an.expected_ay(p)) + 1 / lam
    assert an.average_age_stream1(p) == pytest.approx(direct, rel=1e-12)


@given(stable_params(), st.floats(0.01, 100))
def test_age_scale_covariance(p, k):
    scaled = p.scaled(k)
    assert an.average_age_stream1(scaled) == pytest.approx(an.average_age_stream1(p) / k, rel=1e-9)
    assert an.corrected_average_age(scaled) == pytest.approx(an.corrected_average_age(p) / k, rel=1e-9)


def test_reference_age_values(p_ref):
    assert an.average_age_stream1(p_ref) == pytest.approx(13.273469387755, rel=1e-11)
    assert an.corrected_average_age(p_ref) == pytest.approx(13.342857142857, rel=1e-11)


@pytest.mark.parametrize("rates", [(0.4, 1, 1, 1), (0.2, 1, 0.5, 2), (0.15, 1, 4, 1), (0.3, 1, 1, 4)])
def test_idle_vacation_moments_against_chain(rates):
    p = SystemParams(*rates)
    dist = stationary_distribution(p, n_max=400)
    prob, moment = arrival_state_moments(p, dist)
    assert an.idle_vacation_arrival_probability(p) == pytest.approx(prob, rel=1e-9)
    assert an.interarrival_idle_vacation_moment(p) == pytest.approx(moment, rel=1e-9)


@given(stable_params(min_s=1e-3))
def test_pasta_identity(p):
    assert an.idle_vacation_arrival_probability(p) == pytest.approx(an.pi_v0(p), rel=1e-9, abs=1e-15)


@given(stable_params(min_s=1e-3))
def test_correction_is_nonnegative(p):
    # long interarrivals favour finding the server idle on vacation
    assert an.corrected_expected_ay(p) >= an.expected_ay(p) * (1 - 1e-12)


def test_age_diverges_at_both_ends():
    lam_max = max_stable_lambda1(1, 1, 1)
    mid = an.average_age_stream1(SystemParams(0.25, 1, 1, 1))
    assert an.average_age_stream1(SystemParams(1e-6 * lam_max, 1, 1, 1)) > 1e4 * mid
    assert an.average_age_stream1(SystemParams((1 - 1e-6) * lam_max, 1, 1, 1)) > 1e4 * mid


@pytest.mark.parametrize(
    "fn", [an.pi_b0, an.pi_v0, an.expected_ab, an.expected_ay, an.average_age_stream1, an.corrected_average_age]
)
def test_unstable_rejected(fn):
    with pytest.raises(Unstable):
        fn(SystemParams(0.5, 1, 1, 1))


# -- stream 2 --------------------------------------------------------------


@pytest.mark.parametrize("lam2, mu2, age", [(4, 4, 0.5), (1, 4, 1.25)])
def test_stream2_age(lam2, mu2, age):
    assert an.average_age_stream2(lam2, mu2) == age


def test_app2_is_the_vacation_model():
    assert an.average_age_app2(0.3, 1, 1, 4) == an.average_age_stream1(SystemParams(0.3, 1, 1, 4))


def test_breakdown_consistent(p_ref):
    b = an.age_breakdown(p_ref)
    assert b.delta1 == an.average_age_stream1(p_ref)
    assert b.e_y_vac - b.e_y_busy == pytest.approx(1 / p_ref.w)
    assert b.p_uninterrupted == 0.5
    assert b.vacation_fraction == 0.5
