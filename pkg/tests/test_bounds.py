import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from qcd import bounds as b
from qcd import divergences as dv
from qcd import example as ex
from qcd import rand
from qcd.hyptest import dh_neyman_pearson

seeds = st.integers(0, 2**31 - 1)
LOG3 = math.log2(3)


@pytest.mark.parametrize("value,cap", [(b.K_CONST, 0.29), (b.K1, 2.72), (b.K2, 2.36)])
def test_constants_below_their_caps(value, cap):
    assert 0.995 * cap <= value <= cap


def test_constants_by_direct_evaluation():
    ch = math.cosh(math.log2(3) / 2)
    assert b.K_CONST == pytest.approx(math.log(2) * math.log2(3) ** 2 / 8 * ch, rel=1e-15)
    assert b.K1**2 == pytest.approx(8 * math.log(2) * ch)
    assert b.K2**2 == pytest.approx(8 * math.log(2))


def test_lower_sqrt_threshold_uses_eight():
    # the sqrt form optimises a*delta + L/(n delta) with a = ln2 cosh(log3/2) c^2, L = 2 log(1/(1-eps));
    # it is valid while the optimal delta stays below log3 / (2c)
    c, eps = 3.7, 0.2
    log_term = math.log2(1 / (1 - eps))
    n_min = log_term * (8 / (LOG3 * b.K1)) ** 2
    a = math.log(2) * b.COSH_HALF_LOG3 * c**2
    res = minimize_scalar(lambda d: a * d + 2 * log_term / (n_min * d), bounds=(1e-9, 10), method="bounded",
                          options=dict(xatol=1e-12))
    assert res.x == pytest.approx(LOG3 / (2 * c), rel=1e-6)
    assert res.fun == pytest.approx(b.K1 * c * math.sqrt(log_term / n_min), rel=1e-9)
    # a 4 in place of the 8 would put the optimum outside the admissible range
    n_four = log_term * (4 / (LOG3 * b.K1)) ** 2
    assert math.sqrt(2 * log_term / (n_four * a)) > LOG3 / (2 * c)


def test_dh_relative_entropy_bound_examples():
    assert b.lemma1_rhs(1.3, 0) == 1.3
    assert b.lemma1_rhs(0, 0.5) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        b.lemma1_rhs(1.0, 1.0)


def test_smoothing_sandwich_examples():
    r, s = rand.random_density(2, 3), rand.random_density(2, 4)
    assert b.lemma2_sandwich(r, s, 0.5, 0.2).holds()
    same = b.lemma2_sandwich(r, r, 0.5, 0.2)
    assert same.middle == pytest.approx(0, abs=1e-6)
    # D_H^{1-eps^2}(rho||rho) = -log(eps^2), plus the -log(1-eps^2) offset
    assert same.upper == pytest.approx(-math.log2(0.25) - math.log2(0.75), abs=1e-6)
    edge = b.lemma2_sandwich(r, s, 0.5, 0.75 - 1e-6)
    assert edge.holds()
    with pytest.raises(ValueError):
        b.lemma2_sandwich(r, s, 0.5, 0.8)


def test_petz_continuity_examples():
    r = rand.random_density(3, 1)
    same = b.petz_continuity(r, r, 1.0, 0.25)
    c = dv.c_gamma(r, r, 1.0)
    assert same.upper_rhs - same.upper_lhs == pytest.approx(math.log(2) * 0.25 * c**2, abs=1e-9)
    p, q = np.diag([0.5, 0.5]).astype(complex), np.diag([0.25, 0.75]).astype(complex)
    assert b.petz_continuity(p, q, 1.0, 0.25).holds()
    with pytest.raises(ValueError):
        b.petz_continuity(p, q, 0.4, 0.3)


@given(seeds, st.floats(0.05, 1.0), st.floats(0.01, 1.0))
def test_petz_continuity_random(seed, gamma, frac):
    r, s = rand.random_density(3, seed), rand.random_density(3, seed + 1)
    c = dv.c_gamma(r, s, gamma)
    delta = min(gamma / 2, LOG3 / (2 * c)) * frac
    assert b.petz_continuity(r, s, gamma, delta).holds()


def test_aep_equal_states_straddle_zero():
    r = rand.random_density(2, 9)
    a = b.aep_bounds(r, r, 3, 0.3, 1.0)
    assert a.lower <= 0 <= a.upper
    assert a.lower <= a.lower_full and a.upper_full <= a.upper


def test_aep_against_classical_oracle():
    p, s = np.array([0.7, 0.3]), np.array([0.4, 0.6])
    for n in (4, 16, 64):
        a = b.aep_bounds(np.diag(p).astype(complex), np.diag(s).astype(complex), n, 0.3, 1.0)
        v = dv.dmax_smoothed_classical(*dv.type_class_masses(p, s, n), 0.3) / n
        assert a.lower <= v <= a.upper
        if a.lower_sqrt is not None:
            assert a.lower_sqrt <= v
        if a.upper_sqrt is not None:
            assert v <= a.upper_sqrt


def test_aep_sqrt_conditions():
    r, s = rand.random_density(2, 1), rand.random_density(2, 2)
    lo = math.log2(1 / 0.7) * (8 / (LOG3 * b.K1)) ** 2
    assert b.aep_bounds(r, s, math.ceil(lo), 0.3, 1.0).lower_sqrt is not None
    assert b.aep_bounds(r, s, max(1, math.floor(lo) - 1), 0.3, 1.0).lower_sqrt is None or lo < 2


def test_minimize_over_gamma_finds_interior_minimum():
    val, arg = b.minimize_over_gamma(lambda g: (g - 0.3) ** 2 + 1)
    assert arg == pytest.approx(0.3, abs=1e-5) and val == pytest.approx(1, abs=1e-9)
    assert b.minimize_over_gamma(lambda g: math.inf)[0] == math.inf


def test_inverse_normal_cdf():
    assert b.inverse_normal_cdf(0.5) == 0
    for p in (1e-9, 0.03125, 0.7, 1 - 1e-6):
        assert b.inverse_normal_cdf(p) == pytest.approx(norm.ppf(p), rel=1e-9)
    assert b.inverse_normal_cdf(0) == -math.inf and b.inverse_normal_cdf(1) == math.inf


def test_second_order_bracket():
    r, s = rand.random_density(2, 5), rand.random_density(2, 6)
    st_ = dv.state_pair_stats(r, s)
    skew = b.BERRY_ESSEEN * st_.third_abs_moment / st_.variance**1.5
    m = 10**6
    # choose alpha so the lower quantile argument is exactly 1/2
    half = b.second_order_dh(r, s, m, 0.5 + skew / math.sqrt(m))
    assert half.lower == pytest.approx(st_.relative_entropy, abs=1e-12)
    so = b.second_order_dh(r, s, 4, 0.05)
    assert so.lower == -math.inf
    wide = b.second_order_dh(r, s, 1000, 0.1)
    assert wide.lower <= wide.upper
    flat = b.second_order_dh(np.diag([0.5, 0.5]).astype(complex), np.diag([0.25, 0.25]).astype(complex) * 2, 10, 0.1)
    assert flat.lower == flat.upper == pytest.approx(0)


def test_second_order_brackets_exact_classical_value():
    p, s = np.array([0.8, 0.2]), np.array([0.3, 0.7])
    m, alpha = 200, 0.2
    so = b.second_order_dh(np.diag(p).astype(complex), np.diag(s).astype(complex), m, alpha)
    # exact D_H for i.i.d. binary pairs: Neyman-Pearson over the number of 0 outcomes
    from scipy.stats import binom

    k = np.arange(m + 1)
    pk, sk = binom.pmf(k, m, p[0]), binom.pmf(k, m, s[0])
    order = np.argsort(-(k * np.log(p[0] / s[0]) + (m - k) * np.log(p[1] / s[1])))
    need, beta = 1 - alpha, 0.0
    for j in order:
        take = min(1.0, need / pk[j]) if pk[j] > 0 else 0.0
        beta += take * sk[j]
        need -= take * pk[j]
        if need <= 0:
            break
    exact = -math.log2(beta) / m
    assert so.lower <= exact <= so.upper


# ----------------------------------------------------- adaptive vs parallel


@pytest.fixture(scope="module")
def example_trace():
    return ex.simulate_example(0.25)


def test_parallel_bound_limits(example_trace):
    tr = example_trace
    dh_a = dh_neyman_pearson(*tr.output_pair(tr.n), 0.1).dh
    far = b.theorem7_rhs(tr, 10**14, 0.1, 0.1, dh_a)
    lim = 0.9 / tr.n * dh_a - dv.binary_entropy(0.1) / tr.n
    assert far.rhs_general == pytest.approx(lim, abs=1e-3)
    assert far.rhs_sqrt == pytest.approx(lim, abs=1e-3)
    assert far.c_prime <= far.c_prime_cap + 1e-9
    assert far.c_sqrt <= far.c_sqrt_cap + 1e-9


def test_parallel_bound_sqrt_condition(example_trace):
    m_min = b.sqrt_form_min_m(0.1)
    assert m_min == pytest.approx(math.log2(40) * (4 / (LOG3 * math.sqrt(2 * math.log(2)))) ** 2)
    below = b.theorem7_rhs(example_trace, max(1, math.floor(m_min) - 1), 0.1, 0.0, 2.0)
    above = b.theorem7_rhs(example_trace, math.ceil(m_min), 0.1, 0.0, 2.0)
    assert below.rhs_sqrt is None and not below.sqrt_condition
    assert above.rhs_sqrt is not None and above.sqrt_condition


def test_parallel_bound_validation(example_trace):
    with pytest.raises(ValueError):
        b.theorem7_rhs(example_trace, 0, 0.1, 0.0, 1.0)
    with pytest.raises(ValueError):
        b.theorem7_rhs(example_trace, 10, 1.5, 0.0, 1.0)


def test_simplified_bound_below_general(example_trace):
    tr = example_trace
    c = b.corollary_constant(tr.e, tr.f)
    assert c <= 7 * math.log2(2 ** dv.channel_dmax(tr.e, tr.f) + 2) + 1e-9
    dh_a = dh_neyman_pearson(*tr.output_pair(tr.n), 0.05).dh
    for m in (10, 10**4, 10**8):
        t7 = b.theorem7_rhs(tr, m, 0.05, 0.05, dh_a)
        assert b.corollary4_rhs(tr.n, m, 0.05, 0.05, dh_a / tr.n, c) <= t7.rhs_general + 1e-9


def test_simplified_bound_error_term_is_one_bit():
    n, alpha_p, c = 3, 0.1, 5.0
    m = (c * n * math.log2(8 / alpha_p)) ** 2
    assert b.corollary4_rhs(n, m, alpha_p, 0.0, 2.0, c) == pytest.approx(2.0 - 1 - 1 / n)


def test_infinite_max_divergence_refused():
    tr = ex.simulate_example(0.0)
    with pytest.raises(b.InfiniteMaxDivergenceError):
        b.theorem7_rhs(tr, 100, 0.1, 0.0, 1.0)
    assert b.corollary_constant(tr.e, tr.f) == math.inf
