import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from qcd import divergences as dv
from qcd import qlinalg as ql
from qcd import rand
from qcd.bounds import lemma1_rhs
from qcd.hyptest import dh_neyman_pearson, dh_state, dual_lower_bound

seeds = st.integers(0, 2**31 - 1)


def _classical_beta(p, s, eps):
    res = linprog(s, A_ub=[-p], b_ub=[-(1 - eps)], bounds=[(0, 1)] * len(p), method="highs")
    return res.fun


def test_classical_pair_matches_linear_program(rng):
    for _ in range(5):
        p, s = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        eps = float(rng.uniform(0.05, 0.9))
        beta = _classical_beta(p, s, eps)
        res = dh_state(np.diag(p).astype(complex), np.diag(s).astype(complex), eps)
        assert res.beta == pytest.approx(beta, abs=1e-7)
        assert dh_neyman_pearson(np.diag(p).astype(complex), np.diag(s).astype(complex), eps).beta == \
            pytest.approx(beta, abs=1e-10)


def test_frozen_value():
    # p = (1/2, 1/2), s = (1/4, 3/4), eps = 1/2: keep outcome 0 only, beta = 1/4
    res = dh_state(np.diag([0.5, 0.5]).astype(complex), np.diag([0.25, 0.75]).astype(complex), 0.5)
    assert res.dh == pytest.approx(2.0, abs=1e-7)


@given(seeds, st.sampled_from([0.05, 0.3, 0.7]))
def test_sdp_agrees_with_neyman_pearson(seed, eps):
    d = 2 + seed % 2
    r, s = rand.random_density(d, seed), rand.random_density(d, seed + 1)
    sdp, np_ = dh_state(r, s, eps, method="sdp"), dh_neyman_pearson(r, s, eps)
    assert sdp.dh == pytest.approx(np_.dh, abs=1e-6)
    assert np_.alpha_achieved == pytest.approx(eps, abs=1e-9)
    assert sdp.alpha_achieved <= eps + 1e-7


def test_zero_error_uses_support_projector():
    r = rand.random_density(3, 4, rank=2)
    s = rand.random_density(3, 5)
    res = dh_state(r, s, 0.0)
    proj = ql.support_projector(r)
    assert res.method == "support"
    assert res.beta == pytest.approx(np.trace(proj @ s).real)
    assert dh_neyman_pearson(r, s, 0.0).dh == pytest.approx(res.dh, abs=1e-9)
    # Tr(T rho) >= 1 has no strictly feasible point, so the raw SDP is only roughly right here
    assert dh_state(r, s, 0.0, method="sdp").dh == pytest.approx(res.dh, abs=1e-2)


def test_orthogonal_states_give_infinite_divergence():
    res = dh_state(np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex), 0.1)
    assert res.dh == math.inf and res.beta == 0


def test_eps_one_is_trivial():
    r = rand.random_density(2, 1)
    assert dh_state(r, r, 1.0).dh == math.inf


@given(seeds, st.floats(0.01, 0.9))
def test_dh_below_relative_entropy_bound(seed, eps):
    r, s = rand.random_density(3, seed), rand.random_density(3, seed + 1)
    assert dh_neyman_pearson(r, s, eps).dh <= lemma1_rhs(dv.relative_entropy(r, s), eps) + 1e-8


@given(seeds, st.floats(0.5, 20.0))
def test_dual_bound_is_below_optimum(seed, mu):
    r, s = rand.random_density(3, seed), rand.random_density(3, seed + 1)
    beta = dh_neyman_pearson(r, s, 0.2).beta
    assert dual_lower_bound(r, s, 0.2, mu) <= beta + 1e-9


@given(seeds)
def test_monotone_in_eps(seed):
    r, s = rand.random_density(2, seed), rand.random_density(2, seed + 1)
    vals = [dh_neyman_pearson(r, s, e).dh for e in (0.1, 0.4, 0.8)]
    assert vals[0] <= vals[1] + 1e-9 <= vals[2] + 2e-9


def test_input_validation():
    r = rand.random_density(2, 1)
    with pytest.raises(ValueError):
        dh_state(r, r, -0.1)
    with pytest.raises(ValueError):
        dh_state(r, r, 0.1, method="magic")
