import math
from fractions import Fraction

import numpy as np
import pytest

from qcd import divergences as dv
from qcd import example as ex
from qcd import qlinalg as ql
from qcd.bounds import InfiniteMaxDivergenceError, theorem7_rhs
from qcd.hyptest import dh_state

KAPPAS = np.linspace(0.05, 0.95, 10)
K0, K1 = ql.basis(2, 0), ql.basis(2, 1)


def test_delta_closed_form():
    assert ex.delta(0) == 0
    assert ex.delta(1) == 0.5
    assert ex.delta(0.5) == pytest.approx(0.3125)


@pytest.mark.parametrize("kappa", [0.0, 0.25, 0.5, 1.0])
def test_channels_are_cptp(kappa):
    assert ex.channel_e().is_cptp()
    assert ex.channel_f(kappa).is_cptp()


def test_kappa_range():
    with pytest.raises(ValueError):
        ex.channel_f(1.5)


def test_two_uses_of_e_reach_zero():
    e = ex.channel_e()
    first = e(ql.projector(ql.ket_tensor(K0, K0)))
    assert np.allclose(e(ql.tensor(first, ql.projector(K1))), ql.projector(K0), atol=1e-12)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_two_uses_of_f(kappa):
    f = ex.channel_f(kappa)
    first = f(ql.projector(ql.ket_tensor(K0, K0)))
    out = f(ql.tensor(first, ql.projector(K1)))
    d = ex.delta(kappa)
    assert np.allclose(out, (1 - d) * ql.projector(K1) + d * ql.projector(K0), atol=1e-12)


def test_zero_noise_is_perfect_after_two_uses():
    tr = ex.simulate_example(0.0)
    assert dh_state(*tr.output_pair(2), 0.0).dh == math.inf


@pytest.mark.parametrize("kappa", [0.1, 0.5, 0.9])
def test_gains_match_closed_forms(kappa):
    tr = ex.simulate_example(kappa)
    assert tr.gains[0] == pytest.approx(ex.first_gain(kappa), abs=1e-9)
    assert tr.gains[1] == pytest.approx(ex.second_gain(kappa), abs=1e-9)
    assert tr.ell == 1
    assert ex.first_gain(kappa) > ex.second_gain(kappa)


def test_first_gain_exceeds_second_on_grid():
    for k in np.linspace(1e-6, 1 - 1e-6, 200):
        assert ex.first_gain(k) > ex.second_gain(k)
    # the difference is log((3 - kappa) / (2 - kappa))
    assert ex.first_gain(0.3) - ex.second_gain(0.3) == pytest.approx(math.log2(2.7 / 1.7))


def test_adaptive_rate_decreasing_in_kappa():
    vals = [ex.adaptive_rate(k) for k in np.linspace(0.01, 1, 50)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_adaptive_rate_below_single_use_divergence():
    for k in (0.1, 0.5):
        tr = ex.simulate_example(k)
        assert dv.relative_entropy(*tr.output_pair(2)) / 2 < dv.relative_entropy(*tr.output_pair(1))


def test_tiny_kappa_values():
    kappa = 2.0**-50
    assert Fraction(kappa) == Fraction(1, 2**50)
    expect = -0.5 * math.log2((3 * kappa - kappa**2) / 4)
    assert ex.adaptive_rate(kappa) == pytest.approx(expect, abs=1e-12)
    assert ex.adaptive_rate(kappa) == pytest.approx(25.2075187496394, abs=1e-9)
    tr = ex.simulate_example(kappa)
    assert tr.e.hp and tr.f.hp
    assert dh_state(*tr.output_pair(2), 0).dh / 2 == pytest.approx(expect, abs=1e-9)
    st_ = dv.state_pair_stats(*tr.output_pair(1))
    # E(rho_1) = |0><0|, F(rho_1) = (1 - kappa/2)|+><+| + kappa/2 |-><-|
    assert st_.relative_entropy == pytest.approx(25.5, abs=1e-9)
    assert st_.variance == pytest.approx(650.25, rel=1e-9)
    assert st_.third_abs_moment == pytest.approx(16581.375, rel=1e-9)
    assert tr.gains[0] == pytest.approx(ex.first_gain(kappa), abs=1e-9)
    assert tr.gains[1] == pytest.approx(ex.second_gain(kappa), abs=1e-9)


def test_float_backend_loses_tiny_kappa():
    # why the mp backend is needed: in doubles the second output's small eigenvalue is lost
    tr = ex.simulate_example(2.0**-50, hp=False)
    assert abs(dh_state(*tr.output_pair(2), 0).dh / 2 - ex.adaptive_rate(2.0**-50)) > 1e-6


def test_parallel_caps():
    caps = ex.parallel_caps(0.25, samples=60)
    assert caps.zero_control == pytest.approx(1.0, abs=1e-9)
    assert caps.one_control == pytest.approx(ex.one_control_dh(0.25), abs=1e-9)
    assert caps.one_control <= 2
    assert caps.sampled_max <= 2 + 1e-6


def test_channel_dmax_finite_iff_noise():
    assert ex.channel_f(0.0) is not None
    assert dv.channel_dmax(ex.channel_e(), ex.channel_f(0.0)) == math.inf
    assert math.isfinite(dv.channel_dmax(ex.channel_e(), ex.channel_f(0.25)))
    tr = ex.simulate_example(2.0**-20)
    assert math.isfinite(dv.channel_dmax(tr.e, tr.f))
    b = theorem7_rhs(tr, 10**6, 2.0**-5, 0.0, dh_state(*tr.output_pair(2), 0).dh)
    assert math.isfinite(b.rhs_general) and math.isfinite(b.rhs_sqrt)
    with pytest.raises(InfiniteMaxDivergenceError):
        theorem7_rhs(ex.simulate_example(0.0), 10**6, 2.0**-5, 0.0, 1.0)


def test_chat_decreasing_in_kappa():
    vals = [dv.chat_gamma(ex.channel_e(), ex.channel_f(k), 1.0) for k in (0.1, 0.25, 0.5, 0.9)]
    assert all(math.isfinite(v) for v in vals)
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))


def test_figure_rows_small_grid():
    rows = ex.figure3_rows(m_grid=[100, 10**4, 10**7])
    assert [r.m for r in rows] == [100, 10**4, 10**7]
    for r in rows:
        assert r.black == pytest.approx(ex.adaptive_rate(ex.FIGURE_KAPPA), abs=1e-9)
        if math.isfinite(r.green):
            assert r.green <= r.red
        if r.eq38_ok and math.isfinite(r.green):
            assert r.yellow <= r.green + 1e-6
    assert abs(rows[-1].red - 25.5) < 0.1 and abs(rows[-1].green - 25.5) < 0.1


def test_figure_rows_threads_match_serial():
    grid = ex.figure_m_grid(6)
    assert ex.figure3_rows(m_grid=grid, threads=3) == ex.figure3_rows(m_grid=grid)


def test_figure_grid_and_csv():
    grid = ex.figure_m_grid()
    assert len(grid) == 60 and grid[0] == 100 and grid[-1] == 10**7
    assert len(set(grid)) == 60
    rows = [ex.FigureRow(5, 1.0, None, 2.0, -math.inf, False)]
    assert ex.format_csv(rows) == "m,black,yellow,red,green,eq38_ok\n5,1,,2,,false\n"
