"""A channel pair where a two-step adaptive strategy beats short parallel ones.

Both channels take two qubits ``rho ⊗ omega`` to one qubit. ``omega`` acts as
a control: with ``omega = |0>`` the first use already leaks information, and
feeding that output back with ``omega = |1>`` separates the hypotheses
almost perfectly. ``kappa`` mixes the second channel with white noise, which
keeps its max-divergence from the first finite.

For very small ``kappa`` the relevant eigenvalues are far below double
precision resolution, so by default the channels are tabulated with mpmath
entries whenever ``kappa < 1e-6``.
"""

from __future__ import annotations

import math
from contextlib import nullcontext
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import mpmath
import numpy as np

from . import qlinalg as ql
from .adaptive import AdaptiveStrategy, ProtocolTrace, simulate
from .bounds import second_order_dh, theorem7_constants, theorem7_rhs
from .hyptest import dh_state

HP_BELOW = 1e-6
FIGURE_KAPPA = 2.0**-50
FIGURE_ALPHA_P = 2.0**-5
FIGURE_ALPHA_A = 0.0


def _kets(hp: bool):
    if hp:
        with ql.hp_context():
            r = 1 / mpmath.sqrt(2)
            vec = lambda *x: np.array([mpmath.mpc(v) for v in x], dtype=object)  # noqa: E731
            return vec(1, 0), vec(0, 1), vec(r, r), vec(r, -r)
    r = 1 / math.sqrt(2)
    return (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex),
            np.array([r, r], dtype=complex), np.array([r, -r], dtype=complex))


def _expect(x: np.ndarray, v: np.ndarray):
    return v.conj() @ x @ v


def _marginal_expect(x: np.ndarray, v: np.ndarray):
    """``Tr(X (1 ⊗ |v><v|))`` for ``X`` on two qubits."""
    return sum(_expect(x, ql.ket_tensor(b, v)) for b in _kets(v.dtype == object)[:2])


def kappa_value(kappa, hp: bool):
    return mpmath.mpf(kappa) if hp else float(kappa)


def channel_e(hp: bool = False) -> ql.Channel:
    """The noiseless channel: reports ``|0>`` unless both inputs are ``|1>``."""
    k0, k1, _, _ = _kets(hp)
    half = mpmath.mpf(1) / 2 if hp else 0.5
    out0 = ql.projector(k0)
    eye = ql.to_hp(np.eye(2)) if hp else np.eye(2, dtype=complex)

    def fn(x):
        with ql.hp_context() if hp else nullcontext():
            return (out0 * _marginal_expect(x, k0)
                    + out0 * _expect(x, ql.ket_tensor(k0, k1))
                    + eye * half * _expect(x, ql.ket_tensor(k1, k1)))

    return ql.Channel.from_map(fn, 4, 2, name="E", hp=hp)


def channel_f(kappa, hp: bool | None = None) -> ql.Channel:
    """The alternative channel, mixed with weight ``kappa`` into the maximally mixed state."""
    if not 0 <= kappa <= 1:
        raise ValueError("kappa must lie in [0, 1]")
    if hp is None:
        hp = 0 < kappa < HP_BELOW
    k0, k1, plus, minus = _kets(hp)
    kap = kappa_value(kappa, hp)
    half = mpmath.mpf(1) / 2 if hp else 0.5
    eye = ql.to_hp(np.eye(2)) if hp else np.eye(2, dtype=complex)

    def fn(x):
        with ql.hp_context() if hp else nullcontext():
            inner = (ql.projector(plus) * _marginal_expect(x, k0)
                     + ql.projector(k1) * _expect(x, ql.ket_tensor(plus, k1))
                     + eye * half * _expect(x, ql.ket_tensor(minus, k1)))
            return (1 - kap) * inner + kap * half * eye * ql.trace(x)

    return ql.Channel.from_map(fn, 4, 2, name="F", hp=hp)


def append_strategy(steps: int = 2, hp: bool = False) -> AdaptiveStrategy:
    """Start from ``|00>``; before every later use append a fresh ``|1>`` to the output."""
    if steps < 1:
        raise ValueError("need at least one step")
    k0, k1, _, _ = _kets(hp)
    rho1 = ql.projector(ql.ket_tensor(k0, k0))
    one = ql.projector(k1)
    append = ql.Channel.from_map(lambda w: ql.tensor(w, one), 2, 4, name="append |1>", hp=hp)
    return AdaptiveStrategy(rho1, [append] * (steps - 1), d_ref=1, d_in=4, d_out=2)


def two_step_strategy(hp: bool = False) -> AdaptiveStrategy:
    return append_strategy(2, hp)


def simulate_example(kappa, hp: bool | None = None, steps: int = 2) -> ProtocolTrace:
    if hp is None:
        hp = 0 < kappa < HP_BELOW
    return simulate(channel_e(hp), channel_f(kappa, hp), append_strategy(steps, hp))


# ------------------------------------------------------------- closed forms


def delta(kappa: float) -> float:
    """Weight of ``|0><0|`` in the second output under the alternative."""
    return (3 * kappa - kappa**2) / 4


def adaptive_rate(kappa: float) -> float:
    """``-(1/2) log delta``: zero-error-type-I rate of the two-step strategy."""
    return -0.5 * math.log2(delta(kappa))


def first_gain(kappa: float) -> float:
    return -0.5 * (math.log2(kappa / 2) + math.log2(1 - kappa / 2))


def second_gain(kappa: float) -> float:
    # D(E(rho_2)||F(sigma_2)) = -log delta, and D(rho_2||sigma_2) equals the first gain
    return -math.log2(delta(kappa)) + 0.5 * (math.log2(kappa / 2) + math.log2(1 - kappa / 2))


def zero_control_dh(kappa: float) -> float:
    """``D_H^0`` of the outputs when the control qubit is ``|0>``; equals 1 for ``kappa < 1``."""
    return -math.log2(0.5)


def one_control_dh(kappa: float) -> float:
    """``D_H^0`` for input ``|0>|1>``: ``-log((1+kappa)/4)``."""
    return -math.log2((1 + kappa) / 4)


# ------------------------------------------------------------------ figure


@dataclass(frozen=True)
class FigureRow:
    m: int
    black: float
    yellow: float | None
    red: float
    green: float
    eq38_ok: bool


def figure_m_grid(points: int = 60, lo: float = 1e2, hi: float = 1e7) -> list[int]:
    return [int(round(x)) for x in np.logspace(math.log10(lo), math.log10(hi), points)]


def figure3_rows(kappa: float = FIGURE_KAPPA, alpha_a: float = FIGURE_ALPHA_A,
                 alpha_p: float = FIGURE_ALPHA_P, m_grid: list[int] | None = None,
                 threads: int = 1) -> list[FigureRow]:
    """Adaptive rate, the parallel lower bound and the second-order bracket per ``m``.

    The bracket is for the product input ``rho_1^{⊗m}`` with the first-step
    output pair; the lower bound uses the square-root form with ``ell = 1``.
    """
    trace = simulate_example(kappa)
    out_r, out_s = trace.output_pair(trace.n)
    dh_a = dh_state(out_r, out_s, alpha_a).dh
    black = dh_a / trace.n
    consts = theorem7_constants(trace)
    first_r, first_s = trace.output_pair(1)

    def row(m: int) -> FigureRow:
        t7 = theorem7_rhs(trace, m, alpha_p, alpha_a, dh_a, consts)
        so = second_order_dh(first_r, first_s, m, alpha_p)
        return FigureRow(m, black, t7.rhs_sqrt, so.upper, so.lower, t7.sqrt_condition)

    grid = m_grid or figure_m_grid()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(row, grid))
    return [row(m) for m in grid]


def format_csv(rows: list[FigureRow]) -> str:
    def fmt(x):
        if x is None or (isinstance(x, float) and (math.isnan(x) or math.isinf(x))):
            return ""
        return f"{x:.9g}"

    lines = ["m,black,yellow,red,green,eq38_ok"]
    for r in rows:
        lines.append(",".join([str(r.m), fmt(r.black), fmt(r.yellow), fmt(r.red), fmt(r.green),
                               "true" if r.eq38_ok else "false"]))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ parallel caps


@dataclass(frozen=True)
class ParallelCaps:
    """Zero-error discrimination power of a single use, all in bits.

    ``zero_control`` uses a random first qubit with control ``|0>``;
    ``one_control`` uses ``|0>|1>``. ``sampled_max`` is the largest value over
    random inputs, half of them entangled with a qubit reference.
    """

    zero_control: float
    one_control: float
    sampled_max: float
    samples: int


def _dh0_single_use(e: ql.Channel, f: ql.Channel, nu: np.ndarray, d_ref: int) -> float:
    out_e = ql.apply_channel(e, nu, layout=(d_ref, 4), on=1)
    out_f = ql.apply_channel(f, nu, layout=(d_ref, 4), on=1)
    return dh_state(out_e, out_f, 0.0).dh


def parallel_caps(kappa: float, samples: int = 200, seed: int = 0) -> ParallelCaps:
    from . import rand

    e, f = channel_e(), channel_f(kappa, hp=False)
    rng = rand.rng_from(seed)
    k0, k1 = ql.basis(2, 0), ql.basis(2, 1)
    zero = _dh0_single_use(e, f, ql.tensor(rand.random_density(2, rng), ql.projector(k0)), 1)
    one = _dh0_single_use(e, f, ql.projector(ql.ket_tensor(k0, k1)), 1)
    best = -math.inf
    for k in range(samples):
        if k % 2:
            nu, d_ref = ql.projector(rand.random_pure(8, rng)), 2
        else:
            nu, d_ref = rand.random_density(4, rng), 1
        best = max(best, _dh0_single_use(e, f, nu, d_ref))
    return ParallelCaps(zero, one, best, samples)
