"""Finite-size bounds relating adaptive and parallel discrimination.

Everything is in bits. The continuity constants below are computed from
their closed forms, not hard-coded; tests compare them with the rounded
upper bounds quoted alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtri

from . import divergences as dv
from .adaptive import ProtocolTrace
from .hyptest import dh_state

LOG3 = math.log2(3)
LN2 = math.log(2)
COSH_HALF_LOG3 = math.cosh(LOG3 / 2)

# Offset in the first-order error term of the unconditional bound.
K_CONST = LN2 * LOG3**2 / 8 * COSH_HALF_LOG3
# Prefactors of the square-root error terms (lower and upper smoothing side).
K1 = 2 * math.sqrt(2 * LN2 * COSH_HALF_LOG3)
K2 = 2 * math.sqrt(2 * LN2)
# Berry-Esseen constant for i.i.d. sums.
BERRY_ESSEEN = 0.4784

# Grid for the numerical infimum over gamma, then golden-section refinement.
GAMMA_GRID = np.logspace(-3, 0, 40)
GAMMA_XTOL = 1e-6


class InfiniteMaxDivergenceError(ValueError):
    """The channel pair has infinite max-divergence; the bounds do not apply."""


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile; ``-inf``/``+inf`` at the endpoints."""
    if p <= 0:
        return -math.inf
    if p >= 1:
        return math.inf
    return float(ndtri(p))


# ------------------------------------------------------------------ lemmas


def lemma1_rhs(rel_ent: float, eps: float) -> float:
    """Upper bound ``(D + h(eps)) / (1 - eps)`` on ``D_H^eps``."""
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    return (rel_ent + dv.binary_entropy(eps)) / (1 - eps)


@dataclass(frozen=True)
class Sandwich:
    lower: float
    middle: float
    upper: float

    def holds(self, tol: float = 1e-6) -> bool:
        return self.lower <= self.middle + tol and self.middle <= self.upper + tol


def lemma2_sandwich(rho: np.ndarray, sigma: np.ndarray, eps: float, delta: float) -> Sandwich:
    """Bracket the smoothed max-divergence by two hypothesis-testing divergences.

    ``D_H^{1-eps^2-delta} - log(4(1-eps^2)/delta^2) <= D_max^eps
    <= D_H^{1-eps^2} - log(1-eps^2)``.
    """
    if not (0 < eps < 1 and 0 < delta < 1 - eps**2):
        raise ValueError("need 0 < eps < 1 and 0 < delta < 1 - eps^2")
    level = 1 - eps**2
    lower = dh_state(rho, sigma, level - delta).dh - math.log2(4 * level / delta**2)
    upper = dh_state(rho, sigma, level).dh - math.log2(level)
    return Sandwich(lower, dv.dmax_smoothed(rho, sigma, eps).value, upper)


@dataclass(frozen=True)
class ContinuityCheck:
    """Both sides of the near-one continuity bounds for Petz divergences."""

    delta: float
    upper_lhs: float  # D_{1+delta}
    upper_rhs: float  # D + ln2 * delta * c^2
    lower_lhs: float  # D_{1-delta}
    lower_rhs: float  # D - ln2 cosh(log3/2) delta c^2

    def holds(self, tol: float = 1e-9) -> bool:
        return self.upper_lhs <= self.upper_rhs + tol and self.lower_lhs >= self.lower_rhs - tol


def petz_continuity(rho: np.ndarray, sigma: np.ndarray, gamma: float, delta: float) -> ContinuityCheck:
    """Evaluate both continuity bounds; ``delta`` must respect both admissible ranges."""
    c = dv.c_gamma(rho, sigma, gamma)
    if not (0 < delta <= gamma / 2 and delta <= LOG3 / (2 * c)):
        raise ValueError("delta outside the admissible range")
    d = dv.relative_entropy(rho, sigma)
    return ContinuityCheck(
        delta,
        dv.petz_renyi(rho, sigma, 1 + delta),
        d + LN2 * delta * c**2,
        dv.petz_renyi(rho, sigma, 1 - delta),
        d - LN2 * COSH_HALF_LOG3 * delta * c**2,
    )


# --------------------------------------------------------------------- AEP


@dataclass(frozen=True)
class AEPBounds:
    """Bounds on ``(1/n) D_max^eps(rho^{⊗n}||sigma^{⊗n})``.

    ``lower``/``upper`` hold for every ``n``; the ``*_sqrt`` variants are the
    sharper square-root forms, present only when their sample-size condition
    holds. ``lower_full``/``upper_full`` keep the unsimplified constants.
    """

    relative_entropy: float
    c_gamma: float
    lower: float
    upper: float
    lower_full: float
    upper_full: float
    lower_sqrt: float | None
    upper_sqrt: float | None


def aep_bounds(rho: np.ndarray, sigma: np.ndarray, n: int, eps: float, gamma: float) -> AEPBounds:
    if n < 1 or not 0 < eps < 1:
        raise ValueError("need n >= 1 and eps in (0, 1)")
    d = dv.relative_entropy(rho, sigma)
    c = dv.c_gamma(rho, sigma, gamma)
    root = math.sqrt(n)
    tail = math.log2(1 / (1 - eps**2)) / n
    lower = d - 4 * c / root * math.log2(2 / (1 - eps))
    upper = d + 4 * c / root * math.log2(2 / eps) + tail
    lower_full = d - c / root * (LN2 * LOG3 / 2 * COSH_HALF_LOG3 + 4 / LOG3 * math.log2(1 / (1 - eps)))
    upper_full = d + c / root * (LN2 * LOG3 / 2 + 4 / LOG3 * math.log2(1 / eps)) + tail
    lo_log, up_log = math.log2(1 / (1 - eps)), math.log2(1 / eps)
    lower_sqrt = upper_sqrt = None
    if n >= lo_log * (8 / (LOG3 * K1)) ** 2:
        lower_sqrt = d - K1 * c * math.sqrt(lo_log) / root
    if n >= up_log * (8 / (gamma * c * K2)) ** 2:
        upper_sqrt = d + K2 * c * math.sqrt(up_log) / root + tail
    return AEPBounds(d, c, lower, upper, lower_full, upper_full, lower_sqrt, upper_sqrt)


# ----------------------------------------------------------- gamma infimum


def minimize_over_gamma(fn) -> tuple[float, float]:
    """Minimise ``fn`` over ``gamma`` in (0, 1]: log grid, then bounded golden section.

    Returns ``(value, argmin)``.
    """
    vals = np.array([fn(g) for g in GAMMA_GRID])
    if not np.isfinite(vals).any():
        return math.inf, math.nan
    k = int(np.nanargmin(vals))
    lo = GAMMA_GRID[max(k - 1, 0)]
    hi = GAMMA_GRID[min(k + 1, len(GAMMA_GRID) - 1)]
    best_v, best_g = float(vals[k]), float(GAMMA_GRID[k])
    if hi > lo:
        res = minimize_scalar(fn, bounds=(lo, hi), method="bounded", options=dict(xatol=GAMMA_XTOL))
        if res.fun < best_v:
            best_v, best_g = float(res.fun), float(res.x)
    return best_v, best_g


# --------------------------------------------------- adaptive vs parallel


@dataclass(frozen=True)
class Theorem7Bound:
    """Lower bounds on the parallel rate ``(1/m) D_H^{alpha_p}``.

    ``rhs_general`` holds for every ``m``; ``rhs_sqrt`` is the sharper form,
    ``None`` unless ``sqrt_condition`` holds. The ``*_cap`` fields are the
    channel-level upper bounds on the constants in terms of ``ell``.
    """

    rhs_general: float
    rhs_sqrt: float | None
    sqrt_condition: bool
    c_prime: float
    c_sqrt: float
    gamma_out: tuple[float, float]  # argmins for the output pair (general, sqrt form)
    gamma_in: tuple[float, float]
    c_prime_cap: float
    c_sqrt_cap: float
    ell: int
    n: int
    m: int


def sqrt_form_min_m(alpha_p: float) -> float:
    """Smallest ``m`` for which the square-root form applies."""
    return math.log2(4 / alpha_p) * (8 / (LOG3 * K2)) ** 2


def _channel_chat_inf(trace: ProtocolTrace) -> float:
    e, f = trace.e, trace.f
    try:
        d2 = dv.channel_geometric_renyi2(e, f)
    except (ValueError, ArithmeticError):
        return math.inf
    if math.isinf(d2):
        return math.inf
    return minimize_over_gamma(lambda g: math.log2(2 ** (g * d2) + 2) / g)[0]


@dataclass(frozen=True)
class Theorem7Constants:
    """The ``m``-independent part of the bound for one simulated trace."""

    c_prime: float
    c_sqrt: float
    gamma_out: tuple[float, float]
    gamma_in: tuple[float, float]
    c_prime_cap: float
    c_sqrt_cap: float


def theorem7_constants(trace: ProtocolTrace) -> Theorem7Constants:
    """Error-term constants from the ``ell``-th step, with channel-level caps.

    Raises :class:`InfiniteMaxDivergenceError` when the channel pair has
    infinite max-divergence.
    """
    if math.isinf(dv.channel_dmax(trace.e, trace.f)):
        raise InfiniteMaxDivergenceError("D_max(E||F) is infinite; the adaptive-vs-parallel bound is vacuous")
    ell = trace.ell
    c_out = dv.c_gamma_curve(*trace.output_pair(ell))
    c_in = dv.c_gamma_curve(*trace.state_pair(ell))
    inf_out, g_out = minimize_over_gamma(c_out)
    inf_in, g_in = minimize_over_gamma(c_in)
    # the two gamma's decouple, so the joint infimum is a sum of two 1-D ones
    k1_out, g1 = minimize_over_gamma(lambda g: K1 * c_out(g))
    k2_in, g2 = minimize_over_gamma(lambda g: K2 * c_in(g))
    chat = _channel_chat_inf(trace)
    return Theorem7Constants(
        4 / LOG3 * (inf_out + inf_in), k1_out + k2_in, (g_out, g1), (g_in, g2),
        8 * ell / LOG3 * chat, ell * (K1 + K2) * chat,
    )


def theorem7_rhs(trace: ProtocolTrace, m: int, alpha_p: float, alpha_a: float,
                 dh_adaptive: float, constants: Theorem7Constants | None = None) -> Theorem7Bound:
    """Evaluate both lower bounds on the parallel rate.

    ``dh_adaptive`` is ``D_H^{alpha_a}(E(rho_n)||F(sigma_n))`` in bits, not
    divided by ``n``. Raises :class:`InfiniteMaxDivergenceError` when the
    channel pair has infinite max-divergence.
    """
    if m < 1 or not 0 < alpha_p < 1 or not 0 <= alpha_a < 1:
        raise ValueError("need m >= 1, alpha_p in (0,1), alpha_a in [0,1)")
    k = constants or theorem7_constants(trace)
    n, ell = trace.n, trace.ell
    c_prime, c_sqrt = k.c_prime, k.c_sqrt

    lead = (1 - alpha_a) / n * dh_adaptive - dv.binary_entropy(alpha_a) / n
    tail = (math.log2(1 / alpha_p) - math.log2(1 - alpha_p / 4)) / m
    root = math.sqrt(m)
    general = lead - c_prime / root * (math.log2(4 / alpha_p) + K_CONST) - tail
    cond = m >= sqrt_form_min_m(alpha_p)
    sharp = lead - c_sqrt / root * math.sqrt(math.log2(4 / alpha_p)) - tail if cond else None
    if math.isinf(c_prime):
        general = -math.inf
    if sharp is not None and math.isinf(c_sqrt):
        sharp = -math.inf

    return Theorem7Bound(
        general, sharp, cond, c_prime, c_sqrt, k.gamma_out, k.gamma_in,
        k.c_prime_cap, k.c_sqrt_cap, ell, n, m,
    )


def corollary_constant(e, f) -> float:
    """``7 log(2^{D^_2(E||F)} + 2)`` with the order-2 geometric channel divergence."""
    d2 = dv.channel_geometric_renyi2(e, f)
    return math.inf if math.isinf(d2) else 7 * math.log2(2**d2 + 2)


def corollary4_rhs(n: int, m: int, alpha_p: float, alpha_a: float, dh_adaptive_rate: float,
                   constant: float) -> float:
    """Simplified bound ``(1-alpha_a) r - (C n / sqrt m) log(8/alpha_p) - 1/n``.

    ``dh_adaptive_rate`` is ``r = D_H^{alpha_a}/n``, the adaptive rate per use.
    """
    if n < 1 or m < 1 or not 0 < alpha_p < 1 or not 0 <= alpha_a < 1:
        raise ValueError("need n, m >= 1, alpha_p in (0,1), alpha_a in [0,1)")
    if math.isinf(constant):
        return -math.inf
    return (1 - alpha_a) * dh_adaptive_rate - constant * n / math.sqrt(m) * math.log2(8 / alpha_p) - 1 / n


# ------------------------------------------------------------- second order


@dataclass(frozen=True)
class SecondOrder:
    """Berry-Esseen bracket on ``(1/m) D_H^{alpha}(rho^{⊗m}||sigma^{⊗m})``."""

    lower: float
    upper: float
    stats: dv.PairStats


def second_order_dh(rho: np.ndarray, sigma: np.ndarray, m: int, alpha: float) -> SecondOrder:
    if m < 1 or not 0 < alpha < 1:
        raise ValueError("need m >= 1 and alpha in (0, 1)")
    st = dv.state_pair_stats(rho, sigma)
    if math.isinf(st.relative_entropy):
        return SecondOrder(math.inf, math.inf, st)
    if st.variance <= 0:
        return SecondOrder(st.relative_entropy, st.relative_entropy, st)
    skew = BERRY_ESSEEN * st.third_abs_moment / st.variance**1.5
    root = math.sqrt(m)
    width = math.sqrt(st.variance / m)
    lo_arg = alpha - skew / root
    hi_arg = alpha + (skew + 2) / root
    lower = -math.inf if lo_arg <= 0 else st.relative_entropy + width * inverse_normal_cdf(lo_arg)
    upper = math.inf if hi_arg >= 1 else st.relative_entropy + width * inverse_normal_cdf(hi_arg)
    return SecondOrder(lower, upper, st)
