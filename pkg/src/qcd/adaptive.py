"""Simulation of adaptive channel-discrimination strategies.

A strategy on ``n`` channel uses starts from a state on ``R ⊗ A`` and
interleaves the unknown channel (acting on ``A``) with preparation channels
``R ⊗ B -> R ⊗ A``. Under both hypotheses the same preparations are applied,
so the simulation tracks two state sequences side by side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qlinalg as ql
from .divergences import SmoothedDmax, dmax_smoothed, relative_entropy

# Largest dimension of rho_l^{⊗m} for which the smoothing SDP is attempted.
SMOOTHING_DIM_BUDGET = 16


@dataclass
class AdaptiveStrategy:
    """Initial state on ``R ⊗ A`` and the ``n - 1`` intermediate preparations."""

    rho1: np.ndarray
    preps: list[ql.Channel]
    d_ref: int
    d_in: int
    d_out: int

    def __post_init__(self):
        if self.rho1.shape != (self.d_ref * self.d_in,) * 2:
            raise ValueError("initial state does not live on R ⊗ A")
        for k, lam in enumerate(self.preps):
            if (lam.d_in, lam.d_out) != (self.d_ref * self.d_out, self.d_ref * self.d_in):
                raise ValueError(f"preparation {k + 2} is not a map R⊗B -> R⊗A")

    @property
    def n(self) -> int:
        return len(self.preps) + 1


@dataclass
class ProtocolTrace:
    """States of one simulated run under both hypotheses.

    ``rhos[k]``/``sigmas[k]`` are the inputs to use ``k+1``; ``out_rhos[k]``
    and ``out_sigmas[k]`` are the corresponding channel outputs.
    """

    e: ql.Channel
    f: ql.Channel
    strategy: AdaptiveStrategy
    rhos: list[np.ndarray] = field(default_factory=list)
    sigmas: list[np.ndarray] = field(default_factory=list)
    out_rhos: list[np.ndarray] = field(default_factory=list)
    out_sigmas: list[np.ndarray] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)
    ell: int = 1  # 1-based index of the largest gain

    @property
    def n(self) -> int:
        return len(self.rhos)

    def state_pair(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.rhos[k - 1], self.sigmas[k - 1]

    def output_pair(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.out_rhos[k - 1], self.out_sigmas[k - 1]


def _use_channel(ch: ql.Channel, x: np.ndarray, d_ref: int) -> np.ndarray:
    return ql.apply_channel(ch, x, layout=(d_ref, ch.d_in), on=1)


def _gain(d_out: float, d_in: float) -> float:
    if math.isinf(d_out):
        return math.inf
    return d_out - d_in


def simulate(e: ql.Channel, f: ql.Channel, strategy: AdaptiveStrategy) -> ProtocolTrace:
    """Run the strategy under both hypotheses and record the per-use gains.

    The gain of use ``k`` is ``D(E(rho_k)||F(sigma_k)) - D(rho_k||sigma_k)``;
    ``ell`` is the first use attaining the maximum.
    """
    if (e.d_in, e.d_out) != (f.d_in, f.d_out) or (e.d_in, e.d_out) != (strategy.d_in, strategy.d_out):
        raise ValueError("channels and strategy dimensions differ")
    tr = ProtocolTrace(e, f, strategy)
    rho = sigma = strategy.rho1
    prev = 0.0
    for k in range(strategy.n):
        if k:
            lam = strategy.preps[k - 1]
            rho = ql.apply_channel(lam, tr.out_rhos[-1])
            sigma = ql.apply_channel(lam, tr.out_sigmas[-1])
            prev = relative_entropy(rho, sigma)
        out_r = _use_channel(e, rho, strategy.d_ref)
        out_s = _use_channel(f, sigma, strategy.d_ref)
        tr.rhos.append(rho)
        tr.sigmas.append(sigma)
        tr.out_rhos.append(out_r)
        tr.out_sigmas.append(out_s)
        tr.gains.append(_gain(relative_entropy(out_r, out_s), prev))
    tr.ell = int(np.argmax(tr.gains)) + 1
    return tr


@dataclass(frozen=True)
class AmortizationCheck:
    final_divergence: float  # D(E(rho_n)||F(sigma_n))
    sum_gains: float
    n_max_gain: float
    holds: bool


def amortization_bound(trace: ProtocolTrace, tol: float = 1e-9) -> AmortizationCheck:
    """Check ``D(E(rho_n)||F(sigma_n)) <= sum_k g_k <= n * g_ell``."""
    final = relative_entropy(*trace.output_pair(trace.n))
    total = math.fsum(trace.gains) if all(map(math.isfinite, trace.gains)) else math.inf
    top = trace.n * trace.gains[trace.ell - 1]
    ok = final <= total + tol and total <= top + tol
    if math.isinf(total):
        ok = math.isinf(top)
    return AmortizationCheck(final, total, top, bool(ok))


@dataclass(frozen=True)
class ChainCheck:
    """Both sides of the smoothing chain rule with the smoothing optimizer."""

    lhs: float  # D_max^{eps+eps'}(E(rho)||F(sigma))
    rhs: float  # D_max^eps(rho||sigma) + D_max^{eps'}(E(nu)||F(nu))
    nu: np.ndarray | None
    input_term: SmoothedDmax
    channel_term: SmoothedDmax


def chain_smoothing(rho: np.ndarray, sigma: np.ndarray, e: ql.Channel, f: ql.Channel,
                    eps: float, eps2: float, d_ref: int = 1) -> ChainCheck:
    """Evaluate ``D^{e+e'}(E(rho)||F(sigma)) <= D^e(rho||sigma) + D^{e'}(E(nu)||F(nu))``.

    The channels act on the last factor of ``R ⊗ A`` with ``dim R = d_ref``.
    """
    if eps + eps2 >= 1:
        raise ValueError("smoothing parameters must sum to less than one")
    inner = dmax_smoothed(rho, sigma, eps)
    if inner.optimizer is None:
        return ChainCheck(math.nan, math.inf, None, inner, inner)
    nu = inner.optimizer
    lhs = dmax_smoothed(_use_channel(e, rho, d_ref), _use_channel(f, sigma, d_ref), eps + eps2)
    chan = dmax_smoothed(_use_channel(e, nu, d_ref), _use_channel(f, nu, d_ref), eps2)
    return ChainCheck(lhs.value, inner.value + chan.value, nu, inner, chan)


@dataclass(frozen=True)
class ParallelInput:
    """Input for ``m`` parallel uses built from the ``ell``-th adaptive step.

    ``state`` lives on ``(R A)^{⊗m}`` (copy by copy); ``purification`` is the
    canonical purification of its ``A^{⊗m}`` marginal on ``A'^{⊗m} ⊗ A^{⊗m}``.
    ``kind`` is ``"smoothed"`` or ``"product-proxy"`` when the smoothing SDP
    exceeded the dimension budget and ``rho_ell^{⊗m}`` was used instead.
    """

    state: np.ndarray
    marginal: np.ndarray
    purification: np.ndarray
    kind: str
    epsilon: float
    m: int


def smoothing_radius(alpha_p: float) -> float:
    """Smoothing radius matched to a parallel type-I error ``alpha_p``."""
    return (1 - math.sqrt(1 - alpha_p)) / 2


def parallel_input(trace: ProtocolTrace, m: int, alpha_p: float,
                   budget: int = SMOOTHING_DIM_BUDGET) -> ParallelInput:
    if m < 1 or not 0 < alpha_p < 1:
        raise ValueError("need m >= 1 and alpha_p in (0, 1)")
    rho, sigma = (ql.to_float(x) for x in trace.state_pair(trace.ell))
    eps = smoothing_radius(alpha_p)
    dr, da = trace.strategy.d_ref, trace.strategy.d_in
    rho_m = ql.tensor_power(rho, m)
    if rho_m.shape[0] <= budget:
        res = dmax_smoothed(rho_m, ql.tensor_power(sigma, m), eps)
        state, kind = res.optimizer, "smoothed"
    else:
        state, kind = rho_m, "product-proxy"
    dims = [dr, da] * m
    marginal = ql.partial_trace(state, dims, list(range(0, 2 * m, 2)))
    return ParallelInput(state, marginal, ql.canonical_purification(marginal), kind, eps, m)
