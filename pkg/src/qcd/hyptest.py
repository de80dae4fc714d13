"""Hypothesis-testing relative entropy between two states.

``beta_eps(rho||sigma) = min Tr(P sigma)`` over tests ``0 <= P <= 1`` with
``Tr(P rho) >= 1 - eps``, and ``D_H = -log beta``. The primary route is an
SDP; :func:`dh_neyman_pearson` is an eigen-decomposition oracle that never
touches a conic solver and is used to cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import cvxpy as cp
import numpy as np

from . import qlinalg as ql
from .sdp import CachedProblem, solve

# Solver optima below this are reported as an exact zero (D_H = +inf).
BETA_FLOOR = 1e-12
# Same for the closed-form support test in double precision (round-off level).
SUPPORT_BETA_FLOOR = 1e-14
# second SDP pass with a rescaled objective below this beta
RESCALE_BELOW = 0.1


@dataclass(frozen=True)
class TestResult:
    """Outcome of an optimal test.

    ``alpha_achieved`` is the type-I error ``Tr((1-P) rho)`` recomputed from
    the returned test.
    """

    __test__ = False  # not a pytest class

    dh: float
    beta: float
    test: np.ndarray | None
    alpha_achieved: float
    method: str


def _dh_from_beta(beta: float) -> float:
    return math.inf if beta <= 0 else -math.log2(beta)


def _support_test(rho: np.ndarray, sigma: np.ndarray) -> TestResult:
    """Zero type-I error: the projector onto supp(rho) is optimal."""
    hp = ql.is_hp(rho) or ql.is_hp(sigma)
    if hp:
        rho, sigma = ql.to_hp(rho), ql.to_hp(sigma)
        with ql.hp_context():
            proj = ql.support_projector(rho)
            beta = ql.real_scalar(ql.trace(proj @ sigma))
            alpha = 1 - ql.real_scalar(ql.trace(proj @ rho))
        proj = ql.to_float(proj)
    else:
        proj = ql.support_projector(rho)
        beta = float(np.trace(proj @ sigma).real)
        alpha = 1 - float(np.trace(proj @ rho).real)
        if beta < SUPPORT_BETA_FLOOR:
            beta = 0.0
    beta = max(beta, 0.0)
    return TestResult(_dh_from_beta(beta), beta, proj, alpha, "support")


@lru_cache(maxsize=16)
def _dh_problem(d: int) -> CachedProblem:
    rho = cp.Parameter((d, d), hermitian=True)
    sigma = cp.Parameter((d, d), hermitian=True)
    level = cp.Parameter()
    test = cp.Variable((d, d), hermitian=True)
    cons = [test >> 0, np.eye(d) - test >> 0, cp.real(cp.trace(test @ rho)) >= level]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(test @ sigma))), cons)
    return CachedProblem(prob, dict(rho=rho, sigma=sigma, level=level), dict(test=test))


def dh_state(rho: np.ndarray, sigma: np.ndarray, eps: float, method: str = "auto",
             tol: float | None = None) -> TestResult:
    """Hypothesis-testing relative entropy ``D_H^eps(rho||sigma)`` in bits.

    ``method="auto"`` uses the projector onto the support of ``rho`` when
    ``eps = 0`` or when that projector already has zero type-II error, and
    the SDP otherwise; ``"sdp"`` always solves the SDP.
    """
    if not 0 <= eps <= 1:
        raise ValueError("type-I error must lie in [0, 1]")
    if method not in ("auto", "sdp"):
        raise ValueError(f"unknown method {method!r}")
    ql.check_density(rho, name="rho")
    ql.check_psd(sigma, name="sigma")
    if eps == 1:
        return TestResult(math.inf, 0.0, np.zeros(rho.shape, dtype=complex), 1.0, "trivial")
    if method == "auto":
        support = _support_test(rho, sigma)
        # zero type-II error is optimal outright; interior-point solvers only approach it
        if eps == 0 or support.beta == 0:
            return support
    rf, sf = ql.to_float(rho), ql.to_float(sigma)
    prob = _dh_problem(rf.shape[0])
    with prob.lock:
        prob.params["rho"].value = ql.hermitize(rf)
        prob.params["sigma"].value = ql.hermitize(sf)
        prob.params["level"].value = 1 - eps
        opts = {"tol": tol} if tol else {}
        solve(prob.problem, **opts)
        value = float(prob.problem.value)
        if BETA_FLOOR <= value < RESCALE_BELOW:
            # the solver stalls at a fixed relative error in beta; a unit-size
            # objective moves that error from ~1e-5 to ~1e-8 bits
            prob.params["sigma"].value = ql.hermitize(sf) / value
            solve(prob.problem, **opts)
            value = float(prob.problem.value) * value
        test = ql.hermitize(prob.variables["test"].value)
    beta = value if value >= BETA_FLOOR else 0.0
    alpha = 1 - float(np.trace(test @ rf).real)
    return TestResult(_dh_from_beta(beta), beta, test, alpha, "sdp")


def _positive_part(h: np.ndarray):
    w, v = np.linalg.eigh(ql.hermitize(h))
    keep = w > 1e-14 * max(1.0, np.abs(w).max())
    return v[:, keep] @ v[:, keep].conj().T, float(np.clip(w, 0, None).sum())


def dh_neyman_pearson(rho: np.ndarray, sigma: np.ndarray, eps: float) -> TestResult:
    """Optimal test from projectors onto the positive part of ``mu*rho - sigma``.

    The Lagrange multiplier ``mu`` is located by bisection on the type-I
    error of the projector, then the two bracketing projectors are mixed so
    that ``Tr(P rho) = 1 - eps`` exactly. The returned test is feasible, so
    ``beta`` is an upper bound on the optimum; the dual value at the bracket
    certifies it to about machine precision.
    """
    if not 0 <= eps <= 1:
        raise ValueError("type-I error must lie in [0, 1]")
    rho, sigma = ql.to_float(rho), ql.to_float(sigma)
    if eps == 1:
        return TestResult(math.inf, 0.0, np.zeros(rho.shape, dtype=complex), 1.0, "neyman-pearson")
    if eps == 0:
        r = _support_test(rho, sigma)
        return TestResult(r.dh, r.beta, r.test, r.alpha_achieved, "neyman-pearson")
    target = 1 - eps

    def power(mu):
        p, _ = _positive_part(mu * rho - sigma)
        return p, float(np.trace(p @ rho).real)

    lo, hi = 0.0, 1.0
    while power(hi)[1] < target:
        lo, hi = hi, hi * 2
        if hi > 1e300:
            raise ArithmeticError("no multiplier reaches the requested power")
    for _ in range(200):
        mid = (lo + hi) / 2 if lo == 0 else math.sqrt(lo * hi)
        if mid in (lo, hi):
            break
        if power(mid)[1] >= target:
            hi = mid
        else:
            lo = mid
    p_lo, a_lo = power(lo)
    p_hi, a_hi = power(hi)
    t = 1.0 if a_hi == a_lo else (target - a_lo) / (a_hi - a_lo)
    t = min(1.0, max(0.0, t))
    test = (1 - t) * p_lo + t * p_hi
    beta = max(float(np.trace(test @ sigma).real), 0.0)
    alpha = 1 - float(np.trace(test @ rho).real)
    return TestResult(_dh_from_beta(beta), beta, test, alpha, "neyman-pearson")


def dual_lower_bound(rho: np.ndarray, sigma: np.ndarray, eps: float, mu: float) -> float:
    """Dual objective ``mu (1-eps) - Tr(mu rho - sigma)_+``, a lower bound on beta."""
    _, pos = _positive_part(mu * ql.to_float(rho) - ql.to_float(sigma))
    return mu * (1 - eps) - pos
