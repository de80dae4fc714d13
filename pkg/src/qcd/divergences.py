"""Quantum divergences between states and between channels.

All logarithms are base 2. Values that are infinite by support mismatch are
returned as ``math.inf``. The spectral quantities (relative entropy, Petz
Rényi, variance and third absolute moment) are evaluated from the joint
spectral data of the pair

    lam_i, mu_j, W_ij = |<x_i|y_j>|^2

which keeps them accurate when either spectrum spans many orders of
magnitude, provided the high-precision backend is used for the eigensolver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import cvxpy as cp
import mpmath
import numpy as np
from scipy.special import logsumexp
from scipy.optimize import minimize

from . import qlinalg as ql
from .sdp import CachedProblem, is_infeasible, solve

# Tolerance on Tr(rho (1 - supp sigma)) for declaring rho inside the support of sigma.
SUPPORT_LEAK_TOL = 1e-9
# Petz orders closer than this to 1 are rejected.
ALPHA_GAP = 1e-6


@dataclass(frozen=True)
class PairSpectrum:
    lam: np.ndarray
    mu: np.ndarray
    overlap: np.ndarray
    leak: float  # Tr(rho (1 - projector onto supp sigma))


def pair_spectrum(rho: np.ndarray, sigma: np.ndarray) -> PairSpectrum:
    """Eigenvalues of both operators and the squared overlaps of their eigenvectors.

    Eigenvalues under the support cutoff are set to exactly zero. The
    eigensolver runs on the backend of the inputs; results are returned as
    float arrays.
    """
    hp = ql.is_hp(rho) or ql.is_hp(sigma)
    if hp:
        rho, sigma = ql.to_hp(rho), ql.to_hp(sigma)
    lam, x = ql.eigh(rho)
    mu, y = ql.eigh(sigma)
    lmask, mmask = ql.support_mask(lam), ql.support_mask(mu)
    if hp:
        with ql.hp_context():
            amp = ql.dagger(x) @ y
            w = np.array([[float(abs(z) ** 2) for z in row] for row in amp])
        lam = np.array([float(v) for v in lam])
        mu = np.array([float(v) for v in mu])
    else:
        w = np.abs(ql.dagger(x) @ y) ** 2
    lam = np.where(lmask, lam, 0.0)
    mu = np.where(mmask, mu, 0.0)
    leak = float(lam @ w[:, ~mmask].sum(axis=1)) if (~mmask).any() else 0.0
    return PairSpectrum(lam, mu, w, leak)


def _in_support(ps: PairSpectrum) -> bool:
    return ps.leak <= SUPPORT_LEAK_TOL


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise ValueError("probability outside [0, 1]")
    return float(sum(-q * math.log2(q) for q in (p, 1 - p) if q > 0))


def _llr(ps: PairSpectrum):
    """Log-likelihood ratio table and weights on the joint support."""
    i = ps.lam > 0
    j = ps.mu > 0
    lam, mu, w = ps.lam[i], ps.mu[j], ps.overlap[np.ix_(i, j)]
    weights = lam[:, None] * w
    llr = np.log2(lam)[:, None] - np.log2(mu)[None, :]
    return llr, weights


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Umegaki relative entropy ``Tr rho (log rho - log sigma)``."""
    ps = pair_spectrum(rho, sigma)
    if not _in_support(ps):
        return math.inf
    llr, weights = _llr(ps)
    return float(np.sum(weights * llr))


@dataclass(frozen=True)
class PairStats:
    """Relative entropy, its variance and the third absolute central moment."""

    relative_entropy: float
    variance: float
    third_abs_moment: float


def state_pair_stats(rho: np.ndarray, sigma: np.ndarray) -> PairStats:
    ps = pair_spectrum(rho, sigma)
    if not _in_support(ps):
        return PairStats(math.inf, math.inf, math.inf)
    llr, weights = _llr(ps)
    d = float(np.sum(weights * llr))
    dev = llr - d
    v = float(np.sum(weights * dev**2))
    t3 = float(np.sum(weights * np.abs(dev) ** 3))
    return PairStats(d, v, t3)


def _check_petz_order(alpha: float) -> None:
    if not (0 <= alpha <= 2):
        raise ValueError(f"Petz order {alpha} outside [0, 2]")
    if abs(alpha - 1) < ALPHA_GAP:
        raise ValueError("Petz order too close to 1; use relative_entropy")


def _petz_trace(ps: PairSpectrum, alpha: float) -> float:
    """``Tr rho^alpha sigma^(1-alpha)`` restricted to the supports."""
    i = ps.lam > 0
    j = ps.mu > 0
    a = ps.lam[i] ** alpha
    b = ps.mu[j] ** (1 - alpha)
    return float(a @ ps.overlap[np.ix_(i, j)] @ b)


def petz_renyi(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    _check_petz_order(alpha)
    ps = pair_spectrum(rho, sigma)
    if alpha > 1 and not _in_support(ps):
        return math.inf
    q = _petz_trace(ps, alpha)
    if q <= 0:
        return math.inf
    return math.log2(q) / (alpha - 1)


def c_gamma(rho: np.ndarray, sigma: np.ndarray, gamma: float) -> float:
    """``(1/g) log(2^(g D_{1+g}) + 2^(-g D_{1-g}) + 1)`` for ``g`` in (0, 1]."""
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    ps = pair_spectrum(rho, sigma)
    if not _in_support(ps):
        return math.inf
    return _c_gamma_from(ps, gamma)


def _c_gamma_from(ps: PairSpectrum, gamma: float) -> float:
    up = _petz_trace(ps, 1 + gamma)
    down = _petz_trace(ps, 1 - gamma)
    return math.log2(up + down + 1) / gamma


def c_gamma_curve(rho: np.ndarray, sigma: np.ndarray):
    """Return ``gamma -> c_gamma`` reusing one eigen-decomposition of the pair."""
    ps = pair_spectrum(rho, sigma)
    if not _in_support(ps):
        return lambda gamma: math.inf
    return lambda gamma: _c_gamma_from(ps, gamma)


# ------------------------------------------------ non-commutative quantities


def _sandwich(rho: np.ndarray, sigma: np.ndarray):
    """``sigma^{-1/2} rho sigma^{-1/2}`` on supp(sigma), sigma's nonzero spectrum and the leak."""
    hp = ql.is_hp(rho) or ql.is_hp(sigma)
    if hp:
        rho, sigma = ql.to_hp(rho), ql.to_hp(sigma)
    mu, y = ql.eigh(sigma)
    mask = ql.support_mask(mu)
    ys, mus = y[:, mask], mu[mask]
    rr = ql.dagger(ys) @ rho @ ys
    if hp:
        with ql.hp_context():
            inv = np.array([1 / mpmath.sqrt(m) for m in mus], dtype=object)
            g = rr * inv[:, None] * inv[None, :]
            leak = ql.real_scalar(ql.trace(rho)) - ql.real_scalar(ql.trace(rr))
    else:
        inv = 1 / np.sqrt(mus)
        g = rr * inv[:, None] * inv[None, :]
        leak = float(np.trace(rho).real - np.trace(rr).real)
    return g, mus, leak


def dmax(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Max-relative entropy ``log min{lam : rho <= lam sigma}``."""
    g, _, leak = _sandwich(rho, sigma)
    if leak > SUPPORT_LEAK_TOL:
        return math.inf
    w, _ = ql.eigh(g)
    top = w[-1]
    if ql.is_hp(g):
        with ql.hp_context():
            return float(mpmath.log(top, 2))
    return math.log2(top)


def geometric_renyi(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    """Geometric Rényi divergence for ``alpha`` in (0, 1) or (1, 2]."""
    if not (0 < alpha <= 2) or alpha == 1:
        raise ValueError(f"geometric order {alpha} outside (0,1)u(1,2]")
    g, mus, leak = _sandwich(rho, sigma)
    if leak > SUPPORT_LEAK_TOL:
        if alpha > 1:
            return math.inf
        raise ValueError("geometric Rényi below order 1 needs rho inside supp(sigma)")
    if ql.is_hp(g):
        with ql.hp_context():
            ga = ql.mat_func(g, lambda x: mpmath.power(x, alpha) if x > 0 else mpmath.mpf(0))
            q = sum(mus[k] * mpmath.re(ga[k, k]) for k in range(len(mus)))
            return float(mpmath.log(q, 2) / (alpha - 1))
    ga = ql.mat_func(g, lambda x: np.power(np.clip(x, 0, None), alpha))
    q = float(np.real(np.diag(ga)) @ mus)
    if q <= 0:
        return math.inf
    return math.log2(q) / (alpha - 1)


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Root fidelity ``||sqrt(rho) sqrt(sigma)||_1`` clipped to [0, 1]."""
    rho, sigma = ql.to_float(rho), ql.to_float(sigma)
    a = ql.mat_func(rho, np.sqrt)
    b = ql.mat_func(sigma, np.sqrt)
    f = float(np.sum(np.linalg.svd(a @ b, compute_uv=False)))
    return min(1.0, max(0.0, f))


def sine_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Purified distance ``sqrt(1 - F^2)`` between normalized states."""
    return math.sqrt(max(0.0, 1 - fidelity(rho, sigma) ** 2))


# ------------------------------------------------------ smoothed max-divergence


@dataclass(frozen=True)
class SmoothedDmax:
    value: float  # bits
    optimizer: np.ndarray | None  # normalized state in the smoothing ball
    achieved_distance: float  # sine distance of the optimizer to rho, recomputed
    status: str = "optimal"


@lru_cache(maxsize=16)
def _smoothing_problem(d: int) -> CachedProblem:
    rho = cp.Parameter((d, d), hermitian=True)
    sigma = cp.Parameter((d, d), hermitian=True)
    fid = cp.Parameter(nonneg=True)
    nu = cp.Variable((d, d), hermitian=True)
    cross = cp.Variable((d, d), complex=True)
    lam = cp.Variable(nonneg=True)
    block = cp.bmat([[rho, cross], [cross.H, nu]])
    cons = [
        nu >> 0,
        cp.real(cp.trace(nu)) == 1,
        lam * sigma - nu >> 0,
        block >> 0,
        cp.real(cp.trace(cross)) >= fid,
    ]
    prob = cp.Problem(cp.Minimize(lam), cons)
    return CachedProblem(prob, dict(rho=rho, sigma=sigma, fid=fid), dict(nu=nu, lam=lam))


def clean_state(x: np.ndarray) -> np.ndarray:
    """Nearest-ish density matrix: Hermitian part, negative eigenvalues clipped, trace one."""
    w, v = np.linalg.eigh(ql.hermitize(x))
    w = np.clip(w, 0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def _smoothing_scale(rho: np.ndarray, sigma: np.ndarray) -> float:
    for bound in (dmax, relative_entropy):
        v = bound(rho, sigma)
        if math.isfinite(v):
            return 2.0**v
    return 1.0


def dmax_smoothed(rho: np.ndarray, sigma: np.ndarray, eps: float, tol: float | None = None) -> SmoothedDmax:
    """Smoothed max-divergence over normalized states within sine distance ``eps`` of ``rho``.

    Solved as an SDP with the fidelity constraint written as a positive
    block matrix. ``eps = 0`` reduces to :func:`dmax`.
    """
    if not 0 <= eps < 1:
        raise ValueError("smoothing parameter must lie in [0, 1)")
    rho, sigma = ql.to_float(rho), ql.to_float(sigma)
    ql.check_density(rho, name="rho")
    if eps == 0:
        return SmoothedDmax(dmax(rho, sigma), rho, 0.0)
    # rho itself is feasible, so lam <= 2^D_max; dividing it out keeps lam of order one,
    # which tensor powers with tiny sigma eigenvalues need to converge at all
    scale = _smoothing_scale(rho, sigma)
    cp_ = _smoothing_problem(rho.shape[0])
    with cp_.lock:
        cp_.params["rho"].value = ql.hermitize(rho)
        cp_.params["sigma"].value = ql.hermitize(sigma) * scale
        cp_.params["fid"].value = math.sqrt(1 - eps**2)
        status = solve(cp_.problem, **({"tol": tol} if tol else {}))
        if is_infeasible(status):
            return SmoothedDmax(math.inf, None, math.nan, status)
        lam = float(cp_.variables["lam"].value) * scale
        nu = clean_state(cp_.variables["nu"].value)
    if lam <= 0:
        return SmoothedDmax(-math.inf, nu, sine_distance(rho, nu), status)
    return SmoothedDmax(math.log2(lam), nu, sine_distance(rho, nu), status)


def _log_best_fidelity(lp: np.ndarray, ls: np.ndarray, log_lam: float) -> float:
    """Largest ``sum sqrt(p q)`` over distributions ``q <= lam s``, from natural-log masses.

    ``lp`` is restricted to ``p > 0``; ``ls`` is aligned with it, ``-inf`` where
    ``s`` vanishes. ``rest`` below is the cap mass where ``p`` vanishes.
    """
    lcap = log_lam + ls
    with np.errstate(over="ignore"):
        if logsumexp(lcap) < 0:
            return -1.0  # no distribution fits under the cap
    # q_i = min(cap_i, c p_i); the total is piecewise linear and increasing in c,
    # so solve it exactly between consecutive ratios cap_i / p_i
    lr = lcap - lp
    order = np.argsort(lr)
    lp, lcap, lr = lp[order], lcap[order], lr[order]
    lsat = np.concatenate([[-np.inf], np.logaddexp.accumulate(lcap)[:-1]])
    lfree = np.logaddexp.accumulate(lp[::-1])[::-1]
    reached = np.logaddexp(lsat, lr + lfree) >= 0
    if not reached.any():
        # saturating the support of p is not enough; the rest spills where p vanishes
        return float(np.exp(0.5 * (lp + lcap)).sum())
    k = int(np.argmax(reached))
    lc = math.log(-math.expm1(lsat[k])) - lfree[k] if lsat[k] < 0 else -np.inf
    lq = np.minimum(lcap, lc + lp)
    lq -= logsumexp(lq)
    return float(np.exp(0.5 * (lp + lq)).sum())


def dmax_smoothed_classical(p, s, eps: float, rel_tol: float = 1e-13, log: bool = False) -> float:
    """Smoothed max-divergence of two probability vectors, in bits.

    For commuting pairs the optimal smoothed state can be taken diagonal, so
    the problem is: smallest ``lam`` such that some ``q <= lam s`` has
    fidelity at least ``sqrt(1 - eps^2)`` with ``p``. For fixed ``lam`` the
    best ``q`` is water-filling, ``q_i = min(lam s_i, c p_i)``; ``lam`` is
    found by bisection on its logarithm. With ``log=True`` the inputs are
    natural-log masses, which keeps large tensor powers from underflowing.
    """
    if not 0 <= eps < 1:
        raise ValueError("smoothing parameter must lie in [0, 1)")
    if log:
        lp, ls = np.asarray(p, dtype=float), np.asarray(s, dtype=float)
    else:
        with np.errstate(divide="ignore"):
            lp, ls = np.log(np.asarray(p, dtype=float)), np.log(np.asarray(s, dtype=float))
    target = math.sqrt(1 - eps**2)
    on, supp = lp > -np.inf, ls > -np.inf
    if not (on & supp).any() or math.exp(0.5 * logsumexp(lp[on & supp])) < target - 1e-15:
        return math.inf  # even q proportional to p on supp(s) is too far
    # beyond p's support the best q puts no mass, but its cap still counts toward
    # feasibility; fold it into one extra entry with p = 0 handled by _log_best_fidelity
    lp_on, ls_on = lp[on], ls[on]
    spare = logsumexp(ls[~on & supp]) if (~on & supp).any() else -np.inf

    def fid(log_lam: float) -> float:
        if np.logaddexp(logsumexp(log_lam + ls_on), log_lam + spare) < 0:
            return -1.0
        if logsumexp(log_lam + ls_on) <= 0:
            return float(np.exp(0.5 * (lp_on + log_lam + ls_on)).sum())
        return _log_best_fidelity(lp_on, ls_on, log_lam)

    both = on & supp
    hi = float(np.max(lp[both] - ls[both]))
    if (on & ~supp).any():
        hi = max(hi, -float(np.min(ls[supp])))
    lo = -logsumexp(ls[supp])  # any distribution needs lam * sum(s) >= 1
    if fid(lo) >= target:
        return lo / math.log(2)
    while fid(hi) < target:
        hi += math.log(2)
    a, b = lo / math.log(2), hi / math.log(2)
    while b - a > rel_tol * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        if fid(mid * math.log(2)) >= target:
            b = mid
        else:
            a = mid
    return b


def type_class_masses(p, s, n: int, log: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Masses of ``p^{⊗n}`` and ``s^{⊗n}`` on each type class (natural logs if ``log``).

    Members of a class share the likelihood ratio, so the classical smoothing
    problem on the aggregated masses has the same optimum as on the full
    ``d^n`` product vectors.
    """
    p, s = np.asarray(p, dtype=float), np.asarray(s, dtype=float)
    types = [t for t in itertools.product(range(n + 1), repeat=len(p)) if sum(t) == n]
    log_mult = np.array([math.lgamma(n + 1) - sum(math.lgamma(k + 1) for k in t) for t in types])
    counts = np.array(types, dtype=float)

    def mass(q):
        with np.errstate(divide="ignore"):
            lq = np.log(q)
        terms = np.where(counts > 0, counts * lq, 0.0)
        out = log_mult + terms.sum(axis=1)
        return out if log else np.exp(out)

    return mass(p), mass(s)


# ------------------------------------------------------------- channel level


def channel_dmax(e: ql.Channel, f: ql.Channel) -> float:
    """Max-divergence of the normalized Choi states."""
    return dmax(e.choi_state(), f.choi_state())


def channel_geometric_renyi2(e: ql.Channel, f: ql.Channel) -> float:
    """Order-2 geometric Rényi divergence of two channels.

    Uses ``log lam_max Tr_B[G_E G_F^{-1} G_E]`` with unnormalized Choi
    matrices, which equals the supremum over pure inputs on a reference copy
    of the input.
    """
    ge, gf = e.choi, f.choi
    hp = ql.is_hp(ge) or ql.is_hp(gf)
    if hp:
        ge, gf = ql.to_hp(ge), ql.to_hp(gf)
    mu, y = ql.eigh(gf)
    mask = ql.support_mask(mu)
    ys, mus = y[:, mask], mu[mask]
    proj = ql.dagger(ys) @ ge @ ys
    if hp:
        with ql.hp_context():
            inside = ql.real_scalar(ql.trace(proj))
            total = ql.real_scalar(ql.trace(ge))
            if total - inside > SUPPORT_LEAK_TOL * total:
                return math.inf
            inv = np.array([1 / m for m in mus], dtype=object)
            mid = (ys * inv) @ ql.dagger(ys)
            red = ql.partial_trace(ge @ mid @ ge, (e.d_in, e.d_out), 1)
            w, _ = ql.eigh(red)
            return float(mpmath.log(w[-1], 2))
    total = np.trace(ge).real
    if total - np.trace(proj).real > SUPPORT_LEAK_TOL * total:
        return math.inf
    mid = (ys / mus) @ ql.dagger(ys)
    red = ql.partial_trace(ge @ mid @ ge, (e.d_in, e.d_out), 1)
    return math.log2(np.linalg.eigvalsh(ql.hermitize(red))[-1])


def _input_from_params(x: np.ndarray, d: int) -> np.ndarray:
    s = (x[: d * d] + 1j * x[d * d:]).reshape(d, d)
    return s / np.linalg.norm(s)


def channel_geometric_renyi_search(e: ql.Channel, f: ql.Channel, alpha: float,
                                   restarts: int = 8, seed=0) -> float:
    """Multi-start local maximisation over pure inputs on a reference copy of the input.

    Returns the best value found, a lower bound on the channel divergence.
    The input ``(S ⊗ 1) sum_i |ii>`` is parametrised by the matrix ``S``.
    """
    ef, ff = e.to_float(), f.to_float()
    d = e.d_in
    rng = np.random.default_rng(seed)

    def objective(x):
        s = _input_from_params(x, d)
        k = ql.tensor(s, np.eye(e.d_out))
        val = geometric_renyi(k @ ef.choi @ ql.dagger(k), k @ ff.choi @ ql.dagger(k), alpha)
        return -val if math.isfinite(val) else 1e6

    best = -math.inf
    starts = [np.concatenate([np.eye(d).ravel(), np.zeros(d * d)])]
    starts += [rng.standard_normal(2 * d * d) for _ in range(max(0, restarts - 1))]
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options=dict(maxiter=4000, xatol=1e-8, fatol=1e-10))
        best = max(best, -res.fun)
    return best


def chat_gamma(e: ql.Channel, f: ql.Channel, gamma: float, rigorous: bool = True, **search) -> float:
    """Channel analogue of ``c_gamma``: ``(1/g) log(2^(g D^_{1+g}(E||F)) + 2)``.

    With ``rigorous`` the order-2 closed form stands in for ``D^_{1+g}``; it
    upper-bounds every order up to 2, so the result is a valid cap. Otherwise
    the divergence comes from :func:`channel_geometric_renyi_search`.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if rigorous:
        dg = channel_geometric_renyi2(e, f)
    else:
        dg = channel_geometric_renyi_search(e, f, 1 + gamma, **search)
    if math.isinf(dg):
        return math.inf
    return math.log2(2 ** (gamma * dg) + 2) / gamma
