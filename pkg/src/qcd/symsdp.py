"""Permutation-symmetric reduction of the parallel channel-testing SDP.

An operator on ``(C^d)^{⊗n}`` that commutes with every copy permutation is a
combination of orbit basis matrices. A matrix entry ``(i_1..i_n, j_1..j_n)``
is read as the word of letters ``(i_k, j_k)``; two entries share an orbit
when their words are rearrangements of each other, so orbits are multisets
of ``n`` letters drawn from ``d^2``.

Multi-copy operators here are always ordered copy by copy, ``(RB)(RB)...``,
which is the plain Kronecker power of the single-copy Choi matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from . import qlinalg as ql
from .sdp import solve

# Largest full-space dimension (d_R d_B)^n the solvers are asked to handle.
DEFAULT_DIM_CAP = 4096


@dataclass(frozen=True, eq=False)
class OrbitTable:
    """Orbits of matrix entries on ``(C^d)^{⊗n}`` under copy permutations."""

    d: int
    n: int
    reps: np.ndarray  # (m, n) sorted letters, letter = i * d + j
    sizes: np.ndarray  # orbit cardinalities

    @property
    def count(self) -> int:
        return len(self.sizes)

    @cached_property
    def codes(self) -> np.ndarray:
        return _encode(self.reps, self.d * self.d)

    def lookup(self, letters: np.ndarray) -> np.ndarray:
        """Orbit ids of letter words given row-wise (any order within a row)."""
        codes = _encode(np.sort(letters, axis=-1), self.d * self.d)
        ids = np.searchsorted(self.codes, codes)
        return ids

    @cached_property
    def entry_ids(self) -> np.ndarray:
        """``(D, D)`` array with the orbit id of every matrix entry."""
        dim = self.d**self.n
        digits = _digits(np.arange(dim), self.d, self.n)
        letters = digits[:, None, :] * self.d + digits[None, :, :]
        return self.lookup(letters.reshape(-1, self.n)).reshape(dim, dim)

    @cached_property
    def transpose(self) -> np.ndarray:
        """Id of the orbit holding the transposed entries."""
        i, j = np.divmod(self.reps, self.d)
        return self.lookup(j * self.d + i)

    @cached_property
    def trace_weights(self) -> np.ndarray:
        """``Tr C_r``: orbit size for diagonal orbits, zero otherwise."""
        i, j = np.divmod(self.reps, self.d)
        return np.where((i == j).all(axis=1), self.sizes, 0)

    def basis_matrix(self, r: int) -> np.ndarray:
        return (self.entry_ids == r).astype(float)

    def orbit_of(self, rows: tuple[int, ...], cols: tuple[int, ...]) -> int:
        letters = np.array([i * self.d + j for i, j in zip(rows, cols)])
        return int(self.lookup(letters[None, :])[0])


def _encode(words: np.ndarray, base: int) -> np.ndarray:
    out = np.zeros(words.shape[:-1], dtype=np.int64)
    for k in range(words.shape[-1]):
        out = out * base + words[..., k]
    return out


def _digits(idx: np.ndarray, d: int, n: int) -> np.ndarray:
    out = np.empty((len(idx), n), dtype=np.int64)
    rem = idx.copy()
    for k in range(n - 1, -1, -1):
        rem, out[:, k] = np.divmod(rem, d)
    return out


@lru_cache(maxsize=32)
def orbit_table(d: int, n: int) -> OrbitTable:
    """Enumerate orbits as sorted letter multisets, with their sizes."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    letters = d * d
    reps = np.array(list(itertools.combinations_with_replacement(range(letters), n)), dtype=np.int64)
    sizes = np.empty(len(reps), dtype=np.int64)
    fact_n = math.factorial(n)
    for k, rep in enumerate(reps):
        _, counts = np.unique(rep, return_counts=True)
        sizes[k] = fact_n // math.prod(math.factorial(int(c)) for c in counts)
    return OrbitTable(d, n, reps, sizes)


def orbit_count(d: int, n: int) -> int:
    return math.comb(d * d + n - 1, n)


def tensor_power_coeffs(a: np.ndarray, n: int, table: OrbitTable | None = None) -> np.ndarray:
    """Orbit coefficients of ``a^{⊗n}``: products of single-copy entries over each word."""
    table = table or orbit_table(a.shape[0], n)
    flat = np.asarray(a).ravel()
    return np.prod(flat[table.reps], axis=1)


def from_coeffs(coeffs: np.ndarray, table: OrbitTable) -> np.ndarray:
    """Reconstruct the full-space operator ``sum_r c_r C_r``."""
    return np.asarray(coeffs)[table.entry_ids]


def group_average(x: np.ndarray, d: int, n: int) -> np.ndarray:
    """Average of ``P(pi) X P(pi)^dagger`` over all copy permutations."""
    t = x.reshape((d,) * (2 * n))
    acc = np.zeros_like(t)
    perms = list(itertools.permutations(range(n)))
    for p in perms:
        acc = acc + t.transpose(list(p) + [n + k for k in p])
    return (acc / len(perms)).reshape(x.shape)


def interleave_rb(x: np.ndarray, d_r: int, d_b: int, n: int) -> np.ndarray:
    """Reorder an operator on ``R^n B^n`` to copy-by-copy order ``(RB)^n``."""
    dims = [d_r] * n + [d_b] * n
    perm = [k for c in range(n) for k in (c, n + c)]
    return ql.permute_systems(x, dims, perm)


def product_orbit_map(d_r: int, d_b: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """For each joint orbit on ``(RB)^n``, the R orbit and B orbit of its marginal words.

    ``C^R_r ⊗ C^B_s`` (interleaved) is the sum of the joint basis matrices
    mapped to ``(r, s)``. For ``n >= 2`` several joint orbits can map to the
    same pair.
    """
    rb = orbit_table(d_r * d_b, n)
    u, v = np.divmod(rb.reps, d_r * d_b)
    (a, b), (a2, b2) = np.divmod(u, d_b), np.divmod(v, d_b)
    r_ids = orbit_table(d_r, n).lookup(a * d_r + a2)
    b_ids = orbit_table(d_b, n).lookup(b * d_b + b2)
    return r_ids, b_ids


# ------------------------------------------------------------- channel SDPs


@dataclass(frozen=True)
class ChannelDH:
    dh: float  # -log of the optimal type-II error, bits
    beta: float
    n: int
    method: str
    input_state: np.ndarray | None = None  # optimal reference state on R^n
    variables: int = 0


def _check_pair(e: ql.Channel, f: ql.Channel, n: int, eps: float, cap: int):
    if (e.d_in, e.d_out) != (f.d_in, f.d_out):
        raise ValueError("channels must share input and output dimensions")
    if not 0 <= eps < 1:
        raise ValueError("type-I error must lie in [0, 1)")
    if n < 1:
        raise ValueError("need at least one copy")
    dim = (e.d_in * e.d_out) ** n
    if dim > cap:
        raise ValueError(f"full-space dimension {dim} exceeds the cap {cap}")


def _finish(value: float, n: int, method: str, state, nvars: int) -> ChannelDH:
    beta = value if value >= 1e-12 else 0.0
    dh = math.inf if beta == 0 else -math.log2(beta)
    return ChannelDH(dh, beta, n, method, state, nvars)


def channel_dh_parallel(e: ql.Channel, f: ql.Channel, n: int, eps: float,
                        cap: int = DEFAULT_DIM_CAP, tol: float | None = None) -> ChannelDH:
    """Optimal type-II error for ``n`` parallel uses with a shared reference.

    Minimises ``Tr(W G_F^{⊗n})`` subject to ``Tr(W G_E^{⊗n}) >= 1 - eps`` and
    ``0 <= W <= rho_{R^n} ⊗ 1_{B^n}`` with unnormalized Choi matrices ``G``.
    """
    _check_pair(e, f, n, eps, cap)
    dr, db = e.d_in, e.d_out
    real = _is_real_pair(e, f)
    ge = ql.tensor_power(ql.to_float(e.choi), n)
    gf = ql.tensor_power(ql.to_float(f.choi), n)
    dim = ge.shape[0]
    kind = dict(symmetric=True) if real else dict(hermitian=True)
    w = cp.Variable((dim, dim), **kind)
    rho = cp.Variable((dr**n, dr**n), **kind)
    # permutation matrix taking R^n B^n order to copy-by-copy order
    dims = [dr] * n + [db] * n
    order = [k for c in range(n) for k in (c, n + c)]
    pmat = np.stack([ql.permute_ket(col, dims, order) for col in np.eye(dim)], axis=1).real
    upper = pmat @ cp.kron(rho, np.eye(db**n)) @ pmat.T
    ge_c, gf_c = (ge.real, gf.real) if real else (ge.conj(), gf.conj())
    re = (lambda x: x) if real else cp.real
    cons = [
        w >> 0,
        upper - w >> 0,
        re(cp.trace(rho)) == 1,
        re(cp.sum(cp.multiply(w, ge_c))) >= 1 - eps,
    ]
    prob = cp.Problem(cp.Minimize(re(cp.sum(cp.multiply(w, gf_c)))), cons)
    solve(prob, **({"tol": tol} if tol else {}))
    nvars = (1 if real else 2) * (dim * dim + dr ** (2 * n))
    return _finish(float(prob.value), n, "direct", rho.value, nvars)


def _is_real_pair(e: ql.Channel, f: ql.Channel) -> bool:
    """Real Choi matrices make complex conjugation a symmetry, so real tests suffice."""
    return all(np.abs(ql.to_float(c.choi).imag).max() < 1e-14 for c in (e, f))


def _real_params(table: OrbitTable, real: bool = False):
    """Real coordinates for Hermitian orbit coefficients.

    Self-transposed orbits get one real coordinate; a transposed pair (r, s)
    shares a real and an imaginary coordinate, ``y_s = conj(y_r)``.
    Returns index arrays (re_idx, im_idx, im_sign) per orbit and the count.
    """
    tr = table.transpose
    re_idx = np.full(table.count, -1)
    im_idx = np.full(table.count, -1)
    im_sign = np.zeros(table.count)
    k = 0
    for r in range(table.count):
        s = tr[r]
        if re_idx[r] >= 0:
            continue
        re_idx[r] = k
        k += 1
        if s != r:
            re_idx[s] = re_idx[r]
            if not real:
                im_idx[r] = im_idx[s] = k
                im_sign[r], im_sign[s] = 1.0, -1.0
                k += 1
    return re_idx, im_idx, im_sign, k


def _coef_maps(table: OrbitTable, re_idx, im_idx, im_sign, nvars):
    """Sparse maps from real coordinates to Re and Im orbit coefficients."""
    m = table.count
    rows = np.arange(m)
    re_map = sp.csr_matrix((np.ones(m), (rows, re_idx)), shape=(m, nvars))
    has = im_idx >= 0
    im_map = sp.csr_matrix((im_sign[has], (rows[has], im_idx[has])), shape=(m, nvars))
    return re_map, im_map


def _psd_full(re_c, im_c, table: OrbitTable, real: bool):
    """Real embedding ``[[A, -B], [B, A]] >> 0`` of ``sum_r c_r C_r`` (just ``A`` if real)."""
    ids = table.entry_ids
    dim = ids.shape[0]
    gather = sp.csr_matrix((np.ones(ids.size), (np.arange(ids.size), ids.ravel())),
                           shape=(ids.size, table.count))
    a = cp.reshape(gather @ re_c, (dim, dim), order="C")
    if real:
        return (a + a.T) / 2 >> 0
    b = cp.reshape(gather @ im_c, (dim, dim), order="C")
    big = cp.bmat([[a, -b], [b, a]])
    return (big + big.T) / 2 >> 0


def reduced_channel_dh(e: ql.Channel, f: ql.Channel, n: int, eps: float,
                       cap: int = DEFAULT_DIM_CAP, tol: float | None = None) -> ChannelDH:
    """Same optimum as :func:`channel_dh_parallel`, over orbit coefficients.

    The test and the reference state are restricted to permutation-invariant
    operators. Decision variables are one coefficient per joint orbit for the
    test and one per R orbit for the state; positivity is imposed on the
    reconstructed full-space operators.
    """
    _check_pair(e, f, n, eps, cap)
    dr, db = e.d_in, e.d_out
    rb = orbit_table(dr * db, n)
    rt = orbit_table(dr, n)
    gam_e = tensor_power_coeffs(ql.to_float(e.choi), n, rb)
    gam_f = tensor_power_coeffs(ql.to_float(f.choi), n, rb)

    real = _is_real_pair(e, f)
    y_re, y_im, y_sign, ny = _real_params(rb, real)
    z_re, z_im, z_sign, nz = _real_params(rt, real)
    y = cp.Variable(ny)
    z = cp.Variable(nz)
    yr_map, yi_map = _coef_maps(rb, y_re, y_im, y_sign, ny)
    zr_map, zi_map = _coef_maps(rt, z_re, z_im, z_sign, nz)
    y_r, y_i = yr_map @ y, yi_map @ y
    z_r, z_i = zr_map @ z, zi_map @ z

    # rho ⊗ 1_B in joint-orbit coordinates: joint orbits whose B letters are diagonal
    # carry the coefficient of their R-marginal orbit.
    r_of, b_of = product_orbit_map(dr, db, n)
    b_diag = orbit_table(db, n).trace_weights[b_of] > 0
    embed = sp.csr_matrix((np.ones(int(b_diag.sum())), (np.flatnonzero(b_diag), r_of[b_diag])),
                          shape=(rb.count, rt.count))
    slack_r = embed @ z_r - y_r
    slack_i = embed @ z_i - y_i

    sizes = rb.sizes.astype(float)
    objective = cp.sum(cp.multiply(sizes * gam_f.real, y_r) + cp.multiply(sizes * gam_f.imag, y_i))
    power = cp.sum(cp.multiply(sizes * gam_e.real, y_r) + cp.multiply(sizes * gam_e.imag, y_i))
    cons = [
        _psd_full(y_r, y_i, rb, real),
        _psd_full(slack_r, slack_i, rb, real),
        rt.trace_weights.astype(float) @ z_r == 1,
        power >= 1 - eps,
    ]
    prob = cp.Problem(cp.Minimize(objective), cons)
    solve(prob, **({"tol": tol} if tol else {}))
    zc = zr_map @ z.value + 1j * (zi_map @ z.value)
    state = from_coeffs(zc, rt)
    return _finish(float(prob.value), n, "reduced", state, ny + nz)
