"""Finite-dimensional linear algebra for states and channels.

Operators are plain ``numpy`` arrays. Two numeric backends are supported:

* ``complex128`` arrays (the default), and
* ``object`` arrays holding ``mpmath.mpc`` entries ("high precision").

The high-precision path exists for pairs whose spectra span more than ten
orders of magnitude, where a double-precision eigensolver cannot tell a
genuine ``1e-16`` eigenvalue from round-off. Every function here accepts
either kind of array and keeps the backend of its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import mpmath
import numpy as np

# Relative threshold below which an eigenvalue counts as zero.
SUPPORT_CUTOFF = 1e-10
# Working precision and matching zero threshold of the mpmath backend.
HP_DPS = 50
HP_CUTOFF = 1e-35


def hp_context():
    """Context manager raising mpmath's working precision to ``HP_DPS``."""
    return mpmath.workdps(HP_DPS)


def is_hp(a: np.ndarray) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def to_hp(a) -> np.ndarray:
    """Convert to an object array of ``mpmath.mpc`` (exact for float input)."""
    a = np.asarray(a)
    if is_hp(a):
        return a
    out = np.empty(a.shape, dtype=object)
    flat = a.astype(complex).ravel()
    out.ravel()[:] = [mpmath.mpc(z.real, z.imag) for z in flat]
    return out


def to_float(a) -> np.ndarray:
    a = np.asarray(a)
    if not is_hp(a):
        return a.astype(complex)
    return np.array([complex(z) for z in a.ravel()], dtype=complex).reshape(a.shape)


def default_cutoff(a: np.ndarray) -> float:
    return HP_CUTOFF if is_hp(a) else SUPPORT_CUTOFF


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.

    Returns real eigenvalues and the matrix of column eigenvectors. For
    high-precision input both outputs are object arrays.
    """
    if not is_hp(a):
        return np.linalg.eigh(hermitize(np.asarray(a, dtype=complex)))
    n = a.shape[0]
    with hp_context():
        m = mpmath.matrix(hermitize(a).tolist())
        w, q = mpmath.eighe(m)
        order = sorted(range(n), key=lambda k: w[k])
        vals = np.array([mpmath.re(w[k]) for k in order], dtype=object)
        vecs = np.empty((n, n), dtype=object)
        for col, k in enumerate(order):
            for row in range(n):
                vecs[row, col] = mpmath.mpc(q[row, k])
    return vals, vecs


def support_mask(w: np.ndarray, cutoff: float | None = None) -> np.ndarray:
    """Boolean mask of eigenvalues treated as nonzero."""
    if cutoff is None:
        cutoff = HP_CUTOFF if w.dtype == object else SUPPORT_CUTOFF
    if w.size == 0:
        return np.zeros(0, dtype=bool)
    scale = max(abs(x) for x in w)
    if scale == 0:
        return np.zeros(w.shape, dtype=bool)
    return np.array([abs(x) > cutoff * scale for x in w], dtype=bool)


def elementwise(f: Callable, w: np.ndarray) -> np.ndarray:
    """Apply a scalar function entrywise, vectorised on the float backend."""
    if w.dtype == object:
        with hp_context():
            return np.array([f(x) for x in w], dtype=object)
    return np.asarray(f(w), dtype=float)


def mat_func(h: np.ndarray, f: Callable, cutoff: float | None = None) -> np.ndarray:
    """Spectral function restricted to the support of ``h``.

    ``f`` acts on the array of nonzero eigenvalues (entrywise for the
    high-precision backend); eigenvalues under the cutoff are mapped to zero.
    """
    w, v = eigh(h)
    mask = support_mask(w, cutoff)
    vs = v[:, mask]
    fw = elementwise(f, w[mask])
    return (vs * fw) @ dagger(vs)


def support_projector(h: np.ndarray, cutoff: float | None = None) -> np.ndarray:
    w, v = eigh(h)
    vs = v[:, support_mask(w, cutoff)]
    return vs @ dagger(vs)


def trace(a: np.ndarray):
    return sum(a[i, i] for i in range(a.shape[0])) if is_hp(a) else np.trace(a)


def real_scalar(z) -> float:
    """Real part of a (possibly mpmath) scalar as a Python float."""
    return float(mpmath.re(z)) if isinstance(z, (mpmath.mpc, mpmath.mpf)) else float(np.real(z))


def check_density(rho: np.ndarray, tol: float = 1e-8, name: str = "state") -> None:
    """Raise ``ValueError`` unless ``rho`` is a normalized density matrix."""
    check_psd(rho, tol, name)
    tr = real_scalar(trace(rho))
    if abs(tr - 1) > tol:
        raise ValueError(f"{name} has trace {tr}, expected 1")


def check_psd(a: np.ndarray, tol: float = 1e-8, name: str = "operator") -> None:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    af = to_float(a)
    if np.max(np.abs(af - dagger(af)), initial=0.0) > tol:
        raise ValueError(f"{name} is not Hermitian")
    wmin = np.linalg.eigvalsh(hermitize(af))[0] if af.size else 0.0
    if wmin < -tol * max(1.0, np.abs(af).max()):
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {wmin:.3e})")


# ---------------------------------------------------------------- tensors


@dataclass(frozen=True)
class SystemLayout:
    """Ordered list of tensor factors with optional labels."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"S{k}" for k in range(len(self.dims))))
        if len(self.labels) != len(self.dims):
            raise ValueError("labels and dims differ in length")
        if any(d < 1 for d in self.dims):
            raise ValueError("dimensions must be positive")

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def index(self, system: int | str) -> int:
        return self.labels.index(system) if isinstance(system, str) else int(system)


def tensor(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=object if any(is_hp(o) for o in ops) else complex)
    for op in ops:
        op = np.asarray(op)
        if op.ndim == 1:
            op = op.reshape(-1, 1)
        out = np.kron(out, op)
    return out


def ket_tensor(*vecs: np.ndarray) -> np.ndarray:
    return tensor(*[np.asarray(v).reshape(-1, 1) for v in vecs]).ravel()


def tensor_power(a: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("tensor power needs n >= 0")
    return tensor(*([a] * n)) if n else np.eye(1, dtype=object if is_hp(a) else complex)


def permute_systems(x: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator: factor ``perm[k]`` moves to slot ``k``."""
    dims = list(dims)
    k = len(dims)
    t = x.reshape(dims + dims)
    axes = list(perm) + [k + p for p in perm]
    new = [dims[p] for p in perm]
    return t.transpose(axes).reshape(math.prod(new), math.prod(new))


def permute_ket(v: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    return v.reshape(dims).transpose(list(perm)).ravel()


def partial_trace(x: np.ndarray, layout: SystemLayout | Sequence[int], trace_out) -> np.ndarray:
    """Trace out the listed subsystems (indices or labels)."""
    if not isinstance(layout, SystemLayout):
        layout = SystemLayout(tuple(layout))
    if isinstance(trace_out, (int, str)):
        trace_out = [trace_out]
    out = sorted({layout.index(s) for s in trace_out})
    keep = [k for k in range(len(layout.dims)) if k not in out]
    dims = list(layout.dims)
    x = np.asarray(x)
    if x.shape != (layout.total, layout.total):
        raise ValueError(f"operator shape {x.shape} does not match layout {layout.dims}")
    k = len(dims)
    t = x.reshape(dims + dims)
    letters = [chr(ord("a") + i) for i in range(2 * k)]
    row = letters[:k]
    col = letters[k:]
    for s in out:
        col[s] = row[s]
    spec = "".join(row + col) + "->" + "".join([row[s] for s in keep] + [col[s] for s in keep])
    dk = math.prod(dims[s] for s in keep)
    return np.einsum(spec, t).reshape(dk, dk)


def canonical_purification(rho: np.ndarray) -> np.ndarray:
    """Pure state ``(1 ⊗ sqrt(rho)) sum_i |i>|i>`` on a copy of the space times the space.

    Tracing out the first factor returns ``rho``.
    """
    d = rho.shape[0]
    root = mat_func(rho, np.sqrt if not is_hp(rho) else mpmath.sqrt)
    phi = np.eye(d, dtype=root.dtype).reshape(d * d)
    return tensor(np.eye(d, dtype=root.dtype), root) @ phi


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v).reshape(-1, 1)
    return v @ dagger(v)


def basis(d: int, k: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[k] = 1
    return e


# ---------------------------------------------------------------- channels


@dataclass(frozen=True, eq=False)
class Channel:
    """Linear map from ``d_in x d_in`` to ``d_out x d_out`` matrices.

    Stored through its Choi matrix ``sum_ij |i><j| ⊗ N(|i><j|)`` (input factor
    first, trace over the output gives the identity for trace-preserving maps).
    """

    choi: np.ndarray
    d_in: int
    d_out: int
    name: str = ""

    def __post_init__(self):
        if self.choi.shape != (self.d_in * self.d_out,) * 2:
            raise ValueError("Choi matrix shape does not match the dimensions")

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], name: str = "") -> "Channel":
        k0 = np.asarray(kraus[0])
        d_out, d_in = k0.shape
        hp = any(is_hp(np.asarray(k)) for k in kraus)
        eye = to_hp(np.eye(d_in)) if hp else np.eye(d_in, dtype=complex)
        phi = eye.reshape(d_in * d_in)
        choi = sum(projector(tensor(eye, np.asarray(k)) @ phi) for k in kraus)
        ch = cls(choi, d_in, d_out, name)
        object.__setattr__(ch, "_kraus", [np.asarray(k) for k in kraus])
        return ch

    @classmethod
    def from_map(cls, fn: Callable[[np.ndarray], np.ndarray], d_in: int, d_out: int,
                 name: str = "", hp: bool = False) -> "Channel":
        """Tabulate the Choi matrix of a linear map given as a Python function."""
        dt = object if hp else complex
        choi = np.zeros((d_in * d_out, d_in * d_out), dtype=dt)
        if hp:
            choi = to_hp(choi)
        for i in range(d_in):
            for j in range(d_in):
                eij = np.zeros((d_in, d_in), dtype=complex)
                eij[i, j] = 1
                eij = to_hp(eij) if hp else eij
                out = np.asarray(fn(eij))
                choi[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = out
        return cls(choi, d_in, d_out, name)

    @cached_property
    def kraus(self) -> list[np.ndarray]:
        if hasattr(self, "_kraus"):
            return self._kraus
        return kraus_from_choi(self.choi, self.d_in, self.d_out)

    @property
    def hp(self) -> bool:
        return is_hp(self.choi)

    def choi_state(self) -> np.ndarray:
        """Choi matrix divided by the input dimension (a density matrix for CPTP maps)."""
        return self.choi / self.d_in

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_channel(self, x)

    def is_cptp(self, tol: float = 1e-9) -> bool:
        c = to_float(self.choi)
        if np.linalg.eigvalsh(hermitize(c))[0] < -tol:
            return False
        tb = partial_trace(c, (self.d_in, self.d_out), 1)
        return bool(np.allclose(tb, np.eye(self.d_in), atol=tol))

    def to_float(self) -> "Channel":
        return Channel(to_float(self.choi), self.d_in, self.d_out, self.name) if self.hp else self


def kraus_from_choi(choi: np.ndarray, d_in: int, d_out: int) -> list[np.ndarray]:
    w, v = eigh(choi)
    mask = support_mask(w)
    ops = []
    for k in np.flatnonzero(mask):
        if w[k] <= 0:
            continue
        amp = mpmath.sqrt(w[k]) if is_hp(choi) else np.sqrt(w[k])
        vec = v[:, k] * amp
        ops.append(vec.reshape(d_in, d_out).T)
    return ops


def apply_channel(ch: Channel, x: np.ndarray, layout: SystemLayout | Sequence[int] | None = None,
                  on: int | str | None = None) -> np.ndarray:
    """Apply ``ch`` to ``x``, optionally on one factor of a multipartite operator.

    With ``layout`` and ``on`` the channel acts on that factor and the identity
    on all others; the factor keeps its position with dimension ``d_out``.
    """
    x = np.asarray(x)
    kraus = ch.kraus
    if is_hp(x) and not ch.hp:
        kraus = [to_hp(k) for k in kraus]
    elif ch.hp and not is_hp(x):
        x = to_hp(x)
    if layout is not None:
        if not isinstance(layout, SystemLayout):
            layout = SystemLayout(tuple(layout))
        s = layout.index(on)
        if layout.dims[s] != ch.d_in:
            raise ValueError("channel input dimension does not match the subsystem")
        left = np.eye(math.prod(layout.dims[:s]))
        right = np.eye(math.prod(layout.dims[s + 1:]))
        if is_hp(x):
            left, right = to_hp(left), to_hp(right)
        kraus = [tensor(left, k, right) for k in kraus]
    elif x.shape[0] != ch.d_in:
        raise ValueError("channel input dimension does not match the operator")
    if is_hp(x):
        with hp_context():
            return sum(k @ x @ dagger(k) for k in kraus)
    return sum(k @ x @ dagger(k) for k in kraus)


def compose(second: Channel, first: Channel, name: str = "") -> Channel:
    if first.d_out != second.d_in:
        raise ValueError("dimension mismatch in channel composition")
    ks = [b @ a for b in second.kraus for a in first.kraus]
    return Channel.from_kraus(ks, name=name)


def channel_tensor(*chs: Channel) -> Channel:
    """Parallel composition with factors in the order given."""
    ks = [np.eye(1)]
    for ch in chs:
        ks = [tensor(a, b) for a in ks for b in ch.kraus]
    return Channel.from_kraus(ks)


def identity_channel(d: int) -> Channel:
    return Channel.from_kraus([np.eye(d, dtype=complex)], name="id")


def replacement_channel(d_in: int, state: np.ndarray) -> Channel:
    """Discard the input and prepare ``state``."""
    return Channel.from_map(lambda x: trace(x) * state, d_in, state.shape[0], name="replace",
                            hp=is_hp(state))


def choi_tensor_power(choi: np.ndarray, d_in: int, d_out: int, n: int) -> np.ndarray:
    """n-fold tensor power of a Choi matrix, reordered from (RB)^n to R^n B^n."""
    big = tensor_power(choi, n)
    dims = [d_in, d_out] * n
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return permute_systems(big, dims, perm)
