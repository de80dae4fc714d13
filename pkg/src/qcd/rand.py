"""Seeded random states, unitaries and channels for tests and sweeps."""

from __future__ import annotations

import numpy as np

from .qlinalg import Channel


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rng, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(d: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    q, r = np.linalg.qr(ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, seed=None, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt random state of the given rank (full rank by default)."""
    rng = rng_from(seed)
    g = ginibre(rng, d, rank or d)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_pure(d: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    v = ginibre(rng, d, 1).ravel()
    return v / np.linalg.norm(v)


def random_diagonal_density(d: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    p = rng.dirichlet(np.ones(d))
    return np.diag(p).astype(complex)


def random_channel(d_in: int, d_out: int, seed=None, n_kraus: int | None = None,
                   real: bool = False) -> Channel:
    """Random CPTP map from a random Stinespring isometry (orthogonal if ``real``)."""
    rng = rng_from(seed)
    k = n_kraus or d_in * d_out
    g = rng.standard_normal((d_out * k, d_in)) if real else ginibre(rng, d_out * k, d_in)
    q, _ = np.linalg.qr(g)
    iso = q[:, :d_in]
    kraus = [iso[j * d_out:(j + 1) * d_out, :] for j in range(k)]
    return Channel.from_kraus(kraus, name="random")


def random_strategy(n: int, d_ref: int = 2, d: int = 2, seed=None):
    """Random ``n``-use adaptive strategy on qudits with a ``d_ref`` memory."""
    from .adaptive import AdaptiveStrategy

    rng = rng_from(seed)
    rho1 = random_density(d_ref * d, rng)
    preps = [random_channel(d_ref * d, d_ref * d, rng) for _ in range(n - 1)]
    return AdaptiveStrategy(rho1, preps, d_ref=d_ref, d_in=d, d_out=d)
