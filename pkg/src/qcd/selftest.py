"""Quick invariant checks run by ``qcd selftest`` (a few seconds)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from . import bounds, example, rand
from . import divergences as dv
from . import qlinalg as ql
from .hyptest import dh_neyman_pearson, dh_state
from .symsdp import orbit_count, orbit_table


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


def _constants() -> Check:
    caps = [(bounds.K_CONST, 0.29), (bounds.K1, 2.72), (bounds.K2, 2.36)]
    ok = all(0.995 * cap <= v <= cap for v, cap in caps)
    return Check("constants", ok, ", ".join(f"{v:.5f}<={cap}" for v, cap in caps))


def _oracle(seed: int) -> Check:
    rng = rand.rng_from(seed)
    worst = 0.0
    for _ in range(6):
        d = int(rng.integers(2, 4))
        r, s = rand.random_density(d, rng), rand.random_density(d, rng)
        eps = float(rng.choice([0.05, 0.3, 0.7]))
        worst = max(worst, abs(dh_state(r, s, eps, method="sdp").dh - dh_neyman_pearson(r, s, eps).dh))
    return Check("sdp-vs-neyman-pearson", worst < 1e-6, f"max gap {worst:.2e} bits")


def _data_processing(seed: int) -> Check:
    rng = rand.rng_from(seed)
    worst = math.inf
    for _ in range(10):
        r, s = rand.random_density(3, rng), rand.random_density(3, rng)
        ch = rand.random_channel(3, 2, rng)
        for fn in (dv.relative_entropy, dv.dmax):
            worst = min(worst, fn(r, s) - fn(ch(r), ch(s)))
        worst = min(worst, dv.sine_distance(r, s) - dv.sine_distance(ch(r), ch(s)))
    return Check("data-processing", worst >= -1e-7, f"min slack {worst:.2e}")


def _orbits() -> Check:
    ok = all(orbit_count(d, n) == comb(d * d + n - 1, n) for d in (2, 3) for n in (1, 2, 3))
    t = orbit_table(2, 3)
    ok = ok and int(t.sizes.sum()) == 2 ** 6
    return Check("orbit-counts", ok, "C(d^2+n-1, n) for d<=3, n<=3")


def _example() -> Check:
    gaps = []
    for kappa in (0.1, 0.25, 0.5):
        tr = example.simulate_example(kappa)
        out = ql.to_float(tr.output_pair(2)[1])
        gaps.append(abs(out[0, 0].real - example.delta(kappa)))
    tr = example.simulate_example(example.FIGURE_KAPPA)
    black = dh_state(*tr.output_pair(2), 0).dh / 2
    gaps.append(abs(black - example.adaptive_rate(example.FIGURE_KAPPA)))
    return Check("example-closed-forms", max(gaps) < 1e-9, f"max gap {max(gaps):.2e}")


def _figure() -> Check:
    rows = example.figure3_rows(m_grid=example.figure_m_grid(8))
    ok = all(r.green <= r.red for r in rows)
    ok = ok and all(r.yellow <= r.green + 1e-6 for r in rows if r.eq38_ok and np.isfinite(r.green))
    ok = ok and rows[-1].green > rows[-1].black
    return Check("figure-ordering", ok, f"{len(rows)} rows")


def _refusal() -> Check:
    tr = example.simulate_example(0.0)
    try:
        bounds.theorem7_rhs(tr, 100, 2.0**-5, 0.0, 1.0)
    except bounds.InfiniteMaxDivergenceError:
        return Check("kappa-zero-refusal", math.isinf(dv.channel_dmax(tr.e, tr.f)), "refused")
    return Check("kappa-zero-refusal", False, "bound was returned")


def run(seed: int = 0) -> list[Check]:
    return [_constants(), _oracle(seed), _data_processing(seed), _orbits(), _example(), _figure(), _refusal()]
