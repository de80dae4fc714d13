"""Smoothed max-divergence rate of i.i.d. pairs against its finite-n bracket (CSV).

Quantum qubit pairs use the smoothing SDP for small n; diagonal pairs use the
exact classical oracle on type classes, so n can be large.

    python3 scripts/aep_sweep.py --pairs 3 --eps 0.3 --n-quantum 4 --n-classical 200
"""

import argparse
import sys

import numpy as np

from qcd import bounds, rand
from qcd import divergences as dv
from qcd import qlinalg as ql


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pairs", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n-quantum", type=int, default=4)
    p.add_argument("--n-classical", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print("kind,pair,n,lower,value,upper,relative_entropy")
    for k in range(args.pairs):
        r, s = rand.random_density(2, rng), rand.random_density(2, rng)
        for n in range(1, args.n_quantum + 1):
            v = dv.dmax_smoothed(ql.tensor_power(r, n), ql.tensor_power(s, n), args.eps).value / n
            a = bounds.aep_bounds(r, s, n, args.eps, args.gamma)
            print(f"quantum,{k},{n},{a.lower:.6f},{v:.6f},{a.upper:.6f},{a.relative_entropy:.6f}")
    for k in range(args.pairs):
        pr, qr = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
        for n in np.unique(np.geomspace(1, args.n_classical, 12).astype(int)):
            v = dv.dmax_smoothed_classical(*dv.type_class_masses(pr, qr, int(n), log=True), args.eps, log=True) / n
            a = bounds.aep_bounds(np.diag(pr).astype(complex), np.diag(qr).astype(complex), int(n),
                                  args.eps, args.gamma)
            print(f"classical,{k},{n},{a.lower:.6f},{v:.6f},{a.upper:.6f},{a.relative_entropy:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
