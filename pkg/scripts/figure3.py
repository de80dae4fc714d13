"""Write the rate curves of the two-channel example as CSV, optionally plotting them.

    python3 scripts/figure3.py --out figure3.csv [--plot figure3.png]

Plotting needs matplotlib, which is not a package dependency.
"""

import argparse
import sys

from qcd import example
from qcd.config import RunConfig
from qcd.io import parse_float


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--kappa", type=parse_float, default=example.FIGURE_KAPPA)
    p.add_argument("--alpha-p", type=parse_float, default=example.FIGURE_ALPHA_P)
    p.add_argument("--points", type=int, default=60)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--plot", default=None, help="PNG path for a log-x plot")
    args = p.parse_args(argv)
    cfg = RunConfig(threads=args.threads, out=args.out)

    rows = example.figure3_rows(args.kappa, example.FIGURE_ALPHA_A, args.alpha_p,
                                example.figure_m_grid(args.points), threads=cfg.threads)
    text = example.format_csv(rows)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ms = [r.m for r in rows]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(ms, [r.black for r in rows], "k-", label="adaptive rate")
        ax.plot(ms, [r.yellow if r.yellow is not None else float("nan") for r in rows], "y-",
                label="parallel lower bound")
        ax.plot(ms, [r.red for r in rows], "r--", label="second order, upper")
        ax.plot(ms, [r.green for r in rows], "g--", label="second order, lower")
        ax.set_xscale("log")
        ax.set_xlabel("m")
        ax.set_ylabel("rate (bits per use)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
    return 0


if __name__ == "__main__":
    sys.exit(main())
