"""``qcd`` command-line front end.

Every subcommand writes JSON (or CSV for tabular output) to stdout or to
``--out``. Failures exit nonzero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bounds, example, io, selftest
from . import divergences as dv
from .config import RunConfig
from .hyptest import dh_neyman_pearson, dh_state
from .symsdp import channel_dh_parallel, orbit_table, reduced_channel_dh


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    sup = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=sup)
    p.add_argument("--tol", type=io.parse_float, default=sup)
    p.add_argument("--threads", type=int, default=sup)
    p.add_argument("--config", default=sup, help="JSON file merged under the flags")
    p.add_argument("--out", default=sup, help="write to this file instead of stdout")
    p.add_argument("-v", "--verbose", dest="verbosity", action="count", default=sup)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="qcd", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    num = io.parse_float

    p = sub.add_parser("divergence", parents=[common], help="state divergences of a pair")
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--alpha", type=num, default=1.5, help="Renyi order")
    p.add_argument("--eps", type=num, default=None, help="also report smoothed D_max")

    p = sub.add_parser("dh", parents=[common], help="hypothesis-testing relative entropy")
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--eps", type=num, required=True)
    p.add_argument("--method", choices=["auto", "sdp", "neyman-pearson"], default="auto")

    p = sub.add_parser("channel-dh", parents=[common], help="parallel channel discrimination SDP")
    p.add_argument("--e", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=num, required=True)
    p.add_argument("--reduced", action="store_true", help="use the permutation-reduced program")

    p = sub.add_parser("orbits", parents=[common], help="orbit representatives and sizes (CSV)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("adaptive-sim", parents=[common], help="simulate an adaptive strategy")
    p.add_argument("--e")
    p.add_argument("--f")
    p.add_argument("--strategy")
    p.add_argument("--example-kappa", type=io.parse_number, default=None,
                   help="simulate the built-in example channels instead")
    p.add_argument("--steps", type=int, default=2, help="number of uses for the example")

    p = sub.add_parser("bound", parents=[common], help="parallel-rate lower bounds from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha-p", type=num, required=True)
    p.add_argument("--alpha-a", type=num, default=0.0)
    p.add_argument("--dh-adaptive", type=num, default=None,
                   help="D_H^{alpha_a} of the final outputs in bits (computed when omitted)")
    p.add_argument("--corollary4", action="store_true")

    p = sub.add_parser("figure3", parents=[common], help="rate curves of the example (CSV)")
    p.add_argument("--kappa", type=num, default=example.FIGURE_KAPPA)
    p.add_argument("--alpha-p", type=num, default=example.FIGURE_ALPHA_P)
    p.add_argument("--alpha-a", type=num, default=example.FIGURE_ALPHA_A)
    p.add_argument("--m-min", type=num, default=1e2)
    p.add_argument("--m-max", type=num, default=1e7)
    p.add_argument("--points", type=int, default=60)

    sub.add_parser("selftest", parents=[common], help="run the quick invariant suite")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    keys = ("seed", "tol", "threads", "out", "verbosity")
    return cfg.merged({k: getattr(args, k, None) for k in keys})


def _operator(path: str) -> np.ndarray:
    return io.operator_from_json(io.load_file(path))


def _channel(path: str):
    return io.channel_from_json(io.load_file(path))


def _maybe(fn, *a):
    try:
        return fn(*a)
    except ValueError:
        return None


def cmd_divergence(args, cfg):
    rho, sigma = _operator(args.rho), _operator(args.sigma)
    st = dv.state_pair_stats(rho, sigma)
    out = {
        "relative_entropy": st.relative_entropy, "variance": st.variance,
        "third_abs_moment": st.third_abs_moment, "dmax": dv.dmax(rho, sigma),
        "alpha": args.alpha, "petz_renyi": _maybe(dv.petz_renyi, rho, sigma, args.alpha),
        "geometric_renyi": _maybe(dv.geometric_renyi, rho, sigma, args.alpha),
        "fidelity": dv.fidelity(rho, sigma), "sine_distance": dv.sine_distance(rho, sigma),
    }
    if args.eps is not None:
        sm = dv.dmax_smoothed(rho, sigma, args.eps, tol=cfg.tol)
        out["dmax_smoothed"] = {"eps": args.eps, "value": sm.value, "achieved_distance": sm.achieved_distance,
                                "status": sm.status}
    return io.dumps(out)


def cmd_dh(args, cfg):
    rho, sigma = _operator(args.rho), _operator(args.sigma)
    if args.method == "neyman-pearson":
        res = dh_neyman_pearson(rho, sigma, args.eps)
    else:
        res = dh_state(rho, sigma, args.eps, method=args.method, tol=cfg.tol)
    return io.dumps({"eps": args.eps, "dh_bits": res.dh, "beta": res.beta, "alpha_achieved": res.alpha_achieved,
                     "method": res.method, "test": io.operator_to_json(res.test)})


def cmd_channel_dh(args, cfg):
    e, f = _channel(args.e), _channel(args.f)
    fn = reduced_channel_dh if args.reduced else channel_dh_parallel
    res = fn(e, f, args.n, args.eps, cap=cfg.dim_cap, tol=cfg.tol)
    return io.dumps({"n": res.n, "eps": args.eps, "dh_bits": res.dh, "rate_bits": res.dh / res.n,
                     "beta": res.beta, "method": res.method, "variables": res.variables})


def cmd_orbits(args, cfg):
    t = orbit_table(args.d, args.n)
    lines = ["representative,size"]
    for rep, size in zip(t.reps, t.sizes):
        pairs = [divmod(int(letter), args.d) for letter in rep]
        rows = " ".join(str(i) for i, _ in pairs)
        cols = " ".join(str(j) for _, j in pairs)
        lines.append(f"{rows}|{cols},{int(size)}")
    return "\n".join(lines) + "\n"


def cmd_adaptive_sim(args, cfg):
    if args.example_kappa is not None:
        tr = example.simulate_example(float(args.example_kappa), steps=args.steps)
    else:
        if not (args.e and args.f and args.strategy):
            raise UsageError("adaptive-sim needs --e, --f and --strategy, or --example-kappa")
        from .adaptive import simulate

        tr = simulate(_channel(args.e), _channel(args.f), io.strategy_from_json(io.load_file(args.strategy)))
    return io.dumps(io.trace_to_json(tr))


def cmd_bound(args, cfg):
    tr = io.trace_from_json(io.load_file(args.trace))
    dh_a = args.dh_adaptive
    if dh_a is None:
        dh_a = dh_state(*tr.output_pair(tr.n), args.alpha_a, tol=cfg.tol).dh
    b = bounds.theorem7_rhs(tr, args.m, args.alpha_p, args.alpha_a, dh_a)
    out = {
        "n": b.n, "m": b.m, "ell": b.ell, "alpha_p": args.alpha_p, "alpha_a": args.alpha_a,
        "dh_adaptive": dh_a, "adaptive_rate": dh_a / b.n, "rhs_general": b.rhs_general,
        "rhs_sqrt": b.rhs_sqrt, "sqrt_condition": b.sqrt_condition, "c_prime": b.c_prime,
        "c_sqrt": b.c_sqrt, "c_prime_cap": b.c_prime_cap, "c_sqrt_cap": b.c_sqrt_cap,
        "gamma_out": list(b.gamma_out), "gamma_in": list(b.gamma_in),
    }
    if args.corollary4:
        c = bounds.corollary_constant(tr.e, tr.f)
        out["corollary4"] = {"constant": c, "rhs": bounds.corollary4_rhs(
            b.n, args.m, args.alpha_p, args.alpha_a, dh_a / b.n, c)}
    return io.dumps(out)


def cmd_figure3(args, cfg):
    if args.points < 1 or not 1 <= args.m_min <= args.m_max:
        raise UsageError("need points >= 1 and 1 <= m-min <= m-max")
    grid = example.figure_m_grid(args.points, args.m_min, args.m_max)
    rows = example.figure3_rows(args.kappa, args.alpha_a, args.alpha_p, grid, threads=cfg.threads)
    return example.format_csv(rows)


def cmd_selftest(args, cfg):
    checks = selftest.run(cfg.seed)
    lines = [f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}" for c in checks]
    return "\n".join(lines) + "\n", all(c.ok for c in checks)


COMMANDS = {
    "divergence": cmd_divergence, "dh": cmd_dh, "channel-dh": cmd_channel_dh, "orbits": cmd_orbits,
    "adaptive-sim": cmd_adaptive_sim, "bound": cmd_bound, "figure3": cmd_figure3, "selftest": cmd_selftest,
}


def _error(exc: Exception) -> dict:
    err = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, io.InputError) and exc.line is not None:
        err.update(line=exc.line, column=exc.column)
    return err


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        result = COMMANDS[args.command](args, cfg)
    except Exception as exc:  # noqa: BLE001  every failure becomes a JSON error
        sys.stderr.write(json.dumps(io.jsonable(_error(exc)), sort_keys=True) + "\n")
        return 2 if isinstance(exc, (UsageError, io.InputError)) else 1
    ok = True
    if isinstance(result, tuple):
        result, ok = result
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(result)
    else:
        sys.stdout.write(result)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
