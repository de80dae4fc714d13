"""JSON encodings of operators, channels and protocol traces.

Operators are ``{"dims": [rows, cols], "re": [[...]], "im": [[...]]}``.
High-precision operators store their entries as decimal strings so that
nothing is lost on a round trip; any string entry marks an operator as
high precision when it is read back.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import mpmath
import numpy as np

from . import qlinalg as ql
from .adaptive import AdaptiveStrategy, ProtocolTrace, simulate


class InputError(ValueError):
    """Malformed input; carries a line/column when the JSON itself is broken."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


def parse_number(text) -> Fraction:
    """Parse ``2^-50``, ``1/4`` or a decimal literal exactly."""
    if isinstance(text, (int, float)):
        return Fraction(text)
    s = str(text).strip().replace(" ", "")
    try:
        if "^" in s:
            base, exp = s.split("^", 1)
            return Fraction(base) ** int(exp)
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse number {text!r}") from exc


def parse_float(text) -> float:
    return float(parse_number(text))


def jsonable(x):
    """Map non-finite floats to strings so the output stays strict JSON."""
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def loads(text: str, source: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from exc


def load_file(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    return loads(text, path)


# ---------------------------------------------------------------- operators


def operator_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a)
    if ql.is_hp(a):
        with ql.hp_context():
            re = [[mpmath.nstr(mpmath.re(z), ql.HP_DPS) for z in row] for row in a]
            im = [[mpmath.nstr(mpmath.im(z), ql.HP_DPS) for z in row] for row in a]
    else:
        a = a.astype(complex)
        re, im = a.real.tolist(), a.imag.tolist()
    return {"dims": list(a.shape), "re": re, "im": im}


def operator_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "re" not in obj:
        raise InputError("operator must be an object with 're' (and optionally 'im', 'dims')")
    re = obj["re"]
    im = obj.get("im")
    try:
        shape = tuple(obj.get("dims") or np.shape(re))
        flat_re = [v for row in re for v in row]
        flat_im = [v for row in im for v in row] if im is not None else [0] * len(flat_re)
    except TypeError as exc:
        raise InputError("operator entries must be nested lists") from exc
    if len(flat_re) != shape[0] * shape[1] or len(flat_im) != len(flat_re):
        raise InputError(f"operator entries do not match dims {list(shape)}")
    if any(isinstance(v, str) for v in flat_re + flat_im):
        with ql.hp_context():
            vals = [mpmath.mpc(mpmath.mpf(str(r)), mpmath.mpf(str(i))) for r, i in zip(flat_re, flat_im)]
        out = np.empty(len(vals), dtype=object)
        out[:] = vals
        return out.reshape(shape)
    return (np.array(flat_re, dtype=float) + 1j * np.array(flat_im, dtype=float)).reshape(shape)


# ----------------------------------------------------------------- channels


def channel_to_json(ch: ql.Channel) -> dict:
    return {"kind": "choi", "name": ch.name, "d_in": ch.d_in, "d_out": ch.d_out,
            "choi": operator_to_json(ch.choi)}


def channel_from_json(obj) -> ql.Channel:
    """Accepts ``choi``, ``kraus`` and ``example`` (``{"which": "E"|"F", "kappa": ...}``)."""
    if not isinstance(obj, dict):
        raise InputError("channel must be a JSON object")
    kind = obj.get("kind", "choi")
    if kind == "choi":
        try:
            return ql.Channel(operator_from_json(obj["choi"]), int(obj["d_in"]), int(obj["d_out"]),
                              name=obj.get("name", ""))
        except KeyError as exc:
            raise InputError(f"choi channel is missing {exc}") from exc
    if kind == "kraus":
        return ql.Channel.from_kraus([operator_from_json(k) for k in obj["kraus"]], name=obj.get("name", ""))
    if kind == "example":
        from . import example

        kappa = parse_float(obj.get("kappa", 0))
        which = obj.get("which")
        if which == "E":
            return example.channel_e(0 < kappa < example.HP_BELOW)
        if which == "F":
            return example.channel_f(kappa)
        raise InputError("example channel needs which = 'E' or 'F'")
    raise InputError(f"unknown channel kind {kind!r}")


# ------------------------------------------------------------------- traces


def strategy_to_json(s: AdaptiveStrategy) -> dict:
    return {"d_ref": s.d_ref, "d_in": s.d_in, "d_out": s.d_out, "rho1": operator_to_json(s.rho1),
            "preps": [channel_to_json(p) for p in s.preps]}


def strategy_from_json(obj) -> AdaptiveStrategy:
    try:
        return AdaptiveStrategy(operator_from_json(obj["rho1"]),
                                [channel_from_json(p) for p in obj.get("preps", [])],
                                int(obj["d_ref"]), int(obj["d_in"]), int(obj["d_out"]))
    except KeyError as exc:
        raise InputError(f"strategy is missing {exc}") from exc


def trace_to_json(tr: ProtocolTrace) -> dict:
    ops = lambda xs: [operator_to_json(x) for x in xs]  # noqa: E731
    return {
        "kind": "trace", "n": tr.n, "ell": tr.ell, "gains": [float(g) for g in tr.gains],
        "e": channel_to_json(tr.e), "f": channel_to_json(tr.f), "strategy": strategy_to_json(tr.strategy),
        "rhos": ops(tr.rhos), "sigmas": ops(tr.sigmas),
        "out_rhos": ops(tr.out_rhos), "out_sigmas": ops(tr.out_sigmas),
    }


def trace_from_json(obj) -> ProtocolTrace:
    """Rebuild a trace by re-running the stored strategy on the stored channels."""
    if not isinstance(obj, dict) or not {"e", "f", "strategy"} <= obj.keys():
        raise InputError("trace must hold 'e', 'f' and 'strategy'")
    return simulate(channel_from_json(obj["e"]), channel_from_json(obj["f"]), strategy_from_json(obj["strategy"]))
