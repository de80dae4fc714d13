"""Thin layer over cvxpy: solver selection, tolerances and problem caching."""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import cvxpy as cp

# Interior-point gap/feasibility tolerance handed to Clarabel.
DEFAULT_TOL = 1e-9
_OK = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
_INFEASIBLE = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)


class SolverError(RuntimeError):
    """Raised when no configured solver returns a usable optimum."""


@dataclass
class CachedProblem:
    """A compiled parametrised problem guarded by a lock.

    cvxpy parameters are mutable state, so concurrent callers serialise on
    ``lock`` while they assign values and solve.
    """

    problem: cp.Problem
    params: dict
    variables: dict
    lock: threading.Lock = field(default_factory=threading.Lock)


def solve(problem: cp.Problem, tol: float = DEFAULT_TOL, order: tuple[str, ...] | None = None) -> str:
    """Solve with Clarabel, falling back to CVXOPT then SCS.

    ``order`` overrides the solver sequence (names as in ``cvxpy``).

    Returns the final cvxpy status. Infeasibility is reported, not raised;
    any other failure raises ``SolverError``.
    """
    attempts = [
        (cp.CLARABEL, dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=400)),
        (cp.CVXOPT, dict(abstol=tol, reltol=tol, feastol=tol)),
        (cp.SCS, dict(eps=min(1e-6, tol * 100), max_iters=200000)),
    ]
    if order is not None:
        attempts = sorted((a for a in attempts if a[0] in order), key=lambda a: order.index(a[0]))
    last = None
    for solver, opts in attempts:
        if solver not in cp.installed_solvers():
            continue
        try:
            with warnings.catch_warnings():
                # OPTIMAL_INACCURATE is accepted below; its warning is noise here
                warnings.filterwarnings("ignore", message="Solution may be inaccurate")
                # no warm start: cvxpy would reuse Clarabel's factorisation, which
                # breaks when the parameter sparsity pattern changes between calls
                problem.solve(solver=solver, warm_start=False, **opts)
        except (cp.error.SolverError, ArithmeticError, ValueError) as exc:
            last = exc
            continue
        if problem.status in _OK or problem.status in _INFEASIBLE:
            return problem.status
        last = problem.status
    raise SolverError(f"all solvers failed (last: {last})")


def is_infeasible(status: str) -> bool:
    return status in _INFEASIBLE
