"""Maximization LPs with row duals and optimality certificates.

Sign convention (maximization): duals of ``<=`` rows are >= 0, duals of
equality rows are free, and the reduced cost of column ``j`` is
``c_j - y^T A_j``. At an optimum every column resting at its lower bound has
reduced cost <= 0 and basic columns have reduced cost 0.

The simplex itself is HiGHS (dual simplex) through :func:`scipy.optimize.linprog`;
this module owns the problem representation, the dual sign mapping, and the
certificate checks that column generation relies on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from jrsp.errors import InstanceError, SolverError

logger = logging.getLogger(__name__)

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
    "presolve": True,
}


@dataclass
class LpProblem:
    """``max c^T x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq,  lb <= x <= ub``.

    Constraint matrices may be dense arrays or ``scipy.sparse`` matrices.
    """

    c: np.ndarray
    a_ineq: np.ndarray | None = None
    b_ineq: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    col_labels: Sequence[str] | None = None
    ineq_labels: Sequence[str] | None = None
    eq_labels: Sequence[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.a_ineq, self.b_ineq = self._rows(self.a_ineq, self.b_ineq, n, "ineq")
        self.a_eq, self.b_eq = self._rows(self.a_eq, self.b_eq, n, "eq")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        if self.lb.size != n or self.ub.size != n:
            raise InstanceError("bound vectors must match the number of columns")
        for name, arr in (("c", self.c), ("a_ineq", self.a_ineq), ("b_ineq", self.b_ineq),
                          ("a_eq", self.a_eq), ("b_eq", self.b_eq)):
            if not np.all(np.isfinite(arr.data if sp.issparse(arr) else arr)):
                raise InstanceError(f"non-finite entries in {name}")
        if np.any(np.isinf(self.lb)):
            raise InstanceError("lower bounds must be finite")
        for labels, size, what in ((self.col_labels, n, "col_labels"),
                                   (self.ineq_labels, self.num_ineq, "ineq_labels"),
                                   (self.eq_labels, self.num_eq, "eq_labels")):
            if labels is not None and len(labels) != size:
                raise InstanceError(f"{what} has {len(labels)} entries, expected {size}")

    @staticmethod
    def _rows(a, b, n, kind):
        if a is None:
            if b is not None and np.size(b):
                raise InstanceError(f"b_{kind} given without a_{kind}")
            return np.zeros((0, n)), np.zeros(0)
        a = sp.csr_array(a, dtype=float) if sp.issparse(a) else np.atleast_2d(
            np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if a.shape[1] != n:
            raise InstanceError(f"a_{kind} has {a.shape[1]} columns, expected {n}")
        if a.shape[0] != b.size:
            raise InstanceError(f"a_{kind} has {a.shape[0]} rows but b_{kind} has {b.size}")
        return a, b

    @property
    def num_cols(self) -> int:
        return self.c.size

    @property
    def num_ineq(self) -> int:
        return self.b_ineq.size

    @property
    def num_eq(self) -> int:
        return self.b_eq.size


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    y_ineq: np.ndarray | None = None
    y_eq: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    primal_residual: float = float("nan")
    duality_gap: float = float("nan")
    slackness_residual: float = float("nan")
    message: str = ""
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _certificates(p: LpProblem, x: np.ndarray, y_in: np.ndarray, y_eq: np.ndarray,
                  d: np.ndarray) -> tuple[float, float, float]:
    scale = 1.0 + max(np.abs(p.b_ineq).max(initial=0.0), np.abs(p.b_eq).max(initial=0.0))
    viol = [0.0]
    if p.num_ineq:
        viol.append(float(np.max(p.a_ineq @ x - p.b_ineq)))
    if p.num_eq:
        viol.append(float(np.max(np.abs(p.a_eq @ x - p.b_eq))))
    viol.append(float(np.max(p.lb - x, initial=0.0)))
    finite_ub = np.isfinite(p.ub)
    if finite_ub.any():
        viol.append(float(np.max(x[finite_ub] - p.ub[finite_ub])))
    primal = max(viol) / scale

    # split the reduced cost into lower/upper bound multipliers
    w_up = np.where(finite_ub, np.maximum(d, 0.0), 0.0)
    w_lo = np.maximum(-d, 0.0)
    dual_obj = y_in @ p.b_ineq + y_eq @ p.b_eq + w_up[finite_ub] @ p.ub[finite_ub] - w_lo @ p.lb
    obj = float(p.c @ x)
    gap = abs(obj - dual_obj) / (1.0 + abs(obj))

    cs = [0.0]
    if p.num_ineq:
        cs.append(float(np.max(np.abs(y_in * (p.b_ineq - p.a_ineq @ x)))))
    cs.append(float(np.max(np.abs(w_lo * (x - p.lb)), initial=0.0)))
    if finite_ub.any():
        cs.append(float(np.max(np.abs(w_up[finite_ub] * (p.ub[finite_ub] - x[finite_ub])))))
    # dual infeasibility: positive reduced cost on a column that could still increase
    cs.append(float(np.max(np.where(finite_ub, 0.0, np.maximum(d, 0.0)), initial=0.0)))
    return primal, gap, max(cs)


def solve_lp(p: LpProblem) -> LpSolution:
    """Solve ``p`` to optimality and return primal values, duals and certificates."""
    bounds = list(zip(p.lb, [None if np.isinf(u) else u for u in p.ub]))
    try:
        res = linprog(
            -p.c,
            A_ub=p.a_ineq if p.num_ineq else None,
            b_ub=p.b_ineq if p.num_ineq else None,
            A_eq=p.a_eq if p.num_eq else None,
            b_eq=p.b_eq if p.num_eq else None,
            bounds=bounds,
            method="highs-ds",
            options=_HIGHS_OPTIONS,
        )
    except ValueError as exc:
        raise SolverError(f"LP solver rejected the problem: {exc}") from exc
    if res.status == 2:
        return LpSolution("infeasible", message=res.message)
    if res.status == 3:
        return LpSolution("unbounded", message=res.message)
    if res.status != 0:
        raise SolverError(f"LP solver failed (status {res.status}): {res.message}")

    x = np.asarray(res.x, dtype=float)
    # linprog marginals are sensitivities of the minimized objective -c^T x
    y_in = -np.asarray(res.ineqlin.marginals) if p.num_ineq else np.zeros(0)
    y_eq = -np.asarray(res.eqlin.marginals) if p.num_eq else np.zeros(0)
    d = p.c - p.a_ineq.T @ y_in - p.a_eq.T @ y_eq
    primal, gap, cs = _certificates(p, x, y_in, y_eq, d)
    sol = LpSolution("optimal", x, float(p.c @ x), y_in, y_eq, d, primal, gap, cs,
                     message=res.message, iterations=int(getattr(res, "nit", 0)))
    if primal > 1e-6 or gap > 1e-6:
        raise SolverError(f"LP solution failed certificate checks: primal residual {primal:.3e}, "
                          f"duality gap {gap:.3e}, slackness {cs:.3e}")
    logger.debug("LP %dx%d solved: obj=%.10g gap=%.2e", p.num_ineq + p.num_eq, p.num_cols,
                 sol.objective, gap)
    return sol


def _fmt(v: float) -> str:
    return repr(float(v))


def _expr(row, names: Sequence[str]) -> str:
    row = row.toarray().ravel() if sp.issparse(row) else np.asarray(row).ravel()
    terms = []
    for j in np.flatnonzero(row):
        coef = row[j]
        sign = "-" if coef < 0 else "+"
        terms.append(f"{sign} {_fmt(abs(coef))} {names[j]}")
    if not terms:
        return "0 " + names[0]
    out = " ".join(terms)
    return out[2:] if out.startswith("+ ") else out


def to_lp_format(p: LpProblem, name: str = "jrsp") -> str:
    """Render ``p`` in CPLEX LP text format for cross-checking with other solvers."""
    cols = [f"x{j}" for j in range(p.num_cols)]
    lines = [f"\\ {name}", "Maximize", " obj: " + _expr(p.c, cols), "Subject To"]
    for i in range(p.num_ineq):
        lines.append(f" c{i}: {_expr(p.a_ineq[[i]], cols)} <= {_fmt(p.b_ineq[i])}")
    for i in range(p.num_eq):
        lines.append(f" e{i}: {_expr(p.a_eq[[i]], cols)} = {_fmt(p.b_eq[i])}")
    lines.append("Bounds")
    for j in range(p.num_cols):
        ub = "+inf" if np.isinf(p.ub[j]) else _fmt(p.ub[j])
        lines.append(f" {_fmt(p.lb[j])} <= {cols[j]} <= {ub}")
    lines.append("End")
    return "\n".join(lines) + "\n"
