"""Linear-program container, KKT checking, and solver front end.

The canonical form used throughout the package is

    minimize    c.x + offset
    subject to  a_i.x  (<= | = | >=)  b_i      for every constraint row i
                lower_j <= x_j <= upper_j      for every variable j

with -inf/+inf allowed in the variable bounds.  Two backends solve this
form: the in-package bounded revised simplex (``backend="simplex"``) and
scipy's HiGHS wrapper (``backend="highs"``).  Both return duals under the
same convention:

    dual of row i    = d(optimal objective) / d(b_i)
    reduced cost j   = d(optimal objective) / d(active bound of x_j)

so the dual of a binding ``<=`` row in a minimization is non-positive and
the dual of a binding ``>=`` row is non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

LE = "<="
EQ = "="
GE = ">="
_RELATIONS = (LE, EQ, GE)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpFormatError(ValueError):
    """Raised when a LinearProgram is structurally malformed."""


@dataclass
class Constraint:
    coeffs: dict[int, float]
    relation: str
    rhs: float
    name: str = ""


class LinearProgram:
    """Sparse LP assembled incrementally via add_variable/add_constraint."""

    def __init__(self) -> None:
        self.objective: list[float] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.var_names: list[str] = []
        self.constraints: list[Constraint] = []
        self.offset: float = 0.0

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_variable(self, lower: float = 0.0, upper: float = np.inf,
                     cost: float = 0.0, name: str = "") -> int:
        if not lower <= upper:
            raise LpFormatError(
                f"variable {name or self.num_vars}: lower bound {lower} "
                f"exceeds upper bound {upper}")
        self.objective.append(float(cost))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.var_names.append(name or f"x{self.num_vars}")
        return self.num_vars - 1

    def add_constraint(self, coeffs: dict[int, float], relation: str,
                       rhs: float, name: str = "") -> int:
        if relation not in _RELATIONS:
            raise LpFormatError(f"unknown relation {relation!r}")
        for j in coeffs:
            if not 0 <= j < self.num_vars:
                raise LpFormatError(
                    f"constraint {name or self.num_constraints}: "
                    f"coefficient references unknown variable {j}")
        self.constraints.append(
            Constraint(dict(coeffs), relation, float(rhs), name))
        return self.num_constraints - 1

    def validate(self) -> None:
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        if np.any(lower > upper):
            j = int(np.argmax(lower > upper))
            raise LpFormatError(f"variable {self.var_names[j]}: bounds cross")
        for con in self.constraints:
            if con.relation not in _RELATIONS:
                raise LpFormatError(f"unknown relation {con.relation!r}")
            if not np.isfinite(con.rhs):
                raise LpFormatError(f"constraint {con.name}: non-finite rhs")
            for j in con.coeffs:
                if not 0 <= j < self.num_vars:
                    raise LpFormatError(
                        f"constraint {con.name}: unknown variable {j}")

    def constraint_matrix(self) -> scipy.sparse.csr_matrix:
        """Rows in declaration order, one per constraint."""
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                rows.append(i)
                cols.append(j)
                vals.append(a)
        return scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(self.num_constraints, self.num_vars))

    def dump(self) -> str:
        """Plain-text standard form for external cross-checking."""
        terms = [f"{c:+g} {n}" for c, n in zip(self.objective, self.var_names)
                 if c != 0.0]
        lines = ["minimize " + (" ".join(terms) or "0")
                 + (f" {self.offset:+g}" if self.offset else "")]
        lines.append("subject to")
        for con in self.constraints:
            lhs = " ".join(f"{a:+g} {self.var_names[j]}"
                           for j, a in sorted(con.coeffs.items()))
            label = f"  [{con.name}] " if con.name else "  "
            lines.append(f"{label}{lhs or '0'} {con.relation} {con.rhs:g}")
        lines.append("bounds")
        for j, name in enumerate(self.var_names):
            lines.append(f"  {self.lower[j]:g} <= {name} <= {self.upper[j]:g}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    status: str
    objective_value: float = np.nan
    primal: np.ndarray | None = None
    dual: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    backend: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class ResidualReport:
    max_primal_residual: float
    max_dual_residual: float
    max_complementarity: float
    duality_gap: float

    def within(self, tol: float) -> bool:
        return (self.max_primal_residual <= tol
                and self.max_dual_residual <= tol
                and self.max_complementarity <= tol
                and self.duality_gap <= tol)


def check_kkt(lp: LinearProgram, sol: LpSolution) -> ResidualReport:
    """First-order optimality residuals of a claimed optimal solution.

    The duality gap is reported relative, |primal - dual| / (1 + |primal|);
    the other residuals are raw maxima.
    """
    if not sol.is_optimal:
        raise ValueError("check_kkt requires an optimal solution")
    x = np.asarray(sol.primal, dtype=float)
    y = np.asarray(sol.dual, dtype=float)
    z = np.asarray(sol.reduced_costs, dtype=float)
    c = np.asarray(lp.objective, dtype=float)
    lower = np.asarray(lp.lower, dtype=float)
    upper = np.asarray(lp.upper, dtype=float)
    A = lp.constraint_matrix()
    ax = A @ x if lp.num_constraints else np.zeros(0)

    primal = 0.0
    comp = 0.0
    sign_viol = 0.0
    for i, con in enumerate(lp.constraints):
        resid = ax[i] - con.rhs
        if con.relation == LE:
            primal = max(primal, resid)
            comp = max(comp, abs(y[i]) * max(-resid, 0.0))
            sign_viol = max(sign_viol, y[i])
        elif con.relation == GE:
            primal = max(primal, -resid)
            comp = max(comp, abs(y[i]) * max(resid, 0.0))
            sign_viol = max(sign_viol, -y[i])
        else:
            primal = max(primal, abs(resid))
    finite_lo = np.isfinite(lower)
    finite_up = np.isfinite(upper)
    primal = max(primal,
                 float(np.max((lower - x)[finite_lo], initial=0.0)),
                 float(np.max((x - upper)[finite_up], initial=0.0)))

    # stationarity: c - A'y - z = 0
    stat = c - (A.T @ y if lp.num_constraints else 0.0) - z
    dual = float(np.max(np.abs(stat), initial=0.0))
    # reduced-cost signs against open bound sides
    dual = max(dual, float(np.max(np.maximum(z, 0.0)[~finite_lo], initial=0.0)))
    dual = max(dual, float(np.max(np.maximum(-z, 0.0)[~finite_up], initial=0.0)))
    dual = max(dual, sign_viol)

    gap_lo = np.maximum(z, 0.0) * np.where(finite_lo, lower, 0.0)
    gap_up = np.minimum(z, 0.0) * np.where(finite_up, upper, 0.0)
    dual_obj = float(np.dot(y, [c_.rhs for c_ in lp.constraints])
                     + gap_lo.sum() + gap_up.sum() + lp.offset)
    gap = abs(sol.objective_value - dual_obj) / (1.0 + abs(sol.objective_value))

    slack_lo = np.where(finite_lo, x - lower, np.inf)
    slack_up = np.where(finite_up, upper - x, np.inf)
    comp_vars = (np.maximum(z, 0.0) * np.maximum(np.minimum(slack_lo, 1e30), 0.0)
                 * finite_lo
                 + np.maximum(-z, 0.0) * np.maximum(np.minimum(slack_up, 1e30), 0.0)
                 * finite_up)
    comp = max(comp, float(np.max(comp_vars, initial=0.0)))

    return ResidualReport(primal, dual, comp, gap)


def solve_lp(lp: LinearProgram, tol: float = 1e-7,
             backend: str = "auto") -> LpSolution:
    """Solve an LP, returning primal values, row duals, and reduced costs.

    backend "simplex" is the in-package revised simplex (exact basic duals),
    "highs" delegates to scipy, and "auto" picks the simplex for small
    problems and HiGHS for large ones.  Infeasible and unbounded problems
    are reported through the status field.
    """
    lp.validate()
    if backend == "auto":
        backend = ("simplex"
                   if lp.num_vars + lp.num_constraints <= 1200 else "highs")
    if backend == "simplex":
        from . import simplex
        return simplex.solve(lp, tol=tol)
    if backend == "highs":
        from . import highs
        return highs.solve(lp, tol=tol)
    raise ValueError(f"unknown backend {backend!r}")
