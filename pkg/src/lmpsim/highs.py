"""HiGHS backend: scipy.optimize.linprog adapted to the package dual convention.

scipy reports marginals of A_ub/A_eq rows as d(objective)/d(rhs), which is
the convention used here; a ">=" row passed to scipy as a negated "<=" row
therefore needs its marginal negated back.  Variable reduced costs are the
sum of the lower- and upper-bound marginals.
"""

from __future__ import annotations

import numpy as np
import scipy.optimize
import scipy.sparse

from .lp import (EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED,
                 LinearProgram, LpSolution)


class HighsError(RuntimeError):
    """scipy/HiGHS reported a failure other than infeasible/unbounded."""


def solve(lp: LinearProgram, tol: float = 1e-7) -> LpSolution:
    n = lp.num_vars
    ub_rows: list[int] = []
    ub_sign: list[float] = []
    eq_rows: list[int] = []
    for i, con in enumerate(lp.constraints):
        if con.relation == EQ:
            eq_rows.append(i)
        else:
            ub_rows.append(i)
            ub_sign.append(1.0 if con.relation == LE else -1.0)

    A = lp.constraint_matrix().tocsr()
    rhs = np.array([con.rhs for con in lp.constraints], dtype=float)

    def rows(idx: list[int], signs: np.ndarray | None):
        if not idx:
            return None, None
        sub = A[idx]
        b = rhs[idx]
        if signs is not None:
            sub = scipy.sparse.diags(signs) @ sub
            b = signs * b
        return sub, b

    sign_arr = np.asarray(ub_sign)
    A_ub, b_ub = rows(ub_rows, sign_arr if ub_rows else None)
    A_eq, b_eq = rows(eq_rows, None)
    bounds = [(lo if np.isfinite(lo) else None, up if np.isfinite(up) else None)
              for lo, up in zip(lp.lower, lp.upper)]

    res = scipy.optimize.linprog(
        c=np.asarray(lp.objective, dtype=float),
        A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": min(tol, 1e-7),
                 "dual_feasibility_tolerance": min(tol, 1e-7)})

    if res.status == 2:
        return LpSolution(status=INFEASIBLE, backend="highs")
    if res.status == 3:
        return LpSolution(status=UNBOUNDED, backend="highs")
    if res.status != 0:
        raise HighsError(f"HiGHS failed (status {res.status}): {res.message}")

    duals = np.zeros(lp.num_constraints)
    if ub_rows:
        duals[ub_rows] = sign_arr * res.ineqlin.marginals
    if eq_rows:
        duals[eq_rows] = res.eqlin.marginals
    reduced = np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals)
    x = np.asarray(res.x, dtype=float)
    objective = float(np.dot(lp.objective, x) + lp.offset)
    return LpSolution(status=OPTIMAL, objective_value=objective, primal=x,
                      dual=duals, reduced_costs=reduced,
                      iterations=int(getattr(res, "nit", 0)), backend="highs")
