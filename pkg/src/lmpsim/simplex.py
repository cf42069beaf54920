"""Bounded-variable revised simplex with exact basic duals.

Two-phase method: every row gets a slack variable (its bounds encode the
relation) and an artificial column, so phase 1 starts from a trivially
feasible basis and minimizes the artificial sum.  Pricing is Dantzig by
default and switches to Bland's rule after a run of degenerate steps, which
prevents cycling.  The basis inverse is kept as an LU factorization plus
product-form eta updates, refactorized periodically.

Row/column max-abs equilibration is applied before the solve and undone on
the returned primal values, duals, and reduced costs.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .lp import (EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED,
                 LinearProgram, LpSolution)

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FREE = 3

_DUAL_TOL = 1e-9        # reduced-cost threshold for entering candidates
_PIVOT_TOL = 1e-9       # minimum pivot magnitude in the ratio test
_DEGEN_TOL = 1e-10      # step sizes below this count as degenerate
_BLAND_TRIGGER = 80     # consecutive degenerate steps before Bland's rule
_REFRESH = 64           # pivots between basis refactorizations


class SimplexError(RuntimeError):
    """Internal failure (iteration limit, numerically lost basis)."""


class _Basis:
    """LU factors of the basis matrix plus product-form eta updates."""

    def __init__(self, A: np.ndarray, basis: np.ndarray):
        self.A = A
        self.refactor(basis)

    def refactor(self, basis: np.ndarray) -> None:
        m = len(basis)
        self.lu = scipy.linalg.lu_factor(self.A[:, basis]) if m else None
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        """Solve B z = v."""
        if self.lu is None:
            return v.copy()
        z = scipy.linalg.lu_solve(self.lu, v)
        for r, w in self.etas:
            zr = z[r] / w[r]
            z -= zr * w
            z[r] = zr
        return z

    def btran(self, v: np.ndarray) -> np.ndarray:
        """Solve B' y = v."""
        if self.lu is None:
            return v.copy()
        u = v.copy()
        for r, w in reversed(self.etas):
            u[r] = (u[r] - (w @ u - w[r] * u[r])) / w[r]
        return scipy.linalg.lu_solve(self.lu, u, trans=1)

    def push(self, r: int, w: np.ndarray) -> None:
        self.etas.append((r, w))

    @property
    def n_etas(self) -> int:
        return len(self.etas)


def solve(lp: LinearProgram, tol: float = 1e-7,
          max_iter: int | None = None) -> LpSolution:
    ns = lp.num_vars
    m = lp.num_constraints
    c_orig = np.asarray(lp.objective, dtype=float)
    lo_orig = np.asarray(lp.lower, dtype=float)
    up_orig = np.asarray(lp.upper, dtype=float)

    A0 = lp.constraint_matrix().toarray() if m else np.zeros((0, ns))
    b0 = np.array([con.rhs for con in lp.constraints], dtype=float)

    # --- equilibration ------------------------------------------------
    row_max = np.max(np.abs(A0), axis=1, initial=0.0) if m else np.zeros(0)
    row_scale = np.where(row_max > 0, 1.0 / np.maximum(row_max, 1e-300), 1.0)
    A1 = A0 * row_scale[:, None]
    b1 = b0 * row_scale
    col_max = np.max(np.abs(A1), axis=0, initial=0.0) if m else np.zeros(ns)
    col_scale = np.where(col_max > 0, 1.0 / np.maximum(col_max, 1e-300), 1.0)
    A2 = A1 * col_scale[None, :]

    # scaled variables x' = x / col_scale
    with np.errstate(invalid="ignore"):
        lo_s = np.where(np.isfinite(lo_orig), lo_orig / col_scale, -np.inf)
        up_s = np.where(np.isfinite(up_orig), up_orig / col_scale, np.inf)
    c_s = c_orig * col_scale

    # --- standard form: [structural | slack | artificial] -------------
    n_sl = ns + m
    n_tot = ns + 2 * m
    A = np.zeros((m, n_tot))
    A[:, :ns] = A2
    lo = np.full(n_tot, -np.inf)
    up = np.full(n_tot, np.inf)
    lo[:ns] = lo_s
    up[:ns] = up_s
    for i, con in enumerate(lp.constraints):
        A[i, ns + i] = 1.0
        if con.relation == LE:
            lo[ns + i] = 0.0
        elif con.relation == GE:
            up[ns + i] = 0.0
        else:
            lo[ns + i] = up[ns + i] = 0.0

    val = np.zeros(n_tot)
    stat = np.full(n_tot, FREE, dtype=np.int8)
    finite_lo = np.isfinite(lo[:n_sl])
    finite_up = np.isfinite(up[:n_sl])
    stat[:n_sl] = np.where(finite_lo, AT_LOWER,
                           np.where(finite_up, AT_UPPER, FREE))
    val[:n_sl] = np.where(stat[:n_sl] == AT_LOWER, lo[:n_sl],
                          np.where(stat[:n_sl] == AT_UPPER, up[:n_sl], 0.0))

    resid = b1 - A[:, :n_sl] @ val[:n_sl]
    art_sign = np.where(resid >= 0, 1.0, -1.0)
    for i in range(m):
        A[i, n_sl + i] = art_sign[i]
        lo[n_sl + i] = 0.0
    val[n_sl:] = np.abs(resid)
    stat[n_sl:] = BASIC
    basis = np.arange(n_sl, n_tot)

    c1 = np.zeros(n_tot)
    c1[n_sl:] = 1.0
    c2 = np.zeros(n_tot)
    c2[:ns] = c_s

    fixed = lo == up
    if max_iter is None:
        max_iter = 2000 + 60 * n_tot
    B = _Basis(A, basis)

    def recompute_basics() -> None:
        nonbasic = stat != BASIC
        rhs = b1 - A[:, nonbasic] @ val[nonbasic]
        xb = B.ftran(rhs)
        if not np.all(np.isfinite(xb)):
            raise SimplexError("basis matrix became numerically singular")
        val[basis] = xb

    def run_phase(cost: np.ndarray, phase: int) -> str:
        nonlocal iterations
        bland = False
        degen_run = 0
        while True:
            if iterations > max_iter:
                raise SimplexError(
                    f"iteration limit {max_iter} exceeded in phase {phase}")
            iterations += 1
            y = B.btran(cost[basis])
            z = cost - A.T @ y
            # entering candidates by nonbasic status
            cand_lo = (stat == AT_LOWER) & ~fixed & (z < -_DUAL_TOL)
            cand_up = (stat == AT_UPPER) & ~fixed & (z > _DUAL_TOL)
            cand_fr = (stat == FREE) & (np.abs(z) > _DUAL_TOL)
            if phase == 2:
                # artificials are pinned to zero after phase 1
                cand_lo[n_sl:] = False
                cand_up[n_sl:] = False
            eligible = cand_lo | cand_up | cand_fr
            if not eligible.any():
                return OPTIMAL
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, np.abs(z), 0.0)
                q = int(np.argmax(score))
            sigma = 1.0 if (stat[q] == AT_LOWER
                            or (stat[q] == FREE and z[q] < 0)) else -1.0

            w = B.ftran(A[:, q].copy())
            delta = sigma * w
            xb = val[basis]
            tvec = np.full(m, np.inf)
            down = delta > _PIVOT_TOL
            if down.any():
                lob = lo[basis[down]]
                ti = (xb[down] - lob) / delta[down]
                ti[~np.isfinite(lob)] = np.inf
                tvec[down] = ti
            upm = delta < -_PIVOT_TOL
            if upm.any():
                upb = up[basis[upm]]
                ti = (xb[upm] - upb) / delta[upm]
                ti[~np.isfinite(upb)] = np.inf
                tvec[upm] = ti
            np.maximum(tvec, 0.0, out=tvec)

            t_bound = up[q] - lo[q] if np.isfinite(up[q] - lo[q]) else np.inf
            t_rows = tvec.min() if m else np.inf
            t_star = min(t_bound, t_rows)
            if not np.isfinite(t_star):
                if phase == 1:
                    raise SimplexError("unbounded phase-1 objective")
                return UNBOUNDED

            degen_run = degen_run + 1 if t_star < _DEGEN_TOL else 0
            bland = degen_run > _BLAND_TRIGGER

            if t_bound <= t_rows:
                # bound flip: entering variable crosses to its other bound
                val[basis] = xb - t_star * delta
                val[q] = up[q] if stat[q] == AT_LOWER else lo[q]
                stat[q] = AT_UPPER if stat[q] == AT_LOWER else AT_LOWER
                continue

            ties = np.flatnonzero(tvec <= t_star * (1 + 1e-9) + 1e-12)
            if bland:
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(delta[ties]))])
            leaving = basis[r]
            val[basis] = xb - t_star * delta
            val[q] = val[q] + sigma * t_star
            # snap the leaving variable onto the bound it hit
            if delta[r] > 0:
                val[leaving] = lo[leaving]
                stat[leaving] = AT_LOWER
            else:
                val[leaving] = up[leaving]
                stat[leaving] = AT_UPPER
            stat[q] = BASIC
            basis[r] = q
            B.push(r, w)
            if B.n_etas >= _REFRESH:
                B.refactor(basis)
                recompute_basics()

    iterations = 0
    status = run_phase(c1, 1)
    infeas = float(val[n_sl:].sum())
    feas_tol = 1e-8 * (1.0 + float(np.max(np.abs(b1), initial=0.0)))
    if infeas > feas_tol:
        return LpSolution(status=INFEASIBLE, iterations=iterations,
                          backend="simplex")

    # pin artificials at zero, pivot basic ones out where possible
    up[n_sl:] = 0.0
    fixed = lo == up
    for r in range(m):
        if basis[r] < n_sl:
            continue
        e_r = np.zeros(m)
        e_r[r] = 1.0
        rho = B.btran(e_r) @ A[:, :n_sl]
        rho[stat[:n_sl] == BASIC] = 0.0
        j = int(np.argmax(np.abs(rho)))
        if abs(rho[j]) > 1e-7:
            w = B.ftran(A[:, j].copy())
            art = basis[r]
            stat[art] = AT_LOWER
            val[art] = 0.0
            stat[j] = BASIC
            basis[r] = j
            B.push(r, w)
    B.refactor(basis)
    recompute_basics()

    status = run_phase(c2, 2)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED, iterations=iterations,
                          backend="simplex")

    B.refactor(basis)
    recompute_basics()
    y = B.btran(c2[basis])
    z_all = c2 - A.T @ y
    z_all[stat == BASIC] = 0.0

    x = val[:ns] * col_scale
    duals = y * row_scale
    reduced = z_all[:ns] / col_scale
    objective = float(c_orig @ x + lp.offset)
    return LpSolution(status=OPTIMAL, objective_value=objective, primal=x,
                      dual=duals, reduced_costs=reduced,
                      iterations=iterations, backend="simplex")
