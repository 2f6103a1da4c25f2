"""LP solving: HiGHS through scipy, or a bounded-variable tableau simplex.

The simplex works on ``max c x, A x = b, 0 <= x <= u`` with a phase one over
artificial variables.  Pricing is largest reduced cost and switches to
Bland's rule after a streak of degenerate pivots.  With ``arithmetic="exact"``
the tableau holds :class:`fractions.Fraction` entries, which is only sensible
for small programs.

Every returned optimum is checked for row and bound residuals and certified
by a Lagrangian bound: for any row multipliers ``lam``,
``b @ lam + sum(u * max(0, c - A.T @ lam))`` bounds the optimum from above.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.optimize import OptimizeWarning, linprog

from ..errors import InvariantError

log = logging.getLogger(__name__)

OPTIMAL, INFEASIBLE, ITERATION_LIMIT = "optimal", "infeasible", "iteration-limit"


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "highs"            # "highs", "highs-ipm" or "simplex"
    arithmetic: str = "float"         # "float" or "exact" (simplex only)
    tol: float = 1e-9
    max_iter: int = 200_000
    degenerate_streak: int = 50
    check_tol: float = 1e-7           # residual bound asserted after the solve

    def __post_init__(self):
        if self.tol <= 0 or self.check_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.backend not in ("highs", "highs-ipm", "simplex"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.arithmetic not in ("float", "exact"):
            raise ValueError(f"unknown arithmetic {self.arithmetic!r}")


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int = 0
    backend: str = ""
    duals: np.ndarray | None = field(default=None, repr=False)
    row_residual: float | None = None
    bound_violation: float | None = None
    dual_bound: float | None = None
    exact_x: list | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def gap(self) -> float | None:
        if self.dual_bound is None or self.objective is None:
            return None
        return self.dual_bound - self.objective

    def report(self) -> dict:
        return {"status": self.status, "objective": self.objective, "iterations": self.iterations,
                "backend": self.backend, "row_residual": self.row_residual,
                "bound_violation": self.bound_violation, "dual_gap": self.gap}


# ------------------------------------------------------------------ certification

def lagrangian_bound(c, A, b, lam, upper=1.0) -> float:
    """Upper bound on ``max c x`` over ``A x = b, 0 <= x <= upper`` from multipliers ``lam``."""
    red = np.asarray(c, dtype=float) - A.T @ np.asarray(lam, dtype=float)
    return float(np.dot(b, lam) + upper * np.clip(red, 0, None).sum())


def residuals(A, b, x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    row = float(np.abs(A @ x - b).max()) if A.shape[0] else 0.0
    bound = float(max(0.0, -x.min(), (x - 1).max())) if len(x) else 0.0
    return row, bound


def _finish(sol: LpSolution, c, A, b, cfg: SolverConfig) -> LpSolution:
    if not sol.optimal:
        return sol
    sol.row_residual, sol.bound_violation = residuals(A, b, sol.x)
    scale = 1.0 + float(np.abs(b).max(initial=0.0))
    if sol.row_residual > cfg.check_tol * scale or sol.bound_violation > cfg.check_tol:
        raise InvariantError(f"LP solution violates rows by {sol.row_residual:.3g} and bounds "
                             f"by {sol.bound_violation:.3g}", stage="lp-solve")
    if sol.duals is not None:
        sol.dual_bound = lagrangian_bound(c, A, b, sol.duals)
        gap = sol.dual_bound - sol.objective
        if gap > 1e-6 * (1.0 + abs(sol.objective)) or gap < -1e-6 * (1.0 + abs(sol.objective)):
            raise InvariantError(f"optimality certificate failed: dual bound {sol.dual_bound} "
                                 f"vs objective {sol.objective}", stage="lp-solve")
    return sol


# ------------------------------------------------------------------ backends

def _solve_highs(c, A, b, cfg: SolverConfig) -> LpSolution:
    opts = {"primal_feasibility_tolerance": max(cfg.tol, 1e-10),
            "dual_feasibility_tolerance": max(cfg.tol, 1e-10), "maxiter": cfg.max_iter}
    if cfg.backend == "highs-ipm":
        # interior optimum without crossover: typically fractional, useful for rounding tests
        opts.update(run_crossover="off", ipm_optimality_tolerance=1e-10)
    with warnings.catch_warnings():
        # run_crossover is a HiGHS option that scipy forwards without recognizing
        warnings.simplefilter("ignore", OptimizeWarning)
        res = linprog(-c, A_eq=A, b_eq=b, bounds=(0, 1),
                      method="highs-ipm" if cfg.backend == "highs-ipm" else "highs-ds",
                      options=opts)
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        duals = -np.asarray(res.eqlin.marginals) if A.shape[0] else np.zeros(0)
        return LpSolution(OPTIMAL, np.asarray(res.x), float(-res.fun), iters, cfg.backend, duals)
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, None, iters, cfg.backend)
    if res.status == 1:
        x = None if res.x is None else np.asarray(res.x)
        return LpSolution(ITERATION_LIMIT, x, None, iters, cfg.backend)
    raise InvariantError(f"HiGHS failed: {res.message}", stage="lp-solve")


class _Tableau:
    """Dense bounded-variable simplex tableau; columns are structurals then artificials."""

    def __init__(self, A, b, upper, exact: bool, cfg: SolverConfig):
        self.exact, self.cfg = exact, cfg
        m, n = A.shape
        self.m, self.n = m, n
        dt = object if exact else float
        conv = (lambda v: Fraction(v).limit_denominator(10**12)) if exact else float
        dense = A.toarray() if sp.issparse(A) else np.asarray(A)
        self.sign = np.where(np.asarray(b) < 0, -1, 1)
        T = np.empty((m, n + m), dtype=dt)
        for i in range(m):
            for j in range(n):
                T[i, j] = conv(dense[i, j] * self.sign[i])
        T[:, n:] = np.array([[conv(1 if i == j else 0) for j in range(m)] for i in range(m)],
                            dtype=dt).reshape(m, m)
        self.T = T
        self.rhs = np.array([conv(abs(v)) for v in b], dtype=dt)
        self.zero = conv(0)
        self.upper = np.array([conv(u) for u in upper] + [conv(0)] * m, dtype=dt)
        self.art_upper = np.array([conv(abs(v)) for v in b], dtype=dt)
        self.basis = list(range(n, n + m))
        self.at_upper = np.zeros(n + m, dtype=bool)
        self.rows = list(range(m))      # original row of each tableau row
        self.eps = 0 if exact else cfg.tol
        self.iterations = 0

    def values(self) -> np.ndarray:
        """Current primal values of all columns."""
        x = np.array([self.zero] * (self.n + self.m), dtype=self.T.dtype)
        x[self.at_upper] = self.upper[self.at_upper]
        for r, j in enumerate(self.basis):
            x[j] = self.rhs[r]
        return x

    def _ub(self, j):
        return self.art_upper[j - self.n] if j >= self.n and self.phase == 1 else self.upper[j]

    def run(self, cost, phase: int, allowed: np.ndarray) -> str:
        """Maximize ``cost`` over the current basis; ``allowed`` masks columns that may enter."""
        self.phase = phase
        streak, bland = 0, False
        eps = self.eps
        while True:
            if self.iterations >= self.cfg.max_iter:
                return ITERATION_LIMIT
            cb = np.array([cost[j] for j in self.basis], dtype=self.T.dtype)
            red = cost - cb @ self.T if len(self.basis) else cost.copy()
            in_basis = np.zeros(self.n + self.m, dtype=bool)
            in_basis[self.basis] = True
            up = (red > eps) & ~self.at_upper & allowed & ~in_basis
            down = (red < -eps) & self.at_upper & allowed & ~in_basis
            cand = np.flatnonzero(up | down)
            if not len(cand):
                return OPTIMAL
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(red[cand]).astype(float))])
            direction = 1 if up[j] else -1
            col = self.T[:, j] * direction
            # ratio test: each basic variable moves by -t * col
            best_t, leave, leave_to_upper = self._ub(j), -1, False
            for r in range(len(self.basis)):
                a = col[r]
                bj = self.basis[r]
                if a > eps:
                    t = self.rhs[r] / a
                    to_upper = False
                elif a < -eps:
                    t = (self._ub(bj) - self.rhs[r]) / (-a)
                    to_upper = True
                else:
                    continue
                if t < best_t or (t == best_t and leave >= 0 and bland
                                  and self.basis[r] < self.basis[leave]):
                    best_t, leave, leave_to_upper = t, r, to_upper
            self.iterations += 1
            degenerate = best_t <= eps
            streak = streak + 1 if degenerate else 0
            if streak >= self.cfg.degenerate_streak:
                bland = True
            self.rhs = self.rhs - best_t * col
            if leave < 0:
                # bound flip
                self.at_upper[j] = not self.at_upper[j]
                continue
            out = self.basis[leave]
            self.at_upper[out] = leave_to_upper
            self.at_upper[j] = False
            enter_value = (self._ub(j) - best_t) if direction < 0 else best_t
            self.rhs[leave] = enter_value
            self._pivot(leave, j)

    def _pivot(self, r: int, j: int) -> None:
        T = self.T
        piv = T[r, j]
        T[r] = T[r] / piv
        col = T[:, j].copy()
        col[r] = self.zero
        nz = np.flatnonzero(col != 0)
        if len(nz):
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = j

    def drive_out_artificials(self) -> None:
        """Pivot zero-valued artificials out of the basis; drop rows that are redundant."""
        r = 0
        while r < len(self.basis):
            bj = self.basis[r]
            if bj >= self.n:
                row = self.T[r, :self.n]
                nz = [j for j in np.flatnonzero(row != 0)
                      if j not in self.basis and (self.exact or abs(row[j]) > 1e-9)]
                if nz:
                    j = int(nz[0])
                    # the artificial is at zero, so the entering variable keeps its value
                    val = self.upper[j] if self.at_upper[j] else self.zero
                    self.at_upper[j] = False
                    self._pivot(r, j)
                    self.rhs[r] = val
                else:
                    self.T = np.delete(self.T, r, axis=0)
                    self.rhs = np.delete(self.rhs, r)
                    del self.basis[r]
                    del self.rows[r]
                    continue
            r += 1


def _solve_simplex(c, A, b, cfg: SolverConfig) -> LpSolution:
    exact = cfg.arithmetic == "exact"
    m, n = A.shape
    tab = _Tableau(A, b, [1] * n, exact, cfg)
    conv = tab.zero.__class__ if exact else float
    one = conv(1)
    # phase one: minimize the sum of artificials
    cost1 = np.array([tab.zero] * n + [-one] * m, dtype=tab.T.dtype)
    allowed = np.ones(n + m, dtype=bool)
    status = tab.run(cost1, 1, allowed)
    if status != OPTIMAL:
        return LpSolution(status, None, None, tab.iterations, "simplex")
    infeas = sum(tab.values()[n:])
    if (infeas > 0) if exact else (float(infeas) > cfg.check_tol):
        return LpSolution(INFEASIBLE, None, None, tab.iterations, "simplex")
    tab.drive_out_artificials()
    allowed[n:] = False
    if exact:
        cost2 = np.array([Fraction(v).limit_denominator(10**12) for v in c] + [tab.zero] * m,
                         dtype=object)
    else:
        cost2 = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
    status = tab.run(cost2, 2, allowed)
    vals = tab.values()[:n]
    x = np.array([float(v) for v in vals])
    if status != OPTIMAL:
        return LpSolution(status, x, None, tab.iterations, "simplex")
    # row multipliers from the artificial block, which holds B^-1 for the kept rows
    cb = np.array([cost2[j] for j in tab.basis], dtype=tab.T.dtype)
    lam = (cb @ tab.T[:, n:]) if len(tab.basis) else np.zeros(m)
    lam = np.array([float(v) for v in lam]) * tab.sign
    obj_exact = sum(cost2[j] * vals[j] for j in range(n)) if exact else None
    objective = float(obj_exact) if exact else float(np.dot(c, x))
    return LpSolution(OPTIMAL, x, objective, tab.iterations, "simplex", lam,
                      exact_x=list(vals) if exact else None)


def solve(program, cfg: SolverConfig | None = None) -> LpSolution:
    """Solve ``program`` (an :class:`~gcmc.lp.build.LpProgram` or a ``(c, A, b)`` triple)."""
    cfg = cfg or SolverConfig()
    if isinstance(program, tuple):
        c, A, b = program
        A = sp.csr_matrix(A)
    else:
        c, A, b = program.objective, program.A_eq, program.b_eq
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    if cfg.backend.startswith("highs"):
        sol = _solve_highs(c, A, b, cfg)
    else:
        sol = _solve_simplex(c, A, b, cfg)
    log.debug("lp solve: %s after %d iterations", sol.status, sol.iterations)
    return _finish(sol, c, A, b, cfg)
