"""Dense two-phase primal simplex with Bland's rule.

Solves ``min c.x  s.t.  A x = b, x >= 0`` and always returns a basic solution,
which is what the occupancy-polytope code needs: interior-point answers would
land inside faces instead of on vertices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.linalg

PIVOT_TOL = 1e-10
OPT_TOL = 1e-12
REFACTOR_EVERY = 50


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpCyclingError(RuntimeError):
    """Iteration cap hit or phase 1 broke down; with Bland's rule both point at a numerical problem."""


@dataclass
class SimplexResult:
    status: LpStatus
    x: Optional[np.ndarray]
    value: float
    basis: tuple
    reduced_costs: Optional[np.ndarray]
    iterations: int


def independent_rows(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal linearly independent subset of the rows of ``A``."""
    if A.shape[0] == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.arange(0)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list):
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        self.T = np.linalg.solve(B, self.A)
        self.rhs = np.linalg.solve(B, self.b)
        self.rhs[np.abs(self.rhs) < 1e-14] = 0.0
        self.pivots_since = 0

    def pivot(self, row: int, col: int):
        T, rhs = self.T, self.rhs
        p = T[row, col]
        T[row] /= p
        rhs[row] /= p
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        rhs -= factors * rhs[row]
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.pivots_since += 1
        if self.pivots_since >= REFACTOR_EVERY:
            self.refactor()

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        # dual solve from the basis matrix is more accurate than the tableau row
        B = self.A[:, self.basis]
        y = np.linalg.solve(B.T, c[self.basis])
        d = c - self.A.T @ y
        d[self.basis] = 0.0
        return d

    def run(self, c: np.ndarray, tol: float, max_iter: int) -> tuple:
        """Bland-rule iterations; returns (status, iterations)."""
        it = 0
        scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
        dtol = tol * scale
        while True:
            d = self.reduced_costs(c)
            candidates = np.flatnonzero(d < -dtol)
            if candidates.size == 0:
                if self.pivots_since:
                    # confirm optimality on a freshly factored tableau
                    self.refactor()
                    continue
                return LpStatus.OPTIMAL, it
            col = int(candidates[0])
            column = self.T[:, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return LpStatus.UNBOUNDED, it
            ratios = np.maximum(self.rhs[rows], 0.0) / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best * (1.0 + 1e-12)]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)
            it += 1
            if it > max_iter:
                raise LpCyclingError(f"simplex exceeded {max_iter} iterations")


def solve_standard_form(
    c,
    A_eq,
    b_eq,
    exclude: Iterable[int] = (),
    tol: float = OPT_TOL,
    max_iter: Optional[int] = None,
) -> SimplexResult:
    """Minimize ``c.x`` over ``{A_eq x = b_eq, x >= 0}``; columns in ``exclude`` are fixed at zero.

    Dependent equality rows are dropped by a rank-revealing QR before phase 1.
    The returned ``x`` is recomputed from the final basis by a direct solve.
    """
    c = np.asarray(c, dtype=float).ravel()
    A = np.asarray(A_eq, dtype=float)
    b = np.asarray(b_eq, dtype=float).ravel()
    n_full = A.shape[1]
    cols = np.setdiff1d(np.arange(n_full), np.asarray(list(exclude), dtype=int))
    res = _solve_reduced(c[cols], A[:, cols], b, tol, max_iter)
    if res.x is not None:
        x = np.zeros(n_full)
        x[cols] = res.x
        res.x = x
        d = np.full(n_full, np.nan)
        d[cols] = res.reduced_costs
        res.reduced_costs = d
    res.basis = tuple(int(cols[j]) for j in res.basis)
    return res


def _solve_reduced(c, A, b, tol, max_iter) -> SimplexResult:
    m0, n = A.shape
    keep = independent_rows(A)
    if keep.size < m0:
        if keep.size:
            sol, *_ = np.linalg.lstsq(A[keep], b[keep], rcond=None)
        else:
            sol = np.zeros(n)
        if np.max(np.abs(A @ sol - b)) > 1e-8 * max(1.0, float(np.max(np.abs(b)))):
            return SimplexResult(LpStatus.INFEASIBLE, None, np.nan, (), None, 0)
    A, b = A[keep], b[keep]
    m = A.shape[0]
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    if m == 0:
        # no constraints: x = 0 is optimal unless some cost is negative
        if np.any(c < 0):
            return SimplexResult(LpStatus.UNBOUNDED, None, -np.inf, (), None, 0)
        return SimplexResult(LpStatus.OPTIMAL, np.zeros(n), 0.0, (), c.copy(), 0)

    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    # phase 1 on [A | I]
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab = _Tableau(A1, b, list(range(n, n + m)))
    status1, it1 = tab.run(c1, tol, max_iter)
    if status1 is not LpStatus.OPTIMAL:
        # the phase-1 objective is bounded below by zero
        raise LpCyclingError("phase 1 lost primal feasibility")
    infeas = float(np.sum(np.clip(tab.rhs[np.array(tab.basis) >= n], 0, None)))
    if infeas > 1e-9 * max(1.0, float(np.max(np.abs(b)))):
        return SimplexResult(LpStatus.INFEASIBLE, None, np.nan, (), None, it1)

    # drive zero-level artificials out of the basis
    for row in range(m):
        if tab.basis[row] >= n:
            nonbasic = ~np.isin(np.arange(n), tab.basis)
            cand = np.flatnonzero((np.abs(tab.T[row, :n]) > PIVOT_TOL) & nonbasic)
            if cand.size == 0:
                raise LpCyclingError("redundant row survived preprocessing")
            tab.pivot(row, int(cand[0]))

    tab2 = _Tableau(A, b, tab.basis)
    status, it2 = tab2.run(c, tol, max_iter)
    basis = tuple(tab2.basis)
    if status is not LpStatus.OPTIMAL:
        return SimplexResult(status, None, -np.inf, basis, None, it1 + it2)
    x = np.zeros(n)
    x[list(basis)] = np.linalg.solve(A[:, list(basis)], b)
    x[np.abs(x) < 1e-15] = 0.0
    x = np.clip(x, 0.0, None)
    return SimplexResult(LpStatus.OPTIMAL, x, float(c @ x), basis, tab2.reduced_costs(c), it1 + it2)


def solve_lp(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, exclude: Iterable[int] = ()) -> SimplexResult:
    """General form ``min c.x`` with equality and ``<=`` rows; slacks are appended and stripped."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    blocks, rhs = [], []
    n_ub = 0 if A_ub is None else np.asarray(A_ub).shape[0]
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], n_ub))]))
        rhs.append(np.asarray(b_eq, dtype=float).ravel())
    if n_ub:
        A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
        blocks.append(np.hstack([A_ub, np.eye(n_ub)]))
        rhs.append(np.asarray(b_ub, dtype=float).ravel())
    A = np.vstack(blocks) if blocks else np.zeros((0, n + n_ub))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    res = solve_standard_form(np.concatenate([c, np.zeros(n_ub)]), A, b, exclude=exclude)
    if res.x is not None:
        res.x = res.x[:n]
        res.reduced_costs = res.reduced_costs[:n]
    return res
