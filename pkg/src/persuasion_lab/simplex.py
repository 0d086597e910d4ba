"""Dense two-phase tableau simplex with Bland's rule.

Solves  max c.x  s.t.  A x = b, x >= 0, with b >= 0.  Small problems only:
the obedience programs this package builds have at most a few hundred
variables, so a dense tableau with anti-cycling pivoting is simple,
dependency-free, and bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPError, LPInfeasibleError, LPIterationLimitError

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int
    dual: np.ndarray
    duality_gap: float


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    # eliminate the pivot column from every other row, cost row included
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _bland_iterate(
    tableau: np.ndarray,
    basis: np.ndarray,
    allowed: np.ndarray,
    max_iter: int,
) -> int:
    """Run simplex iterations (minimization tableau) until optimal.

    ``allowed`` masks the columns that may enter the basis.  Entering column:
    smallest-index allowed column with negative reduced cost.  Leaving row:
    minimum ratio, ties broken by smallest basis variable index.
    """
    n_rows = tableau.shape[0] - 1
    for it in range(max_iter):
        reduced = tableau[-1, :-1]
        candidates = np.flatnonzero((reduced < -_PIVOT_TOL) & allowed)
        if candidates.size == 0:
            return it
        col = int(candidates[0])
        column = tableau[:n_rows, col]
        rhs = tableau[:n_rows, -1]
        rows = np.flatnonzero(column > _PIVOT_TOL)
        if rows.size == 0:
            raise LPError("unbounded pivot column; problem is not a bounded program")
        ratios = rhs[rows] / column[rows]
        best = ratios.min()
        tied = rows[np.flatnonzero(ratios <= best + 0.0)]
        # Bland: among minimum-ratio rows pick the smallest basis index
        row = int(tied[np.argmin(basis[tied])])
        _pivot(tableau, basis, row, col)
    raise LPIterationLimitError(f"simplex did not converge in {max_iter} iterations")


def solve_standard_form(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    max_iter: int | None = None,
) -> SimplexResult:
    """Maximize ``c @ x`` subject to ``A x = b``, ``x >= 0`` (``b >= 0``)."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n_rows, n_vars = A.shape
    if np.any(b < 0):
        raise LPError("standard form requires b >= 0")
    if max_iter is None:
        max_iter = 200 * (n_vars + n_rows + 10)

    # ---- phase 1: minimize the sum of artificial variables
    tableau = np.zeros((n_rows + 1, n_vars + n_rows + 1))
    tableau[:n_rows, :n_vars] = A
    tableau[:n_rows, n_vars : n_vars + n_rows] = np.eye(n_rows)
    tableau[:n_rows, -1] = b
    basis = np.arange(n_vars, n_vars + n_rows)
    # reduced costs of original columns under the artificial basis
    tableau[-1, :n_vars] = -A.sum(axis=0)
    tableau[-1, -1] = -b.sum()

    allowed = np.ones(n_vars + n_rows, dtype=bool)
    iters = _bland_iterate(tableau, basis, allowed, max_iter)
    if -tableau[-1, -1] > _FEAS_TOL:
        raise LPInfeasibleError(
            f"phase-1 optimum {-tableau[-1, -1]:g} > 0; constraints are infeasible"
        )

    # drive leftover artificials out of the basis; drop redundant rows
    keep_rows = np.ones(n_rows, dtype=bool)
    for r in range(n_rows):
        if basis[r] < n_vars:
            continue
        pivots = np.flatnonzero(np.abs(tableau[r, :n_vars]) > _PIVOT_TOL)
        if pivots.size:
            _pivot(tableau, basis, r, int(pivots[0]))
        else:
            keep_rows[r] = False  # linearly dependent constraint

    row_mask = np.append(keep_rows, True)
    col_mask = np.append(
        np.concatenate([np.ones(n_vars, dtype=bool), np.zeros(n_rows, dtype=bool)]), True
    )
    tableau = tableau[row_mask][:, col_mask]
    basis = basis[keep_rows]
    kept = np.flatnonzero(keep_rows)

    # ---- phase 2: minimize -c over the feasible basis found above
    cost = -c
    tableau[-1, :-1] = cost
    tableau[-1, -1] = 0.0
    for r, var in enumerate(basis):
        tableau[-1] -= cost[var] * tableau[r]
    allowed = np.ones(n_vars, dtype=bool)
    iters += _bland_iterate(tableau, basis, allowed, max_iter)

    x = np.zeros(n_vars)
    x[basis] = tableau[: len(basis), -1]
    x = np.where(np.abs(x) < 1e-14, 0.0, x)
    objective = float(c @ x)

    # dual certificate from the final basis: y solves B^T y = c_B
    B = A[kept][:, basis]
    try:
        y_kept = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError as e:
        raise LPError(f"singular final basis: {e}") from e
    dual = np.zeros(n_rows)
    dual[kept] = y_kept
    duality_gap = abs(objective - float(dual @ b))

    residual = float(np.max(np.abs(A @ x - b))) if n_rows else 0.0
    if residual > _FEAS_TOL:
        raise LPError(f"solution violates constraints by {residual:g}")
    if duality_gap > _FEAS_TOL:
        raise LPError(f"duality gap {duality_gap:g} exceeds {_FEAS_TOL:g}")

    return SimplexResult(
        x=x, objective=objective, iterations=iters, dual=dual, duality_gap=duality_gap
    )
