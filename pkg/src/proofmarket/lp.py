"""Dense two-phase tableau simplex with Bland's rule.

Problems are minimisations ``c @ x`` subject to rows tagged ``<=``, ``=`` or
``>=`` and per-variable lower bounds (finite or ``-inf``). Finite bounds
are removed by shifting the variable, free variables are split into a
difference of two non-negative parts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
# consecutive degenerate pivots after which "steepest" pricing hands over to Bland
DEGENERATE_RUN = 50
# relative size of the right-hand-side relaxation used with "steepest" pricing
PERTURB = 1e-7
# objective improvement below which a pivot counts as degenerate
STALL_TOL = 1e-12


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    senses: Sequence[str]
    b: np.ndarray
    lower: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        nvar = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nvar) if np.size(self.A) else np.zeros((0, nvar))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = tuple(self.senses)
        if self.A.shape != (self.b.size, nvar) or len(self.senses) != self.b.size:
            raise ValueError("dimension mismatch in LP data")
        if any(s not in ("<=", "=", ">=") for s in self.senses):
            raise ValueError("row senses must be '<=', '=' or '>='")
        if self.lower is None:
            self.lower = np.zeros(nvar)
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        if self.lower.size != nvar:
            raise ValueError("dimension mismatch in variable bounds")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite")
        if np.any(np.isnan(self.lower)) or np.any(self.lower == np.inf):
            raise ValueError("lower bounds must be finite or -inf")

    @property
    def num_vars(self) -> int:
        return self.c.size

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Constraint violations (positive means violated)."""
        ax = self.A @ x
        viol = np.zeros(self.b.size)
        for i, sense in enumerate(self.senses):
            if sense == "<=":
                viol[i] = ax[i] - self.b[i]
            elif sense == ">=":
                viol[i] = self.b[i] - ax[i]
            else:
                viol[i] = abs(ax[i] - self.b[i])
        return viol


@dataclass
class LpSolution:
    status: LpStatus
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: Optional[np.ndarray] = None
    basis: tuple[int, ...] = ()
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Owns the mutable tableau for a single solve."""

    def __init__(self, T: np.ndarray, basis: np.ndarray, pricing: str = "bland"):
        self.T = T
        self.basis = basis
        self.iterations = 0
        self.pricing = pricing

    def pivot(self, r: int, col: int) -> None:
        T = self.T
        T[r] /= T[r, col]
        colv = T[:, col].copy()
        colv[r] = 0.0
        nz = np.nonzero(colv)[0]
        if 4 * nz.size > T.shape[0]:
            T -= np.outer(colv, T[r])
        elif nz.size:
            T[nz] -= np.outer(colv[nz], T[r])
        T[:, col] = 0.0
        T[r, col] = 1.0
        self.basis[r] = col
        self.iterations += 1

    def run(self, obj_row: int, m: int, allowed: np.ndarray, max_iter: int) -> LpStatus:
        """Bland's rule over the first ``m`` (constraint) rows."""
        T = self.T
        stalled = 0
        while self.iterations < max_iter:
            red = T[obj_row, :-1]
            cand = np.nonzero((red < -PIVOT_TOL) & allowed)[0]
            if cand.size == 0:
                return LpStatus.OPTIMAL
            if self.pricing == "bland" or stalled >= DEGENERATE_RUN:
                col = int(cand[0])
            else:
                # steepest edge: reduced cost per unit length of the edge direction
                norms = np.sqrt(1.0 + np.einsum("ij,ij->j", T[:m, cand], T[:m, cand]))
                col = int(cand[np.argmin(red[cand] / norms)])
            colv = T[:m, col]
            pos = np.nonzero(colv > PIVOT_TOL)[0]
            if pos.size == 0:
                return LpStatus.UNBOUNDED
            ratios = np.maximum(T[pos, -1], 0.0) / colv[pos]
            best = ratios.min()
            ties = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            if self.pricing == "bland" or stalled >= DEGENERATE_RUN:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(colv[ties])])  # most stable pivot
            gain = best * -red[col]
            stalled = stalled + 1 if gain <= STALL_TOL * (1.0 + abs(T[obj_row, -1])) else 0
            self.pivot(r, col)
        raise RuntimeError("simplex iteration limit reached")


def solve_lp(problem: LpProblem, max_iter: int = 200_000, pricing: str = "bland") -> LpSolution:
    """Minimise ``problem.c @ x`` with the two-phase simplex method.

    ``pricing="bland"`` enters the lowest-index improving column at every
    step. ``pricing="steepest"`` enters the column with the steepest edge but
    falls back to Bland's rule during runs of degenerate pivots, which keeps
    the anti-cycling guarantee. It also relaxes every ``<=`` row by a tiny
    random amount so that highly degenerate problems do not stall; the
    final basis is then re-evaluated on the exact right-hand side, and if it
    is not feasible there the problem is re-solved with plain Bland pricing.
    """
    if pricing not in ("bland", "steepest"):
        raise ValueError("pricing must be 'bland' or 'steepest'")
    c, A, b, lower = problem.c, problem.A, problem.b, problem.lower
    m, nvar = A.shape

    # variable transform x = lower + y (finite bound) or x = y+ - y- (free)
    free = ~np.isfinite(lower)
    shift = np.where(free, 0.0, lower)
    cols = [A]
    costs = [c]
    if free.any():
        cols.append(-A[:, free])
        costs.append(-c[free])
    Ay = np.hstack(cols)
    cy = np.concatenate(costs)
    ny = Ay.shape[1]
    rhs = b - A @ shift

    # orient rows so the right-hand side is non-negative, and equilibrate
    senses = list(problem.senses)
    row_scale = np.abs(Ay).max(axis=1, initial=0.0)
    row_scale = np.where(row_scale > 0, 1.0 / np.where(row_scale > 0, row_scale, 1.0), 1.0)
    flip = np.where(rhs < 0, -1.0, 1.0) * row_scale
    Ay = Ay * flip[:, None]
    rhs = rhs * flip
    # equilibrate columns too; otherwise a column whose entries are all tiny
    # has reduced costs below the pivot tolerance and is never entered
    col_max = np.abs(Ay).max(axis=0, initial=0.0)
    col_scale = np.where(col_max > 0, 1.0 / np.where(col_max > 0, col_max, 1.0), 1.0)
    Ay = Ay * col_scale[None, :]
    cy = cy * col_scale
    for i in range(m):
        if flip[i] < 0 and senses[i] != "=":
            senses[i] = ">=" if senses[i] == "<=" else "<="

    n_slack = sum(1 for s in senses if s != "=")
    n_art = sum(1 for s in senses if s != "<=")
    width = ny + n_slack + n_art
    T = np.zeros((m + 2, width + 1))
    T[:m, :ny] = Ay
    T[:m, -1] = rhs
    basis = np.empty(m, dtype=int)
    # the column holding B^-1 e_i at the end, with its sign, for dual recovery
    unit_col = np.empty(m, dtype=int)
    unit_sign = np.empty(m)
    js, ja = ny, ny + n_slack
    art_cols = []
    for i, sense in enumerate(senses):
        if sense == "<=":
            T[i, js] = 1.0
            basis[i] = js
            unit_col[i], unit_sign[i] = js, 1.0
            js += 1
        else:
            if sense == ">=":
                T[i, js] = -1.0
                unit_col[i], unit_sign[i] = js, -1.0
                js += 1
            T[i, ja] = 1.0
            basis[i] = ja
            if sense == "=":
                unit_col[i], unit_sign[i] = ja, 1.0
            art_cols.append(ja)
            ja += 1

    obj2, obj1 = m, m + 1
    T[obj2, :ny] = cy
    art_rows = [i for i, s in enumerate(senses) if s != "<="]
    for col in art_cols:
        T[obj1, col] = 1.0
    for i in art_rows:
        T[obj1] -= T[i]
    # original scaled columns, for re-solving the final basis without the
    # round-off the tableau accumulates over many pivots
    M0 = T[:m, :width].copy()
    costs0 = np.zeros(width)
    costs0[:ny] = cy
    perturbed = pricing == "steepest" and n_slack > 0
    if perturbed:
        rng = np.random.default_rng(0)
        scale = PERTURB * (1.0 + np.abs(rhs).max(initial=0.0))
        for i, sense in enumerate(senses):
            if sense == "<=":
                T[i, -1] += scale * rng.uniform(0.5, 1.0)
    tab = _Tableau(T, basis, pricing)

    allowed = np.ones(width, dtype=bool)
    if art_cols:
        status = tab.run(obj1, m, allowed, max_iter)
        if status is not LpStatus.OPTIMAL or -T[obj1, -1] > FEAS_TOL * (1.0 + np.abs(rhs).max(initial=0.0)):
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
        is_art = np.zeros(width, dtype=bool)
        is_art[art_cols] = True
        # drive artificial variables out of the basis where possible
        keep = np.ones(m + 2, dtype=bool)
        for r in range(m):
            if is_art[basis[r]]:
                row = T[r, :width]
                cand = np.nonzero((np.abs(row) > PIVOT_TOL) & ~is_art)[0]
                if cand.size:
                    tab.pivot(r, int(cand[0]))
                else:
                    keep[r] = False  # redundant equality
        allowed = ~is_art
    else:
        keep = np.ones(m + 2, dtype=bool)

    # phase two on the original costs; redundant rows are zeroed out
    for r in np.nonzero(~keep[:m])[0]:
        T[r] = 0.0
        basis[r] = width  # sentinel never selected by the ratio test tie-break
    for r in range(m):
        if keep[r] and basis[r] < width:
            coef = T[obj2, basis[r]]
            if coef != 0.0:
                T[obj2] -= coef * T[r]
    status = tab.run(obj2, m, allowed, max_iter)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)

    live = keep[:m] & (basis < width)
    rows = np.nonzero(live)[0]
    pi = np.zeros(m)
    if rows.size:
        Bmat = M0[np.ix_(rows, basis[rows])]
        try:
            xb = np.linalg.solve(Bmat, rhs[rows])
            pi[rows] = np.linalg.solve(Bmat.T, costs0[basis[rows]])
        except np.linalg.LinAlgError:
            xb, pi = T[rows, -1], -T[obj2, unit_col] * unit_sign
        if np.any(xb < -FEAS_TOL * (1.0 + np.abs(rhs).max(initial=0.0))):
            if perturbed:
                return solve_lp(problem, max_iter=max_iter, pricing="bland")
        T[:m, -1] = 0.0
        T[rows, -1] = xb

    y = np.zeros(width)
    for r in range(m):
        if keep[r] and basis[r] < width:
            y[basis[r]] = T[r, -1]
    y = np.maximum(y, 0.0)
    y[:ny] *= col_scale
    x = shift.copy()
    x += y[:nvar]
    if free.any():
        x[free] -= y[nvar:ny]
    # row duals: reduced cost of each row's unit column is -(c_B B^-1 e_i)
    duals = pi * flip
    objective = float(c @ x)
    basis_t = tuple(int(v) for v in basis)
    return LpSolution(LpStatus.OPTIMAL, objective, x, duals, basis_t, tab.iterations)
