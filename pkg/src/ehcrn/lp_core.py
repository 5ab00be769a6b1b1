"""Linear-fractional-to-LP reduction and a dense two-phase simplex solver.

The single-slot problem is a linear fractional program; the classic
change of variables y = x/(d.x + b), t = 1/(d.x + b) turns it into an LP
that the simplex core solves.  Problems here are tiny (7 rows, 4 columns)
so the solver is a plain dense tableau with Bland's anti-cycling rule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-9


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SimplexError(RuntimeError):
    """Numerical failure: pivot cap exceeded or KKT residual check failed."""


@dataclass
class LinearProgram:
    """maximize c.x  s.t.  A x (<=|=) rhs, x_i >= 0 where nonneg[i].

    row_kinds entries are "le" or "eq"; nonneg marks variables bounded
    below by zero (free variables are split internally).
    """

    c: np.ndarray
    a: np.ndarray
    rhs: np.ndarray
    row_kinds: tuple[str, ...]
    nonneg: tuple[bool, ...] = ()

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        m, n = self.a.shape
        if self.c.shape != (n,) or self.rhs.shape != (m,):
            raise ValueError("inconsistent LP dimensions")
        if len(self.row_kinds) != m:
            raise ValueError("row_kinds length mismatch")
        if any(k not in ("le", "eq") for k in self.row_kinds):
            raise ValueError("row kinds must be 'le' or 'eq'")
        if not self.nonneg:
            self.nonneg = (True,) * n
        if len(self.nonneg) != n:
            raise ValueError("nonneg length mismatch")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.a))
                and np.all(np.isfinite(self.rhs))):
            raise ValueError("LP data must be finite")


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    #: dual value per original row (valid on OPTIMAL)
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pivots: int = 0


def charnes_cooper(lfp) -> LinearProgram:
    """Transform an LfpStandardForm (maximize (c.x+a)/(d.x+b) s.t. A x <= beta)
    into the equivalent LP in variables (y, t):

        maximize c.y + a*t
        s.t.     A y - beta*t <= 0
                 d.y + b*t = 1,  y >= 0, t >= 0
    """
    if lfp.b_scalar <= 0.0:
        raise ValueError(f"denominator constant must be positive, got {lfp.b_scalar}")
    m, n = lfp.matrix_a.shape
    a = np.zeros((m + 1, n + 1))
    a[:m, :n] = lfp.matrix_a
    a[:m, n] = -lfp.beta
    a[m, :n] = lfp.d
    a[m, n] = lfp.b_scalar
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    c = np.zeros(n + 1)
    c[:n] = lfp.c
    c[n] = lfp.a_scalar
    kinds = ("le",) * m + ("eq",)
    return LinearProgram(c=c, a=a, rhs=rhs, row_kinds=kinds)


def recover_x(lp_solution: LpSolution) -> np.ndarray:
    """Undo the change of variables: x = y / t, with t the last variable."""
    if lp_solution.status is not LpStatus.OPTIMAL:
        raise ValueError("can only recover x from an optimal solution")
    t = lp_solution.x[-1]
    if t <= 1e-12:
        raise SimplexError(f"degenerate denominator variable t={t}; "
                           "instance needs oracle fallback")
    return lp_solution.x[:-1] / t


def _to_standard_form(lp: LinearProgram):
    """Rewrite as maximize c.x, A x <= b, x >= 0.

    Equality rows become opposing inequality pairs; free variables are
    split into positive and negative parts.
    """
    rows = []
    rhs = []
    row_map = []  # (orig_row, sign) per standard-form row
    for i, kind in enumerate(lp.row_kinds):
        rows.append(lp.a[i])
        rhs.append(lp.rhs[i])
        row_map.append((i, 1.0))
        if kind == "eq":
            rows.append(-lp.a[i])
            rhs.append(-lp.rhs[i])
            row_map.append((i, -1.0))
    a = np.array(rows)
    b = np.array(rhs)

    n = lp.c.shape[0]
    split = [j for j in range(n) if not lp.nonneg[j]]
    if split:
        a = np.hstack([a, -a[:, split]])
        c = np.concatenate([lp.c, -lp.c[split]])
    else:
        c = lp.c.copy()
    return a, b, c, row_map, split


def simplex_solve(lp: LinearProgram, max_pivots: int | None = None) -> LpSolution:
    """Two-phase primal simplex with Bland's rule.

    Returns a certified status; on OPTIMAL the primal residuals and the
    primal/dual objective gap are verified to <= 1e-8 relative.
    """
    a, b, c, row_map, split = _to_standard_form(lp)
    m, n = a.shape
    if max_pivots is None:
        max_pivots = 10 * (m + n) ** 2

    # Rows with negative rhs are negated (slack coefficient -1) and get an
    # artificial variable; rows with b >= 0 start with their slack basic.
    neg = b < 0
    art_rows = np.flatnonzero(neg)
    n_art = art_rows.size

    ncols = n + m + n_art
    T = np.zeros((m, ncols + 1))
    T[:, :n] = a
    T[:, n:n + m] = np.eye(m)
    T[:, -1] = b
    T[neg] *= -1.0  # flips slack coefficient to -1 and rhs to >= 0

    basis = np.arange(n, n + m)
    for k, i in enumerate(art_rows):
        col = n + m + k
        T[i, col] = 1.0
        basis[i] = col

    pivots = 0

    def pivot(row, col):
        nonlocal pivots
        T[row] /= T[row, col]
        for r in range(m):
            if r != row and abs(T[r, col]) > 1e-14:
                T[r] -= T[r, col] * T[row]
        basis[row] = col
        pivots += 1

    def run_phase(z, allowed):
        """Bland iterations on objective row z over `allowed` columns.
        Returns 'optimal' or 'unbounded'."""
        nonlocal pivots
        while True:
            enter = -1
            for j in allowed:
                if j not in basis and z[j] < -_PIVOT_TOL:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            # ratio test, Bland tie-break on smallest basic variable index
            best = None
            for i in range(m):
                if T[i, enter] > _PIVOT_TOL:
                    ratio = T[i, -1] / T[i, enter]
                    if best is None or ratio < best[0] - 1e-12 or (
                            abs(ratio - best[0]) <= 1e-12 and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            leave = best[1]
            pivot(leave, enter)
            z -= z[enter] * T[leave]
            if pivots > max_pivots:
                raise SimplexError(f"pivot cap {max_pivots} exceeded")

    # ---- phase 1: drive artificials to zero ------------------------------
    if n_art:
        z1 = np.zeros(ncols + 1)
        z1[n + m:ncols] = 1.0  # minimize sum of artificials
        for i in range(m):
            if basis[i] >= n + m:
                z1 -= T[i]
        status = run_phase(z1, range(ncols))
        assert status == "optimal"  # phase-1 objective is bounded below by 0
        if -z1[-1] > 1e-8:
            return LpSolution(LpStatus.INFEASIBLE, np.zeros(lp.c.shape[0]),
                              float("nan"), pivots=pivots)
        # pivot remaining artificial basics out on any usable column
        for i in range(m):
            if basis[i] >= n + m:
                for j in range(n + m):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        pivot(i, j)
                        break
                # an all-zero row is a redundant constraint; harmless to keep

    # ---- phase 2 ---------------------------------------------------------
    c_full = np.zeros(ncols + 1)
    c_full[:n] = c
    z2 = -c_full
    for i in range(m):
        if basis[i] < n + m and c_full[basis[i]] != 0.0:
            z2 += c_full[basis[i]] * T[i]
    status = run_phase(z2, range(n + m))
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, np.zeros(lp.c.shape[0]),
                          float("inf"), pivots=pivots)

    x_std = np.zeros(ncols)
    for i in range(m):
        if basis[i] < ncols:
            x_std[basis[i]] = T[i, -1]
    x = x_std[:lp.c.shape[0]]
    if split:
        x = x.copy()
        for k, j in enumerate(split):
            x[j] -= x_std[n - len(split) + k]
    objective = float(z2[-1])

    # duals on standard-form rows live in the slack reduced costs
    y_std = z2[n:n + m].copy()
    sign = np.where(neg, -1.0, 1.0)
    y_std *= sign
    duals = np.zeros(len(lp.row_kinds))
    for k, (orig, s) in enumerate(row_map):
        duals[orig] += s * y_std[k]

    _verify_optimal(lp, x, objective, duals)
    return LpSolution(LpStatus.OPTIMAL, x, objective, duals=duals, pivots=pivots)


def _verify_optimal(lp: LinearProgram, x, objective, duals):
    scale = 1.0 + max(np.abs(lp.rhs).max(initial=0.0), np.abs(x).max(initial=0.0))
    ax = lp.a @ x
    for i, kind in enumerate(lp.row_kinds):
        resid = ax[i] - lp.rhs[i]
        bad = resid > 1e-8 * scale if kind == "le" else abs(resid) > 1e-8 * scale
        if bad:
            raise SimplexError(f"primal residual {resid} on row {i}")
    for j, nn in enumerate(lp.nonneg):
        if nn and x[j] < -1e-8 * scale:
            raise SimplexError(f"negative variable x[{j}]={x[j]}")
    dual_obj = float(duals @ lp.rhs)
    gap = abs(dual_obj - objective)
    if gap > 1e-8 * (1.0 + abs(objective)):
        raise SimplexError(f"primal/dual objective gap {gap}")
