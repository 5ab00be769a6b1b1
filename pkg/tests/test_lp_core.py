import numpy as np
import pytest

from types import SimpleNamespace

from ehcrn.lp_core import (LinearProgram, LpStatus, SimplexError,
                           charnes_cooper, recover_x, simplex_solve)


def test_simple_maximization():
    # max x + y s.t. x <= 2, y <= 3, x + y <= 4
    lp = LinearProgram(c=[1.0, 1.0],
                       a=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                       rhs=[2.0, 3.0, 4.0], row_kinds=("le", "le", "le"))
    sol = simplex_solve(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(4.0)


def test_equality_row():
    # max x s.t. x + y = 1, x <= 0.3
    lp = LinearProgram(c=[1.0, 0.0], a=[[1.0, 1.0], [1.0, 0.0]],
                       rhs=[1.0, 0.3], row_kinds=("eq", "le"))
    sol = simplex_solve(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(0.3)
    assert sol.x[1] == pytest.approx(0.7)


def test_infeasible():
    lp = LinearProgram(c=[1.0], a=[[1.0], [-1.0]], rhs=[1.0, -2.0],
                       row_kinds=("le", "le"))  # x <= 1 and x >= 2
    sol = simplex_solve(lp)
    assert sol.status is LpStatus.INFEASIBLE


def test_unbounded():
    lp = LinearProgram(c=[1.0], a=[[-1.0]], rhs=[0.0], row_kinds=("le",))
    sol = simplex_solve(lp)
    assert sol.status is LpStatus.UNBOUNDED


def test_free_variable_split():
    # max -x with x free and x >= -5: optimum at x = -5
    lp = LinearProgram(c=[-1.0], a=[[-1.0]], rhs=[5.0], row_kinds=("le",),
                       nonneg=(False,))
    sol = simplex_solve(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(-5.0)
    assert sol.objective == pytest.approx(5.0)


def test_degenerate_cycling_guard():
    # classic Beale-style degenerate instance; Bland's rule must terminate
    lp = LinearProgram(
        c=[0.75, -150.0, 0.02, -6.0],
        a=[[0.25, -60.0, -1.0 / 25.0, 9.0],
           [0.5, -90.0, -1.0 / 50.0, 3.0],
           [0.0, 0.0, 1.0, 0.0]],
        rhs=[0.0, 0.0, 1.0], row_kinds=("le", "le", "le"))
    sol = simplex_solve(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(0.05)


def test_duals_satisfy_strong_duality():
    rng = np.random.default_rng(2)
    for _ in range(30):
        a = rng.uniform(0.1, 1.0, (4, 3))
        rhs = rng.uniform(0.5, 2.0, 4)
        c = rng.uniform(0.1, 1.0, 3)
        sol = simplex_solve(LinearProgram(c=c, a=a, rhs=rhs,
                                          row_kinds=("le",) * 4))
        assert sol.status is LpStatus.OPTIMAL
        assert float(sol.duals @ rhs) == pytest.approx(sol.objective, abs=1e-8)
        assert np.all(sol.duals >= -1e-9)


def test_dimension_validation():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 2.0], a=[[1.0]], rhs=[1.0], row_kinds=("le",))
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], a=[[1.0]], rhs=[1.0], row_kinds=("ge",))
    with pytest.raises(ValueError):
        LinearProgram(c=[np.inf], a=[[1.0]], rhs=[1.0], row_kinds=("le",))


def _ratio_lfp():
    # maximize (x1 + 1)/(x2 + 1) s.t. x1 <= 2, x2 <= 3, x1 + x2 <= 4
    # (duck-typed standard form: charnes_cooper only reads the attributes)
    return SimpleNamespace(
        matrix_a=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        beta=np.array([2.0, 3.0, 4.0]),
        c=np.array([1.0, 0.0]), d=np.array([0.0, 1.0]),
        a_scalar=1.0, b_scalar=1.0)


def test_charnes_cooper_roundtrip():
    sol = simplex_solve(charnes_cooper(_ratio_lfp()))
    assert sol.status is LpStatus.OPTIMAL
    x = recover_x(sol)
    assert x[0] == pytest.approx(2.0)
    assert x[1] == pytest.approx(0.0)
    assert sol.objective == pytest.approx(3.0)  # (2+1)/(0+1)


def test_charnes_cooper_rejects_bad_denominator():
    lfp = _ratio_lfp()
    lfp.b_scalar = 0.0
    with pytest.raises(ValueError):
        charnes_cooper(lfp)


def test_recover_x_requires_optimal():
    lp = LinearProgram(c=[1.0], a=[[1.0], [-1.0]], rhs=[1.0, -2.0],
                       row_kinds=("le", "le"))
    sol = simplex_solve(lp)
    with pytest.raises((ValueError, SimplexError)):
        recover_x(sol)


def test_random_lps_match_reference():
    """Cross-check against a rational-arithmetic vertex enumeration on
    small random LPs (3 vars, 5 rows)."""
    from fractions import Fraction
    from itertools import combinations

    rng = np.random.default_rng(3)
    for _ in range(40):
        a = np.round(rng.uniform(-1.0, 1.0, (5, 3)), 3)
        rhs = np.round(rng.uniform(0.2, 2.0, 5), 3)
        c = np.round(rng.uniform(-1.0, 1.0, 3), 3)
        # bounding box keeps the feasible set compact, so the vertex
        # enumeration below is a complete reference
        a = np.vstack([a, np.ones(3)])
        rhs = np.append(rhs, 3.0)
        lp = LinearProgram(c=c, a=a, rhs=rhs, row_kinds=("le",) * 6)

        # reference: enumerate basic feasible points of {Ax<=b, x>=0}
        af = [[Fraction(str(v)) for v in row] for row in a]
        bf = [Fraction(str(v)) for v in rhs]
        rows = af + [[Fraction(int(i == j)) * -1 for j in range(3)]
                     for i in range(3)]
        rhs_all = bf + [Fraction(0)] * 3
        best = None
        for idx in combinations(range(9), 3):
            m = [[rows[i][j] for j in range(3)] for i in idx]
            r = [rhs_all[i] for i in idx]
            det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                   - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                   + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
            if det == 0:
                continue
            x = []
            for col in range(3):
                mc = [row[:] for row in m]
                for i in range(3):
                    mc[i][col] = r[i]
                dc = (mc[0][0] * (mc[1][1] * mc[2][2] - mc[1][2] * mc[2][1])
                      - mc[0][1] * (mc[1][0] * mc[2][2] - mc[1][2] * mc[2][0])
                      + mc[0][2] * (mc[1][0] * mc[2][1] - mc[1][1] * mc[2][0]))
                x.append(dc / det)
            if any(v < 0 for v in x):
                continue
            if any(sum(rows[i][j] * x[j] for j in range(3)) > rhs_all[i]
                   for i in range(9)):
                continue
            val = sum(Fraction(str(cv)) * xv for cv, xv in zip(c, x))
            if best is None or val > best:
                best = val
        sol = simplex_solve(lp)
        if best is None:
            assert sol.status is LpStatus.INFEASIBLE
        else:
            assert sol.status is LpStatus.OPTIMAL
            assert sol.objective == pytest.approx(float(best), abs=1e-7)
