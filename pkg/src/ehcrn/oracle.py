"""Brute-force grid oracles and an independent constraint checker.

These anchor the exact solvers and the subgradient method: the N=1 and
N=2 grids scan the full decision box and keep the best feasible point,
and the constraint checker re-codes the feasibility conditions without
sharing any helper with the model module, so the two can be compared
flag for flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import (DEFAULT_TOL, FeasibilityReport, Policy, SlotData,
                    SystemParams, Trace, effective_budgets)

LN2 = math.log(2.0)


@dataclass
class GridSpec:
    points_per_axis: int = 400

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be >= 2")


@dataclass
class GridResult:
    feasible: bool
    policy: Policy | None
    su_bits: float
    #: conservative bound on how far the incumbent may sit below the true
    #: optimum: (grid step) x (sup-norm of the objective gradient), summed
    #: per axis, with a one-extra-step allowance for the rate band
    error_bound: float


@njit(cache=True)
def _grid_n1_nb(hpp, hps, hss, hsp, sigma2, omega, alpha, ep, es, npts):
    pp_max = ep + alpha * es
    step_pp = pp_max / (npts - 1) if pp_max > 0.0 else 0.0
    step_s = es / (npts - 1) if es > 0.0 else 0.0

    best = -1.0
    b_pp = 0.0
    b_ps = 0.0
    b_dd = 0.0
    found = False
    for ip in range(npts):
        pp = ip * step_pp
        for idd in range(npts):
            dd = idd * step_s
            if pp - alpha * dd > ep + 1e-12:
                continue  # larger dd only relaxes this; but scan all anyway
            for isv in range(npts):
                ps = isv * step_s
                if ps + dd > es + 1e-12:
                    break
                # strict PU-rate feasibility: the incumbent is a true
                # feasible point and the error bound absorbs the grid gap
                if hpp * pp - omega * (sigma2 + hsp * ps) < -1e-12:
                    break  # PU rate only worsens as ps grows
                val = math.log1p(hss * ps / (sigma2 + hps * pp)) / LN2
                if val > best:
                    best = val
                    b_pp = pp
                    b_ps = ps
                    b_dd = dd
                    found = True
    return found, b_pp, b_ps, b_dd, best


def grid_search_n1(params: SystemParams, slot: SlotData,
                   grid: GridSpec | None = None) -> GridResult:
    """Exhaustive scan of (p_p, p_s, delta) over
    [0, E'_p + alpha*E'_s] x [0, E'_s] x [0, E'_s]."""
    if params.n_slots != 1:
        raise ValueError("grid_search_n1 requires n_slots=1")
    if grid is None:
        grid = GridSpec()
    ep, es = effective_budgets(params, slot)
    found, pp, ps, dd, bits = _grid_n1_nb(
        slot.h_pp, slot.h_ps, slot.h_ss, slot.h_sp, params.sigma2,
        params.omega, params.alpha, ep, es, grid.points_per_axis)
    bound = _n1_error_bound(params, slot, ep, es, grid.points_per_axis)
    if not found:
        return GridResult(False, None, -math.inf, bound)
    policy = Policy(np.array([pp]), np.array([ps]), np.array([dd]))
    return GridResult(True, policy, bits, bound)


def _n1_error_bound(params, slot, ep, es, npts):
    pp_max = ep + params.alpha * es
    step_pp = pp_max / (npts - 1) if pp_max > 0 else 0.0
    step_s = es / (npts - 1) if es > 0 else 0.0
    # sup over the box of |df/dp_s| and |df/dp_p|
    lip_ps = slot.h_ss / params.sigma2 / LN2
    lip_pp = (slot.h_ps / params.sigma2
              * slot.h_ss * es / (params.sigma2 + slot.h_ss * es)) / LN2
    # When the optimum sits on the PU-rate boundary, rounding p_p down one
    # step forces p_s down by h_pp*step/(omega*h_sp) extra to stay strictly
    # feasible; p_s cannot drop by more than its whole budget.
    couple = 0.0
    if params.omega > 0.0 and slot.h_sp > 0.0 and step_pp > 0.0:
        couple = min(es, slot.h_pp * step_pp / (params.omega * slot.h_sp))
    return 2.0 * (step_s + couple) * lip_ps + 2.0 * step_pp * lip_pp


@njit(cache=True)
def _grid_n2_nb(hpp, hps, hss, hsp, ep, es, sigma2, bp, alpha, emax, npts):
    es_tot = es[0] + es[1]
    ep_tot = ep[0] + ep[1]
    pp_hi = ep_tot + alpha * es_tot
    step_s = es_tot / (npts - 1) if es_tot > 0.0 else 0.0
    step_p = pp_hi / (npts - 1) if pp_hi > 0.0 else 0.0

    best = -1.0
    out = np.zeros(6)
    found = False
    for i_d1 in range(npts):
        d1 = i_d1 * step_s
        if d1 > es[0] + 1e-12:
            break
        for i_s1 in range(npts):
            ps1 = i_s1 * step_s
            if ps1 + d1 > es[0] + 1e-12:
                break
            st1 = es[0] - ps1 - d1  # ST battery after slot 1
            if st1 > emax + 1e-12:
                continue
            for i_d2 in range(npts):
                d2 = i_d2 * step_s
                for i_s2 in range(npts):
                    ps2 = i_s2 * step_s
                    if ps1 + d1 + ps2 + d2 > es_tot + 1e-12:
                        break
                    st2 = es_tot - ps1 - d1 - ps2 - d2
                    if st2 > emax + 1e-12:
                        continue  # battery overflow at ST, slot 2
                    for i_p1 in range(npts):
                        pp1 = i_p1 * step_p
                        if pp1 - alpha * d1 > ep[0] + 1e-12:
                            break
                        pt1 = ep[0] - pp1 + alpha * d1  # PT battery after slot 1
                        if pt1 > emax + 1e-12:
                            continue
                        r1p = math.log1p(hpp[0] * pp1 / (sigma2 + hsp[0] * ps1)) / LN2
                        for i_p2 in range(npts):
                            pp2 = i_p2 * step_p
                            if pp1 + pp2 - alpha * (d1 + d2) > ep_tot + 1e-12:
                                break
                            pt2 = ep_tot - pp1 - pp2 + alpha * (d1 + d2)
                            if pt2 > emax + 1e-12:
                                continue  # battery overflow at PT, slot 2
                            r2p = math.log1p(hpp[1] * pp2 / (sigma2 + hsp[1] * ps2)) / LN2
                            # strict: the incumbent is a true feasible point
                            if r1p + r2p < bp - 1e-9:
                                continue
                            val = (math.log1p(hss[0] * ps1 / (sigma2 + hps[0] * pp1))
                                   + math.log1p(hss[1] * ps2 / (sigma2 + hps[1] * pp2))) / LN2
                            if val > best:
                                best = val
                                out[0] = pp1
                                out[1] = pp2
                                out[2] = ps1
                                out[3] = ps2
                                out[4] = d1
                                out[5] = d2
                                found = True
    return found, out, best


def grid_search_n2(params: SystemParams, trace: Trace,
                   grid: GridSpec | None = None) -> GridResult:
    """Coarse scan of the six-dimensional N=2 decision box with prefix
    feasibility pruning; returns the incumbent."""
    if params.n_slots != 2 or len(trace) != 2:
        raise ValueError("grid_search_n2 requires n_slots=2")
    if grid is None:
        grid = GridSpec(points_per_axis=20)
    hpp, hps, hss, hsp = trace.gains()
    ep, es = trace.energies()
    found, x, bits = _grid_n2_nb(hpp, hps, hss, hsp, ep, es, params.sigma2,
                                 params.b_p, params.alpha, params.e_max,
                                 grid.points_per_axis)
    es_tot = float(es.sum())
    ep_tot = float(ep.sum()) + params.alpha * es_tot
    step_s = es_tot / (grid.points_per_axis - 1) if es_tot > 0 else 0.0
    step_p = ep_tot / (grid.points_per_axis - 1) if ep_tot > 0 else 0.0
    lip = float((hss.max() / params.sigma2
                 + hss.max() * hps.max() * es_tot / params.sigma2 ** 2) / LN2)
    # first-order estimate: one grid step of slack per decision variable;
    # constraint coupling near a tight rate boundary can exceed it, so the
    # N=2 comparisons gate on a rate ratio, not on this bound
    bound = 2.0 * (2 * step_s + 2 * step_p) * lip
    if not found:
        return GridResult(False, None, -math.inf, bound)
    policy = Policy(x[0:2], x[2:4], x[4:6])
    return GridResult(True, policy, bits, bound)


def independent_constraint_check(params: SystemParams, trace: Trace,
                                 policy: Policy,
                                 tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Literal re-evaluation of the constraints with plain loops; shares no
    helper with model.check_feasibility (differential-test counterpart)."""
    n = len(trace)
    if len(policy) != n:
        raise ValueError("policy length mismatch")

    worst_st_caus = 0.0
    worst_st_over = 0.0
    worst_pt_caus = 0.0
    worst_pt_over = 0.0
    harvested_s = 0.0
    harvested_p = 0.0
    spent_s = 0.0
    spent_p = 0.0
    total_rate = 0.0
    for j in range(n):
        s = trace.slots[j]
        harvested_s += s.e_s
        harvested_p += s.e_p
        spent_s += policy.p_s[j] + policy.delta_sp[j]
        spent_p += policy.p_p[j] - params.alpha * policy.delta_sp[j]
        left_s = harvested_s - spent_s
        left_p = harvested_p - spent_p
        if -left_s > worst_st_caus:
            worst_st_caus = -left_s
        if left_s - params.e_max > worst_st_over:
            worst_st_over = left_s - params.e_max
        if -left_p > worst_pt_caus:
            worst_pt_caus = -left_p
        if left_p - params.e_max > worst_pt_over:
            worst_pt_over = left_p - params.e_max
        sinr = s.h_pp * policy.p_p[j] / (params.sigma2 + s.h_sp * policy.p_s[j])
        total_rate += math.log(1.0 + sinr) / math.log(2.0)

    deficit = params.b_p - total_rate
    if deficit < 0.0:
        deficit = 0.0
    return FeasibilityReport(
        pu_rate_ok=deficit <= tol,
        pu_sum_rate=total_rate,
        pu_rate_deficit=deficit,
        st_causality_ok=worst_st_caus <= tol,
        st_causality_violation=worst_st_caus,
        st_overflow_ok=worst_st_over <= tol,
        st_overflow_violation=worst_st_over,
        pt_causality_ok=worst_pt_caus <= tol,
        pt_causality_violation=worst_pt_caus,
        pt_overflow_ok=worst_pt_over <= tol,
        pt_overflow_violation=worst_pt_over,
        tol=tol,
    )
