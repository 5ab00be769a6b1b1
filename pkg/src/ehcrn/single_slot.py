"""Exact solvers for the one-slot problem.

Maximize the SU rate subject to the PU rate floor and the two energy
budgets.  Without energy transfer the optimum has a closed form; transfer
is worthwhile exactly when the threshold zeta falls below 1, in which case
all three constraints bind and a 3x3 linear system gives the optimum.
The same problem in linear-fractional standard form feeds lp_core for an
independent cross-check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .lp_core import LpStatus, charnes_cooper, recover_x, simplex_solve
from .model import (SlotData, SystemParams, effective_budgets,
                    single_slot_feasible, su_rate, pu_rate)


class Mode(enum.Enum):
    NO_COOPERATION = "no-cooperation"
    COOPERATION = "cooperation"
    INFEASIBLE = "infeasible"


class ThresholdUndefined(ValueError):
    """Cooperation threshold is vacuous (omega = 0 or E'_s = 0)."""


class ConsistencyError(AssertionError):
    """Closed form and LP cross-check disagree beyond tolerance (bug trap)."""


@dataclass
class SingleSlotSolution:
    p_p: float
    p_s: float
    delta_sp: float
    su_bits: float
    mode: Mode
    zeta: float


@dataclass
class LfpStandardForm:
    """maximize (c.x + a)/(d.x + b) s.t. matrix_a x <= beta, x = [p_p, p_s, delta]."""

    matrix_a: np.ndarray  # 6x3
    beta: np.ndarray      # 6
    c: np.ndarray         # 3
    d: np.ndarray         # 3
    a_scalar: float
    b_scalar: float
    omega: float


def _require_single_slot(params: SystemParams):
    if params.n_slots != 1:
        raise ValueError(f"single-slot solver requires n_slots=1, got {params.n_slots}")


def cooperation_threshold(params: SystemParams, slot: SlotData) -> float:
    """zeta = (h_pp/(omega*h_sp)) * (E'_p - omega*sigma2/h_pp) / E'_s.

    Transfer is optimal iff zeta < 1.  Undefined when omega = 0 or
    E'_s = 0 (cooperation is then vacuous).
    """
    e_p_eff, e_s_eff = effective_budgets(params, slot)
    omega = params.omega
    if omega == 0.0 or e_s_eff == 0.0:
        raise ThresholdUndefined(
            f"threshold undefined for omega={omega}, E'_s={e_s_eff}")
    return (slot.h_pp / (omega * slot.h_sp)
            * (e_p_eff - omega * params.sigma2 / slot.h_pp) / e_s_eff)


def solve_no_cooperation(params: SystemParams, slot: SlotData) -> SingleSlotSolution:
    """Closed-form optimum with transfer disabled (delta_sp = 0).

    The PU constraint binds, pinning p_p to an affine function of p_s; the
    objective then increases in p_s, so p_s takes the smaller of the ST
    budget and the value at which PT's budget is exhausted.
    """
    _require_single_slot(params)
    e_p_eff, e_s_eff = effective_budgets(params, slot)
    omega = params.omega
    zeta = _zeta_or_inf(params, slot)

    if omega == 0.0:
        return _finish(params, slot, 0.0, e_s_eff, 0.0, Mode.NO_COOPERATION, zeta)

    if slot.h_pp * e_p_eff / params.sigma2 < omega:
        return SingleSlotSolution(0.0, 0.0, 0.0, 0.0, Mode.INFEASIBLE, zeta)

    bracket = slot.h_pp / (omega * slot.h_sp) * (e_p_eff - omega * params.sigma2 / slot.h_pp)
    p_s = max(0.0, min(bracket, e_s_eff))
    p_p = slot.h_sp / slot.h_pp * omega * p_s + omega * params.sigma2 / slot.h_pp
    return _finish(params, slot, p_p, p_s, 0.0, Mode.NO_COOPERATION, zeta)


def solve_cooperative_closed_form(params: SystemParams, slot: SlotData) -> SingleSlotSolution:
    """Optimum when zeta < 1: all three constraints bind and the solution
    solves

        -h_pp*p_p + omega*h_sp*p_s = -omega*sigma2
         p_p - alpha*delta         = E'_p
         p_s + delta               = E'_s
    """
    _require_single_slot(params)
    e_p_eff, e_s_eff = effective_budgets(params, slot)
    omega = params.omega
    zeta = _zeta_or_inf(params, slot)

    delta = ((omega * slot.h_sp * e_s_eff + omega * params.sigma2 - slot.h_pp * e_p_eff)
             / (params.alpha * slot.h_pp + omega * slot.h_sp))
    p_s = e_s_eff - delta
    p_p = e_p_eff + params.alpha * delta
    if delta < -1e-12 or p_s < -1e-12 or p_p < -1e-12:
        raise ConsistencyError(
            f"cooperative closed form produced negative values "
            f"(delta={delta}, p_s={p_s}, p_p={p_p}); preconditions violated")
    return _finish(params, slot, p_p, max(p_s, 0.0), max(delta, 0.0),
                   Mode.COOPERATION, zeta)


def build_lfp(params: SystemParams, slot: SlotData) -> LfpStandardForm:
    """Single-slot problem in linear-fractional standard form,
    maximize p_s/(sigma2 + h_ps*p_p) over the polyhedron A x <= beta."""
    _require_single_slot(params)
    e_p_eff, e_s_eff = effective_budgets(params, slot)
    omega = params.omega
    a = np.array([
        [-slot.h_pp, omega * slot.h_sp, 0.0],
        [1.0, 0.0, -params.alpha],
        [0.0, 1.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
    ])
    beta = np.array([-omega * params.sigma2, e_p_eff, e_s_eff, 0.0, 0.0, 0.0])
    return LfpStandardForm(
        matrix_a=a,
        beta=beta,
        c=np.array([0.0, 1.0, 0.0]),
        d=np.array([slot.h_ps, 0.0, 0.0]),
        a_scalar=0.0,
        b_scalar=params.sigma2,
        omega=omega,
    )


def solve_single_slot_lp(params: SystemParams, slot: SlotData) -> SingleSlotSolution:
    """Independent route: LFP standard form -> Charnes-Cooper LP -> simplex."""
    _require_single_slot(params)
    lfp = build_lfp(params, slot)
    sol = simplex_solve(charnes_cooper(lfp))
    zeta = _zeta_or_inf(params, slot)
    if sol.status is not LpStatus.OPTIMAL:
        return SingleSlotSolution(0.0, 0.0, 0.0, 0.0, Mode.INFEASIBLE, zeta)
    p_p, p_s, delta = np.maximum(recover_x(sol), 0.0)
    mode = Mode.COOPERATION if delta > 1e-9 else Mode.NO_COOPERATION
    return _finish(params, slot, p_p, p_s, delta, mode, zeta)


def solve_single_slot(params: SystemParams, slot: SlotData,
                      cross_check: bool = False) -> SingleSlotSolution:
    """Exact single-slot optimum: cooperative closed form when zeta < 1,
    otherwise the no-cooperation closed form.

    With cross_check=True the result is verified against the LP route;
    disagreement beyond 1e-6 bits raises ConsistencyError.
    """
    _require_single_slot(params)
    e_p_eff, e_s_eff = effective_budgets(params, slot)
    omega = params.omega

    if not single_slot_feasible(params, slot):
        result = SingleSlotSolution(0.0, 0.0, 0.0, 0.0, Mode.INFEASIBLE,
                                    _zeta_or_inf(params, slot))
    elif omega == 0.0 or e_s_eff == 0.0:
        # cooperation vacuous: keep all of E'_s for data, PT transmits the
        # minimum meeting the (possibly zero) rate floor
        p_p = omega * params.sigma2 / slot.h_pp if omega > 0.0 else 0.0
        result = _finish(params, slot, p_p, e_s_eff, 0.0,
                         Mode.NO_COOPERATION, _zeta_or_inf(params, slot))
    else:
        zeta = cooperation_threshold(params, slot)
        if zeta < 1.0:
            result = solve_cooperative_closed_form(params, slot)
        else:
            result = solve_no_cooperation(params, slot)

    if cross_check:
        lp_result = solve_single_slot_lp(params, slot)
        if (lp_result.mode is Mode.INFEASIBLE) != (result.mode is Mode.INFEASIBLE):
            raise ConsistencyError(
                f"LP feasibility {lp_result.mode} vs closed form {result.mode}")
        if result.mode is not Mode.INFEASIBLE and \
                abs(lp_result.su_bits - result.su_bits) > 1e-6:
            raise ConsistencyError(
                f"LP objective {lp_result.su_bits} vs closed form "
                f"{result.su_bits} differ beyond 1e-6 bits")
    return result


def _zeta_or_inf(params: SystemParams, slot: SlotData) -> float:
    try:
        return cooperation_threshold(params, slot)
    except ThresholdUndefined:
        return math.inf


def _finish(params, slot, p_p, p_s, delta, mode, zeta) -> SingleSlotSolution:
    bits = su_rate(slot, p_p, p_s, params.sigma2)
    return SingleSlotSolution(p_p, p_s, delta, bits, mode, zeta)
