"""Projected primal-dual subgradient solver for the N-slot problem.

The N-slot problem is non-convex, so the solver alternates projected
gradient descent on the primal variables (p_p, p_s, delta_sp) with
projected gradient ascent on the multipliers of the PU-rate, causality
and battery-overflow constraints, all clamped to the non-negative
orthant.  A deterministic repair pass restores prefix causality of the
final iterate, which a dual method does not guarantee.

The per-iteration math lives in numba kernels; sweeps run thousands of
solves and the horizon is tiny, so interpreter overhead would dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import (DEFAULT_TOL, FeasibilityReport, Policy, SystemParams,
                    Trace, check_feasibility, su_sum_rate)

LN2 = math.log(2.0)


@dataclass
class DualState:
    """Multipliers: mu for the PU-rate floor; lam/nu for ST causality and
    overflow; gamma/theta for PT causality and overflow."""

    mu: float
    lam: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "DualState":
        return cls(0.0, np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))


@dataclass
class SubgradientConfig:
    """Solver hyperparameters.

    Per-group step sizes default to beta_primal / beta_dual; epsilon is the
    L-infinity threshold on the primal step that stops the iteration.
    log_base_correction multiplies every rate-derived gradient term by
    1/ln(2), which makes the analytic gradients exact derivatives of the
    base-2 Lagrangian; disabling it reproduces a per-term rescaling that is
    absorbable into the step sizes.
    """

    beta_primal: float = 5e-4
    beta_dual: float = 2e-1
    epsilon: float = 1e-7
    max_iters: int = 200_000
    log_base_correction: bool = True
    diminishing: bool = False
    warm_start: bool = False
    #: return an exponential tail-average of the primal iterates instead of
    #: the last one; fixed-step iterates orbit the saddle, their average
    #: sits near it
    tail_average: bool = True
    avg_rate: float = 1e-4
    #: consecutive sub-epsilon primal steps required before declaring
    #: convergence; guards against a single small step stopping the loop
    #: while the duals are still drifting
    patience: int = 50
    #: complementary-slackness residual max_y y*|dL/dy| required for the
    #: primal-step test to count toward convergence
    comp_tol: float = 1e-6
    beta_p_p: float | None = None
    beta_p_s: float | None = None
    beta_delta: float | None = None
    beta_mu: float | None = None
    beta_lambda: float | None = None
    beta_nu: float | None = None
    beta_gamma: float | None = None
    beta_theta: float | None = None
    log_stride: int = 0  # 0 disables iteration logging

    def __post_init__(self):
        if self.beta_primal <= 0 or self.beta_dual <= 0:
            raise ValueError("step sizes must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    def step_sizes(self) -> np.ndarray:
        """[p_p, p_s, delta, mu, lambda, nu, gamma, theta] step sizes."""
        p, d = self.beta_primal, self.beta_dual
        return np.array([
            self.beta_p_p if self.beta_p_p is not None else p,
            self.beta_p_s if self.beta_p_s is not None else p,
            self.beta_delta if self.beta_delta is not None else p,
            self.beta_mu if self.beta_mu is not None else d,
            self.beta_lambda if self.beta_lambda is not None else d,
            self.beta_nu if self.beta_nu is not None else d,
            self.beta_gamma if self.beta_gamma is not None else d,
            self.beta_theta if self.beta_theta is not None else d,
        ])


@dataclass
class IterationLog:
    """Convergence diagnostics; arrays are sampled every log_stride iterations
    (empty when logging is disabled)."""

    iterations: int
    converged: bool
    iters: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    primal_delta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lagrangian: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pu_slack: np.ndarray = field(default_factory=lambda: np.zeros(0))
    worst_violation: np.ndarray = field(default_factory=lambda: np.zeros(0))


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _lagrangian_nb(hpp, hps, hss, hsp, ep, es, bp, alpha, emax, sigma2,
                   pp, ps, dd, mu, lam, nu, gam, th):
    n = pp.shape[0]
    val = 0.0
    for i in range(n):
        val -= math.log1p(hss[i] * ps[i] / (sigma2 + hps[i] * pp[i])) / LN2
    pu = 0.0
    for i in range(n):
        pu += math.log1p(hpp[i] * pp[i] / (sigma2 + hsp[i] * ps[i])) / LN2
    val += mu * (bp - pu)
    cons_s = 0.0
    cons_p = 0.0
    cum_es = 0.0
    cum_ep = 0.0
    for j in range(n):
        cons_s += ps[j] + dd[j]
        cons_p += pp[j] - alpha * dd[j]
        cum_es += es[j]
        cum_ep += ep[j]
        val += lam[j] * (cons_s - cum_es)
        val += nu[j] * (cum_es - emax - cons_s)
        val += gam[j] * (cons_p - cum_ep)
        val += th[j] * (cum_ep - emax - cons_p)
    return val


@njit(cache=True)
def _gradients_nb(hpp, hps, hss, hsp, ep, es, bp, alpha, emax, sigma2,
                  pp, ps, dd, mu, lam, nu, gam, th, corr):
    n = pp.shape[0]
    g_pp = np.empty(n)
    g_ps = np.empty(n)
    g_dd = np.empty(n)
    g_lam = np.empty(n)
    g_nu = np.empty(n)
    g_gam = np.empty(n)
    g_th = np.empty(n)

    # suffix sums of the multipliers
    s_lam = 0.0
    s_nu = 0.0
    s_gam = 0.0
    s_th = 0.0
    for i in range(n - 1, -1, -1):
        s_lam += lam[i]
        s_nu += nu[i]
        s_gam += gam[i]
        s_th += th[i]
        den_s = sigma2 + hps[i] * pp[i]
        tot_s = den_s + hss[i] * ps[i]
        den_p = sigma2 + hsp[i] * ps[i]
        tot_p = den_p + hpp[i] * pp[i]
        g_pp[i] = (corr * hss[i] * hps[i] * ps[i] / (tot_s * den_s)
                   + s_gam - s_th - corr * mu * hpp[i] / tot_p)
        g_ps[i] = (-corr * hss[i] / tot_s + s_lam - s_nu
                   + corr * mu * hpp[i] * hsp[i] * pp[i] / (tot_p * den_p))
        g_dd[i] = s_lam - s_nu - alpha * s_gam + alpha * s_th

    cons_s = 0.0
    cons_p = 0.0
    cum_es = 0.0
    cum_ep = 0.0
    pu = 0.0
    for j in range(n):
        cons_s += ps[j] + dd[j]
        cons_p += pp[j] - alpha * dd[j]
        cum_es += es[j]
        cum_ep += ep[j]
        g_lam[j] = cons_s - cum_es
        g_nu[j] = cum_es - emax - cons_s
        g_gam[j] = cons_p - cum_ep
        g_th[j] = cum_ep - emax - cons_p
        pu += math.log1p(hpp[j] * pp[j] / (sigma2 + hsp[j] * ps[j])) / LN2
    g_mu = bp - pu
    return g_pp, g_ps, g_dd, g_mu, g_lam, g_nu, g_gam, g_th


@njit(cache=True)
def _subgradient_loop_nb(hpp, hps, hss, hsp, ep, es, bp, alpha, emax, sigma2,
                         betas, eps, max_iters, patience, comp_tol,
                         diminishing, corr,
                         allow_transfer, avg_rate,
                         pp, ps, dd, mu, lam, nu, gam, th,
                         avg_pp, avg_ps, avg_dd,
                         log_stride, log_iters, log_dx, log_lag,
                         log_slack, log_viol):
    n = pp.shape[0]
    converged = False
    it = 0
    n_logged = 0
    quiet = 0
    for i in range(n):
        avg_pp[i] = pp[i]
        avg_ps[i] = ps[i]
        avg_dd[i] = dd[i]
    for it in range(max_iters):
        g_pp, g_ps, g_dd, g_mu, g_lam, g_nu, g_gam, g_th = _gradients_nb(
            hpp, hps, hss, hsp, ep, es, bp, alpha, emax, sigma2,
            pp, ps, dd, mu, lam, nu, gam, th, corr)

        scale = 1.0 / math.sqrt(it + 1.0) if diminishing else 1.0
        dx = 0.0
        for i in range(n):
            new_pp = max(pp[i] - scale * betas[0] * g_pp[i], 0.0)
            new_ps = max(ps[i] - scale * betas[1] * g_ps[i], 0.0)
            if allow_transfer:
                new_dd = max(dd[i] - scale * betas[2] * g_dd[i], 0.0)
            else:
                new_dd = 0.0
            dx = max(dx, abs(new_pp - pp[i]))
            dx = max(dx, abs(new_ps - ps[i]))
            dx = max(dx, abs(new_dd - dd[i]))
            pp[i] = new_pp
            ps[i] = new_ps
            dd[i] = new_dd
            if avg_rate > 0.0:
                avg_pp[i] += avg_rate * (new_pp - avg_pp[i])
                avg_ps[i] += avg_rate * (new_ps - avg_ps[i])
                avg_dd[i] += avg_rate * (new_dd - avg_dd[i])
        mu = max(mu + scale * betas[3] * g_mu, 0.0)
        for i in range(n):
            lam[i] = max(lam[i] + scale * betas[4] * g_lam[i], 0.0)
            nu[i] = max(nu[i] + scale * betas[5] * g_nu[i], 0.0)
            gam[i] = max(gam[i] + scale * betas[6] * g_gam[i], 0.0)
            th[i] = max(th[i] + scale * betas[7] * g_th[i], 0.0)

        if log_stride > 0 and it % log_stride == 0:
            log_iters[n_logged] = it
            log_dx[n_logged] = dx
            log_lag[n_logged] = _lagrangian_nb(
                hpp, hps, hss, hsp, ep, es, bp, alpha, emax, sigma2,
                pp, ps, dd, mu, lam, nu, gam, th)
            pu = 0.0
            for j in range(n):
                pu += math.log1p(hpp[j] * pp[j] / (sigma2 + hsp[j] * ps[j])) / LN2
            log_slack[n_logged] = pu - bp
            worst = 0.0
            cons_s = 0.0
            cons_p = 0.0
            cum_es = 0.0
            cum_ep = 0.0
            for j in range(n):
                cons_s += ps[j] + dd[j]
                cons_p += pp[j] - alpha * dd[j]
                cum_es += es[j]
                cum_ep += ep[j]
                worst = max(worst, cons_s - cum_es)
                worst = max(worst, cum_es - emax - cons_s)
                worst = max(worst, cons_p - cum_ep)
                worst = max(worst, cum_ep - emax - cons_p)
            log_viol[n_logged] = worst
            n_logged += 1

        # a frozen primal with multipliers still draining toward zero is
        # not a saddle point; require approximate complementary slackness
        # before trusting a small primal step
        comp = mu * abs(g_mu)
        for i in range(n):
            comp = max(comp, lam[i] * abs(g_lam[i]), nu[i] * abs(g_nu[i]),
                       gam[i] * abs(g_gam[i]), th[i] * abs(g_th[i]))
        if dx <= eps and comp <= comp_tol:
            quiet += 1
            if quiet >= patience:
                converged = True
                break
        else:
            quiet = 0
    return it + 1, converged, n_logged, mu


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def _unpack(params: SystemParams, trace: Trace):
    hpp, hps, hss, hsp = trace.gains()
    ep, es = trace.energies()
    return hpp, hps, hss, hsp, ep, es


def lagrangian(params: SystemParams, trace: Trace, policy: Policy,
               duals: DualState) -> float:
    """L(X, Y): negated SU sum rate plus multiplier-weighted constraint
    slacks (rate floor, prefix causality and prefix overflow at both
    transmitters)."""
    hpp, hps, hss, hsp, ep, es = _unpack(params, trace)
    return float(_lagrangian_nb(
        hpp, hps, hss, hsp, ep, es, params.b_p, params.alpha, params.e_max,
        params.sigma2, policy.p_p, policy.p_s, policy.delta_sp,
        duals.mu, duals.lam, duals.nu, duals.gamma, duals.theta))


def gradients(params: SystemParams, trace: Trace, policy: Policy,
              duals: DualState, log_base_correction: bool = True):
    """All partials of the Lagrangian.

    Returns ((g_p_p, g_p_s, g_delta), (g_mu, g_lambda, g_nu, g_gamma,
    g_theta)).  With log_base_correction these are exact derivatives of
    lagrangian(); without it the 1/ln2 factors on rate terms are dropped.
    """
    hpp, hps, hss, hsp, ep, es = _unpack(params, trace)
    corr = 1.0 / LN2 if log_base_correction else 1.0
    g_pp, g_ps, g_dd, g_mu, g_lam, g_nu, g_gam, g_th = _gradients_nb(
        hpp, hps, hss, hsp, ep, es, params.b_p, params.alpha, params.e_max,
        params.sigma2, policy.p_p, policy.p_s, policy.delta_sp,
        duals.mu, duals.lam, duals.nu, duals.gamma, duals.theta, corr)
    return (g_pp, g_ps, g_dd), (float(g_mu), g_lam, g_nu, g_gam, g_th)


def warm_start_policy(params: SystemParams, trace: Trace) -> Policy:
    """Feasible-leaning heuristic start: uniform power totals, no transfer."""
    n = len(trace)
    ep, es = trace.energies()
    p_p = np.full(n, min(ep.sum() / n, ep[0]))
    p_s = np.full(n, min(es.sum() / n, es[0]))
    return Policy(p_p, p_s, np.zeros(n))


def solve_subgradient(params: SystemParams, trace: Trace,
                      config: SubgradientConfig | None = None,
                      initial: Policy | None = None,
                      allow_transfer: bool = True,
                      ) -> tuple[Policy, DualState, IterationLog]:
    """Run the projected primal-dual iteration until the primal step falls
    below epsilon (L-infinity) or max_iters is reached.

    Non-convergence is reported through IterationLog.converged, not raised.
    allow_transfer=False freezes delta_sp at zero (the no-cooperation arm).
    """
    if config is None:
        config = SubgradientConfig()
    n = len(trace)
    if initial is None:
        initial = warm_start_policy(params, trace) if config.warm_start \
            else Policy.zeros(n)
    if len(initial) != n:
        raise ValueError("initial policy length mismatch")

    hpp, hps, hss, hsp, ep, es = _unpack(params, trace)
    pp = initial.p_p.copy()
    ps = initial.p_s.copy()
    dd = initial.delta_sp.copy() if allow_transfer else np.zeros(n)
    lam = np.zeros(n)
    nu = np.zeros(n)
    gam = np.zeros(n)
    th = np.zeros(n)

    stride = max(0, config.log_stride)
    n_slots_log = config.max_iters // stride + 1 if stride > 0 else 0
    log_iters = np.zeros(n_slots_log, dtype=np.int64)
    log_dx = np.zeros(n_slots_log)
    log_lag = np.zeros(n_slots_log)
    log_slack = np.zeros(n_slots_log)
    log_viol = np.zeros(n_slots_log)

    corr = 1.0 / LN2 if config.log_base_correction else 1.0
    avg_rate = config.avg_rate if config.tail_average else 0.0
    avg_pp = np.zeros(n)
    avg_ps = np.zeros(n)
    avg_dd = np.zeros(n)
    iters, converged, n_logged, mu = _subgradient_loop_nb(
        hpp, hps, hss, hsp, ep, es, params.b_p, params.alpha, params.e_max,
        params.sigma2, config.step_sizes(), config.epsilon, config.max_iters,
        config.patience, config.comp_tol, config.diminishing, corr,
        allow_transfer, avg_rate,
        pp, ps, dd, 0.0, lam, nu, gam, th,
        avg_pp, avg_ps, avg_dd,
        stride, log_iters, log_dx, log_lag, log_slack, log_viol)

    policy = Policy(avg_pp, avg_ps, avg_dd) if config.tail_average \
        else Policy(pp, ps, dd)
    duals = DualState(mu, lam, nu, gam, th)
    log = IterationLog(
        iterations=iters, converged=converged,
        iters=log_iters[:n_logged], primal_delta=log_dx[:n_logged],
        lagrangian=log_lag[:n_logged], pu_slack=log_slack[:n_logged],
        worst_violation=log_viol[:n_logged])
    return policy, duals, log


def repair_and_verify(params: SystemParams, trace: Trace, policy: Policy,
                      tol: float = DEFAULT_TOL, allow_transfer: bool = True,
                      ) -> tuple[Policy, FeasibilityReport]:
    """Deterministic feasibility repair followed by a check.

    Slots are swept in order; in each slot delta_sp is clipped first and
    p_s second to restore ST prefix causality, then p_p is clipped against
    PT's prefix budget (which includes received transfers).  Battery
    overflow (under-consumption) is repaired by raising p_s / p_p in the
    overflowing slot, which cannot break causality.  Finally, if the PU
    sum rate falls short of b_p, p_p is raised greedily within the
    remaining PT prefix headroom, best marginal rate gain first.

    Already-feasible policies are returned unchanged.
    """
    ep, es = trace.energies()
    hpp = np.array([s.h_pp for s in trace.slots])
    hsp = np.array([s.h_sp for s in trace.slots])
    p_p = policy.p_p.copy()
    p_s = policy.p_s.copy()
    dd = policy.delta_sp.copy()
    n = len(policy)

    used_s = 0.0
    used_p = 0.0
    cum_ep = 0.0
    cum_es = 0.0
    recv = 0.0
    for i in range(n):
        cum_es += es[i]
        cum_ep += ep[i]
        budget_s = max(0.0, cum_es - used_s)
        excess = p_s[i] + dd[i] - budget_s
        if excess > 0.0:
            cut = min(dd[i], excess)
            dd[i] -= cut
            excess -= cut
            p_s[i] = max(0.0, p_s[i] - excess)
        # ST battery overflow: stored energy above e_max must be consumed
        stored_s = cum_es - used_s - p_s[i] - dd[i]
        if stored_s > params.e_max:
            p_s[i] += stored_s - params.e_max
        used_s += p_s[i] + dd[i]

        recv += params.alpha * dd[i]
        budget_p = max(0.0, cum_ep + recv - used_p)
        p_p[i] = min(p_p[i], budget_p)
        stored_p = cum_ep + recv - used_p - p_p[i]
        if stored_p > params.e_max:
            p_p[i] += stored_p - params.e_max
        used_p += p_p[i]

    _restore_pu_rate(params, trace, p_p, p_s, dd, hpp, hsp, ep)
    if allow_transfer:
        if params.alpha > 0.0:
            _top_up_transfer(params, trace, p_p, p_s, dd, hpp, hsp, ep, es)
        _shift_ps_to_transfer(params, p_p, p_s, dd, hpp, hsp)
    _spend_rate_slack(params, trace, p_p, p_s, dd)
    if allow_transfer:
        _exploit_st_slack(params, trace, p_p, p_s, dd)
        _unwind_transfer(params, trace, p_p, p_s, dd)
    # the improvement stages work to float precision; shave off any
    # negative rounding dust before the policy's domain validation
    np.maximum(p_p, 0.0, out=p_p)
    np.maximum(p_s, 0.0, out=p_s)
    np.maximum(dd, 0.0, out=dd)
    repaired = Policy(p_p, p_s, dd)
    return repaired, check_feasibility(params, trace, repaired, tol=tol)


def candidate_starts(params: SystemParams, trace: Trace,
                     allow_transfer: bool = True) -> list[Policy]:
    """Deterministic initial points for the multi-start solve: the origin,
    the uniform warm start, and one start per slot that concentrates the
    whole PT power budget in that slot (the non-convex landscape has local
    optima where the PU rate is earned in a single good slot)."""
    n = len(trace)
    ep, es = trace.energies()
    starts = [Policy.zeros(n), warm_start_policy(params, trace)]
    total_p = float(ep.sum())
    if allow_transfer:
        total_p += params.alpha * float(es.sum())
    dd = es * 0.25 if allow_transfer else np.zeros(n)
    for k in range(n):
        p_p = np.zeros(n)
        p_p[k] = total_p
        starts.append(Policy(p_p, es * 0.5, dd.copy()))
    return starts


def solve_multi_start(params: SystemParams, trace: Trace,
                      config: SubgradientConfig | None = None,
                      allow_transfer: bool = True,
                      ) -> tuple[Policy, FeasibilityReport]:
    """Run the subgradient solver from every candidate start, repair each
    endpoint, and keep the feasible policy with the most SU bits (falling
    back to the first repaired policy when none passes the check)."""
    best: tuple[Policy, FeasibilityReport] | None = None
    best_bits = -math.inf
    for initial in candidate_starts(params, trace, allow_transfer):
        policy, _, _ = solve_subgradient(params, trace, config,
                                         initial=initial,
                                         allow_transfer=allow_transfer)
        policy, report = repair_and_verify(params, trace, policy,
                                           allow_transfer=allow_transfer)
        bits = su_sum_rate(params, trace, policy)
        if best is None:
            best, best_bits = (policy, report), bits
            continue
        if report.all_ok and (not best[1].all_ok or bits > best_bits):
            best, best_bits = (policy, report), bits
    return best


def _top_up_transfer(params, trace, p_p, p_s, dd, hpp, hsp, ep, es):
    """If the PU rate still falls short, convert leftover ST energy into
    extra transfer (raising delta_sp within ST prefix slack) and retry the
    p_p raise with the enlarged PT budget."""
    rates = sum(math.log1p(hpp[i] * p_p[i]
                           / (params.sigma2 + hsp[i] * p_s[i])) / LN2
                for i in range(len(p_p)))
    if params.b_p - rates <= 0.0:
        return
    n = len(dd)
    st_slack = np.cumsum(es) - np.cumsum(p_s + dd)
    added = np.zeros(n)
    for i in range(n):
        spare = float(st_slack[i:].min())
        if spare > 0.0:
            dd[i] += spare
            added[i] = spare
            st_slack[i:] -= spare
    _restore_pu_rate(params, trace, p_p, p_s, dd, hpp, hsp, ep)
    # trim the transfer back to what the p_p raise actually consumed, so
    # the extra energy neither overflows the PT battery nor reads as waste
    stored_p = (np.cumsum(ep) + params.alpha * np.cumsum(dd) - np.cumsum(p_p))
    for i in range(n - 1, -1, -1):
        if added[i] <= 0.0:
            continue
        trim = min(added[i], float(stored_p[i:].min()) / params.alpha)
        if trim > 0.0:
            dd[i] -= trim
            stored_p[i:] -= params.alpha * trim


def _unwind_transfer(params, trace, p_p, p_s, dd):
    """Trade excess transfer back for SU power while the PU rate allows.

    Moving t from delta_sp[i] to p_s[i] and dropping p_p[i] by alpha*t
    leaves both transmitters' per-slot consumption unchanged, so all
    energy constraints are untouched; the SU rate strictly improves and
    only the PU-rate surplus limits the move.
    """
    n = len(trace)
    hpp, hps, hss, hsp = trace.gains()
    rates = np.array([math.log1p(hpp[i] * p_p[i]
                                 / (params.sigma2 + hsp[i] * p_s[i]))
                      for i in range(n)]) / LN2
    surplus = rates.sum() - params.b_p
    if surplus <= 1e-12:
        return

    def slot_rate(i, t):
        return math.log1p(
            hpp[i] * (p_p[i] - params.alpha * t)
            / (params.sigma2 + hsp[i] * (p_s[i] + t))) / LN2

    for i in range(n):
        if dd[i] <= 1e-15:
            continue
        t_max = dd[i]
        if params.alpha > 0.0:
            t_max = min(t_max, p_p[i] / params.alpha)
        if t_max <= 0.0:
            continue
        if rates[i] - slot_rate(i, t_max) <= surplus:
            t = t_max
        else:
            lo, hi = 0.0, t_max
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if rates[i] - slot_rate(i, mid) > surplus:
                    hi = mid
                else:
                    lo = mid
            t = lo
        if t <= 0.0:
            continue
        surplus -= rates[i] - slot_rate(i, t)
        dd[i] -= t
        p_s[i] += t
        p_p[i] -= params.alpha * t
        rates[i] = math.log1p(hpp[i] * p_p[i]
                              / (params.sigma2 + hsp[i] * p_s[i])) / LN2
        if surplus <= 1e-12:
            return


def _spend_rate_slack(params, trace, p_p, p_s, dd):
    """Raise p_s into leftover ST energy while the PU sum rate sits above
    B_p, best marginal SU gain first.

    Raising p_s only adds interference at PR, so the move is bounded by
    the current rate surplus; causality is bounded by the suffix of ST
    prefix slacks; no other constraint is touched.
    """
    n = len(trace)
    hpp, hps, hss, hsp = trace.gains()
    ep, es = trace.energies()
    rates = np.array([math.log1p(hpp[i] * p_p[i]
                                 / (params.sigma2 + hsp[i] * p_s[i]))
                      for i in range(n)]) / LN2
    surplus = rates.sum() - params.b_p
    if surplus <= 1e-12:
        return
    st_slack = np.cumsum(es) - np.cumsum(p_s + dd)
    marginal = hss / (params.sigma2 + hps * p_p)
    for i in sorted(range(n), key=lambda j: -marginal[j]):
        spare = float(st_slack[i:].min())
        if spare <= 1e-12:
            continue
        if hsp[i] <= 0.0 or p_p[i] <= 0.0:
            t = spare  # this slot's PU rate is unaffected by p_s
        else:
            # lowest PU rate this slot may fall to
            floor = rates[i] - surplus
            sinr_floor = 2.0 ** max(floor, 0.0) - 1.0
            if sinr_floor <= 0.0:
                t = spare
            else:
                t = min(spare, (hpp[i] * p_p[i] / sinr_floor - params.sigma2)
                        / hsp[i] - p_s[i])
        if t <= 0.0:
            continue
        p_s[i] += t
        st_slack[i:] -= t
        new_rate = math.log1p(hpp[i] * p_p[i]
                              / (params.sigma2 + hsp[i] * p_s[i])) / LN2
        surplus -= rates[i] - new_rate
        rates[i] = new_rate
        if surplus <= 1e-12:
            return


def _exploit_st_slack(params, trace, p_p, p_s, dd):
    """Spend leftover ST energy along the constraint-preserving direction.

    In slot i, raising delta_sp by t, p_p by alpha*t and p_s by
    delta = alpha*t*(sigma2 + h_sp*p_s)/(h_sp*p_p) keeps the slot's PU
    SINR (hence the PU sum rate) exactly constant, adds t + delta to ST
    consumption and alpha*t to both sides of the PT balance, so every
    prefix constraint is preserved.  The move is kept only when it
    raises the SU rate; whether it does depends on the link ratios, the
    same trade-off that decides cooperation in the first place.
    """
    n = len(trace)
    hpp, hps, hss, hsp = trace.gains()
    ep, es = trace.energies()
    slack = np.cumsum(es) - np.cumsum(p_s + dd)
    for i in range(n):
        spare = float(slack[i:].min())
        if spare <= 1e-12:
            continue
        s = trace.slots[i]

        def su(ps, pp):
            return math.log1p(s.h_ss * ps / (params.sigma2 + s.h_ps * pp))

        if p_p[i] <= 1e-12:
            # a silent PT slot contributes zero PU rate regardless of
            # interference, so leftover energy can go straight into p_s
            p_s[i] += spare
            slack[i:] -= spare
            continue
        if params.alpha <= 0.0 or s.h_sp <= 0.0:
            continue
        # t + delta(t) = spare
        c = params.alpha * (params.sigma2 + s.h_sp * p_s[i]) / (s.h_sp * p_p[i])
        t = spare / (1.0 + c)
        gain = su(p_s[i] + c * t, p_p[i] + params.alpha * t) - su(p_s[i], p_p[i])
        if gain <= 0.0:
            continue
        dd[i] += t
        p_p[i] += params.alpha * t
        p_s[i] += c * t
        slack[i:] -= spare


def _shift_ps_to_transfer(params, p_p, p_s, dd, hpp, hsp):
    """Last resort for a residual PU-rate deficit with no spare energy:
    move t from p_s[i] to delta_sp[i] and add alpha*t to p_p[i].

    Total consumption in the slot is unchanged on both sides, so every
    prefix causality and overflow constraint is preserved exactly, while
    the slot's PU rate strictly increases (less interference, more
    primary power).  t is found by bisection per slot, best marginal
    rate gain first.
    """
    n = p_p.shape[0]
    rates = np.array([math.log1p(hpp[i] * p_p[i]
                                 / (params.sigma2 + hsp[i] * p_s[i]))
                      for i in range(n)]) / LN2
    deficit = params.b_p - rates.sum()
    if deficit <= 0.0:
        return

    def slot_rate(i, t):
        return math.log1p(hpp[i] * (p_p[i] + params.alpha * t)
                          / (params.sigma2 + hsp[i] * (p_s[i] - t))) / LN2

    marginal = (hpp * params.alpha * (params.sigma2 + hsp * p_s)
                + hpp * p_p * hsp) / (params.sigma2 + hsp * p_s)
    for i in sorted(range(n), key=lambda j: -marginal[j]):
        if p_s[i] <= 0.0:
            continue
        gain_full = slot_rate(i, p_s[i]) - rates[i]
        if gain_full <= deficit:
            t = p_s[i]
        else:
            lo, hi = 0.0, p_s[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if slot_rate(i, mid) - rates[i] < deficit:
                    lo = mid
                else:
                    hi = mid
            t = hi
        deficit -= slot_rate(i, t) - rates[i]
        p_p[i] += params.alpha * t
        p_s[i] -= t
        dd[i] += t
        rates[i] = math.log1p(hpp[i] * p_p[i]
                              / (params.sigma2 + hsp[i] * p_s[i])) / LN2
        if deficit <= 1e-12:
            return


def _restore_pu_rate(params, trace, p_p, p_s, dd, hpp, hsp, ep):
    """Raise p_p within the PT prefix headroom until the PU sum rate meets
    b_p, taking slots in order of marginal rate gain."""
    n = p_p.shape[0]
    rates = np.array([math.log1p(hpp[i] * p_p[i]
                                 / (params.sigma2 + hsp[i] * p_s[i])) / LN2
                      for i in range(n)])
    deficit = params.b_p - rates.sum()
    if deficit <= 0.0:
        return
    # slack of each prefix constraint; raising p_p[i] consumes slack at
    # every prefix j >= i
    prefix_slack = (np.cumsum(ep) + params.alpha * np.cumsum(dd)
                    - np.cumsum(p_p))
    marginal = hpp / (params.sigma2 + hsp * p_s + hpp * p_p)
    for i in sorted(range(n), key=lambda j: -marginal[j]):
        headroom = float(prefix_slack[i:].min())
        if headroom <= 0.0:
            continue
        den = params.sigma2 + hsp[i] * p_s[i]
        # p_p needed to absorb the whole deficit in this slot alone
        target = (2.0 ** (rates[i] + deficit) - 1.0) * den / hpp[i]
        raise_by = min(headroom, target - p_p[i])
        if raise_by <= 0.0:
            continue
        p_p[i] += raise_by
        prefix_slack[i:] -= raise_by
        new_rate = math.log1p(hpp[i] * p_p[i] / den) / LN2
        deficit -= new_rate - rates[i]
        rates[i] = new_rate
        if deficit <= 1e-12:
            return
