"""Acceptance gate: ten numbered criteria, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  Criteria 1/2 share one 1000-instance batch;
criterion 9 is the long pole (three 500-trial multi-slot sweeps).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pytest

from ehcrn.cli import main as cli_main
from ehcrn.experiments import (EnergyProfile, REGIMES, SweepConfig, run_sweep)
from ehcrn.model import (Policy, SlotData, SystemParams, Trace, pu_rate,
                         su_sum_rate)
from ehcrn.multi_slot import (DualState, SubgradientConfig, gradients,
                              lagrangian, solve_multi_start)
from ehcrn.oracle import (GridSpec, grid_search_n1, grid_search_n2,
                          independent_constraint_check)
from ehcrn.single_slot import (Mode, solve_no_cooperation, solve_single_slot,
                               solve_single_slot_lp)

REPO = Path(__file__).resolve().parent.parent


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------------------
# shared instance batch for criteria 1 and 2
# ---------------------------------------------------------------------------

@dataclass
class _BatchRow:
    params: SystemParams
    slot: SlotData
    closed: object
    lp: object
    grid: object


_BATCH: list[_BatchRow] | None = None
_BATCH_SECONDS: float = 0.0


def _draw_single_slot(rng) -> tuple[SystemParams, SlotData]:
    params = SystemParams(
        alpha=float(rng.uniform(0.0, 1.0)), e_max=10.0, sigma2=0.1,
        b_p=float(rng.uniform(0.5, 3.0)), n_slots=1)
    h = rng.exponential(0.1, 4)
    slot = SlotData(h_pp=float(h[0]), h_ps=float(h[1]), h_ss=float(h[2]),
                    h_sp=float(h[3]), e_p=float(rng.uniform(0.1, 2.0)),
                    e_s=float(rng.uniform(0.1, 2.0)))
    return params, slot


def _criterion1_batch() -> tuple[list[_BatchRow], float]:
    """1000 random feasible single-slot instances with closed form, LP and
    400-point grid-oracle solutions side by side."""
    global _BATCH, _BATCH_SECONDS
    if _BATCH is not None:
        return _BATCH, _BATCH_SECONDS
    rng = np.random.default_rng(20260824)
    rows: list[_BatchRow] = []
    t0 = time.monotonic()
    while len(rows) < 1000:
        params, slot = _draw_single_slot(rng)
        closed = solve_single_slot(params, slot)
        if closed.mode is Mode.INFEASIBLE:
            continue
        lp = solve_single_slot_lp(params, slot)
        grid = grid_search_n1(params, slot, GridSpec(points_per_axis=400))
        rows.append(_BatchRow(params, slot, closed, lp, grid))
    _BATCH, _BATCH_SECONDS = rows, time.monotonic() - t0
    return _BATCH, _BATCH_SECONDS


def test_criterion_01_triple_agreement():
    rows, seconds = _criterion1_batch()
    worst_lp_gap = 0.0
    worst_grid_margin = -math.inf
    bad = 0
    for r in rows:
        lp_gap = abs(r.closed.su_bits - r.lp.su_bits)
        worst_lp_gap = max(worst_lp_gap, lp_gap)
        margin = r.grid.su_bits - r.grid.error_bound - r.closed.su_bits
        worst_grid_margin = max(worst_grid_margin, margin)
        if lp_gap > 1e-6 or margin > 1e-9:
            bad += 1
    ok = bad == 0 and seconds < 300.0
    _report(1, ok,
            f"1000 feasible instances, max |closed-LP| = {worst_lp_gap:.3g} "
            f"bits (tol 1e-6), worst (oracle - bound - closed) = "
            f"{worst_grid_margin:.3g} (tol 1e-9), {seconds:.1f}s (< 300s)")


def test_criterion_02_threshold_law():
    rows, _ = _criterion1_batch()
    checked = 0
    violations = 0
    for r in rows:
        if r.params.omega <= 0.0:
            continue
        checked += 1
        transfers = r.closed.delta_sp > 0.0
        if transfers != (r.closed.zeta < 1.0):
            violations += 1
    _report(2, violations == 0 and checked > 0,
            f"delta*>0 iff zeta<1 on {checked} instances with omega>0, "
            f"{violations} violations (zero allowed)")


def test_criterion_03_hand_check():
    params = SystemParams(alpha=1.0, e_max=10.0, sigma2=0.1, b_p=1.0, n_slots=1)
    slot = SlotData(h_pp=1.0, h_ps=1.0, h_ss=1.0, h_sp=1.0, e_p=0.6, e_s=1.0)
    sol = solve_single_slot(params, slot, cross_check=True)
    rate = pu_rate(slot, sol.p_p, sol.p_s, params.sigma2)
    errs = (abs(sol.delta_sp - 0.25), abs(sol.p_s - 0.75),
            abs(sol.p_p - 0.85), abs(rate - 1.0))
    ok = sol.mode is Mode.COOPERATION and max(errs) <= 1e-9
    _report(3, ok,
            f"delta={sol.delta_sp:.12f} p_s={sol.p_s:.12f} p_p={sol.p_p:.12f} "
            f"PU rate={rate:.12f}; max error {max(errs):.3g} (tol 1e-9)")


def test_criterion_04_gradient_gate():
    rng = np.random.default_rng(4)
    h = 1e-6
    worst = 0.0
    bad = 0
    t0 = time.monotonic()
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        params = SystemParams(
            alpha=float(rng.uniform(0.0, 1.0)),
            e_max=float(rng.uniform(1.0, 8.0)), sigma2=0.1,
            b_p=float(rng.uniform(0.5, 3.0)), n_slots=n)
        trace = Trace(tuple(
            SlotData(*(float(v) for v in rng.uniform(0.05, 1.5, 4)),
                     e_p=float(rng.uniform(0.5, 2.0)),
                     e_s=float(rng.uniform(0.5, 2.0)))
            for _ in range(n)))
        policy = Policy(rng.uniform(0.05, 1.5, n), rng.uniform(0.05, 1.5, n),
                        rng.uniform(0.0, 0.5, n))
        duals = DualState(float(rng.uniform(0.0, 2.0)), rng.uniform(0.0, 2.0, n),
                          rng.uniform(0.0, 2.0, n), rng.uniform(0.0, 2.0, n),
                          rng.uniform(0.0, 2.0, n))
        (g_pp, g_ps, g_dd), (g_mu, g_lam, g_nu, g_gam, g_th) = gradients(
            params, trace, policy, duals)

        def fd(bump) -> float:
            lo = lagrangian(params, trace, *bump(-h))
            hi = lagrangian(params, trace, *bump(+h))
            return (hi - lo) / (2.0 * h)

        def vec_bump(attr, i):
            def bump(eps):
                arr = getattr(policy, attr).copy()
                arr[i] += eps
                return replace(policy, **{attr: arr}), duals
            return bump

        def dual_bump(attr, i):
            def bump(eps):
                if attr == "mu":
                    return policy, replace(duals, mu=duals.mu + eps)
                arr = getattr(duals, attr).copy()
                arr[i] += eps
                return policy, replace(duals, **{attr: arr})
            return bump

        pairs = [(g_mu, dual_bump("mu", 0))]
        for i in range(n):
            pairs += [(g_pp[i], vec_bump("p_p", i)),
                      (g_ps[i], vec_bump("p_s", i)),
                      (g_dd[i], vec_bump("delta_sp", i)),
                      (g_lam[i], dual_bump("lam", i)),
                      (g_nu[i], dual_bump("nu", i)),
                      (g_gam[i], dual_bump("gamma", i)),
                      (g_th[i], dual_bump("theta", i))]
        for grad, bump in pairs:
            err = abs(grad - fd(bump))
            tol = max(1e-6, 1e-4 * abs(grad))
            worst = max(worst, err / tol)
            if err > tol:
                bad += 1
    seconds = time.monotonic() - t0
    _report(4, bad == 0,
            f"analytic vs central-FD partials at 1000 points, "
            f"{bad} out-of-tolerance, worst err/tol = {worst:.3g}, "
            f"{seconds:.1f}s")


def test_criterion_05_n1_subgradient():
    rng = np.random.default_rng(123)
    ratios = []
    infeasible = 0
    while len(ratios) < 100:
        params, slot = _draw_single_slot(rng)
        params = replace(params, e_max=5.0)
        exact = solve_single_slot(params, slot)
        if exact.mode is Mode.INFEASIBLE or exact.su_bits < 0.05:
            continue
        trace = Trace((slot,))
        policy, report = solve_multi_start(params, trace)
        if not report.all_ok:
            infeasible += 1
            ratios.append(0.0)
            continue
        ratios.append(su_sum_rate(params, trace, policy) / exact.su_bits)
    ok = min(ratios) >= 0.98 and infeasible == 0
    _report(5, ok,
            f"repaired subgradient vs exact single-slot on 100 instances: "
            f"min ratio {min(ratios):.4f} (>= 0.98), mean "
            f"{float(np.mean(ratios)):.4f}, {infeasible} infeasible repairs")


def test_criterion_06_n2_oracle_gate():
    rng = np.random.default_rng(6)
    t0 = time.monotonic()
    ratios = []
    indep_fail = 0
    while len(ratios) < 20:
        params = SystemParams(
            alpha=float(rng.uniform(0.0, 1.0)), e_max=5.0, sigma2=0.1,
            b_p=float(rng.uniform(0.5, 3.0)), n_slots=2)
        slots = []
        for _ in range(2):
            h = rng.exponential(0.1, 4)
            slots.append(SlotData(float(h[0]), float(h[1]), float(h[2]),
                                  float(h[3]), float(rng.uniform(0.1, 2.0)),
                                  float(rng.uniform(0.1, 2.0))))
        trace = Trace(tuple(slots))
        res = grid_search_n2(params, trace, GridSpec(points_per_axis=20))
        if not res.feasible or res.su_bits < 0.05:
            continue
        policy, _ = solve_multi_start(params, trace)
        if not independent_constraint_check(params, trace, policy).all_ok:
            indep_fail += 1
        bits = su_sum_rate(params, trace, policy)
        ratios.append(bits / res.su_bits if res.su_bits > 0 else 1.0)
    seconds = time.monotonic() - t0
    ok = min(ratios) >= 0.90 and indep_fail == 0 and seconds < 900.0
    _report(6, ok,
            f"20 N=2 instances: min solver/oracle ratio {min(ratios):.4f} "
            f"(>= 0.90), {indep_fail} independent-check failures, "
            f"{seconds:.1f}s (< 900s)")


ALPHAS = (0.4, 0.6, 0.8, 1.0)


def test_criterion_07_fig2_trend():
    rng = np.random.default_rng(7)
    kept = 0
    dominance_bad = 0
    monotone_bad = 0
    for _ in range(300):
        h = rng.exponential(0.1, 4)
        slot = SlotData(float(h[0]), float(h[1]), float(h[2]), float(h[3]),
                        e_p=float(rng.uniform(0.1, 1.0)),
                        e_s=float(rng.uniform(0.5, 2.0)))
        coop_bits = []
        nocoop_bits = []
        usable = True
        for a in ALPHAS:
            params = SystemParams(alpha=a, e_max=10.0, sigma2=0.1, b_p=1.0,
                                  n_slots=1)
            sol = solve_single_slot(params, slot)
            ref = solve_no_cooperation(params, slot)
            if sol.mode is not Mode.COOPERATION or ref.mode is Mode.INFEASIBLE:
                usable = False
                break
            coop_bits.append(sol.su_bits)
            nocoop_bits.append(ref.su_bits)
        if not usable:
            continue
        kept += 1
        if any(c <= nc for c, nc in zip(coop_bits, nocoop_bits)):
            dominance_bad += 1
        if any(b < a for a, b in zip(coop_bits, coop_bits[1:])):
            monotone_bad += 1
    ok = kept >= 30 and dominance_bad == 0 and monotone_bad == 0
    _report(7, ok,
            f"{kept} cooperative trials over alpha {ALPHAS}: "
            f"{dominance_bad} dominance violations, {monotone_bad} "
            f"monotonicity violations (zero tolerance)")


def test_criterion_08_fig5_trend():
    rng = np.random.default_rng(8)
    base = SystemParams(alpha=1.0, e_max=10.0, sigma2=0.1, b_p=1.0, n_slots=1)
    grids = {
        "e_p": ((0.2, 0.4, 0.6, 0.8), -1),    # delta decreasing
        "alpha": ((0.4, 0.6, 0.8, 1.0), -1),  # delta decreasing
        "b_p": ((0.5, 1.0, 1.5, 2.0), +1),    # delta increasing
    }
    checked = 0
    violations = 0
    for _ in range(200):
        h = rng.exponential(0.1, 4)
        gains = (float(h[0]), float(h[1]), float(h[2]), float(h[3]))
        e_s = float(rng.uniform(0.5, 2.0))
        base_e_p = float(rng.uniform(0.2, 1.0))
        for axis, (grid, direction) in grids.items():
            deltas = []
            for v in grid:
                params, e_p = base, base_e_p
                if axis == "e_p":
                    e_p = v
                else:
                    params = replace(base, **{axis: v})
                slot = SlotData(*gains, e_p=e_p, e_s=e_s)
                sol = solve_single_slot(params, slot)
                deltas.append(sol.delta_sp
                              if sol.mode is Mode.COOPERATION else None)
            for a, b in zip(deltas, deltas[1:]):
                if a is None or b is None:
                    continue  # ordering asserted on zeta<1 pairs only
                checked += 1
                if direction * (b - a) < -1e-12:
                    violations += 1
    _report(8, violations == 0 and checked > 500,
            f"delta* ordering on {checked} adjacent cooperative grid pairs "
            f"(decreasing in e_p and alpha, increasing in b_p): "
            f"{violations} violations (zero allowed)")


REF_N4 = dict(
    params=SystemParams(alpha=0.8, e_max=6.0, sigma2=0.1, b_p=1.0, n_slots=4),
    energy=EnergyProfile(e_p=(2.0, 3.0, 2.0, 2.0), e_s=(4.0, 5.0, 5.0, 3.0)),
    grid=(1.0, 2.0, 3.0, 4.0),
)


@pytest.mark.parametrize("regime", ["weak_pt_sr", "weak_st_pr", "equal"])
def test_criterion_09_fig67_trends(regime):
    t0 = time.monotonic()
    config = SweepConfig(
        axis="b_p", grid=REF_N4["grid"], params=REF_N4["params"],
        channel=REGIMES[regime], energy=REF_N4["energy"],
        trials=500, seed=9, cooperation="both",
        solver=SubgradientConfig())
    result = run_sweep(config)
    seconds = time.monotonic() - t0

    coop = [r.su_bits_coop for r in result.rows]
    nocoop = [r.su_bits_nocoop for r in result.rows]
    deltas = [r.delta_total for r in result.rows]
    coop_bad = sum(1 for c, nc in zip(coop, nocoop) if c < nc - 0.01 * nc)
    slack = 0.05 * max(deltas)
    mono_bad = sum(1 for a, b in zip(deltas, deltas[1:]) if b < a - slack)
    ok = coop_bad == 0 and mono_bad == 0 and seconds < 1800.0
    _report(9, ok,
            f"[{regime}] 500 CRN trials, b_p grid {REF_N4['grid']}: "
            f"coop-vs-nocoop violations {coop_bad}, delta-monotonicity "
            f"violations {mono_bad} (5% slack), deltas="
            f"{[round(d, 4) for d in deltas]}, {seconds:.0f}s (< 1800s)")


def test_criterion_10_determinism(tmp_path):
    cfg = REPO / "configs" / "fig2.cfg"
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        rc = cli_main(["sweep", "--config", str(cfg), "--trials", "50",
                       "--out", str(out)])
        assert rc == 0
        plot_dat = Path(f"{out.with_suffix('')}.plot.dat")
        outs.append((out.read_bytes(), plot_dat.read_bytes()))
    ok = outs[0] == outs[1]
    _report(10, ok,
            "two runs of configs/fig2.cfg (same seed) produced "
            f"{'byte-identical' if ok else 'DIFFERING'} CSV and plot-data files")
