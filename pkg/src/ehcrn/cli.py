"""Command-line interface.

Subcommands:
    solve-single   exact one-slot solve (closed form, LP cross-checked)
    solve-multi    subgradient solve of an N-slot instance
    sweep          Monte-Carlo parameter sweep, CSV + plot-data + figure
    oracle-check   solver-vs-grid-oracle differential run

Exit codes: 0 success, 1 usage/config error, 2 infeasible instance,
3 oracle violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments, oracle
from .config import ConfigError, RunConfig, parse_config
from .model import SlotData, SystemParams, Trace, pu_sum_rate, su_sum_rate
from .multi_slot import (SubgradientConfig, repair_and_verify,
                         solve_multi_start, solve_subgradient)
from .single_slot import Mode, solve_single_slot

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_ORACLE_VIOLATION = 3


def _fmt(x: float) -> str:
    """Locale-free numeric formatting at 9 significant digits."""
    return f"{float(x):.9g}"


# ---------------------------------------------------------------------------
# config schemas
# ---------------------------------------------------------------------------

_PARAM_KEYS = {"alpha", "e_max", "sigma2", "b_p", "n_slots"}
_SOLVER_KEYS = {"epsilon", "max_iters", "beta_primal", "beta_dual",
                "diminishing", "warm_start", "log_base_correction",
                "log_stride"}
_CHANNEL_KEYS = {"regime", "var_pp", "var_ps", "var_ss", "var_sp"}

_SINGLE_KEYS = _PARAM_KEYS | {"h_pp", "h_ps", "h_ss", "h_sp", "e_p", "e_s", "out"}
_MULTI_KEYS = (_PARAM_KEYS | _SOLVER_KEYS | _CHANNEL_KEYS
               | {"h_pp", "h_ps", "h_ss", "h_sp", "e_p", "e_s",
                  "seed", "out", "iter_log"})
_SWEEP_KEYS = (_PARAM_KEYS | _SOLVER_KEYS | _CHANNEL_KEYS
               | {"axis", "grid", "e_p", "e_s", "trials", "seed",
                  "cooperation", "out", "plot"})
_ORACLE_KEYS = (_PARAM_KEYS | _SOLVER_KEYS | _CHANNEL_KEYS
                | {"instances", "grid_points", "seed", "b_p_min", "b_p_max",
                   "alpha_min", "alpha_max", "energy_min", "energy_max",
                   "min_ratio", "out"})


def _system_params(cfg: RunConfig, n_slots_default: int = 1) -> SystemParams:
    return SystemParams(
        alpha=cfg.get_float("alpha", 1.0),
        e_max=cfg.get_float("e_max", 10.0),
        sigma2=cfg.get_float("sigma2", 0.1),
        b_p=cfg.get_float("b_p", 1.0),
        n_slots=cfg.get_int("n_slots", n_slots_default),
    )


def _solver_config(cfg: RunConfig) -> SubgradientConfig:
    defaults = SubgradientConfig()
    return SubgradientConfig(
        beta_primal=cfg.get_float("beta_primal", defaults.beta_primal),
        beta_dual=cfg.get_float("beta_dual", defaults.beta_dual),
        epsilon=cfg.get_float("epsilon", defaults.epsilon),
        max_iters=cfg.get_int("max_iters", defaults.max_iters),
        log_base_correction=cfg.get_bool("log_base_correction", True),
        diminishing=cfg.get_bool("diminishing", False),
        warm_start=cfg.get_bool("warm_start", defaults.warm_start),
        log_stride=cfg.get_int("log_stride", 0),
    )


def _channel_model(cfg: RunConfig) -> experiments.ChannelModel:
    regime = cfg.get_str("regime", "")
    if regime:
        if regime not in experiments.REGIMES:
            raise ConfigError(
                f"{cfg.source}: unknown regime {regime!r}; "
                f"choose from {sorted(experiments.REGIMES)}")
        return experiments.REGIMES[regime]
    return experiments.ChannelModel(
        var_pp=cfg.get_float("var_pp", 0.1),
        var_ps=cfg.get_float("var_ps", 0.1),
        var_ss=cfg.get_float("var_ss", 0.1),
        var_sp=cfg.get_float("var_sp", 0.1),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve_single(cfg: RunConfig, out_override: str | None) -> int:
    cfg.check_known(_SINGLE_KEYS)
    params = _system_params(cfg)
    if params.n_slots != 1:
        raise ConfigError(f"{cfg.source}: solve-single requires n_slots = 1")
    slot = SlotData(
        h_pp=cfg.get_float("h_pp"), h_ps=cfg.get_float("h_ps"),
        h_ss=cfg.get_float("h_ss"), h_sp=cfg.get_float("h_sp"),
        e_p=cfg.get_float("e_p"), e_s=cfg.get_float("e_s"))
    sol = solve_single_slot(params, slot, cross_check=True)

    print(f"mode      = {sol.mode.value}")
    print(f"p_p       = {_fmt(sol.p_p)}")
    print(f"p_s       = {_fmt(sol.p_s)}")
    print(f"delta_sp  = {_fmt(sol.delta_sp)}")
    print(f"zeta      = {_fmt(sol.zeta)}")
    print(f"su_bits   = {_fmt(sol.su_bits)}")

    out = out_override or cfg.get_str("out", "")
    if out:
        with open(out, "w") as f:
            f.write("mode,p_p,p_s,delta_sp,zeta,su_bits\n")
            f.write(",".join([sol.mode.value, _fmt(sol.p_p), _fmt(sol.p_s),
                              _fmt(sol.delta_sp), _fmt(sol.zeta),
                              _fmt(sol.su_bits)]) + "\n")
    return EXIT_INFEASIBLE if sol.mode is Mode.INFEASIBLE else EXIT_OK


def _multi_trace(cfg: RunConfig, params: SystemParams) -> Trace:
    n = params.n_slots

    def vector(key: str) -> np.ndarray:
        vals = cfg.get_floats(key)
        if len(vals) == 1:
            return np.full(n, vals[0])
        if len(vals) != n:
            raise ConfigError(
                f"{cfg.source}: '{key}' has {len(vals)} entries, expected {n}")
        return np.array(vals)

    if "h_pp" in cfg.values:
        h_pp, h_ps = vector("h_pp"), vector("h_ps")
        h_ss, h_sp = vector("h_ss"), vector("h_sp")
    else:
        # draw gains from the channel model with the configured seed
        model = _channel_model(cfg)
        rng = experiments.trial_rng(cfg.get_int("seed", 0), 0)
        h_pp = rng.exponential(model.var_pp, n)
        h_ps = rng.exponential(model.var_ps, n)
        h_ss = rng.exponential(model.var_ss, n)
        h_sp = rng.exponential(model.var_sp, n)
    e_p, e_s = vector("e_p"), vector("e_s")
    return Trace(tuple(SlotData(h_pp[i], h_ps[i], h_ss[i], h_sp[i],
                                e_p[i], e_s[i]) for i in range(n)))


def cmd_solve_multi(cfg: RunConfig, out_override: str | None) -> int:
    cfg.check_known(_MULTI_KEYS)
    params = _system_params(cfg, n_slots_default=4)
    solver = _solver_config(cfg)
    if cfg.get_str("iter_log", "") and solver.log_stride == 0:
        solver = replace(solver, log_stride=1)
    trace = _multi_trace(cfg, params)

    policy, _, log = solve_subgradient(params, trace, solver)
    policy, report = repair_and_verify(params, trace, policy)

    print(f"converged  = {log.converged}")
    print(f"iterations = {log.iterations}")
    print("slot,p_p,p_s,delta_sp")
    for i in range(params.n_slots):
        print(",".join([str(i + 1), _fmt(policy.p_p[i]), _fmt(policy.p_s[i]),
                        _fmt(policy.delta_sp[i])]))
    print(f"pu_sum_rate = {_fmt(report.pu_sum_rate)}")
    print(f"su_bits     = {_fmt(su_sum_rate(params, trace, policy))}")
    print(f"feasible    = {report.all_ok}")

    out = out_override or cfg.get_str("out", "")
    if out:
        with open(out, "w") as f:
            f.write("slot,p_p,p_s,delta_sp\n")
            for i in range(params.n_slots):
                f.write(",".join([str(i + 1), _fmt(policy.p_p[i]),
                                  _fmt(policy.p_s[i]),
                                  _fmt(policy.delta_sp[i])]) + "\n")
    iter_log = cfg.get_str("iter_log", "")
    if iter_log:
        with open(iter_log, "w") as f:
            f.write("iter,delta_norm,lagrangian,pu_slack,worst_violation\n")
            for k in range(log.iters.shape[0]):
                f.write(",".join([str(int(log.iters[k])),
                                  _fmt(log.primal_delta[k]),
                                  _fmt(log.lagrangian[k]),
                                  _fmt(log.pu_slack[k]),
                                  _fmt(log.worst_violation[k])]) + "\n")
    return EXIT_OK


SWEEP_CSV_HEADER = ("axis,value,su_bits_coop,su_bits_nocoop,"
                    "delta_total,delta_per_slot,infeasible,trials")


def write_sweep_csv(result: experiments.SweepResult, path: str | Path) -> None:
    with open(path, "w") as f:
        f.write(SWEEP_CSV_HEADER + "\n")
        for r in result.rows:
            f.write(",".join([
                result.axis, _fmt(r.axis_value), _fmt(r.su_bits_coop),
                _fmt(r.su_bits_nocoop), _fmt(r.delta_total),
                _fmt(r.delta_per_slot), str(r.infeasible), str(r.trials),
            ]) + "\n")


def write_plot_data(result: experiments.SweepResult, path: str | Path) -> None:
    """Whitespace-delimited companion file for generic plotting tools."""
    with open(path, "w") as f:
        f.write("# value su_bits_coop su_bits_nocoop delta_total\n")
        for r in result.rows:
            f.write(" ".join([_fmt(r.axis_value), _fmt(r.su_bits_coop),
                              _fmt(r.su_bits_nocoop), _fmt(r.delta_total)]) + "\n")


def render_figure(result: experiments.SweepResult, path: str | Path) -> None:
    """Two-panel summary figure: SU bits and transferred energy vs the axis."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r.axis_value for r in result.rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    coop = [r.su_bits_coop for r in result.rows]
    nocoop = [r.su_bits_nocoop for r in result.rows]
    if not all(np.isnan(coop)):
        ax1.plot(xs, coop, "o-", label="cooperation")
    if not all(np.isnan(nocoop)):
        ax1.plot(xs, nocoop, "s--", label="no cooperation")
    ax1.set_xlabel(result.axis)
    ax1.set_ylabel("mean SU bits")
    ax1.legend()
    ax1.grid(True, alpha=0.3)

    ax2.plot(xs, [r.delta_total for r in result.rows], "o-")
    ax2.set_xlabel(result.axis)
    ax2.set_ylabel("mean transferred energy (J)")
    ax2.grid(True, alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_sweep(cfg: RunConfig, out_override: str | None,
              seed_override: int | None, trials_override: int | None,
              plot_override: bool) -> int:
    cfg.check_known(_SWEEP_KEYS)
    grid = cfg.get_floats("grid")
    if not grid:
        raise ConfigError(f"{cfg.source}: empty sweep grid")
    params = _system_params(cfg)
    sweep = experiments.SweepConfig(
        axis=cfg.get_str("axis"),
        grid=tuple(grid),
        params=params,
        channel=_channel_model(cfg),
        energy=experiments.EnergyProfile(
            e_p=cfg.get_float_or_floats("e_p"),
            e_s=cfg.get_float_or_floats("e_s")),
        trials=trials_override if trials_override is not None
        else cfg.get_int("trials", 1000),
        seed=seed_override if seed_override is not None
        else cfg.get_int("seed", 0),
        cooperation=cfg.get_str("cooperation", "both"),
        solver=_solver_config(cfg),
    )
    result = experiments.run_sweep(sweep)

    out = out_override or cfg.get_str("out", "sweep.csv")
    write_sweep_csv(result, out)
    stem = Path(out).with_suffix("")
    write_plot_data(result, f"{stem}.plot.dat")
    if plot_override or cfg.get_bool("plot", False):
        render_figure(result, f"{stem}.png")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_oracle_check(cfg: RunConfig, seed_override: int | None) -> int:
    cfg.check_known(_ORACLE_KEYS)
    n_slots = cfg.get_int("n_slots", 1)
    if n_slots not in (1, 2):
        raise ConfigError(f"{cfg.source}: oracle supports N <= 2, got {n_slots}")
    k = cfg.get_int("instances", 200 if n_slots == 1 else 20)
    npts = cfg.get_int("grid_points", 400 if n_slots == 1 else 20)
    seed = seed_override if seed_override is not None else cfg.get_int("seed", 0)
    model = _channel_model(cfg)
    solver = _solver_config(cfg)
    sigma2 = cfg.get_float("sigma2", 0.1)
    e_max = cfg.get_float("e_max", 5.0)
    bp_lo, bp_hi = cfg.get_float("b_p_min", 0.5), cfg.get_float("b_p_max", 3.0)
    a_lo, a_hi = cfg.get_float("alpha_min", 0.0), cfg.get_float("alpha_max", 1.0)
    e_lo, e_hi = cfg.get_float("energy_min", 0.1), cfg.get_float("energy_max", 2.0)
    min_ratio = cfg.get_float("min_ratio", 0.90)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 998877]))
    worst_gap = 0.0
    worst_ratio = float("inf")
    violations = 0
    checked = 0
    while checked < k:
        params = SystemParams(
            alpha=float(rng.uniform(a_lo, a_hi)), e_max=e_max, sigma2=sigma2,
            b_p=float(rng.uniform(bp_lo, bp_hi)), n_slots=n_slots)
        trace = experiments.sample_trace(
            model, experiments.EnergyProfile(
                e_p=tuple(rng.uniform(e_lo, e_hi, n_slots)),
                e_s=tuple(rng.uniform(e_lo, e_hi, n_slots))),
            n_slots, rng)
        if n_slots == 1:
            slot = trace.slots[0]
            sol = solve_single_slot(params, slot, cross_check=True)
            res = oracle.grid_search_n1(params, slot,
                                        oracle.GridSpec(points_per_axis=npts))
            if sol.mode is Mode.INFEASIBLE:
                continue
            checked += 1
            gap = res.su_bits - sol.su_bits
            worst_gap = max(worst_gap, gap)
            if gap > res.error_bound:
                violations += 1
                print(f"VIOLATION: solver {sol.su_bits} < oracle {res.su_bits} "
                      f"- bound {res.error_bound}\n  params={params}\n  slot={slot}")
        else:
            res = oracle.grid_search_n2(params, trace,
                                        oracle.GridSpec(points_per_axis=npts))
            if not res.feasible:
                continue
            policy, report = solve_multi_start(params, trace, solver)
            indep = oracle.independent_constraint_check(params, trace, policy)
            checked += 1
            bits = su_sum_rate(params, trace, policy)
            ratio = bits / res.su_bits if res.su_bits > 0 else 1.0
            worst_ratio = min(worst_ratio, ratio)
            if not indep.all_ok:
                violations += 1
                print(f"VIOLATION: repaired policy fails independent check\n"
                      f"  params={params}\n  trace={trace}\n  policy={policy}")
            if ratio < min_ratio:
                violations += 1
                print(f"VIOLATION: subgradient/oracle ratio {ratio:.4f} < "
                      f"{min_ratio}\n  params={params}\n  trace={trace}")
            if bits > res.su_bits + res.error_bound:
                violations += 1
                print(f"VIOLATION: solver exceeds oracle beyond error bound "
                      f"({bits} > {res.su_bits} + {res.error_bound})\n"
                      f"  params={params}\n  trace={trace}")

    print(f"instances        = {checked}")
    if n_slots == 1:
        print(f"max oracle-solver gap = {_fmt(worst_gap)}")
    else:
        print(f"min solver/oracle ratio = {_fmt(worst_ratio)}")
    print(f"violations       = {violations}")
    return EXIT_ORACLE_VIOLATION if violations else EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehcrn",
        description="Offline power and energy-transfer policies for a "
                    "two-user energy-harvesting underlay network")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve-single", "solve-multi", "sweep", "oracle-check"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=None)
        if name == "sweep":
            p.add_argument("--plot", action="store_true",
                           help="also render a matplotlib figure next to the CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.command == "solve-single":
            return cmd_solve_single(cfg, args.out)
        if args.command == "solve-multi":
            return cmd_solve_multi(cfg, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.seed, args.trials, args.plot)
        return cmd_oracle_check(cfg, args.seed)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
