"""Monte-Carlo sweep harness.

Draws Rayleigh-power (exponential) channel gains, runs the exact
single-slot solver or the subgradient solver over a parameter sweep with
common random numbers across grid points and arms, and aggregates means.

The "variance" of a Rayleigh-faded link is read as the mean of the
exponential power-gain distribution (the standard convention for
Rayleigh power gains); see ChannelModel.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .model import Policy, SlotData, SystemParams, Trace
from .multi_slot import SubgradientConfig, repair_and_verify, solve_subgradient
from .single_slot import Mode, solve_no_cooperation, solve_single_slot

SWEEP_AXES = ("b_p", "alpha", "e_p", "e_s")
COOPERATION_MODES = ("on", "off", "both")


@dataclass(frozen=True)
class ChannelModel:
    """Exponential mean parameters of the four power gains."""

    var_pp: float = 0.1
    var_ps: float = 0.1
    var_ss: float = 0.1
    var_sp: float = 0.1

    def __post_init__(self):
        for name in ("var_pp", "var_ps", "var_ss", "var_sp"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


#: named link-strength presets used in the multi-slot experiments
REGIMES = {
    "equal": ChannelModel(0.1, 0.1, 0.1, 0.1),
    "weak_pt_sr": ChannelModel(var_pp=1.0, var_ps=0.1, var_ss=1.0, var_sp=1.0),
    "weak_st_pr": ChannelModel(var_pp=1.0, var_ps=1.0, var_ss=1.0, var_sp=0.1),
    "strong_direct": ChannelModel(var_pp=1.0, var_ps=0.1, var_ss=1.0, var_sp=0.1),
    "strong_interference": ChannelModel(var_pp=0.1, var_ps=1.0, var_ss=0.1, var_sp=1.0),
}


@dataclass(frozen=True)
class EnergyProfile:
    """Per-slot harvested energy: scalars repeat over slots, tuples give the
    full vector."""

    e_p: float | tuple[float, ...]
    e_s: float | tuple[float, ...]

    def vectors(self, n_slots: int) -> tuple[np.ndarray, np.ndarray]:
        def expand(v):
            if np.isscalar(v):
                return np.full(n_slots, float(v))
            arr = np.asarray(v, dtype=float)
            if arr.shape != (n_slots,):
                raise ValueError(f"energy vector length {arr.shape} != {n_slots}")
            return arr
        return expand(self.e_p), expand(self.e_s)


@dataclass
class SweepConfig:
    axis: str
    grid: tuple[float, ...]
    params: SystemParams
    channel: ChannelModel
    energy: EnergyProfile
    trials: int = 1000
    seed: int = 0
    cooperation: str = "both"
    solver: SubgradientConfig = field(default_factory=SubgradientConfig)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if len(self.grid) == 0:
            raise ValueError("sweep grid must be non-empty")
        if any(b >= a for a, b in zip(self.grid[1:], self.grid)):
            raise ValueError("sweep grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.cooperation not in COOPERATION_MODES:
            raise ValueError(f"cooperation must be one of {COOPERATION_MODES}")


@dataclass
class SweepRow:
    axis_value: float
    su_bits_coop: float
    su_bits_nocoop: float
    delta_total: float      # mean of per-trial total transferred energy
    delta_per_slot: float   # same, divided by n_slots
    infeasible: int         # trials excluded from the means
    trials: int


@dataclass
class SweepResult:
    axis: str
    rows: list[SweepRow]
    #: per-trial trace fingerprints, identical across grid points by CRN
    trace_hashes: list[str]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent, schedule-free stream for one trial."""
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def sample_trace(model: ChannelModel, energy: EnergyProfile, n_slots: int,
                 rng: np.random.Generator) -> Trace:
    """Draw the four gain vectors i.i.d. exponential with the model means;
    energies come from the profile unchanged."""
    h_pp = rng.exponential(model.var_pp, n_slots)
    h_ps = rng.exponential(model.var_ps, n_slots)
    h_ss = rng.exponential(model.var_ss, n_slots)
    h_sp = rng.exponential(model.var_sp, n_slots)
    e_p, e_s = energy.vectors(n_slots)
    return Trace(tuple(
        SlotData(h_pp[i], h_ps[i], h_ss[i], h_sp[i], e_p[i], e_s[i])
        for i in range(n_slots)))


def _trace_hash(trace: Trace) -> str:
    h = hashlib.sha256()
    for s in trace.slots:
        h.update(np.array([s.h_pp, s.h_ps, s.h_ss, s.h_sp, s.e_p, s.e_s]).tobytes())
    return h.hexdigest()


def _apply_axis(config: SweepConfig, value: float
                ) -> tuple[SystemParams, EnergyProfile]:
    params, energy = config.params, config.energy
    if config.axis == "b_p":
        params = replace(params, b_p=value)
    elif config.axis == "alpha":
        params = replace(params, alpha=value)
    elif config.axis == "e_p":
        energy = EnergyProfile(e_p=value, e_s=energy.e_s)
    else:
        energy = EnergyProfile(e_p=energy.e_p, e_s=value)
    return params, energy


def _solve_arms(config: SweepConfig, params: SystemParams, trace: Trace):
    """Returns (coop result, nocoop result); each is (feasible, su_bits,
    delta_total) or None when the arm is not requested."""
    want_coop = config.cooperation in ("on", "both")
    want_nocoop = config.cooperation in ("off", "both")
    coop = nocoop = None
    if params.n_slots == 1:
        slot = trace.slots[0]
        if want_coop:
            sol = solve_single_slot(params, slot)
            coop = (sol.mode is not Mode.INFEASIBLE, sol.su_bits, sol.delta_sp)
        if want_nocoop:
            sol = solve_no_cooperation(params, slot)
            nocoop = (sol.mode is not Mode.INFEASIBLE, sol.su_bits, 0.0)
    else:
        if want_coop:
            policy, _, _ = solve_subgradient(params, trace, config.solver)
            policy, report = repair_and_verify(params, trace, policy)
            coop = (report.pu_rate_ok, _su_bits(params, trace, policy),
                    float(policy.delta_sp.sum()))
        if want_nocoop:
            policy, _, _ = solve_subgradient(params, trace, config.solver,
                                             allow_transfer=False)
            policy, report = repair_and_verify(params, trace, policy,
                                               allow_transfer=False)
            nocoop = (report.pu_rate_ok, _su_bits(params, trace, policy), 0.0)
    return coop, nocoop


def _su_bits(params, trace, policy: Policy) -> float:
    from .model import su_sum_rate
    return su_sum_rate(params, trace, policy)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run the sweep with common random numbers: the trace of trial k is
    identical at every grid point and in both cooperation arms.

    A trial is excluded from a grid point's means when any requested arm is
    infeasible there, so coop and no-coop means average the same trials.
    """
    n = config.params.n_slots
    gains = []
    for k in range(config.trials):
        rng = trial_rng(config.seed, k)
        gains.append((rng.exponential(config.channel.var_pp, n),
                      rng.exponential(config.channel.var_ps, n),
                      rng.exponential(config.channel.var_ss, n),
                      rng.exponential(config.channel.var_sp, n)))

    rows = []
    hashes: list[str] = []
    for value in config.grid:
        params, energy = _apply_axis(config, value)
        e_p, e_s = energy.vectors(n)
        coop_bits = []
        nocoop_bits = []
        deltas = []
        infeasible = 0
        for k in range(config.trials):
            h_pp, h_ps, h_ss, h_sp = gains[k]
            trace = Trace(tuple(
                SlotData(h_pp[i], h_ps[i], h_ss[i], h_sp[i], e_p[i], e_s[i])
                for i in range(n)))
            if value == config.grid[0]:
                hashes.append(_trace_hash(Trace(tuple(
                    SlotData(h_pp[i], h_ps[i], h_ss[i], h_sp[i], 0.0, 0.0)
                    for i in range(n)))))
            coop, nocoop = _solve_arms(config, params, trace)
            ok = all(arm[0] for arm in (coop, nocoop) if arm is not None)
            if not ok:
                infeasible += 1
                continue
            if coop is not None:
                coop_bits.append(coop[1])
                deltas.append(coop[2])
            if nocoop is not None:
                nocoop_bits.append(nocoop[1])

        def mean(xs):
            return float(np.mean(xs)) if xs else float("nan")

        rows.append(SweepRow(
            axis_value=value,
            su_bits_coop=mean(coop_bits),
            su_bits_nocoop=mean(nocoop_bits),
            delta_total=mean(deltas),
            delta_per_slot=mean(deltas) / n if deltas else float("nan"),
            infeasible=infeasible,
            trials=config.trials,
        ))
    return SweepResult(axis=config.axis, rows=rows, trace_hashes=hashes)
