"""Domain types, achievable-rate formulas and feasibility checking.

Everything downstream (exact single-slot solvers, the subgradient solver,
the brute-force oracles and the sweep harness) builds on the types and the
two Shannon-rate functions defined here.  Slots are 1 second long, so
energy in Joules and power in Watts share one numeric axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)

#: default absolute tolerance on energies (J) and rates (bits)
DEFAULT_TOL = 1e-7


def _check_nonneg_finite(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and non-negative, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Global constants of the network.

    alpha:   energy transfer efficiency from ST to PT, in [0, 1]
    e_max:   battery capacity at both transmitters (J)
    sigma2:  receiver noise power (W)
    b_p:     primary sum-rate requirement over the horizon (bits)
    n_slots: number of 1-second slots
    """

    alpha: float
    e_max: float
    sigma2: float
    b_p: float
    n_slots: int = 1

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (self.e_max > 0.0 and math.isfinite(self.e_max)):
            raise ValueError(f"e_max must be positive, got {self.e_max}")
        if not (self.sigma2 > 0.0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not (self.b_p >= 0.0 and math.isfinite(self.b_p)):
            raise ValueError(f"b_p must be non-negative, got {self.b_p}")
        if self.n_slots < 1:
            raise ValueError(f"n_slots must be >= 1, got {self.n_slots}")

    @property
    def omega(self) -> float:
        """SINR target implied by the rate requirement, 2^b_p - 1."""
        return 2.0 ** self.b_p - 1.0


@dataclass(frozen=True)
class SlotData:
    """Exogenous inputs of one slot: four channel power gains and the
    energy harvested by each transmitter at the slot boundary."""

    h_pp: float
    h_ps: float
    h_ss: float
    h_sp: float
    e_p: float
    e_s: float

    def __post_init__(self):
        for name in ("h_pp", "h_ps", "h_ss", "h_sp", "e_p", "e_s"):
            _check_nonneg_finite(name, getattr(self, name))


@dataclass(frozen=True)
class Trace:
    """Full non-causal realization over the horizon."""

    slots: tuple[SlotData, ...]

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))

    def __len__(self) -> int:
        return len(self.slots)

    def gains(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(h_pp, h_ps, h_ss, h_sp) as arrays of length n_slots."""
        return (
            np.array([s.h_pp for s in self.slots]),
            np.array([s.h_ps for s in self.slots]),
            np.array([s.h_ss for s in self.slots]),
            np.array([s.h_sp for s in self.slots]),
        )

    def energies(self) -> tuple[np.ndarray, np.ndarray]:
        """(e_p, e_s) arrival vectors."""
        return (
            np.array([s.e_p for s in self.slots]),
            np.array([s.e_s for s in self.slots]),
        )


@dataclass
class Policy:
    """Per-slot decisions: PT power, ST power, transferred energy."""

    p_p: np.ndarray
    p_s: np.ndarray
    delta_sp: np.ndarray

    def __post_init__(self):
        self.p_p = np.asarray(self.p_p, dtype=float)
        self.p_s = np.asarray(self.p_s, dtype=float)
        self.delta_sp = np.asarray(self.delta_sp, dtype=float)
        n = self.p_p.shape[0]
        if self.p_s.shape != (n,) or self.delta_sp.shape != (n,):
            raise ValueError("policy vectors must share one length")
        for name, v in (("p_p", self.p_p), ("p_s", self.p_s),
                        ("delta_sp", self.delta_sp)):
            if not np.all(np.isfinite(v)) or np.any(v < 0.0):
                raise ValueError(f"{name} must be finite and elementwise >= 0")

    def __len__(self) -> int:
        return self.p_p.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "Policy":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


@dataclass
class FeasibilityReport:
    """Outcome of checking a policy against the rate and energy constraints.

    Violation magnitudes are worst-prefix excesses in Joules (0 when the
    constraint holds); pu_rate_deficit is in bits.
    """

    pu_rate_ok: bool
    pu_sum_rate: float
    pu_rate_deficit: float
    st_causality_ok: bool
    st_causality_violation: float
    st_overflow_ok: bool
    st_overflow_violation: float
    pt_causality_ok: bool
    pt_causality_violation: float
    pt_overflow_ok: bool
    pt_overflow_violation: float
    tol: float = DEFAULT_TOL

    @property
    def all_ok(self) -> bool:
        return (self.pu_rate_ok and self.st_causality_ok and self.st_overflow_ok
                and self.pt_causality_ok and self.pt_overflow_ok)


def su_rate(slot: SlotData, p_p: float, p_s: float, sigma2: float) -> float:
    """Achievable SU rate in one slot, log2(1 + h_ss*p_s/(sigma2+h_ps*p_p))."""
    for name, v in (("p_p", p_p), ("p_s", p_s)):
        _check_nonneg_finite(name, v)
    if not (sigma2 > 0.0 and math.isfinite(sigma2)):
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if p_s == 0.0:
        return 0.0
    return math.log1p(slot.h_ss * p_s / (sigma2 + slot.h_ps * p_p)) / LN2


def pu_rate(slot: SlotData, p_p: float, p_s: float, sigma2: float) -> float:
    """Achievable PU rate in one slot, log2(1 + h_pp*p_p/(sigma2+h_sp*p_s))."""
    for name, v in (("p_p", p_p), ("p_s", p_s)):
        _check_nonneg_finite(name, v)
    if not (sigma2 > 0.0 and math.isfinite(sigma2)):
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if p_p == 0.0:
        return 0.0
    return math.log1p(slot.h_pp * p_p / (sigma2 + slot.h_sp * p_s)) / LN2


def pu_sum_rate(params: SystemParams, trace: Trace, policy: Policy) -> float:
    return sum(pu_rate(s, policy.p_p[i], policy.p_s[i], params.sigma2)
               for i, s in enumerate(trace.slots))


def su_sum_rate(params: SystemParams, trace: Trace, policy: Policy) -> float:
    return sum(su_rate(s, policy.p_p[i], policy.p_s[i], params.sigma2)
               for i, s in enumerate(trace.slots))


def check_feasibility(params: SystemParams, trace: Trace, policy: Policy,
                      tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Evaluate the energy-causality, battery-overflow and PU-rate
    constraints over every slot prefix.

    For each prefix j the battery content must satisfy
    0 <= sum(arrivals) - sum(consumption) <= e_max at both transmitters,
    with ST consuming p_s + delta_sp and PT consuming p_p - alpha*delta_sp.
    """
    if len(policy) != len(trace):
        raise ValueError(
            f"policy length {len(policy)} != trace length {len(trace)}")
    e_p, e_s = trace.energies()
    st_store = np.cumsum(e_s) - np.cumsum(policy.p_s + policy.delta_sp)
    pt_store = np.cumsum(e_p) - np.cumsum(policy.p_p - params.alpha * policy.delta_sp)

    st_caus = max(0.0, float(-st_store.min()))
    st_over = max(0.0, float(st_store.max()) - params.e_max)
    pt_caus = max(0.0, float(-pt_store.min()))
    pt_over = max(0.0, float(pt_store.max()) - params.e_max)

    rate = pu_sum_rate(params, trace, policy)
    deficit = max(0.0, params.b_p - rate)

    return FeasibilityReport(
        pu_rate_ok=deficit <= tol,
        pu_sum_rate=rate,
        pu_rate_deficit=deficit,
        st_causality_ok=st_caus <= tol,
        st_causality_violation=st_caus,
        st_overflow_ok=st_over <= tol,
        st_overflow_violation=st_over,
        pt_causality_ok=pt_caus <= tol,
        pt_causality_violation=pt_caus,
        pt_overflow_ok=pt_over <= tol,
        pt_overflow_violation=pt_over,
        tol=tol,
    )


def effective_budgets(params: SystemParams, slot: SlotData) -> tuple[float, float]:
    """Battery-clipped single-slot budgets (E'_p, E'_s)."""
    return min(slot.e_p, params.e_max), min(slot.e_s, params.e_max)


def single_slot_feasible(params: SystemParams, slot: SlotData) -> bool:
    """Whether b_p is attainable in one slot at all: with full transfer and
    p_s = 0, PT power can reach E'_p + alpha*E'_s."""
    e_p_eff, e_s_eff = effective_budgets(params, slot)
    return slot.h_pp * (e_p_eff + params.alpha * e_s_eff) / params.sigma2 >= params.omega
