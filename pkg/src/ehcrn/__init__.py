"""Offline transmit-power and energy-transfer policies for a two-user
energy-harvesting underlay cognitive radio network."""

from .model import (FeasibilityReport, Policy, SlotData, SystemParams, Trace,
                    check_feasibility, pu_rate, single_slot_feasible, su_rate)
from .single_slot import (Mode, SingleSlotSolution, cooperation_threshold,
                          solve_no_cooperation, solve_single_slot)
from .multi_slot import (DualState, IterationLog, SubgradientConfig,
                         repair_and_verify, solve_multi_start,
                         solve_subgradient)

__all__ = [
    "FeasibilityReport", "Policy", "SlotData", "SystemParams", "Trace",
    "check_feasibility", "pu_rate", "single_slot_feasible", "su_rate",
    "Mode", "SingleSlotSolution", "cooperation_threshold",
    "solve_no_cooperation", "solve_single_slot",
    "DualState", "IterationLog", "SubgradientConfig",
    "repair_and_verify", "solve_multi_start", "solve_subgradient",
]

__version__ = "0.1.0"
