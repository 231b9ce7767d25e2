"""Uplink NOMA multi-BS edge computing simulator and optimizer.

Subpackages cover scenario generation, the SIC throughput / delay model,
game-based joint offloading and grouping, MM power allocation, alternating
optimization, heuristic baselines, and an experiment harness with a CLI.
"""

from nomamec.scenario import (
    GenerationParams,
    RadioConfig,
    Scenario,
    generate_scenario,
    noise_power,
    path_loss_db,
)
from nomamec.model import Assignment, DelayReport
from nomamec.ao import AOConfig, Solution, alternating_optimize

__all__ = [
    "AOConfig",
    "Assignment",
    "DelayReport",
    "GenerationParams",
    "RadioConfig",
    "Scenario",
    "Solution",
    "alternating_optimize",
    "generate_scenario",
    "noise_power",
    "path_loss_db",
]

__version__ = "0.1.0"
