"""Comparison schemes for offloading and grouping.

Every baseline applies the same local-deadline gating as the game so delay
comparisons are like-for-like, decides only the assignment, and leaves power
allocation to the shared MM module.  The matching-based schemes (deferred
acceptance, max-min splitting) group devices at a supplied per-device BS
(nearest by default); the offloading-based schemes (nearest BS, compute
capacity) pick the BS and then fill subchannels greedily by least received
interference at maximum transmit power.
"""

from __future__ import annotations

import math
from collections import deque
from enum import Enum

import numpy as np

from nomamec.game import local_gating_mask
from nomamec.model import Assignment
from nomamec.scenario import Scenario


class BaselineKind(Enum):
    GALE_SHAPLEY = "gale-shapley"
    MAX_MIN = "max-min"
    NEARBY = "nearby"
    COMPUTING = "computing"


def _strategic_devices(scenario: Scenario) -> list[int]:
    gated = local_gating_mask(scenario)
    return [n for n in range(scenario.n_devices) if not gated[n]]


def _default_targets(scenario: Scenario) -> np.ndarray:
    return scenario.nearest_bs()


def gale_shapley_grouping(scenario: Scenario, offload_targets: np.ndarray | None = None) -> Assignment:
    """Deferred-acceptance matching of devices to subchannel groups per BS.

    Devices propose in preference order (their best channels first); a full
    group keeps its highest-gain proposers, bumping the worst.  Group quota is
    ceil(devices at BS / G), so every device ends up matched.
    """
    targets = _default_targets(scenario) if offload_targets is None else offload_targets
    assignment = Assignment.all_local(scenario.n_devices)
    n_ch = scenario.n_subchannels
    strategic = _strategic_devices(scenario)
    for m in range(scenario.n_bs):
        devices = [n for n in strategic if targets[n] == m]
        if not devices:
            continue
        quota = math.ceil(len(devices) / n_ch)
        prefs = {
            n: sorted(range(n_ch), key=lambda g: (-scenario.gains[n, m, g], g)) for n in devices
        }
        members: dict[int, list[int]] = {g: [] for g in range(n_ch)}
        next_idx = {n: 0 for n in devices}
        free = deque(sorted(devices))
        while free:
            n = free.popleft()
            g = prefs[n][next_idx[n]]
            next_idx[n] += 1
            members[g].append(n)
            if len(members[g]) > quota:
                worst = max(members[g], key=lambda k: (-scenario.gains[k, m, g], k))
                members[g].remove(worst)
                if next_idx[worst] < n_ch:
                    free.append(worst)
        for g, group in members.items():
            for n in group:
                assignment.bs[n], assignment.ch[n] = m, g
    return assignment


def max_min_grouping(scenario: Scenario, offload_targets: np.ndarray | None = None) -> Assignment:
    """Greedy grouping that spreads similar channels apart.

    Devices are processed in descending mean gain at their BS; each joins the
    non-full group maximizing its minimum pairwise gain gap to the current
    members, an empty group counting as an unbounded gap.
    """
    targets = _default_targets(scenario) if offload_targets is None else offload_targets
    assignment = Assignment.all_local(scenario.n_devices)
    n_ch = scenario.n_subchannels
    strategic = _strategic_devices(scenario)
    for m in range(scenario.n_bs):
        devices = [n for n in strategic if targets[n] == m]
        if not devices:
            continue
        quota = math.ceil(len(devices) / n_ch)
        order = sorted(devices, key=lambda n: (-float(np.mean(scenario.gains[n, m, :])), n))
        members: dict[int, list[int]] = {g: [] for g in range(n_ch)}
        for n in order:
            best_g, best_score = None, -math.inf
            for g in range(n_ch):
                if len(members[g]) >= quota:
                    continue
                if members[g]:
                    score = min(
                        abs(scenario.gains[n, m, g] - scenario.gains[k, m, g]) for k in members[g]
                    )
                else:
                    score = math.inf
                if score > best_score:
                    best_g, best_score = g, score
            members[best_g].append(n)
            assignment.bs[n], assignment.ch[n] = m, best_g
    return assignment


def _least_interference_channel(
    scenario: Scenario, assignment: Assignment, n: int, m: int, p_metric: float
) -> int:
    """Subchannel of BS m with the smallest received power already on it."""
    best_g, best = 0, math.inf
    for g in range(scenario.n_subchannels):
        total = sum(p_metric * scenario.gains[k, m, g] for k in assignment.group(m, g))
        if total < best:
            best_g, best = g, total
    return best_g


def nearby_offloading(scenario: Scenario) -> Assignment:
    """Nearest BS, then the least-interference subchannel, in device order."""
    assignment = Assignment.all_local(scenario.n_devices)
    nearest = scenario.nearest_bs()
    p_metric = scenario.max_power_w
    for n in _strategic_devices(scenario):
        m = int(nearest[n])
        g = _least_interference_channel(scenario, assignment, n, m, p_metric)
        assignment.bs[n], assignment.ch[n] = m, g
    return assignment


def computing_capacity_offloading(scenario: Scenario) -> Assignment:
    """Fastest MEC with remaining admission room, then least interference.

    Per-BS admission cap is ceil(N / M) devices, so capacity-greedy choices
    cannot pile every device onto one server.
    """
    assignment = Assignment.all_local(scenario.n_devices)
    cap = math.ceil(scenario.n_devices / scenario.n_bs)
    counts = np.zeros(scenario.n_bs, dtype=int)
    p_metric = scenario.max_power_w
    rates = scenario.compute_rate_bps
    for n in _strategic_devices(scenario):
        open_bs = [m for m in range(scenario.n_bs) if counts[m] < cap]
        m = max(open_bs, key=lambda j: (rates[j], -j))
        g = _least_interference_channel(scenario, assignment, n, m, p_metric)
        assignment.bs[n], assignment.ch[n] = m, g
        counts[m] += 1
    return assignment


BASELINES = {
    BaselineKind.GALE_SHAPLEY: gale_shapley_grouping,
    BaselineKind.MAX_MIN: max_min_grouping,
    BaselineKind.NEARBY: nearby_offloading,
    BaselineKind.COMPUTING: computing_capacity_offloading,
}


def build_assignment(kind: BaselineKind, scenario: Scenario) -> Assignment:
    return BASELINES[kind](scenario)
