"""Non-cooperative offloading/grouping game and its best-response solver.

Each offloading device is a player whose cost mixes the co-group interference
it must decode through (received power from strictly weaker members, in mW)
and the computing load already queued at its BS (task bits of other attached
devices, in Mbit, weighted by ``lam``).  The per-player potential differs from
this cost only by terms that do not depend on the player's own strategy, so a
unilateral move changes both by exactly the same amount; the best-response
sweep therefore descends the potential move by move and stops at a Nash
equilibrium.

Units: powers enter in milliwatts and task sizes in megabits so the two cost
terms can be summed literally; ``lam`` rescales the load term if a different
trade-off is wanted.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from nomamec.model import LOCAL, Assignment, local_delays, sic_key
from nomamec.scenario import Scenario

DEFAULT_LAMBDA = 1.0

W_TO_MW = 1e3
BITS_TO_MBIT = 1e-6


class ConvergenceError(RuntimeError):
    """Best-response dynamics hit the sweep cap without stabilizing."""

    def __init__(self, message: str, trace: "GameTrace"):
        super().__init__(message)
        self.trace = trace


class OracleCapError(ValueError):
    """The brute-force profile space exceeds the enumeration cap."""


def local_gating_mask(scenario: Scenario) -> np.ndarray:
    """True where a device meets its deadline locally and sits out the game."""
    return local_delays(scenario) <= scenario.deadlines_s


def interference(
    n: int,
    assignment: Assignment,
    powers: np.ndarray,
    scenario: Scenario,
    lam: float = DEFAULT_LAMBDA,
) -> float:
    """Mixed interference-plus-load cost of device n; 0 for local devices."""
    if assignment.is_local(n):
        return 0.0
    m, g = assignment.strategy(n)
    return _candidate_cost(n, m, g, assignment, powers, scenario, lam)


def _candidate_cost(n, m, g, assignment, powers, scenario, lam) -> float:
    gains = scenario.gains
    me = sic_key(n, gains[n, m, g])
    interf_w = 0.0
    for k in assignment.group(m, g):
        if k != n and sic_key(k, gains[k, m, g]) > me:
            interf_w += powers[k] * gains[k, m, g]
    load_bits = sum(scenario.task_bits[i] for i in assignment.attached(m) if i != n)
    return interf_w * W_TO_MW + lam * load_bits * BITS_TO_MBIT


def potential(
    n: int,
    candidate: tuple[int, int],
    assignment: Assignment,
    powers: np.ndarray,
    scenario: Scenario,
    lam: float = DEFAULT_LAMBDA,
) -> float:
    """Per-player potential of device n placed at ``candidate``, others fixed.

    Evaluated as the closed form: a load cross-term over all pairs of devices
    attached to the same BS, scaled by 1/(2 W_n), plus the received power of
    the strictly weaker members of the joined group.  The remaining terms of
    the closed form are independent of n's strategy and cancel from every
    difference, so they are dropped; this keeps the defining identity
    delta(potential) == delta(interference) exact.
    """
    m, g = candidate
    placed = assignment.with_move(n, m, g)
    gains = scenario.gains

    w_mbit = scenario.task_bits * BITS_TO_MBIT
    pair_sum = 0.0
    for j in range(scenario.n_bs):
        members = placed.attached(j)
        tot = float(np.sum(w_mbit[members]))
        sq = float(np.sum(w_mbit[members] ** 2))
        pair_sum += tot * tot - sq  # ordered pairs co-attached to BS j
    load_term = pair_sum / (2.0 * w_mbit[n])

    me = sic_key(n, gains[n, m, g])
    interf_w = sum(
        powers[k] * gains[k, m, g]
        for k in placed.group(m, g)
        if k != n and sic_key(k, gains[k, m, g]) > me
    )
    return lam * load_term + interf_w * W_TO_MW


def global_potential(
    assignment: Assignment,
    powers: np.ndarray,
    scenario: Scenario,
    lam: float = DEFAULT_LAMBDA,
) -> float:
    """Summed interference cost over all devices; the oracle's objective."""
    return sum(
        interference(n, assignment, powers, scenario, lam)
        for n in assignment.offloaders()
    )


@dataclass(frozen=True)
class DeviationReport:
    device: int
    from_strategy: tuple[int, int]
    to_strategy: tuple[int, int]
    delta_nu: float
    delta_phi: float


@dataclass
class MoveRecord:
    sweep: int
    device: int
    old_strategy: tuple[int, int]
    new_strategy: tuple[int, int]
    nu_before: float
    nu_after: float
    potential: float  # running potential after this move


@dataclass
class GameTrace:
    initial_potential: float
    moves: list[MoveRecord] = field(default_factory=list)
    sweep_total_interference: list[float] = field(default_factory=list)
    sweep_potential: list[float] = field(default_factory=list)
    candidate_evals: int = 0
    sweeps: int = 0
    n_strategic: int = 0

    @property
    def accepted_moves(self) -> int:
        return len(self.moves)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["sweep", "device", "old_strategy", "new_strategy", "nu_before", "nu_after", "potential"]
            )
            for mv in self.moves:
                writer.writerow(
                    [
                        mv.sweep,
                        mv.device,
                        f"{mv.old_strategy[0]}:{mv.old_strategy[1]}",
                        f"{mv.new_strategy[0]}:{mv.new_strategy[1]}",
                        repr(mv.nu_before),
                        repr(mv.nu_after),
                        repr(mv.potential),
                    ]
                )


class GameState:
    """Mutable solver state with incremental load and group bookkeeping."""

    def __init__(self, assignment: Assignment, powers: np.ndarray, scenario: Scenario, lam: float):
        self.assignment = assignment
        self.powers = powers
        self.scenario = scenario
        self.lam = lam
        self.iteration = 0
        self.load_bits = np.zeros(scenario.n_bs)
        self.groups: dict[tuple[int, int], set[int]] = {
            (m, g): set()
            for m in range(scenario.n_bs)
            for g in range(scenario.n_subchannels)
        }
        for n in assignment.offloaders():
            self.load_bits[assignment.bs[n]] += scenario.task_bits[n]
            self.groups[(int(assignment.bs[n]), int(assignment.ch[n]))].add(int(n))

    def cost(self, n: int, m: int, g: int) -> float:
        """Candidate cost of n at (m, g) given everyone else's position."""
        gains = self.scenario.gains
        me = sic_key(n, gains[n, m, g])
        interf_w = 0.0
        for k in self.groups[(m, g)]:
            if k != n and sic_key(k, gains[k, m, g]) > me:
                interf_w += self.powers[k] * gains[k, m, g]
        load = self.load_bits[m]
        if self.assignment.bs[n] == m:
            load -= self.scenario.task_bits[n]
        return interf_w * W_TO_MW + self.lam * load * BITS_TO_MBIT

    def move(self, n: int, m: int, g: int) -> None:
        old_m, old_g = int(self.assignment.bs[n]), int(self.assignment.ch[n])
        self.groups[(old_m, old_g)].discard(n)
        self.load_bits[old_m] -= self.scenario.task_bits[n]
        self.groups[(m, g)].add(n)
        self.load_bits[m] += self.scenario.task_bits[n]
        self.assignment.bs[n] = m
        self.assignment.ch[n] = g

    def recomputed_loads(self) -> np.ndarray:
        loads = np.zeros(self.scenario.n_bs)
        for n in self.assignment.offloaders():
            loads[self.assignment.bs[n]] += self.scenario.task_bits[n]
        return loads

    def total_interference(self, strategic) -> float:
        return sum(self.cost(n, int(self.assignment.bs[n]), int(self.assignment.ch[n])) for n in strategic)


def initial_assignment(scenario: Scenario, gated_local: np.ndarray) -> Assignment:
    """Deterministic start: strategic devices on their nearest BS, channel 0."""
    n = scenario.n_devices
    assignment = Assignment.all_local(n)
    nearest = scenario.nearest_bs()
    for i in range(n):
        if not gated_local[i]:
            assignment.bs[i] = nearest[i]
            assignment.ch[i] = 0
    return assignment


def best_response_assignment(
    scenario: Scenario,
    powers: np.ndarray,
    initial: Assignment | None = None,
    inner_rounds: int = 1,
    max_outer: int = 100,
    lam: float = DEFAULT_LAMBDA,
) -> tuple[Assignment, GameTrace]:
    """Sequential best-response over BS choice then subchannel choice.

    Devices meeting their deadline locally are pinned Local.  Every sweep,
    each strategic device first reselects its BS at its current subchannel,
    then reselects its subchannel at its chosen BS; a move is accepted only if
    it strictly lowers the device's cost.  Sweeps repeat until none changes
    anything, which is a Nash equilibrium of the strategic set.
    """
    if inner_rounds < 1:
        raise ValueError("inner_rounds must be >= 1")
    n_dev, n_bs, n_ch = scenario.n_devices, scenario.n_bs, scenario.n_subchannels
    gated = local_gating_mask(scenario)
    strategic = [n for n in range(n_dev) if not gated[n]]

    assignment = initial.copy() if initial is not None else initial_assignment(scenario, gated)
    nearest = scenario.nearest_bs()
    for n in range(n_dev):
        if gated[n]:
            assignment.bs[n], assignment.ch[n] = LOCAL, LOCAL
        elif assignment.is_local(n):
            # offloading is forced when the local deadline fails
            assignment.bs[n], assignment.ch[n] = nearest[n], 0

    state = GameState(assignment, powers, scenario, lam)
    running = state.total_interference(strategic)
    carry = 0.0  # compensated summation of the per-move decrements
    trace = GameTrace(initial_potential=running, n_strategic=len(strategic))

    for sweep in range(1, max_outer + 1):
        changed = False
        for _ in range(inner_rounds):
            for n in strategic:  # BS selection at the current subchannel
                g = int(state.assignment.ch[n])
                cur_m = int(state.assignment.bs[n])
                cur = state.cost(n, cur_m, g)
                best_m, best = cur_m, cur
                for m in range(n_bs):
                    trace.candidate_evals += 1
                    val = cur if m == cur_m else state.cost(n, m, g)
                    if val < best:
                        best_m, best = m, val
                if best < cur:
                    state.move(n, best_m, g)
                    delta = (best - cur) + carry
                    new_running = running + delta
                    carry = delta - (new_running - running)
                    running = new_running
                    trace.moves.append(
                        MoveRecord(sweep, n, (cur_m, g), (best_m, g), cur, best, running)
                    )
                    changed = True
        for _ in range(inner_rounds):
            for n in strategic:  # subchannel selection at the chosen BS
                m = int(state.assignment.bs[n])
                cur_g = int(state.assignment.ch[n])
                cur = state.cost(n, m, cur_g)
                best_g, best = cur_g, cur
                for g in range(n_ch):
                    trace.candidate_evals += 1
                    val = cur if g == cur_g else state.cost(n, m, g)
                    if val < best:
                        best_g, best = g, val
                if best < cur:
                    state.move(n, m, best_g)
                    delta = (best - cur) + carry
                    new_running = running + delta
                    carry = delta - (new_running - running)
                    running = new_running
                    trace.moves.append(
                        MoveRecord(sweep, n, (m, cur_g), (m, best_g), cur, best, running)
                    )
                    changed = True
        trace.sweeps = sweep
        trace.sweep_total_interference.append(state.total_interference(strategic))
        trace.sweep_potential.append(running)
        state.iteration = sweep
        if not changed:
            return state.assignment, trace

    raise ConvergenceError(
        f"no stable profile within {max_outer} sweeps "
        f"({trace.accepted_moves} accepted moves)",
        trace,
    )


def is_nash_equilibrium(
    assignment: Assignment,
    powers: np.ndarray,
    scenario: Scenario,
    lam: float = DEFAULT_LAMBDA,
    tol: float = 1e-12,
) -> tuple[bool, list[DeviationReport]]:
    """Exhaustively test every unilateral (BS, subchannel) deviation.

    Local devices are outside the strategic set and are not tested.  Returns
    all strictly improving deviations, each annotated with the matching
    potential change.
    """
    state = GameState(assignment.copy(), powers, scenario, lam)
    violations: list[DeviationReport] = []
    for n in assignment.offloaders():
        n = int(n)
        cur_m, cur_g = assignment.strategy(n)
        cur = state.cost(n, cur_m, cur_g)
        for m in range(scenario.n_bs):
            for g in range(scenario.n_subchannels):
                if (m, g) == (cur_m, cur_g):
                    continue
                alt = state.cost(n, m, g)
                if alt < cur - tol:
                    d_phi = potential(n, (m, g), assignment, powers, scenario, lam) - potential(
                        n, (cur_m, cur_g), assignment, powers, scenario, lam
                    )
                    violations.append(
                        DeviationReport(n, (cur_m, cur_g), (m, g), alt - cur, d_phi)
                    )
    return (not violations), violations


def brute_force_min_potential(
    scenario: Scenario,
    powers: np.ndarray,
    cap: int = 200_000,
    lam: float = DEFAULT_LAMBDA,
) -> Assignment:
    """Enumerate every gating-respecting profile; return the min-potential one.

    Intended as an oracle on tiny instances.  Ties go to the profile first in
    lexicographic (device, BS, subchannel) order.
    """
    n_dev, n_bs, n_ch = scenario.n_devices, scenario.n_bs, scenario.n_subchannels
    n_options = n_bs * n_ch + 1
    if n_options**n_dev > cap:
        raise OracleCapError(
            f"profile space {n_options}**{n_dev} exceeds cap {cap}"
        )
    gated = local_gating_mask(scenario)
    strategic = [n for n in range(n_dev) if not gated[n]]

    best_assignment = None
    best_value = math.inf
    options = [(m, g) for m in range(n_bs) for g in range(n_ch)]
    for profile in itertools.product(options, repeat=len(strategic)):
        assignment = Assignment.all_local(n_dev)
        for n, (m, g) in zip(strategic, profile):
            assignment.bs[n], assignment.ch[n] = m, g
        value = global_potential(assignment, powers, scenario, lam)
        if value < best_value:
            best_value = value
            best_assignment = assignment
    if best_assignment is None:  # no strategic devices: everyone local
        best_assignment = Assignment.all_local(n_dev)
    return best_assignment
