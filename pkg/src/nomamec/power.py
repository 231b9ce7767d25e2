"""Power allocation via majorization-minimization on the uplink sum rate.

The non-concave sum rate is replaced, once per outer iteration, by a tangent
concave surrogate: each per-device rate keeps its own log term exact and
linearizes the interference log around the previous power vector.  Because
-log is convex, the linearization under-estimates it, so the surrogate is a
global minorant with matching value and gradient at the anchor; maximizing it
can never decrease the true sum rate.

The surrogate problem decomposes by (BS, subchannel) group and is solved for
all groups at once by projected Newton ascent with per-group Armijo line
searches, with the deadline and energy rate floors handled by a log barrier
whose weight shrinks geometrically.  Box bounds are enforced by projection,
so returned powers respect them exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from nomamec.model import Assignment, sic_key
from nomamec.scenario import Scenario

LN2 = math.log(2.0)

BARRIER_MU_START = 1.0
BARRIER_MU_END = 1e-8
BARRIER_MU_SHRINK = 0.2
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
MAX_STEPS_PER_STAGE = 200
KKT_TOL = 1e-6
VIOLATION_TOL = 1e-8

DEFAULT_T_MAX = 50
ENERGY_MARGIN = 1e-6  # relative slack kept under the energy budget at init
LIVENESS_FRACTION = 1.0  # unenforceable-deadline devices keep at least this share of their anchor rate


@dataclass
class GroupStructure:
    """Padded per-group SIC ordering, strongest member first."""

    keys: list  # (m, g) per group row
    ids: np.ndarray  # device ids, shape (R, K), -1 pads
    gains: np.ndarray  # linear gains on the group's channel, shape (R, K)
    valid: np.ndarray  # member mask, shape (R, K)

    @property
    def n_groups(self) -> int:
        return self.ids.shape[0]

    def gather(self, vec: np.ndarray) -> np.ndarray:
        out = vec[np.clip(self.ids, 0, None)]
        return np.where(self.valid, out, 0.0)


def group_structure(assignment: Assignment, scenario: Scenario) -> GroupStructure | None:
    groups = []
    for m in range(scenario.n_bs):
        for g in range(scenario.n_subchannels):
            members = assignment.group(m, g)
            if members:
                order = sorted(members, key=lambda n: sic_key(n, scenario.gains[n, m, g]))
                groups.append(((m, g), order))
    if not groups:
        return None
    kmax = max(len(order) for _, order in groups)
    r = len(groups)
    ids = np.full((r, kmax), -1, dtype=np.int64)
    gains = np.zeros((r, kmax))
    for i, ((m, g), order) in enumerate(groups):
        ids[i, : len(order)] = order
        gains[i, : len(order)] = scenario.gains[order, m, g]
    return GroupStructure(
        keys=[key for key, _ in groups], ids=ids, gains=gains, valid=ids >= 0
    )


def _received(structure: GroupStructure, powers: np.ndarray) -> np.ndarray:
    return structure.gather(powers) * structure.gains


def _suffix_sums(recv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive and strictly-weaker received power sums along the SIC order."""
    incl = np.cumsum(recv[:, ::-1], axis=1)[:, ::-1]
    return incl, incl - recv


def true_sum_rate(assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> float:
    """Sum uplink rate in bits/s, computed as the difference-of-logs form."""
    structure = group_structure(assignment, scenario)
    if structure is None:
        return 0.0
    sigma2 = scenario.noise_power_w
    recv = _received(structure, powers)
    incl, strict = _suffix_sums(recv)
    per_hz = np.log2(sigma2 + incl) - np.log2(sigma2 + strict)
    return float(scenario.radio.bandwidth_hz * np.sum(per_hz[structure.valid]))


def true_rates(assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Per-device uplink rate in bits/s (zero for local devices)."""
    out = np.zeros(scenario.n_devices)
    structure = group_structure(assignment, scenario)
    if structure is None:
        return out
    sigma2 = scenario.noise_power_w
    recv = _received(structure, powers)
    incl, strict = _suffix_sums(recv)
    per_hz = np.log2(sigma2 + incl) - np.log2(sigma2 + strict)
    out[structure.ids[structure.valid]] = (
        scenario.radio.bandwidth_hz * per_hz[structure.valid]
    )
    return out


def _surrogate_per_hz(
    structure: GroupStructure,
    powers: np.ndarray,
    anchor_strict: np.ndarray,
    anchor_mid_log: np.ndarray,
    sigma2: float,
) -> np.ndarray:
    recv = _received(structure, powers)
    incl, strict = _suffix_sums(recv)
    lin = (strict - (anchor_strict - sigma2)) / anchor_strict
    return np.log2(sigma2 + incl) - anchor_mid_log - lin / LN2


def surrogate_sum_rate(
    assignment: Assignment, powers: np.ndarray, p_prev: np.ndarray, scenario: Scenario
) -> float:
    """Tangent-surrogate sum rate in bits/s, anchored at ``p_prev``."""
    structure = group_structure(assignment, scenario)
    if structure is None:
        return 0.0
    sigma2 = scenario.noise_power_w
    _, strict_prev = _suffix_sums(_received(structure, p_prev))
    anchor_strict = sigma2 + strict_prev
    anchor_mid_log = np.log2(anchor_strict)
    vals = _surrogate_per_hz(structure, powers, anchor_strict, anchor_mid_log, sigma2)
    return float(scenario.radio.bandwidth_hz * np.sum(vals[structure.valid]))


@dataclass
class FloorSet:
    """Per-device minimum-rate requirements induced by deadlines and budgets."""

    deadline_floor_bps: np.ndarray  # nan where no offload floor applies
    deadline_infeasible: np.ndarray  # True where T_comp >= deadline
    energy_slope_bps_per_w: np.ndarray  # W_n / E_th: rate needed per watt spent


def constraint_floors(assignment: Assignment, scenario: Scenario) -> FloorSet:
    n = scenario.n_devices
    floor = np.full(n, np.nan)
    infeasible = np.zeros(n, dtype=bool)
    slope = np.zeros(n)
    loads = np.zeros(scenario.n_bs)
    for i in assignment.offloaders():
        loads[assignment.bs[i]] += scenario.task_bits[i]
    for i in assignment.offloaders():
        i = int(i)
        t_comp = loads[assignment.bs[i]] / scenario.compute_rate_bps[assignment.bs[i]]
        budget = scenario.deadlines_s[i] - t_comp
        if budget <= 0:
            infeasible[i] = True
        else:
            floor[i] = scenario.task_bits[i] / budget
        slope[i] = scenario.task_bits[i] / scenario.energy_budget_j[i]
    return FloorSet(floor, infeasible, slope)


@dataclass
class SurrogateProblem:
    """One concave subproblem: fixed grouping, anchor, floors, box."""

    structure: GroupStructure
    p_prev: np.ndarray
    sigma2: float
    bandwidth_hz: float
    p_max: float
    n_devices: int
    anchor_strict: np.ndarray  # sigma^2 + weaker received power at the anchor
    anchor_mid_log: np.ndarray
    floor_per_hz: np.ndarray  # deadline floors on the (R, K) grid
    enforce_deadline: np.ndarray
    slope_per_hz_w: np.ndarray  # energy slopes on the grid, per Hz per watt
    enforce_energy: np.ndarray
    dropped_deadline: list[int] = field(default_factory=list)
    dropped_energy: list[int] = field(default_factory=list)
    strict: bool = False
    mask_ge: np.ndarray = field(default=None, repr=False)  # q at least as weak as n
    mask_gt: np.ndarray = field(default=None, repr=False)  # q strictly weaker
    min_idx: np.ndarray = field(default=None, repr=False)  # elementwise min of indices
    any_deadline: bool = False
    any_energy: bool = False

    def __post_init__(self):
        k = self.structure.ids.shape[1]
        if self.mask_ge is None:
            object.__setattr__(self, "mask_ge", np.triu(np.ones((k, k))))
            object.__setattr__(self, "mask_gt", np.triu(np.ones((k, k)), 1))
            object.__setattr__(self, "min_idx", np.minimum.outer(np.arange(k), np.arange(k)))
        object.__setattr__(self, "any_deadline", bool(np.any(self.enforce_deadline)))
        object.__setattr__(self, "any_energy", bool(np.any(self.enforce_energy)))


@dataclass
class SolverReport:
    iterations: int
    final_objective: float  # bits/s
    max_violation: float
    kkt_residual: float
    status: str  # converged | max_iter | infeasible
    infeasible_devices: list[int] = field(default_factory=list)


def build_surrogate(
    assignment: Assignment,
    scenario: Scenario,
    p_prev: np.ndarray,
    strict: bool = False,
    liveness_fraction: float = LIVENESS_FRACTION,
    liveness_ref_bps: np.ndarray | None = None,
) -> SurrogateProblem | None:
    """Assemble the tangent subproblem at ``p_prev``.

    Deadline floors that cannot hold for any power (computing delay alone
    exceeds the deadline, or the optimistic zero-interference bound is below
    the floor) and floors infeasible at the anchor are dropped and reported;
    the same applies to energy constraints already violated at the anchor.
    With ``strict`` set the drops are instead surfaced as infeasibility.
    """
    structure = group_structure(assignment, scenario)
    if structure is None:
        return None
    sigma2 = scenario.noise_power_w
    b = scenario.radio.bandwidth_hz
    p_max = scenario.max_power_w

    _, strict_prev = _suffix_sums(_received(structure, p_prev))
    anchor_strict = sigma2 + strict_prev
    anchor_mid_log = np.log2(anchor_strict)
    anchor_rate = _surrogate_per_hz(structure, p_prev, anchor_strict, anchor_mid_log, sigma2)

    floors = constraint_floors(assignment, scenario)
    floor_grid = structure.gather(np.nan_to_num(floors.deadline_floor_bps, nan=0.0)) / b
    has_floor = structure.gather((~np.isnan(floors.deadline_floor_bps)).astype(float)) > 0
    slope_grid = structure.gather(floors.energy_slope_bps_per_w) / b

    # optimistic per-device cap: own power at the box top, weaker members muted
    own_top = np.log2(sigma2 + p_max * structure.gains)
    optimistic = own_top - anchor_mid_log + (anchor_strict - sigma2) / (anchor_strict * LN2)

    enforce_deadline = (
        has_floor
        & (floor_grid <= optimistic)
        & (anchor_rate > floor_grid)
    )
    dropped_deadline = sorted(
        int(i) for i in structure.ids[structure.valid & has_floor & ~enforce_deadline]
    )
    structurally = [int(i) for i in np.nonzero(floors.deadline_infeasible)[0]]
    dropped_deadline = sorted(set(dropped_deadline) | set(structurally))

    # Devices whose deadline floor cannot be enforced would otherwise have no
    # rate requirement at all, and the sum-rate objective may silence them
    # entirely (infinite delay).  They keep a liveness floor just under their
    # anchor rate instead, so a struggling device's rate can only ratchet up.
    if liveness_ref_bps is None:
        ref_rate = anchor_rate
    else:
        ref_rate = structure.gather(liveness_ref_bps) / b
    live_floor = np.minimum(ref_rate * liveness_fraction, anchor_rate) * (1.0 - 1e-6)
    liveness = structure.valid & ~enforce_deadline & (live_floor > 0)
    floor_grid = np.where(liveness, live_floor, floor_grid)
    enforce_deadline = enforce_deadline | liveness

    energy_slack = anchor_rate - structure.gather(p_prev) * slope_grid
    enforce_energy = structure.valid & (energy_slack > 0)
    dropped_energy = sorted(int(i) for i in structure.ids[structure.valid & ~enforce_energy])

    return SurrogateProblem(
        structure=structure,
        p_prev=np.array(p_prev, dtype=float),
        sigma2=sigma2,
        bandwidth_hz=b,
        p_max=p_max,
        n_devices=scenario.n_devices,
        anchor_strict=anchor_strict,
        anchor_mid_log=anchor_mid_log,
        floor_per_hz=floor_grid,
        enforce_deadline=enforce_deadline,
        slope_per_hz_w=slope_grid,
        enforce_energy=enforce_energy,
        dropped_deadline=dropped_deadline,
        dropped_energy=dropped_energy,
        strict=strict,
    )


def _grid_surrogate(problem: SurrogateProblem, p_grid: np.ndarray) -> np.ndarray:
    recv = p_grid * problem.structure.gains
    incl, strict = _suffix_sums(recv)
    lin = (strict - (problem.anchor_strict - problem.sigma2)) / problem.anchor_strict
    return np.log2(problem.sigma2 + incl) - problem.anchor_mid_log - lin / LN2


def _grid_values(problem: SurrogateProblem, p_grid: np.ndarray, mu: float):
    """Per-group barrier objective in per-Hz units; -inf rows off the interior."""
    st = problem.structure
    rate = _grid_surrogate(problem, p_grid)
    slack_d = rate - problem.floor_per_hz
    slack_e = rate - p_grid * problem.slope_per_hz_w
    value = np.sum(np.where(st.valid, rate, 0.0), axis=1)
    bad = np.any(problem.enforce_deadline & (slack_d <= 0), axis=1) | np.any(
        problem.enforce_energy & (slack_e <= 0), axis=1
    )
    if mu > 0:
        value = value + mu * np.sum(
            np.where(problem.enforce_deadline, np.log(np.where(slack_d > 0, slack_d, 1.0)), 0.0),
            axis=1,
        )
        value = value + mu * np.sum(
            np.where(problem.enforce_energy, np.log(np.where(slack_e > 0, slack_e, 1.0)), 0.0),
            axis=1,
        )
    value = np.where(bad, -math.inf, value)
    return value, rate, slack_d, slack_e


def _grid_newton(problem: SurrogateProblem, p_grid: np.ndarray, mu: float, slack_d, slack_e):
    """Gradient and exact per-group Newton direction of the barrier objective.

    Group Hessians are K x K and assemble from SIC-order prefix sums, so a
    batched solve gives the full Newton step for every group at once.
    Variables pinned at a box bound with the gradient pointing outward are
    removed from the system so the remaining step is undistorted.
    """
    st = problem.structure
    sigma2 = problem.sigma2
    k = st.ids.shape[1]
    recv = p_grid * st.gains
    incl, _ = _suffix_sums(recv)
    inv_incl = np.where(st.valid, 1.0 / (sigma2 + incl), 0.0)
    inv_anchor = np.where(st.valid, 1.0 / problem.anchor_strict, 0.0)

    # objective gradient, via prefix sums over the SIC order
    a = np.cumsum(inv_incl, axis=1)
    bexc = np.cumsum(inv_anchor, axis=1) - inv_anchor
    grad = st.gains * (a - bexc) / LN2

    gg = st.gains[:, :, None] * st.gains[:, None, :]
    # curvature weights accumulated along the decoding order; H[q, q'] only
    # sees rates of members at least as strong as both q and q'
    curv_w = inv_incl**2
    hess = -(gg * np.cumsum(curv_w, axis=1)[:, problem.min_idx]) / LN2

    if problem.any_deadline or problem.any_energy:
        drate = (
            st.gains[:, None, :]
            * (problem.mask_ge[None] * inv_incl[:, :, None] - problem.mask_gt[None] * inv_anchor[:, :, None])
            / LN2
        )
        if problem.any_deadline:
            w1 = np.where(problem.enforce_deadline, 1.0 / np.where(slack_d > 0, slack_d, 1.0), 0.0)
            grad = grad + mu * np.einsum("rn,rnq->rq", w1, drate)
            hess = hess - mu * gg * np.cumsum(w1 * curv_w, axis=1)[:, problem.min_idx] / LN2
            hess = hess - mu * np.einsum("rn,rnq,rnp->rqp", w1**2, drate, drate)
        if problem.any_energy:
            dslack = drate.copy()
            idx = np.arange(k)
            dslack[:, idx, idx] -= problem.slope_per_hz_w
            w1 = np.where(problem.enforce_energy, 1.0 / np.where(slack_e > 0, slack_e, 1.0), 0.0)
            grad = grad + mu * np.einsum("rn,rnq->rq", w1, dslack)
            hess = hess - mu * gg * np.cumsum(w1 * curv_w, axis=1)[:, problem.min_idx] / LN2
            hess = hess - mu * np.einsum("rn,rnq,rnp->rqp", w1**2, dslack, dslack)

    grad = np.where(st.valid, grad, 0.0)
    blocked = (p_grid <= 0.0) & (grad <= 0.0) | (p_grid >= problem.p_max) & (grad >= 0.0)
    free = st.valid & ~blocked
    grad_free = np.where(free, grad, 0.0)
    out = ~free[:, :, None] | ~free[:, None, :]
    neg_h = np.where(out, 0.0, -hess)
    idx = np.arange(k)
    diag = neg_h[:, idx, idx]
    damp = 1e-9 * np.maximum(diag.max(axis=1, keepdims=True), 1e-300)
    neg_h[:, idx, idx] = np.where(free, diag + damp, 1.0)
    try:
        direction = np.linalg.solve(neg_h, grad_free[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        direction = grad_free / np.maximum(np.abs(diag), 1e-300)
    return grad, np.where(free, direction, 0.0)


def _mu_path(mu_start: float = BARRIER_MU_START) -> list[float]:
    path = []
    mu = mu_start
    while mu > BARRIER_MU_END:
        path.append(mu)
        mu *= BARRIER_MU_SHRINK
    path.append(BARRIER_MU_END)
    return path


def solve_surrogate(
    problem: SurrogateProblem, mu_start: float = BARRIER_MU_START
) -> tuple[np.ndarray, SolverReport]:
    """Maximize the concave surrogate over box and floor constraints.

    Projected Newton ascent with per-group Armijo backtracking along the
    shrinking barrier path; groups are independent, so each keeps its own
    step size and freezes once stationary.  Box bounds hold exactly by
    projection; floors stay strictly feasible through the barrier.
    """
    st = problem.structure
    if problem.strict and (problem.dropped_deadline or problem.dropped_energy):
        bad = sorted(set(problem.dropped_deadline) | set(problem.dropped_energy))
        rate = _surrogate_per_hz(
            st, problem.p_prev, problem.anchor_strict, problem.anchor_mid_log, problem.sigma2
        )
        return problem.p_prev.copy(), SolverReport(
            iterations=0,
            final_objective=float(np.sum(rate[st.valid])) * problem.bandwidth_hz,
            max_violation=math.inf,
            kkt_residual=math.inf,
            status="infeasible",
            infeasible_devices=bad,
        )

    p_grid = np.where(st.valid, np.clip(st.gather(problem.p_prev), 0.0, problem.p_max), 0.0)
    steps = 0
    kkt_rows = np.zeros(st.n_groups)
    for mu in _mu_path(mu_start):
        value, rate, slack_d, slack_e = _grid_values(problem, p_grid, mu)
        active = np.ones(st.n_groups, dtype=bool)
        for _ in range(MAX_STEPS_PER_STAGE):
            grad, direction = _grid_newton(problem, p_grid, mu, slack_d, slack_e)
            target = np.clip(p_grid + direction, 0.0, problem.p_max)
            kkt_rows = np.max(np.abs(target - p_grid), axis=1) / problem.p_max
            # Newton-decrement stop: achievable first-order gain per group
            decrement = np.sum(grad * (target - p_grid), axis=1)
            stage_tol = (1e-10 + 1e-5 * mu) * (1.0 + np.abs(value))
            active &= decrement > stage_tol
            if not np.any(active):
                break
            t = np.where(active, 1.0, 0.0)
            steps += 1
            for _ in range(60):  # row-wise Armijo backtracking
                candidate = np.clip(p_grid + t[:, None] * direction, 0.0, problem.p_max)
                gain = np.sum(grad * (candidate - p_grid), axis=1)
                cand_value, cand_rate, cand_sd, cand_se = _grid_values(problem, candidate, mu)
                trying = active & (t > 1e-14)
                ok = trying & (gain > 0.0) & (cand_value >= value + ARMIJO_C * gain)
                if np.any(ok):
                    p_grid = np.where(ok[:, None], candidate, p_grid)
                    value = np.where(ok, cand_value, value)
                    rate = np.where(ok[:, None], cand_rate, rate)
                    slack_d = np.where(ok[:, None], cand_sd, slack_d)
                    slack_e = np.where(ok[:, None], cand_se, slack_e)
                stalled = trying & (gain <= 0.0)
                active &= ~stalled  # stationary within the box
                remaining = trying & ~ok & ~stalled
                if not np.any(remaining):
                    break
                t = np.where(remaining, t * ARMIJO_SHRINK, 0.0)
                active &= (t > 1e-14) | ~remaining

    value, rate, slack_d, slack_e = _grid_values(problem, p_grid, 0.0)
    viol_d = np.maximum(0.0, -slack_d[problem.enforce_deadline])
    viol_e = np.maximum(0.0, -slack_e[problem.enforce_energy])
    max_violation = float(max(viol_d.max(initial=0.0), viol_e.max(initial=0.0)))
    kkt = float(np.max(kkt_rows, initial=0.0))
    status = "converged" if (kkt <= KKT_TOL and max_violation <= VIOLATION_TOL) else "max_iter"
    powers = problem.p_prev.copy()
    powers[st.ids[st.valid]] = p_grid[st.valid]
    return np.clip(powers, 0.0, problem.p_max), SolverReport(
        iterations=steps,
        final_objective=float(np.sum(value)) * problem.bandwidth_hz,
        max_violation=max_violation,
        kkt_residual=kkt,
        status=status,
    )


def _rate_per_hz(p_own: float, gain: float, interf_w: float, sigma2: float) -> float:
    return math.log2(1.0 + p_own * gain / (sigma2 + interf_w))


def _transmit_energy_j(p_own, gain, interf_w, sigma2, task_bits, bandwidth_hz) -> float:
    rate = bandwidth_hz * _rate_per_hz(p_own, gain, interf_w, sigma2)
    return p_own * task_bits / rate if rate > 0 else math.inf


def default_power_init(
    assignment: Assignment, scenario: Scenario
) -> tuple[np.ndarray, list[int], list[int]]:
    """Box-top powers, bisected down per device until energy budgets hold.

    Bisection runs weakest member first inside each group, since a member's
    transmit energy depends on its own power and the (already fixed) weaker
    received powers only.  Returns (powers, energy-infeasible ids,
    deadline-infeasible ids); local devices get zero power.  Deterministic.
    """
    n = scenario.n_devices
    sigma2 = scenario.noise_power_w
    b = scenario.radio.bandwidth_hz
    p_max = scenario.max_power_w
    p = np.zeros(n)
    energy_bad: list[int] = []

    structure = group_structure(assignment, scenario)
    if structure is None:
        return p, energy_bad, []
    floors = constraint_floors(assignment, scenario)
    deadline_bad = [int(i) for i in np.nonzero(floors.deadline_infeasible)[0]]

    for r in range(structure.n_groups):
        order = [int(i) for i in structure.ids[r][structure.valid[r]]]
        gains = structure.gains[r][structure.valid[r]]
        interf = 0.0
        for j in range(len(order) - 1, -1, -1):
            dev, gain = order[j], gains[j]
            budget = scenario.energy_budget_j[dev] * (1.0 - ENERGY_MARGIN)
            task = scenario.task_bits[dev]
            if _transmit_energy_j(p_max, gain, interf, sigma2, task, b) <= budget:
                p[dev] = p_max
            elif _transmit_energy_j(1e-9 * p_max, gain, interf, sigma2, task, b) > budget:
                p[dev] = p_max  # no positive power fits; keep delay low, report it
                energy_bad.append(dev)
            else:
                lo, hi = 1e-9 * p_max, p_max
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if _transmit_energy_j(mid, gain, interf, sigma2, task, b) > budget:
                        hi = mid
                    else:
                        lo = mid
                p[dev] = lo
            interf += p[dev] * gain
    return p, sorted(set(energy_bad)), sorted(set(deadline_bad))


@dataclass
class PowerTrace:
    rows: list = field(default_factory=list)  # (iter, surrogate, true, violation, steps)
    dropped_deadline: list[int] = field(default_factory=list)
    dropped_energy: list[int] = field(default_factory=list)
    converged: bool = False

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "surrogate_obj", "true_obj", "max_violation", "step_count"])
            for row in self.rows:
                writer.writerow([row[0]] + [repr(v) for v in row[1:4]] + [row[4]])


class PowerInfeasibleError(RuntimeError):
    def __init__(self, report: SolverReport):
        super().__init__(f"surrogate subproblem infeasible for devices {report.infeasible_devices}")
        self.report = report


def mm_power_allocation(
    assignment: Assignment,
    scenario: Scenario,
    p_init: np.ndarray | None = None,
    eps: float | None = None,
    t_max: int = DEFAULT_T_MAX,
    strict: bool = False,
    liveness_fraction: float = LIVENESS_FRACTION,
) -> tuple[np.ndarray, PowerTrace]:
    """Iterate surrogate solves until the summed surrogate objective settles.

    Stops when consecutive surrogate objectives differ by at most ``eps``
    (default 1e-4 x bandwidth) or after ``t_max`` rounds.  The true sum rate
    is non-decreasing across rounds by the minorant property.
    """
    if eps is None:
        eps = 1e-4 * scenario.radio.bandwidth_hz
    if eps <= 0:
        raise ValueError("eps must be positive")
    trace = PowerTrace()
    if p_init is None:
        p, energy_bad, deadline_bad = default_power_init(assignment, scenario)
        trace.dropped_energy.extend(energy_bad)
        trace.dropped_deadline.extend(deadline_bad)
    else:
        p = np.clip(np.asarray(p_init, dtype=float), 0.0, scenario.max_power_w)

    if len(assignment.offloaders()) == 0:
        trace.converged = True
        return np.zeros(scenario.n_devices), trace

    liveness_ref = true_rates(assignment, p, scenario)
    prev_obj = None
    for it in range(1, t_max + 1):
        problem = build_surrogate(
            assignment, scenario, p, strict=strict,
            liveness_fraction=liveness_fraction, liveness_ref_bps=liveness_ref,
        )
        # re-solves start from a warm interior point, so the barrier path can
        # resume near its end instead of re-centering from scratch
        p_new, report = solve_surrogate(problem, mu_start=BARRIER_MU_START if it == 1 else 1e-5)
        if report.status == "infeasible":
            raise PowerInfeasibleError(report)
        true_obj = true_sum_rate(assignment, p_new, scenario)
        trace.rows.append((it, report.final_objective, true_obj, report.max_violation, report.iterations))
        trace.dropped_deadline = sorted(set(trace.dropped_deadline) | set(problem.dropped_deadline))
        trace.dropped_energy = sorted(set(trace.dropped_energy) | set(problem.dropped_energy))
        p = p_new
        if prev_obj is not None and abs(report.final_objective - prev_obj) <= eps:
            trace.converged = True
            break
        prev_obj = report.final_objective
    return p, trace
