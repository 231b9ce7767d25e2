"""Physical and objective model: SIC throughput, delays, energy, feasibility.

Uplink NOMA decoding runs strongest-first within a (BS, subchannel) group, so
a device only sees interference from strictly weaker co-group members.  Equal
gains are ordered by ascending device id; the same tie-break is used in every
rate, interference, and surrogate expression so the weaker/stronger boundary
sets stay complementary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from nomamec.scenario import Scenario

LOCAL = -1

INF_DELAY = math.inf


class ContractViolation(ValueError):
    """An operation was called on a device whose strategy does not allow it."""


class Assignment:
    """Per-device strategy: Local, or offload to (BS m, subchannel g).

    Internally two int arrays, ``bs`` and ``ch``, with -1 marking Local.  Each
    device holds exactly one strategy by construction, so the multi-attach and
    group-overlap constraints hold structurally.
    """

    __slots__ = ("bs", "ch")

    def __init__(self, bs: np.ndarray, ch: np.ndarray):
        self.bs = np.asarray(bs, dtype=np.int64)
        self.ch = np.asarray(ch, dtype=np.int64)
        if self.bs.shape != self.ch.shape:
            raise ValueError("bs and ch arrays must have matching shape")
        bad = (self.bs == LOCAL) != (self.ch == LOCAL)
        if np.any(bad):
            raise ValueError(f"devices {np.nonzero(bad)[0].tolist()} mix Local and Offload parts")

    @classmethod
    def all_local(cls, n: int) -> "Assignment":
        return cls(np.full(n, LOCAL), np.full(n, LOCAL))

    def copy(self) -> "Assignment":
        return Assignment(self.bs.copy(), self.ch.copy())

    def with_move(self, n: int, m: int, g: int) -> "Assignment":
        out = self.copy()
        out.bs[n], out.ch[n] = m, g
        return out

    def with_local(self, n: int) -> "Assignment":
        out = self.copy()
        out.bs[n], out.ch[n] = LOCAL, LOCAL
        return out

    def is_local(self, n: int) -> bool:
        return self.bs[n] == LOCAL

    def strategy(self, n: int):
        """Return None for Local, else the (m, g) pair."""
        if self.is_local(n):
            return None
        return int(self.bs[n]), int(self.ch[n])

    def offloaders(self) -> np.ndarray:
        return np.nonzero(self.bs != LOCAL)[0]

    def group(self, m: int, g: int) -> list[int]:
        """Members of the NOMA group on subchannel g of BS m."""
        return np.nonzero((self.bs == m) & (self.ch == g))[0].tolist()

    def attached(self, m: int) -> np.ndarray:
        """Devices offloading to BS m on any subchannel."""
        return np.nonzero(self.bs == m)[0]

    def a_matrix(self, n_bs: int) -> np.ndarray:
        """Binary offloading indicators, shape (N, M)."""
        a = np.zeros((len(self.bs), n_bs), dtype=np.int8)
        off = self.offloaders()
        a[off, self.bs[off]] = 1
        return a

    def b_matrix(self, n_subchannels: int) -> np.ndarray:
        """Binary grouping indicators, shape (G, N)."""
        b = np.zeros((n_subchannels, len(self.ch)), dtype=np.int8)
        off = self.offloaders()
        b[self.ch[off], off] = 1
        return b

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Assignment)
            and np.array_equal(self.bs, other.bs)
            and np.array_equal(self.ch, other.ch)
        )

    def __hash__(self):
        return hash((self.bs.tobytes(), self.ch.tobytes()))

    def __repr__(self):
        return f"Assignment(bs={self.bs.tolist()}, ch={self.ch.tolist()})"


def sic_key(n: int, gain: float) -> tuple[float, int]:
    """Sort key for SIC decoding order: descending gain, then ascending id."""
    return (-gain, n)


def sic_order(group, m: int, g: int, gains: np.ndarray) -> list[int]:
    """Group members sorted into decoding order (best channel first)."""
    return sorted(group, key=lambda n: sic_key(n, gains[n, m, g]))


def weaker_members(n: int, group, m: int, g: int, gains: np.ndarray) -> list[int]:
    """Co-group members decoded after n, i.e. the ones n hears as interference."""
    me = sic_key(n, gains[n, m, g])
    return [k for k in group if k != n and sic_key(k, gains[k, m, g]) > me]


def throughput(n: int, assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> float:
    """Uplink rate of device n in bits/s under SIC decoding."""
    if assignment.is_local(n):
        raise ContractViolation(f"device {n} is Local and has no uplink throughput")
    m, g = assignment.strategy(n)
    group = assignment.group(m, g)
    interference = sum(
        powers[k] * scenario.gains[k, m, g] for k in weaker_members(n, group, m, g, scenario.gains)
    )
    sinr = powers[n] * scenario.gains[n, m, g] / (interference + scenario.noise_power_w)
    return scenario.radio.bandwidth_hz * math.log2(1.0 + sinr)


def local_delay(device) -> float:
    return device.task_bits / device.local_rate_bps


def local_delays(scenario: Scenario) -> np.ndarray:
    return scenario.task_bits / scenario.local_rate_bps


def computing_delay(n: int, assignment: Assignment, scenario: Scenario) -> float:
    """Serving delay at the MEC: full offloaded load at the BS over its rate."""
    if assignment.is_local(n):
        raise ContractViolation(f"device {n} is Local and has no MEC computing delay")
    m = int(assignment.bs[n])
    load = float(np.sum(scenario.task_bits[assignment.attached(m)]))
    return load / scenario.compute_rate_bps[m]


def transmission_delay(n: int, assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> float:
    rate = throughput(n, assignment, powers, scenario)
    if rate <= 0.0:
        return INF_DELAY
    return scenario.task_bits[n] / rate


def total_delay(n: int, assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> float:
    """End-to-end delay: local processing, or uplink plus MEC computing."""
    if assignment.is_local(n):
        return local_delay(scenario.devices[n])
    t_trans = transmission_delay(n, assignment, powers, scenario)
    if math.isinf(t_trans):
        return INF_DELAY
    return t_trans + computing_delay(n, assignment, scenario)


def transmission_energy(n: int, assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> float:
    """Uplink transmit energy p_n * (task / rate); zero for local devices.

    A zero-power offloader never completes, but radiates nothing; its energy
    is defined as 0 and the infinite delay carries the infeasibility.
    """
    if assignment.is_local(n) or powers[n] == 0.0:
        return 0.0
    rate = throughput(n, assignment, powers, scenario)
    if rate <= 0.0:
        return 0.0
    return powers[n] * scenario.task_bits[n] / rate


def system_total_delay(assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> float:
    return sum(total_delay(n, assignment, powers, scenario) for n in range(scenario.n_devices))


@dataclass
class DelayReport:
    """Per-device delay/energy breakdown plus the system objective."""

    device_ids: np.ndarray
    strategies: list
    transmission_delay_s: np.ndarray
    computing_delay_s: np.ndarray
    total_delay_s: np.ndarray
    energy_j: np.ndarray
    deadline_met: np.ndarray

    @property
    def total_delay_sum_s(self) -> float:
        return float(np.sum(self.total_delay_s))

    def to_csv_rows(self) -> list[dict]:
        rows = []
        for i, n in enumerate(self.device_ids):
            strat = self.strategies[i]
            rows.append(
                {
                    "device_id": int(n),
                    "strategy": "local" if strat is None else f"{strat[0]}:{strat[1]}",
                    "t_trans": repr(float(self.transmission_delay_s[i])),
                    "t_comp": repr(float(self.computing_delay_s[i])),
                    "t_total": repr(float(self.total_delay_s[i])),
                    "energy": repr(float(self.energy_j[i])),
                    "deadline_met": bool(self.deadline_met[i]),
                }
            )
        return rows

    def write_csv(self, path) -> None:
        rows = self.to_csv_rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)


def delay_report(assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> DelayReport:
    n_dev = scenario.n_devices
    t_trans = np.zeros(n_dev)
    t_comp = np.zeros(n_dev)
    t_total = np.zeros(n_dev)
    energy = np.zeros(n_dev)
    strategies = []
    for n in range(n_dev):
        strategies.append(assignment.strategy(n))
        if assignment.is_local(n):
            t_total[n] = local_delay(scenario.devices[n])
        else:
            t_trans[n] = transmission_delay(n, assignment, powers, scenario)
            t_comp[n] = computing_delay(n, assignment, scenario)
            t_total[n] = t_trans[n] + t_comp[n]
            energy[n] = transmission_energy(n, assignment, powers, scenario)
    met = t_total <= scenario.deadlines_s
    return DelayReport(
        device_ids=np.arange(n_dev),
        strategies=strategies,
        transmission_delay_s=t_trans,
        computing_delay_s=t_comp,
        total_delay_s=t_total,
        energy_j=energy,
        deadline_met=met,
    )


@dataclass(frozen=True)
class Violation:
    device: int
    constraint: str  # power_bound | deadline | multi_attach | group_overlap | energy
    detail: str


def validate(assignment: Assignment, powers: np.ndarray, scenario: Scenario) -> list[Violation]:
    """Check every problem constraint and report all violations found.

    The deadline check is inclusive (T_n == D_n is feasible).  Multi-attach
    and overlap are impossible in the Assignment encoding but re-checked on
    the derived indicator matrices.
    """
    findings: list[Violation] = []
    p_max = scenario.max_power_w
    for n in range(scenario.n_devices):
        if powers[n] < 0 or powers[n] > p_max:
            findings.append(
                Violation(n, "power_bound", f"p={powers[n]:.6g} W outside [0, {p_max:.6g}]")
            )

    report = delay_report(assignment, powers, scenario)
    for n in range(scenario.n_devices):
        if report.total_delay_s[n] > scenario.deadlines_s[n]:
            findings.append(
                Violation(
                    n,
                    "deadline",
                    f"T={report.total_delay_s[n]:.6g} s > D={scenario.deadlines_s[n]:.6g} s",
                )
            )

    a = assignment.a_matrix(scenario.n_bs)
    if np.any(a.sum(axis=1) > 1):
        for n in np.nonzero(a.sum(axis=1) > 1)[0]:
            findings.append(Violation(int(n), "multi_attach", "device attached to several BSs"))
    b = assignment.b_matrix(scenario.n_subchannels)
    if np.any(b.sum(axis=0) > 1):
        for n in np.nonzero(b.sum(axis=0) > 1)[0]:
            findings.append(Violation(int(n), "group_overlap", "device in several groups"))
    # Cross-check: group sets derived from (bs, ch) must partition offloaders.
    seen = set()
    for m in range(scenario.n_bs):
        for g in range(scenario.n_subchannels):
            for k in assignment.group(m, g):
                if k in seen:
                    findings.append(Violation(int(k), "group_overlap", "device in several groups"))
                seen.add(k)

    for n in assignment.offloaders():
        e = report.energy_j[n]
        if e > scenario.energy_budget_j[n]:
            findings.append(
                Violation(
                    int(n),
                    "energy",
                    f"E={e:.6g} J > E_th={scenario.energy_budget_j[n]:.6g} J",
                )
            )
    return findings
