import numpy as np
import pytest

from nomamec.scenario import BaseStation, Device, RadioConfig, Scenario


def make_scenario(
    gains,
    task_bits=10e6,
    deadlines=1.0,
    local_rates=5e6,
    energy_budgets=1e9,
    compute_rates=10e9,
    bandwidth_hz=410e3,
    noise_density_dbm_hz=-174.0,
    max_power_dbm=27.8,
    positions=None,
    bs_positions=None,
    seed=0,
):
    """Build a synthetic scenario with explicit channel gains.

    Scalar parameters broadcast across devices/BSs.  Energy budgets default
    to effectively unconstrained so unit tests can isolate one mechanism.
    """
    gains = np.asarray(gains, dtype=float)
    n, m, g = gains.shape
    task_bits = np.broadcast_to(np.asarray(task_bits, dtype=float), (n,))
    deadlines = np.broadcast_to(np.asarray(deadlines, dtype=float), (n,))
    local_rates = np.broadcast_to(np.asarray(local_rates, dtype=float), (n,))
    energy_budgets = np.broadcast_to(np.asarray(energy_budgets, dtype=float), (n,))
    compute_rates = np.broadcast_to(np.asarray(compute_rates, dtype=float), (m,))
    if positions is None:
        positions = [(100.0 * (i + 1), 100.0) for i in range(n)]
    if bs_positions is None:
        bs_positions = [(250.0 + 500.0 * (j % 2), 250.0 + 500.0 * (j // 2)) for j in range(m)]
    radio = RadioConfig(
        bandwidth_hz=bandwidth_hz,
        noise_density_dbm_hz=noise_density_dbm_hz,
        max_power_dbm=max_power_dbm,
    )
    devices = tuple(
        Device(
            id=i,
            position=positions[i],
            task_bits=task_bits[i],
            deadline_s=deadlines[i],
            local_rate_bps=local_rates[i],
            energy_budget_j=energy_budgets[i],
        )
        for i in range(n)
    )
    stations = tuple(
        BaseStation(id=j, position=bs_positions[j], compute_rate_bps=compute_rates[j], subchannel_count=g)
        for j in range(m)
    )
    return Scenario(
        devices=devices,
        base_stations=stations,
        gains=gains,
        radio=radio,
        noise_power_w=radio.noise_power_w,
        seed=seed,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
