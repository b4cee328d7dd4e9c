"""Seeded desk-scale sweeps behind ``reproduce``.

Every runner maps one trial to a dict {scheme: value}; trials draw their
randomness from SeedSequence([master seed, trial]) so a trial's scenario
is shared across the sweep values (paired comparisons) and the table does
not depend on how trials are scheduled.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from ..channel import Scenario, WidebandConfig
from ..geometry import ArrayLayout, Orientation, RotationConstraint
from ..radiation import CosinePattern
from ..units import SPEED_OF_LIGHT, dbm_to_watt, watt_to_dbm
from .config import ExperimentConfig
from .results import ResultTable

UNITS = {
    "received_power_dBm": "dBm",
    "min_rate_bps_hz": "bit/s/Hz",
    "sum_rate_bps_hz": "bit/s/Hz",
    "min_echo_power_dBm": "dBm",
    "nmse_dB": "dB",
}


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _map(func, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


def _wavelength(p) -> float:
    return SPEED_OF_LIGHT / p["carrier_frequency"]


def _random_pointing(rng, n, theta_max):
    from ..estimate.schedule import random_cap

    return Orientation.from_pointing(random_cap(rng, (n,), theta_max))


def _base(p, layout, users, **kw) -> Scenario:
    return Scenario(p["carrier_frequency"], layout, users, noise_power=float(dbm_to_watt(p["noise_power_dbm"])),
                    tx_power=float(dbm_to_watt(p["tx_power_dbm"])), pattern=CosinePattern(p["rho"]),
                    constraint=RotationConstraint(theta_max=p["theta_max"]), **kw)


# --- single-user received power (fig11, custom) ----------------------------------------

def miso_scenario(p, n: int) -> Scenario:
    a = np.deg2rad(p["user_offset_deg"])
    d = p["user_distance"]
    lay = ArrayLayout.ula(int(n), p["spacing"] * _wavelength(p))
    return _base(p, lay, [[d * np.cos(a), d * np.sin(a), 0.0]])


def _miso_trial(trial, p, value, name, seed):
    from ..optimize import fixed_orientations, optimal_pointing_miso, snr_at

    q = dict(p)
    n = int(value) if name == "N" else 16
    if name != "N":
        q[name] = float(value)
    s = miso_scenario(q, n)
    noise = s.noise_power
    out = {"random": snr_at(s, _random_pointing(trial_rng(seed, trial), n, q["theta_max"])) * noise}
    if trial == 0:
        out["RA"] = optimal_pointing_miso(s).objective * noise
        out["fixed"] = snr_at(s, fixed_orientations(n)) * noise
    with np.errstate(divide="ignore"):  # an element turned away from the user receives nothing
        return {k: float(watt_to_dbm(v)) for k, v in out.items()}


# --- multi-user uplink (fig12, fig13) ------------------------------------------------

def multiuser_scenario(p, rng, rho=None) -> tuple[Scenario, Orientation]:
    """Four users around broadside on a 4 x 4 UPA with scatterer clusters near the users."""
    k = int(p["users"])
    alpha = np.deg2rad(p["user_offset_deg"])
    d = rng.uniform(30, 50, k)
    phis = np.deg2rad(45 + 360 / k * np.arange(k))
    u = np.stack([d * np.cos(alpha), d * np.sin(alpha) * np.cos(phis), d * np.sin(alpha) * np.sin(phis)], 1)
    n_s = int(p["scatterers"])
    owner = rng.integers(0, k, n_s)
    sc = u[owner] + rng.normal(0, 5, (n_s, 3))
    rcs = p["rcs_std"] * (rng.normal(size=n_s) + 1j * rng.normal(size=n_s)) / np.sqrt(2)
    lay = ArrayLayout.upa(4, 4, p["spacing"] * _wavelength(p))
    q = dict(p, rho=p["rho"] if rho is None else rho)
    s = _base(q, lay, u, scatterers=sc, rcs=rcs, user_powers=float(dbm_to_watt(p["tx_power_dbm"])))
    return s, _random_pointing(rng, lay.n, p["theta_max"])


def _fig12_trial(trial, p, value, seed):
    from ..optimize import maxmin_rate, maxmin_sinr_ao

    s, rnd = multiuser_scenario(p, trial_rng(seed, trial), rho=float(value))
    return {
        "RA": maxmin_sinr_ao(s, "MMSE").objective,
        "fixed": maxmin_rate(s, Orientation.boresight(s.n_antennas)),
        "random": maxmin_rate(s, rnd),
    }


def _fig13_trial(trial, p, value, seed):
    from ..optimize import wideband_sumrate_ao

    s, rnd = multiuser_scenario(p, trial_rng(seed, trial))
    wb = WidebandConfig(p["bandwidth"], int(value), int(p["cp_length"]))
    e1 = np.tile([1.0, 0.0, 0.0], (s.n_antennas, 1))
    return {
        "RA": wideband_sumrate_ao(s, wb).objective,
        "fixed": wideband_sumrate_ao(s, wb, init=e1, optimize_orientation=False).objective,
        "random": wideband_sumrate_ao(s, wb, init=rnd.pointing, optimize_orientation=False).objective,
    }


# --- ISAC (fig14) --------------------------------------------------------------------

def isac_scenario(p) -> Scenario:
    d = p["user_distance"]
    az = np.deg2rad(np.asarray(p["user_azimuths_deg"], dtype=float))
    users = np.stack([d * np.cos(az), d * np.sin(az), np.zeros_like(az)], 1)
    return _base(p, ArrayLayout.upa(4, 4, p["spacing"] * _wavelength(p)), users)


def _fig14_trial(trial, p, value, seed):
    from ..optimize import SensingTask, isac_minecho_bcd

    s = isac_scenario(p)
    task = SensingTask(p["target_center"], p["target_radius"], int(p["target_samples"]), rcs=1.0,
                       rate_min=float(value), power_comm=1.0, power_sense=1.0)
    e1 = np.tile([1.0, 0.0, 0.0], (s.n_antennas, 1))
    fx = isac_minecho_bcd(s, task, init=e1, optimize_orientation=False)
    aw = isac_minecho_bcd(s, task, tied=True)
    ra = isac_minecho_bcd(s, task, warm_start=aw)
    db = lambda x: float(watt_to_dbm(x)) if x > 0 else float("nan")  # noqa: E731
    return {"RA": db(ra.objective), "array-wise": db(aw.objective), "fixed": db(fx.objective)}


# --- channel estimation (fig10) ------------------------------------------------------

def _around_broadside(rng, k, lo, hi, max_off_deg):
    az = rng.uniform(0, 2 * np.pi, k)
    off = np.deg2rad(rng.uniform(0, max_off_deg, k))
    d = rng.uniform(lo, hi, k)
    return np.stack([np.cos(off), np.sin(off) * np.cos(az), np.sin(off) * np.sin(az)], 1) * d[:, None]


def estimation_scenario(p, n: int, rng) -> Scenario:
    users = _around_broadside(rng, 3, 30, 50, 50)
    n_s = int(p["scatterers"])
    sc = _around_broadside(rng, n_s, 15, 30, 60)
    rcs = 300 * (rng.standard_normal(n_s) + 1j * rng.standard_normal(n_s)) / np.sqrt(2)
    lay = ArrayLayout.ula(int(n), p["spacing"] * _wavelength(p))
    return _base(p, lay, users, scatterers=sc, rcs=rcs)


def _fig10_trial(trial, p, value, seed):
    from ..estimate import ml_estimate, noise_for_snr, reconstruct_and_nmse, schedule_orientations, simulate_pilots
    from ..estimate.schedule import random_cap

    n = int(value)
    rng = trial_rng(seed, trial)
    s = estimation_scenario(p, n, rng)
    s2 = noise_for_snr(s, p["snr_db"])
    held_out = [Orientation.from_pointing(random_cap(rng, (n,), p["theta_max"])) for _ in range(16)]
    out = {}
    for strat in ("fixed", "dynamic-designed", "dynamic-random"):
        sch = schedule_orientations(s.constraint, n, int(p["blocks"]), strat, total_slots=int(p["total_slots"]),
                                    seed=int(rng.integers(2 ** 31)) if strat == "dynamic-random" else None)
        m = simulate_pilots(s, sch, seed=seed, trial=trial, noise_power=s2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # fixed views are flagged ill-conditioned
            est = [ml_estimate(m, sch, s, int(p["scatterers"]), k=k, grid_step=np.deg2rad(2.0))
                   for k in range(s.n_users)]
        out[strat] = 10 * np.log10(reconstruct_and_nmse(est, s, held_out))
    return out


RUNNERS = {
    "fig10": (_fig10_trial, "nmse_dB"),
    "fig11": (None, "received_power_dBm"),
    "fig12": (_fig12_trial, "min_rate_bps_hz"),
    "fig13": (_fig13_trial, "sum_rate_bps_hz"),
    "fig14": (_fig14_trial, "min_echo_power_dBm"),
    "custom": (None, "received_power_dBm"),
}


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Run the configured sweep; deterministic in the master seed whatever ``workers`` is."""
    p = config.scenario
    func, metric = RUNNERS[config.experiment]
    table = ResultTable(config.experiment, config.sweep_name, config.seed)
    for value in config.sweep_values:
        if func is None:
            job = partial(_miso_trial, p=p, value=value, name=config.sweep_name, seed=config.seed)
        else:
            job = partial(func, p=p, value=value, seed=config.seed)
        results = _map(job, range(config.trials), workers)
        for scheme in sorted({k for r in results for k in r}):
            vals = [r[scheme] for r in results if scheme in r]
            table.add(value, scheme, metric, vals, UNITS[metric])
    return table
