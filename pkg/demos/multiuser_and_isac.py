# %% multi-user uplink: max-min rate against directivity
import numpy as np

from rotant.geometry import Orientation
from rotant.harness import default_scenario
from rotant.harness.experiments import isac_scenario, multiuser_scenario, trial_rng
from rotant.optimize import SensingTask, isac_minecho_bcd, maxmin_rate, maxmin_sinr_ao
from rotant.units import watt_to_dbm

p = default_scenario("fig12")
for rho in (0.5, 1, 2, 4):
    s, rnd = multiuser_scenario(p, trial_rng(0, 0), rho=rho)
    ra = maxmin_sinr_ao(s).objective
    fx = maxmin_rate(s, Orientation.boresight(s.n_antennas))
    print(f"rho={rho:3}: RA {ra:6.3f}  fixed {fx:6.3f}  random {maxmin_rate(s, rnd):6.3f} bps/Hz")
# narrower beams help only when they can be turned toward the users

# %% sensing while serving: worst echo power over a target region
q = default_scenario("fig14")
s = isac_scenario(q)
e1 = np.tile([1.0, 0, 0], (s.n_antennas, 1))
for rmin in (2, 8):
    task = SensingTask(q["target_center"], q["target_radius"], 8, rate_min=rmin, power_comm=1.0, power_sense=1.0)
    aw = isac_minecho_bcd(s, task, tied=True)
    ra = isac_minecho_bcd(s, task, warm_start=aw)
    fx = isac_minecho_bcd(s, task, init=e1, optimize_orientation=False)
    print(f"R_min={rmin}: RA {watt_to_dbm(ra.objective):.2f}  array-wise {watt_to_dbm(aw.objective):.2f}"
          f"  fixed {watt_to_dbm(fx.objective):.2f} dBm")
