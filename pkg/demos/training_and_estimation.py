# %% channel estimation with rotating antennas
# Three users plus three scatterers in front of a 16-element ULA.  Pilots are
# sent over 8 blocks; in each block the antennas hold one orientation set.
import warnings

import numpy as np

from rotant.estimate import (
    ml_estimate,
    noise_for_snr,
    reconstruct_and_nmse,
    schedule_orientations,
    simulate_pilots,
    true_parameters,
)
from rotant.estimate.schedule import random_cap
from rotant.geometry import Orientation
from rotant.harness import default_scenario
from rotant.harness.experiments import estimation_scenario

p = default_scenario("fig10")
rng = np.random.default_rng(3)
s = estimation_scenario(p, 16, rng)
sigma2 = noise_for_snr(s, 15.0)
held_out = [Orientation.from_pointing(random_cap(rng, (16,), p["theta_max"])) for _ in range(16)]

tp = true_parameters(s, 0)
print("user 0 true zenith (deg):", np.rad2deg(tp.theta).round(2))

# %% same budget, three ways of spending it
for strat in ("fixed", "dynamic-designed", "dynamic-random"):
    sch = schedule_orientations(s.constraint, 16, 8, strat, total_slots=64, seed=11)
    m = simulate_pilots(s, sch, seed=0, noise_power=sigma2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # fixed views are ill-conditioned
        est = [ml_estimate(m, sch, s, 3, k=k, grid_step=np.deg2rad(2)) for k in range(s.n_users)]
    print(f"{strat:17s} NMSE at unseen orientations {10 * np.log10(reconstruct_and_nmse(est, s, held_out)):7.2f} dB")
# fixed training sees every path through a single gain profile, so the fit
# does not carry over to other orientations; any spread of views fixes that
