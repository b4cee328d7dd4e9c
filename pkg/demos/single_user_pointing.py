# %% single user: where do the antennas point, and what does it buy?
# A 32-element half-wavelength ULA serves one user 15 m away, 75 deg off
# broadside.  Each element turns toward the user until it hits the 30 deg cone.
import numpy as np

from rotant import ArrayLayout, CosinePattern, RotationConstraint, Scenario
from rotant.optimize import fixed_orientations, optimal_pointing_miso, snr_at

lam = 299792458 / 2.4e9
a = np.deg2rad(75)
s = Scenario(2.4e9, ArrayLayout.ula(32, lam / 2), [[15 * np.cos(a), 15 * np.sin(a), 0]],
             noise_power=1e-11, tx_power=1e-2, pattern=CosinePattern(0.5),
             constraint=RotationConstraint(theta_max=np.pi / 6))

ra = optimal_pointing_miso(s)
f = ra.orientations.pointing
tilt = np.rad2deg(np.arccos(np.clip(f[:, 0], -1, 1)))
print("tilt from broadside (deg), first/last 4:", tilt[:4].round(2), tilt[-4:].round(2))

fx = snr_at(s, fixed_orientations(s.n_antennas))
print(f"SNR fixed {10 * np.log10(fx):.2f} dB, rotatable {10 * np.log10(ra.objective):.2f} dB")

# %% gain versus array size (the fig11 sweep, one trial)
for n in (1, 4, 16, 64, 256, 1024, 4096):
    s_n = Scenario(2.4e9, ArrayLayout.ula(n, lam / 2), s.users, noise_power=1e-11, tx_power=1e-2,
                   pattern=CosinePattern(0.5), constraint=s.constraint)
    g = optimal_pointing_miso(s_n).objective / snr_at(s_n, fixed_orientations(n))
    print(f"N={n:5d}  gain {10 * np.log10(g):5.2f} dB")
