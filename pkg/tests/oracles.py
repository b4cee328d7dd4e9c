"""Independent reference computations shared by the test modules.

None of these call the solver code they check; they evaluate the
physics directly from positions, angles and the pattern formula.
"""

from __future__ import annotations

import itertools

import numpy as np

LAMBDA_24 = 299792458.0 / 2.4e9


def cosine_gain(c, rho):
    """2(2 rho + 1) [c]_+^(2 rho) written out independently of the package."""
    c = np.asarray(c, dtype=float)
    return np.where(c > 0, 2.0 * (2.0 * rho + 1.0) * np.abs(c) ** (2.0 * rho), 0.0)


def cap_grid(theta_max, step_deg=0.5):
    """Unit boresights on a (zenith, azimuth) grid over the cone around e1."""
    tz = np.deg2rad(np.arange(0.0, np.rad2deg(theta_max) + 1e-9, step_deg))
    ta = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    tz, ta = np.meshgrid(tz, ta, indexing="ij")
    f = np.stack([np.cos(tz), np.sin(tz) * np.cos(ta), np.sin(tz) * np.sin(ta)], axis=-1)
    return f.reshape(-1, 3)


def grid_search_snr(positions, user, theta_max, rho, power, noise, wavelength, step_deg=0.5):
    """Best MRT SNR when each antenna independently picks the best grid boresight.

    With MRT the SNR is a sum of per-antenna terms, so the joint grid
    search separates into one search per antenna.
    """
    beta0 = (wavelength / (4.0 * np.pi)) ** 2
    grid = cap_grid(theta_max, step_deg)
    total = 0.0
    for p in np.atleast_2d(positions):
        d = np.asarray(user, dtype=float) - p
        r = np.linalg.norm(d)
        best = cosine_gain(grid @ (d / r), rho).max()
        total += beta0 / r ** 2 * best
    return power * total / noise


def ula_brute_snr(n, spacing, distance, theta_max, power, noise, wavelength):
    """sum_n beta0 G_max [q_n . f_n]_+ / d_n^2 for a broadside ULA with rho = 1/2 and aligned boresights."""
    y = (np.arange(n) - (n - 1) / 2.0) * spacing
    d = np.sqrt(distance ** 2 + y ** 2)
    off = np.arctan2(np.abs(y), distance)
    miss = np.maximum(off - theta_max, 0.0)
    beta0 = (wavelength / (4.0 * np.pi)) ** 2
    return power * beta0 * 4.0 * np.sum(np.cos(miss) / d ** 2) / noise


def planar_mimo_exhaustive(tx_pos, rx_pos, theta_max, rho, power, noise, wavelength, step_deg=2.0):
    """Exhaustive in-plane orientation search for a 2x2 LoS link in the x-y plane.

    Tx boresights make signed angles with +x, rx boresights with -x, each on
    a grid over [-theta_max, theta_max].  Capacity uses water-filling.
    """
    tx_pos = np.asarray(tx_pos, dtype=float)
    rx_pos = np.asarray(rx_pos, dtype=float)
    beta0 = (wavelength / (4.0 * np.pi)) ** 2
    diff = rx_pos[:, None, :] - tx_pos[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    u = diff / dist[..., None]
    base = np.sqrt(beta0) / dist * np.exp(-2j * np.pi * dist / wavelength)
    ang = np.deg2rad(np.arange(-np.rad2deg(theta_max), np.rad2deg(theta_max) + 1e-9, step_deg))
    tx_dirs = np.stack([np.cos(ang), np.sin(ang), 0 * ang], axis=-1)
    rx_dirs = np.stack([-np.cos(ang), np.sin(ang), 0 * ang], axis=-1)
    # amplitude of each link entry as a function of each end's grid choice
    at = np.sqrt(cosine_gain(np.einsum("rti,ai->rta", u, tx_dirs), rho))  # (2, 2, A)
    ar = np.sqrt(cosine_gain(np.einsum("rti,ai->rta", -u, rx_dirs), rho))
    a = ang.size
    best = -np.inf
    best_idx = None
    for i0, i1 in itertools.product(range(a), repeat=2):
        # tx choices fixed, rx choices vectorized over the full grid pair
        t = np.stack([at[:, 0, i0], at[:, 1, i1]], axis=1)  # (2 rx, 2 tx)
        hr = base * t  # (2, 2)
        # rx amplitudes for all (j0, j1): row 0 uses j0, row 1 uses j1
        r0 = ar[0][:, :, None]  # (2 tx, A, 1) -> rows of rx 0
        r1 = ar[1][:, None, :]
        h00 = hr[0, 0] * r0[0]
        h01 = hr[0, 1] * r0[1]
        h10 = hr[1, 0] * r1[0]
        h11 = hr[1, 1] * r1[1]
        h00, h01, h10, h11 = np.broadcast_arrays(h00, h01, h10, h11)
        cap = _cap2x2(h00, h01, h10, h11, power, noise)
        k = np.unravel_index(np.argmax(cap), cap.shape)
        if cap[k] > best:
            best = cap[k]
            best_idx = (i0, i1, k[0], k[1])
    return float(best), best_idx, ang


def _cap2x2(h00, h01, h10, h11, power, noise):
    """Water-filling capacity of a batch of 2x2 matrices from their singular values."""
    # eigenvalues of H^H H
    a = np.abs(h00) ** 2 + np.abs(h10) ** 2
    d = np.abs(h01) ** 2 + np.abs(h11) ** 2
    b = np.conj(h00) * h01 + np.conj(h10) * h11
    tr = a + d
    det = a * d - np.abs(b) ** 2
    disc = np.sqrt(np.maximum(tr ** 2 / 4 - det, 0.0))
    l1 = tr / 2 + disc
    l2 = np.maximum(tr / 2 - disc, 0.0)
    g1 = l1 / noise
    g2 = l2 / noise
    # two-channel water-filling
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = (power + 1 / g1 + 1 / g2) / 2
        both = (g2 > 0) & (mu > 1 / g2)
        p1 = np.where(both, mu - 1 / g1, power)
        p2 = np.where(both, mu - 1 / g2, 0.0)
        c = np.log2(1 + p1 * g1) + np.where(p2 > 0, np.log2(1 + p2 * g2), 0.0)
    return c
