"""MUSIC angle estimation with block-averaged spectra, plus least-squares coefficients."""

from __future__ import annotations

import numpy as np

from ..channel import Scenario
from ..errors import SubspaceRankError
from .ml import grid_directions
from .model import BlockManifold, PathParameters, direction, solve_coefficients, stacked_atoms
from .pilots import Measurement
from .schedule import PilotSchedule

SEPARATION_STEPS = 3


def music_spectrum(meas: Measurement, schedule: PilotSchedule, scenario: Scenario, n_sources: int, dirs,
                   chunk: int = 8192) -> np.ndarray:
    """Block-averaged MUSIC pseudo-spectrum at the given directions.

    Each block uses ||b||^2 / ||E_n^H b||^2 with b the gain-weighted
    steering vector; normalizing by ||b||^2 keeps directions the antennas
    cannot see (b = 0) from producing spurious infinite peaks.
    """
    m_blocks, tb, n = meas.y.shape
    if tb < n_sources:
        raise SubspaceRankError(f"{tb} snapshots per block for {n_sources} sources")
    if n <= n_sources:
        raise SubspaceRankError(f"N={n} antennas leave no noise subspace for {n_sources} sources")
    manifold = BlockManifold(scenario, schedule.orientations)
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    noise_bases = []
    for m in range(m_blocks):
        y = meas.block(m)
        r = y @ y.conj().T / tb
        _, v = np.linalg.eigh(r)
        noise_bases.append(v[:, : n - n_sources])
    out = np.zeros(dirs.shape[0])
    for s in range(0, dirs.shape[0], chunk):
        d = dirs[s:s + chunk]
        steer = manifold.steering(d)
        amp = manifold.amplitudes(d)
        acc = np.zeros(d.shape[0])
        for m in range(m_blocks):
            b = amp[m] * steer
            num = np.sum(np.abs(b) ** 2, axis=0)
            den = np.sum(np.abs(noise_bases[m].conj().T @ b) ** 2, axis=0)
            tiny = np.finfo(float).tiny
            acc += np.where(num > 0, num / np.maximum(den, tiny * np.maximum(num, 1.0)), 0.0)
        out[s:s + chunk] = acc / m_blocks
    return out


def pick_peaks(spec2d, count: int, separation: int = SEPARATION_STEPS):
    """Indices of the largest local maxima at least ``separation`` grid steps apart."""
    p = np.pad(spec2d, 1, mode="constant", constant_values=-np.inf)
    core = p[1:-1, 1:-1]
    is_max = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_max &= core >= p[1 + di:p.shape[0] - 1 + di, 1 + dj:p.shape[1] - 1 + dj]
    cand = np.argwhere(is_max)
    order = np.argsort(spec2d[is_max], kind="stable")[::-1]
    picked = []
    for i in order:
        c = cand[i]
        if all(np.max(np.abs(c - q)) >= separation for q in picked):
            picked.append(c)
        if len(picked) == count:
            break
    return picked


def music_estimate(meas: Measurement, schedule: PilotSchedule, scenario: Scenario, n_sources: int,
                   grid_step: float = np.deg2rad(1.0)) -> PathParameters:
    """Angles of the ``n_sources`` strongest spectrum peaks; coefficients left at zero.

    Use :func:`ls_coefficients` with the returned angles to fill in the
    propagation coefficients of a user.
    """
    gt, gx, gd = grid_directions(grid_step)
    spec = music_spectrum(meas, schedule, scenario, n_sources, gd)
    nt = int(round(np.pi / grid_step)) + 1
    spec2d = spec.reshape(nt, -1)
    peaks = pick_peaks(spec2d, n_sources)
    th = np.array([gt.reshape(nt, -1)[i, j] for i, j in peaks])
    xi = np.array([gx.reshape(nt, -1)[i, j] for i, j in peaks])
    return PathParameters(np.zeros(len(peaks), dtype=complex), th, xi, status="angles-only",
                          info={"spectrum": spec2d})


def ls_coefficients(meas: Measurement, schedule: PilotSchedule, scenario: Scenario, theta, xi,
                    k: int = 0) -> np.ndarray:
    """beta = (S^H S)^-1 S^H y for user k at the given angles (pilots removed by despreading)."""
    a = stacked_atoms(scenario, schedule.orientations, direction(np.atleast_1d(theta), np.atleast_1d(xi)))
    return solve_coefficients(a, meas.despread(k).reshape(-1))
