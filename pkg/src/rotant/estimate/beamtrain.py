"""Joint orientation / beam codeword selection by exhaustive or coarse-to-fine probing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..channel import Scenario
from ..errors import ConfigurationError
from ..geometry import Orientation
from .model import reconstruct, true_parameters
from .schedule import fibonacci_cap


@dataclass
class BeamTrainResult:
    orientation_index: int
    beam_index: int
    power: float
    probes: int


def channel_oracle(scenario: Scenario, k: int = 0) -> Callable:
    """h(F) for user k under the plane-wave multipath model."""
    params = true_parameters(scenario, k)
    return lambda orient: reconstruct(params, scenario, orient)


def dft_codebook(positions, size: int, wavelength: float, axis: int = 1) -> np.ndarray:
    """Unit-norm combiners w_j = conj(a(s_j)) / sqrt(N) on a uniform grid of direction sines s_j."""
    pos = np.asarray(positions, dtype=float)
    s = -1.0 + (2.0 * np.arange(size) + 1.0) / size
    x = pos[:, axis] - pos[0, axis]
    return np.exp(-2j * np.pi * np.outer(x, s) / wavelength) / np.sqrt(pos.shape[0])


def orientation_codebook(theta_max: float, n: int, size: int = 16, sectors: int = 4):
    """Array-wise orientation codewords on Fibonacci cap points, grouped into azimuth sectors.

    Returns (codewords, groups): each codeword points all N antennas the
    same way; groups list the codeword indices of each sector, ordered by
    azimuth around e1.
    """
    pts = fibonacci_cap(size, theta_max)
    book = [Orientation.from_pointing(np.tile(p, (n, 1))) for p in pts]
    az = np.mod(np.arctan2(pts[:, 2], pts[:, 1]), 2 * np.pi)
    sector = np.minimum((az / (2 * np.pi / sectors)).astype(int), sectors - 1)
    groups = [list(np.flatnonzero(sector == s)) for s in range(sectors)]
    return book, [g for g in groups if g]


def _chunks(count: int, parts: int):
    return [list(c) for c in np.array_split(np.arange(count), parts) if c.size]


def _power(channel, orient, w):
    return float(np.abs(w @ channel(orient)) ** 2)


def beam_train(channel: Callable, orientations: Sequence[Orientation], beams, search: str = "exhaustive",
               orient_groups=None, beam_groups=None, refine: int = 2) -> BeamTrainResult:
    """Pick the (orientation, combiner) pair with the largest |w^T h(F)|^2.

    exhaustive probes every pair.  hierarchical first probes one coarse
    orientation per sector (the sector's mean pointing) against one wide
    beam per beam group (the normalized sum of its combiners), then probes
    every fine pair inside the ``refine`` best coarse pairs.
    """
    beams = np.asarray(beams)
    n_o, n_w = len(orientations), (beams.shape[1] if beams.ndim == 2 else 0)
    if n_o == 0 or n_w == 0:
        raise ConfigurationError("codebooks must be non-empty")
    if search == "exhaustive":
        p = np.array([[_power(channel, o, beams[:, j]) for j in range(n_w)] for o in orientations])
        i, j = np.unravel_index(int(np.argmax(p)), p.shape)
        return BeamTrainResult(int(i), int(j), float(p[i, j]), n_o * n_w)
    if search != "hierarchical":
        raise ConfigurationError("search must be 'exhaustive' or 'hierarchical'")
    og = orient_groups if orient_groups is not None else _chunks(n_o, 4)
    bg = beam_groups if beam_groups is not None else _chunks(n_w, 4)
    coarse = []
    probes = 0
    for gi, g in enumerate(og):
        pt = np.mean([np.atleast_2d(orientations[i].pointing) for i in g], axis=0)
        pt = pt / np.linalg.norm(pt, axis=1, keepdims=True)
        rep = Orientation.from_pointing(pt)
        for bi, b in enumerate(bg):
            wide = beams[:, b].sum(axis=1)
            wide = wide / np.linalg.norm(wide)
            coarse.append((_power(channel, rep, wide), gi, bi))
            probes += 1
    coarse.sort(key=lambda t: -t[0])
    best = (-1.0, 0, 0)
    for _, gi, bi in coarse[:refine]:
        for i in og[gi]:
            h = channel(orientations[i])
            for j in bg[bi]:
                val = float(np.abs(beams[:, j] @ h) ** 2)
                probes += 1
                if val > best[0]:
                    best = (val, i, j)
    return BeamTrainResult(int(best[1]), int(best[2]), best[0], probes)
