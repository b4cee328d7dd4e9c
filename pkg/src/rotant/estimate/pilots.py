"""Uplink pilot simulation under a block-wise orientation schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import Scenario
from ..errors import ConfigurationError, PilotOrthogonalityError
from .model import reconstruct, true_parameters
from .schedule import PilotSchedule


@dataclass(frozen=True)
class Measurement:
    """Received pilots y[m, t, n] with the pilot symbols x[m, t, k] and noise power.

    ``truth`` keeps the true path parameters for evaluation only; the
    estimators never read it.
    """

    y: np.ndarray
    pilots: np.ndarray
    noise_power: float
    truth: tuple = ()

    def __post_init__(self):
        if self.y.ndim != 3 or self.pilots.ndim != 3 or self.y.shape[:2] != self.pilots.shape[:2]:
            raise ConfigurationError("y is (M, T_b, N) and pilots (M, T_b, K) with matching M, T_b")

    @property
    def stacked(self) -> np.ndarray:
        """vec(Y): slot-major stacking of the N-dimensional snapshots, length N * T_a."""
        return self.y.reshape(-1)

    def block(self, m: int) -> np.ndarray:
        """Snapshots of block m as an N x T_b matrix."""
        return self.y[m].T

    def despread(self, k: int) -> np.ndarray:
        """Per-block pilot correlation (1/T_b) sum_t y x_k*: shape (M, N).

        With orthogonal unit-modulus pilots this is h_k(F^(m)) plus noise of
        power sigma^2 / T_b, and ||y - S beta||^2 separates per user into
        T_b times the residual of these block observations.
        """
        tb = self.y.shape[1]
        return np.einsum("mtn,mt->mn", self.y, np.conj(self.pilots[:, :, k])) / tb


def orthogonal_pilots(tb: int, k: int) -> np.ndarray:
    """First K columns of the T_b-point DFT matrix: unit modulus, mutually orthogonal."""
    if tb < k:
        raise PilotOrthogonalityError(f"T_b={tb} slots cannot carry {k} orthogonal pilots")
    t = np.arange(tb)[:, None]
    return np.exp(-2j * np.pi * t * np.arange(k)[None, :] / tb)


def noise_for_snr(scenario: Scenario, snr_db: float) -> float:
    """Noise power giving the stated SNR for the mean LoS path power |beta_0|^2 (isotropic reference).

    The reference does not depend on the orientations, so all schedules
    see the same noise.
    """
    b0 = [abs(true_parameters(scenario, k).coefs[0]) ** 2 for k in range(scenario.n_users)]
    return float(np.mean(b0) / 10.0 ** (snr_db / 10.0))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def simulate_pilots(scenario: Scenario, schedule: PilotSchedule, seed: int = 0, trial: int = 0,
                    noise_power: float | None = None, users=None) -> Measurement:
    """y_m^(t) = sum_k h_k(F^(m)) x_{m,k}^(t) + n with circular Gaussian noise of power sigma^2.

    Channels are the plane-wave multipath channels of the scenario's users
    (``users`` selects a subset).  Noise comes from a stream derived from
    (seed, trial); ``noise_power`` defaults to the scenario's.
    """
    ks = list(range(scenario.n_users)) if users is None else list(users)
    tb = schedule.slots_per_block
    x = orthogonal_pilots(tb, len(ks))
    s2 = scenario.noise_power if noise_power is None else float(noise_power)
    truth = tuple(true_parameters(scenario, k) for k in ks)
    n = scenario.n_antennas
    m = schedule.blocks
    y = np.zeros((m, tb, n), dtype=complex)
    for b, o in enumerate(schedule.orientations):
        h = np.stack([reconstruct(p, scenario, o) for p in truth])  # (K, N)
        y[b] = x @ h
    if s2 > 0:
        rng = trial_rng(seed, trial)
        noise = rng.standard_normal((m, tb, n, 2)) @ np.array([1.0, 1j])
        y = y + np.sqrt(s2 / 2.0) * noise
    return Measurement(y, np.tile(x, (m, 1, 1)), s2, truth)
