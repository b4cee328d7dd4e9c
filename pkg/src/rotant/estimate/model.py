"""Parametric plane-wave channel model shared by the estimators.

A user's channel under orientation set F is
h(F) = sum_q beta_q diag(g(F, u_q))^(1/2) a(u_q), with
u(theta, xi) = [sin theta cos xi, sin theta sin xi, cos theta] and the
steering phase referenced to antenna 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import Scenario, farfield_paths
from ..errors import ConfigurationError, IllConditionedError, InvalidAngleError, UndefinedNMSEError
from ..geometry import Orientation, as_orientations
from ..radiation import CosinePattern, gain_toward

COND_LIMIT = 1e10


def direction(theta, xi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return np.stack([np.sin(theta) * np.cos(xi), np.sin(theta) * np.sin(xi), np.cos(theta)], axis=-1)


def angles_of(u) -> tuple[np.ndarray, np.ndarray]:
    """(zenith from +z, azimuth from +x) of unit vectors."""
    u = np.asarray(u, dtype=float)
    theta = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
    xi = np.arctan2(u[..., 1], u[..., 0])
    return theta, xi


def angle_error(theta_a, xi_a, theta_b, xi_b) -> np.ndarray:
    """Larger of the zenith and (wrapped) azimuth differences, radians."""
    dt = np.abs(np.asarray(theta_a) - np.asarray(theta_b))
    dx = np.abs(np.angle(np.exp(1j * (np.asarray(xi_a) - np.asarray(xi_b)))))
    return np.maximum(dt, dx)


@dataclass(frozen=True)
class PathParameters:
    """Propagation coefficients and (zenith, azimuth) pairs of Q + 1 paths."""

    coefs: np.ndarray
    theta: np.ndarray
    xi: np.ndarray
    status: str = "ok"
    info: dict | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefs, dtype=complex))
        t = np.atleast_1d(np.asarray(self.theta, dtype=float))
        x = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if not (c.shape == t.shape == x.shape) or c.ndim != 1:
            raise ConfigurationError("coefs, theta and xi need one entry per path")
        if c.size < 1:
            raise ConfigurationError("need at least one path (Q >= 0)")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise InvalidAngleError("path angles must be finite")
        if np.any(t < -1e-12) or np.any(t > np.pi + 1e-12):
            raise InvalidAngleError("zenith angles must lie in [0, pi]")
        object.__setattr__(self, "coefs", c)
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "xi", x)

    @property
    def n_paths(self) -> int:
        return self.coefs.size

    @property
    def directions(self) -> np.ndarray:
        return direction(self.theta, self.xi)

    @staticmethod
    def from_directions(coefs, dirs, **kw) -> "PathParameters":
        t, x = angles_of(np.asarray(dirs, dtype=float).reshape(-1, 3))
        return PathParameters(coefs, t, x, **kw)


def true_parameters(scenario: Scenario, k: int) -> PathParameters:
    """Ground-truth plane-wave parameters of user k (LoS first, then scatterers)."""
    c, d = farfield_paths(scenario, k)
    return PathParameters.from_directions(c, d)


def atoms(scenario: Scenario, orientations, dirs) -> np.ndarray:
    """Effective responses diag(g)^(1/2) a(u) for directions (J, 3): shape (N, J)."""
    o = as_orientations(orientations, scenario.n_antennas)
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    pos = scenario.layout.positions
    steer = np.exp(2j * np.pi * ((pos - pos[0]) @ dirs.T) / scenario.wavelength)
    ob = Orientation(o.pointing[:, None, :], o.reference[:, None, :], _checked=False)
    g = gain_toward(scenario.pattern, ob, dirs[None, :, :])
    return np.sqrt(g) * steer


class BlockManifold:
    """Cached geometry of a training schedule for fast atom evaluation.

    ``amplitudes`` and ``atoms`` give the per-block responses toward any
    set of directions; atoms are stacked block-major, matching the order
    of the despread observations.
    """

    def __init__(self, scenario: Scenario, orientation_sets):
        self.scenario = scenario
        self.sets = [as_orientations(o, scenario.n_antennas) for o in orientation_sets]
        pos = scenario.layout.positions
        self.rel = 2.0 * np.pi * (pos - pos[0]) / scenario.wavelength
        self.pointing = np.stack([o.pointing for o in self.sets])  # (M, N, 3)
        self.fast = isinstance(scenario.pattern, CosinePattern)

    @property
    def blocks(self) -> int:
        return self.pointing.shape[0]

    def steering(self, dirs) -> np.ndarray:
        return np.exp(1j * (self.rel @ np.asarray(dirs, dtype=float).reshape(-1, 3).T))

    def amplitudes(self, dirs) -> np.ndarray:
        """sqrt(gain) of antenna n in block m toward direction j: shape (M, N, J)."""
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        if self.fast:
            amp, _ = self.scenario.pattern.amplitude_from_cos(self.pointing @ dirs.T)
            return amp
        out = []
        for o in self.sets:
            ob = Orientation(o.pointing[:, None, :], o.reference[:, None, :], _checked=False)
            out.append(np.sqrt(gain_toward(self.scenario.pattern, ob, dirs[None, :, :])))
        return np.stack(out)

    def atoms(self, dirs) -> np.ndarray:
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        a = self.amplitudes(dirs) * self.steering(dirs)[None, :, :]
        return a.reshape(-1, dirs.shape[0])


def stacked_atoms(scenario: Scenario, orientation_sets, dirs) -> np.ndarray:
    """Atoms of every block stacked block-major: shape (M * N, J)."""
    return BlockManifold(scenario, orientation_sets).atoms(dirs)


def reconstruct(params: PathParameters, scenario: Scenario, orientations) -> np.ndarray:
    """Channel vector rebuilt from path parameters for one orientation set."""
    return atoms(scenario, orientations, params.directions) @ params.coefs


def solve_coefficients(a, z):
    """Least squares beta = (A^H A)^-1 A^H z with a rank/conditioning check."""
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[-1] <= s[0] / COND_LIMIT or s[0] == 0:
        raise IllConditionedError("observation matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(a, z, rcond=None)
    return beta


def nmse(h_est, h_true) -> float:
    """||h_est - h||^2 / ||h||^2."""
    h_true = np.asarray(h_true)
    den = float(np.sum(np.abs(h_true) ** 2))
    if den == 0:
        raise UndefinedNMSEError("true channel is zero")
    return float(np.sum(np.abs(np.asarray(h_est) - h_true) ** 2) / den)


def reconstruct_and_nmse(estimates, scenario: Scenario, orientation_sets, true_channels=None) -> float:
    """NMSE averaged over users, each user's error pooled over the given orientation sets.

    ``estimates`` holds one PathParameters per user.  The true channels
    default to the plane-wave channels of the scenario's users.
    """
    out = []
    for k, est in enumerate(estimates):
        h_hat = np.concatenate([reconstruct(est, scenario, o) for o in orientation_sets])
        if true_channels is None:
            tp = true_parameters(scenario, k)
            h = np.concatenate([reconstruct(tp, scenario, o) for o in orientation_sets])
        else:
            h = np.concatenate([np.asarray(c) for c in true_channels[k]])
        out.append(nmse(h_hat, h))
    return float(np.mean(out))
