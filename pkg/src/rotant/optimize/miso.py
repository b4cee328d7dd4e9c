"""Single-user pointing: per-antenna alignment and the ULA SNR scaling law."""

from __future__ import annotations

import numpy as np

from ..channel import Scenario, nearfield_los
from ..errors import InvalidParameterError
from ..geometry import Orientation, project_to_cone
from ._core import OptimizationResult, pointing_orientations, require_cosine


def aligned_pointing(scenario: Scenario, point) -> np.ndarray:
    """Per-antenna boresights toward ``point``, clamped to the rotation cone."""
    d = np.asarray(point, dtype=float)[None, :] - scenario.layout.positions
    return project_to_cone(d, scenario.constraint.theta_max)


def mrt(h, power: float):
    """w = sqrt(P) h* / ||h||; zero if the channel vanishes."""
    nh = np.linalg.norm(h)
    if nh == 0:
        return np.zeros_like(h)
    return np.sqrt(power) * np.conj(h) / nh


def snr_at(scenario: Scenario, orientations, k: int = 0, power: float | None = None) -> float:
    """MRT SNR P ||h||^2 / sigma^2 for the LoS channel of user k."""
    p = scenario.tx_power if power is None else power
    h = nearfield_los(scenario, orientations, k)
    return float(p * np.vdot(h, h).real / scenario.noise_power)


def optimal_pointing_miso(scenario: Scenario, k: int = 0) -> OptimizationResult:
    """Closed-form single-user solution: every antenna points at the user as far as the cone allows."""
    require_cosine(scenario.pattern)
    f = aligned_pointing(scenario, scenario.users[k])
    orient = pointing_orientations(f)
    h = nearfield_los(scenario, orient, k)
    w = mrt(h, scenario.tx_power)
    snr = float(scenario.tx_power * np.vdot(h, h).real / scenario.noise_power)
    return OptimizationResult(orient, w, [(0, snr)], "converged", snr, {"channel": h})


def fixed_orientations(n: int) -> Orientation:
    """All boresights along e1 (the fixed-antenna baseline)."""
    return Orientation.boresight(n)


def critical_array_size(zeta: float, theta_max: float) -> int:
    """N_bar = 2 floor(tan(theta_max) / zeta) + 1, where the span angle reaches theta_max."""
    if not zeta > 0:
        raise InvalidParameterError("zeta must be positive")
    return 2 * int(np.floor(np.tan(theta_max) / zeta)) + 1


def ula_snr_closed_form(n, zeta: float, theta_max: float, power: float, noise: float):
    """Approximate optimal SNR of an N-element broadside ULA with rho = 1/2.

    Below the critical size every antenna can face the user and the SNR is
    proportional to the span angle; above it the edge antennas saturate at
    the cone boundary.
    """
    if not zeta > 0:
        raise InvalidParameterError("zeta must be positive")
    n = np.asarray(n, dtype=float)
    c = 2.0 * zeta * power / (np.pi ** 2 * noise)
    span = np.arctan(n * zeta / 2.0)
    nbar = critical_array_size(zeta, theta_max)
    out = np.where(n <= nbar, c * span, c * (theta_max + np.sin(span - theta_max)))
    return out if out.ndim else float(out)


def ula_snr_asymptote(zeta: float, theta_max: float, power: float, noise: float) -> float:
    """Limit N -> infinity: (2 zeta P / pi^2 sigma^2)(theta_max + cos theta_max)."""
    if not zeta > 0:
        raise InvalidParameterError("zeta must be positive")
    return 2.0 * zeta * power / (np.pi ** 2 * noise) * (theta_max + np.cos(theta_max))
