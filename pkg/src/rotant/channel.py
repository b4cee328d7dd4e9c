"""Orientation-dependent channel synthesis.

All channels are deterministic functions of the geometry in a Scenario and
an orientation set (one pointing/reference pair per BS antenna).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DegenerateGeometryError, InvalidParameterError
from .geometry import ArrayLayout, Orientation, RotationConstraint, as_orientations
from .radiation import CosinePattern, GainPattern, gain_toward, polarization_gain, unit_directions
from .units import SPEED_OF_LIGHT


def _points(a, name):
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 3))
    arr = arr.reshape(-1, 3)
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class Scenario:
    """Geometry and RF constants of one deployment.

    Powers and noise are in watts.  ``user_powers`` defaults to ``tx_power``
    for every user.  ``rcs`` holds one complex radar cross section per
    scatterer.
    """

    carrier_frequency: float
    layout: ArrayLayout
    users: np.ndarray
    scatterers: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    rcs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    noise_power: float = 1e-11
    tx_power: float = 1e-2
    user_powers: np.ndarray | None = None
    power_comm: float = 1.0
    power_sense: float = 1.0
    pattern: GainPattern = field(default_factory=CosinePattern)
    constraint: RotationConstraint = field(default_factory=RotationConstraint)
    los_blocked: bool = False

    def __post_init__(self):
        if not (self.carrier_frequency > 0):
            raise InvalidParameterError("carrier frequency must be positive")
        users = _points(self.users, "users")
        scat = _points(self.scatterers, "scatterers")
        rcs = np.asarray(self.rcs, dtype=complex).reshape(-1)
        if rcs.size != scat.shape[0]:
            raise ConfigurationError(f"{scat.shape[0]} scatterers but {rcs.size} RCS values")
        for name in ("noise_power", "tx_power", "power_comm", "power_sense"):
            if not (getattr(self, name) > 0):
                raise InvalidParameterError(f"{name} must be positive")
        up = self.user_powers
        if up is None:
            up = np.full(users.shape[0], float(self.tx_power))
        up = np.broadcast_to(np.asarray(up, dtype=float), (users.shape[0],)).copy()
        if np.any(up <= 0):
            raise InvalidParameterError("user powers must be positive")
        for pts, name in ((users, "user"), (scat, "scatterer")):
            if pts.shape[0]:
                dmin = np.min(np.linalg.norm(pts[:, None, :] - self.layout.positions[None], axis=-1))
                if dmin == 0:
                    raise DegenerateGeometryError(f"a {name} coincides with a BS antenna")
        for arr in (users, scat, rcs, up):
            arr.setflags(write=False)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "scatterers", scat)
        object.__setattr__(self, "rcs", rcs)
        object.__setattr__(self, "user_powers", up)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def beta0(self) -> float:
        return (self.wavelength / (4.0 * np.pi)) ** 2

    @property
    def n_antennas(self) -> int:
        return self.layout.n

    @property
    def n_users(self) -> int:
        return self.users.shape[0]

    @property
    def n_scatterers(self) -> int:
        return self.scatterers.shape[0]

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class WidebandConfig:
    """OFDM numerology: bandwidth B (Hz), L subcarriers at f_l = l * B / L, CP length."""

    bandwidth: float
    subcarriers: int
    cp_length: int = 0

    def __post_init__(self):
        if self.subcarriers < 1:
            raise InvalidParameterError("need at least one subcarrier")
        if self.cp_length < 0:
            raise InvalidParameterError("CP length must be >= 0")
        if not (self.bandwidth > 0):
            raise InvalidParameterError("bandwidth must be positive")

    @property
    def spacing(self) -> float:
        return self.bandwidth / self.subcarriers

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.subcarriers) * self.spacing


@dataclass(frozen=True)
class PathSet:
    """Per-antenna path decomposition h[n] = sum_p coef[n, p] * sqrt(g(dirs[n, p] . f_n)).

    ``delays`` are the propagation delays of each path in seconds; ``coef``
    already contains the carrier phase exp(-j 2 pi f_c tau).
    """

    dirs: np.ndarray
    coef: np.ndarray
    delays: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.coef.shape[1]


def _gains(pattern, orients: Orientation, dirs):
    if dirs.ndim == 3:
        o = Orientation(orients.pointing[:, None, :], orients.reference[:, None, :], _checked=False)
        return gain_toward(pattern, o, dirs)
    return gain_toward(pattern, orients, dirs)


def los_paths(scenario: Scenario, point, blocked: bool = False) -> PathSet:
    """LoS component from every BS antenna to an arbitrary point."""
    pos = scenario.layout.positions
    q, d = unit_directions(pos, np.asarray(point, dtype=float)[None, :])
    lam = scenario.wavelength
    coef = np.sqrt(scenario.beta0) / d * np.exp(-2j * np.pi * d / lam)
    if blocked:
        coef = np.zeros_like(coef)
    return PathSet(q[:, None, :], coef[:, None], (d / SPEED_OF_LIGHT)[:, None])


def nlos_paths(scenario: Scenario, k: int) -> PathSet:
    """Single-bounce scatterer paths to user k (BS-side gain only)."""
    pos = scenario.layout.positions
    n, qn = pos.shape[0], scenario.n_scatterers
    if qn == 0:
        return PathSet(np.zeros((n, 0, 3)), np.zeros((n, 0), dtype=complex), np.zeros((n, 0)))
    sc = scenario.scatterers
    u = scenario.users[k]
    dirs, dt = unit_directions(pos[:, None, :], sc[None, :, :])
    db = np.linalg.norm(sc - u, axis=-1)
    if np.any(db == 0):
        raise DegenerateGeometryError("a scatterer coincides with the user")
    lam = scenario.wavelength
    tot = dt + db[None, :]
    coef = scenario.rcs[None, :] * scenario.beta0 / (dt * db[None, :]) * np.exp(-2j * np.pi * tot / lam)
    return PathSet(dirs, coef, tot / SPEED_OF_LIGHT)


def user_paths(scenario: Scenario, k: int) -> PathSet:
    """LoS (unless blocked) followed by the scatterer paths of user k."""
    a = los_paths(scenario, scenario.users[k], blocked=scenario.los_blocked)
    b = nlos_paths(scenario, k)
    return PathSet(np.concatenate([a.dirs, b.dirs], axis=1),
                   np.concatenate([a.coef, b.coef], axis=1),
                   np.concatenate([a.delays, b.delays], axis=1))


def channel_from_paths(pattern: GainPattern, orientations, paths: PathSet) -> np.ndarray:
    o = as_orientations(orientations, paths.coef.shape[0])
    g = _gains(pattern, o, paths.dirs)
    return np.sum(paths.coef * np.sqrt(g), axis=1)


def nearfield_los(scenario: Scenario, orientations, k: int) -> np.ndarray:
    """Exact spherical-wave LoS channel of user k, gain per antenna direction."""
    o = as_orientations(orientations, scenario.n_antennas)
    pos = scenario.layout.positions
    q, d = unit_directions(pos, scenario.users[k][None, :])
    g = gain_toward(scenario.pattern, o, q)
    return np.sqrt(scenario.beta0) / d * np.sqrt(g) * np.exp(-2j * np.pi * d / scenario.wavelength)


def steering_vector(positions, direction, wavelength: float) -> np.ndarray:
    """Plane-wave response exp(j 2 pi (q_n - q_1) . u / lambda), antenna 1 as reference."""
    pos = np.asarray(positions, dtype=float)
    u = np.asarray(direction, dtype=float)
    return np.exp(2j * np.pi * ((pos - pos[0]) @ u.T) / wavelength)


def ula_steering(n: int, spacing: float, direction, wavelength: float) -> np.ndarray:
    """1D steering along y: exp(j 2 pi spacing i u_y / lambda), i = 0..n-1."""
    u = np.asarray(direction, dtype=float)
    return np.exp(2j * np.pi * spacing * np.arange(n) * u[1] / wavelength)


def upa_steering(ny: int, nz: int, spacing: float, direction, wavelength: float) -> np.ndarray:
    """Kronecker steering a_y(u) kron a_z(u) for a y-z planar array."""
    u = np.asarray(direction, dtype=float)
    ay = np.exp(2j * np.pi * spacing * np.arange(ny) * u[1] / wavelength)
    az = np.exp(2j * np.pi * spacing * np.arange(nz) * u[2] / wavelength)
    return np.kron(ay, az)


def _array_steering(layout: ArrayLayout, direction, wavelength):
    if layout.topology == "ULA" and layout.spacing is not None and np.allclose(
            layout.positions[:, [0, 2]], layout.positions[0, [0, 2]]):
        return ula_steering(layout.n, layout.spacing, direction, wavelength)
    if layout.topology == "UPA" and layout.spacing is not None:
        ny, nz = layout.shape
        return upa_steering(ny, nz, layout.spacing, direction, wavelength)
    return steering_vector(layout.positions, direction, wavelength)


def farfield_channel(scenario: Scenario, orientations, k: int) -> np.ndarray:
    """Plane-wave LoS channel: common direction and amplitude seen from the array center.

    The carrier phase is anchored at antenna 1 and the steering vector
    carries the relative phases.
    """
    o = as_orientations(orientations, scenario.n_antennas)
    lay = scenario.layout
    u = scenario.users[k]
    qhat, dc = unit_directions(lay.center, u)
    d1 = np.linalg.norm(u - lay.positions[0])
    g = gain_toward(scenario.pattern, o, qhat[None, :])
    a = _array_steering(lay, qhat, scenario.wavelength)
    beta = np.sqrt(scenario.beta0) / dc
    return beta * np.exp(-2j * np.pi * d1 / scenario.wavelength) * np.sqrt(g) * a


def nlos_multipath(scenario: Scenario, orientations, k: int) -> np.ndarray:
    """Sum over scatterers of sigma_q beta0 sqrt(g) / (d_tilde d_bar) exp(-j 2 pi (d_tilde + d_bar) / lambda)."""
    return channel_from_paths(scenario.pattern, orientations, nlos_paths(scenario, k))


def total_channel(scenario: Scenario, orientations, k: int) -> np.ndarray:
    """LoS plus NLoS; the LoS term is dropped when ``scenario.los_blocked``."""
    h = nlos_multipath(scenario, orientations, k)
    if not scenario.los_blocked:
        h = nearfield_los(scenario, orientations, k) + h
    return h


def wideband_response(scenario: Scenario, wideband: WidebandConfig, orientations, k: int) -> np.ndarray:
    """N x L frequency response; column l is the channel at baseband offset f_l."""
    paths = user_paths(scenario, k)
    o = as_orientations(orientations, scenario.n_antennas)
    g = _gains(scenario.pattern, o, paths.dirs)
    # strip the carrier phase from the path gain, then apply (f_c + f_l) per subcarrier
    gamma = paths.coef * np.exp(2j * np.pi * scenario.carrier_frequency * paths.delays) * np.sqrt(g)
    f = scenario.carrier_frequency + wideband.frequencies
    ph = np.exp(-2j * np.pi * paths.delays[:, :, None] * f[None, None, :])
    return np.einsum("np,npl->nl", gamma, ph)


def polarized_channel(scenario: Scenario, orientations, p_r, k: int) -> np.ndarray:
    """LoS channel weighted by the per-antenna polarization matching factor."""
    o = as_orientations(orientations, scenario.n_antennas)
    q, _ = unit_directions(scenario.layout.positions, scenario.users[k][None, :])
    w = polarization_gain(o, q, np.asarray(p_r, dtype=float))
    return w * nearfield_los(scenario, o, k)


def mimo_channel(scenario: Scenario, tx_orientations, rx_layout: ArrayLayout, rx_orientations,
                 rx_pattern: GainPattern | None = None) -> np.ndarray:
    """N_r x N_t LoS matrix with directional gain at both ends."""
    tx = as_orientations(tx_orientations, scenario.n_antennas)
    rx = as_orientations(rx_orientations, rx_layout.n)
    rp = scenario.pattern if rx_pattern is None else rx_pattern
    pt = scenario.layout.positions
    pr = rx_layout.positions
    u, d = unit_directions(pt[None, :, :], pr[:, None, :])
    gt = gain_toward(scenario.pattern, Orientation(tx.pointing[None], tx.reference[None], _checked=False), u)
    gr = gain_toward(rp, Orientation(rx.pointing[:, None], rx.reference[:, None], _checked=False), -u)
    return np.sqrt(scenario.beta0) / d * np.sqrt(gt * gr) * np.exp(-2j * np.pi * d / scenario.wavelength)


def farfield_paths(scenario: Scenario, k: int):
    """Plane-wave path list of user k: (coefficients (P,), unit directions (P, 3)).

    Directions and amplitudes are taken from the array center; phases are
    anchored at antenna 1, matching :func:`farfield_channel`.
    """
    lay = scenario.layout
    lam = scenario.wavelength
    u = scenario.users[k]
    coefs, dirs = [], []
    if not scenario.los_blocked:
        qh, dc = unit_directions(lay.center, u)
        d1 = np.linalg.norm(u - lay.positions[0])
        coefs.append(np.sqrt(scenario.beta0) / dc * np.exp(-2j * np.pi * d1 / lam))
        dirs.append(qh)
    for q in range(scenario.n_scatterers):
        c = scenario.scatterers[q]
        qh, dc = unit_directions(lay.center, c)
        d1 = np.linalg.norm(c - lay.positions[0])
        db = np.linalg.norm(c - u)
        coefs.append(scenario.rcs[q] * scenario.beta0 / (dc * db) * np.exp(-2j * np.pi * (d1 + db) / lam))
        dirs.append(qh)
    return np.array(coefs, dtype=complex), np.array(dirs).reshape(-1, 3)


def steered_channel(layout: ArrayLayout, pattern: GainPattern, orientations, coefs, dirs,
                    wavelength: float) -> np.ndarray:
    """sum_p coefs[p] diag(g(dirs[p]))^(1/2) a(dirs[p]) for a stacked orientation set."""
    o = as_orientations(orientations, layout.n)
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    h = np.zeros(layout.n, dtype=complex)
    for c, u in zip(np.atleast_1d(coefs), dirs):
        g = gain_toward(pattern, o, u[None, :])
        h = h + c * np.sqrt(g) * steering_vector(layout.positions, u, wavelength)
    return h


def farfield_multipath(scenario: Scenario, orientations, k: int) -> np.ndarray:
    """Plane-wave counterpart of :func:`total_channel` used by the estimation pipelines."""
    c, d = farfield_paths(scenario, k)
    return steered_channel(scenario.layout, scenario.pattern, orientations, c, d, scenario.wavelength)
