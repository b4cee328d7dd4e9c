"""Directional gain patterns, incident angles and polarization matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InvalidDirectionError, InvalidParameterError, NumericError
from .geometry import Orientation

UNIT_TOL = 1e-9


class GainPattern:
    """Base class; subclasses map (epsilon, phi) to a linear power gain."""

    def gain(self, eps, phi):
        raise NotImplementedError


@dataclass(frozen=True)
class CosinePattern(GainPattern):
    """G(eps) = 2(2 rho + 1) cos^(2 rho)(eps) inside the front hemisphere, zero behind."""

    rho: float = 0.5

    def __post_init__(self):
        if not np.isfinite(self.rho) or self.rho < 0:
            raise InvalidParameterError("rho must be finite and >= 0")

    @property
    def g_max(self) -> float:
        return 2.0 * (2.0 * self.rho + 1.0)

    def gain(self, eps, phi=0.0):
        eps = np.asarray(eps, dtype=float)
        # cos(pi/2) is 6e-17 in floating point, so test the angle itself
        c = np.where(eps < np.pi / 2, np.cos(eps), 0.0)
        return self.gain_from_cos(c)

    def gain_from_cos(self, c):
        """Gain written through c = q . f_perp, i.e. G_max [c]_+^(2 rho)."""
        c = np.asarray(c, dtype=float)
        pos = c > 0
        out = np.zeros(np.shape(c))
        out[pos] = self.g_max * c[pos] ** (2.0 * self.rho)
        return out if out.ndim else float(out)

    def amplitude_from_cos(self, c):
        """sqrt(G) and d sqrt(G) / dc, both zero where c <= 0."""
        c = np.asarray(c, dtype=float)
        pos = c > 0
        amp = np.zeros(np.shape(c))
        der = np.zeros(np.shape(c))
        cp = c[pos]
        root = np.sqrt(self.g_max)
        amp[pos] = root * cp ** self.rho
        if self.rho > 0:
            der[pos] = root * self.rho * cp ** (self.rho - 1.0)
        return amp, der


@dataclass(frozen=True)
class ThreeGPPPattern(GainPattern):
    """3GPP element pattern: G = G_max - min(-(G_H + G_V), A_max) in dB."""

    g_max_db: float = 8.0
    a_max_db: float = 30.0
    a_side_db: float = 30.0
    phi_3db: float = np.deg2rad(65.0)
    eps_3db: float = np.deg2rad(65.0)

    def __post_init__(self):
        if self.phi_3db <= 0 or self.eps_3db <= 0:
            raise InvalidParameterError("3 dB beamwidths must be positive")
        if self.a_max_db < 0 or self.a_side_db < 0:
            raise InvalidParameterError("attenuation limits must be >= 0")

    @property
    def g_max(self) -> float:
        return 10.0 ** (self.g_max_db / 10.0)

    def gain_db(self, eps, phi):
        eps = np.asarray(eps, dtype=float)
        phi = np.asarray(phi, dtype=float)
        gh = -np.minimum(12.0 * (phi / self.phi_3db) ** 2, self.a_max_db)
        gv = -np.minimum(12.0 * (eps / self.eps_3db) ** 2, self.a_side_db)
        return self.g_max_db - np.minimum(-(gh + gv), self.a_max_db)

    def gain(self, eps, phi):
        return 10.0 ** (self.gain_db(eps, phi) / 10.0)


def _unit(v, what="direction"):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(n - 1.0) > UNIT_TOL):
        raise InvalidDirectionError(f"{what} must be unit-norm")
    return v


def incident_angles(orientation: Orientation, direction):
    """(epsilon, phi): angle off boresight and azimuth about it, measured from the lateral axis."""
    q = _unit(direction)
    f_perp = orientation.pointing
    f_par = orientation.reference
    lat = orientation.lateral
    eps = np.arccos(np.clip(np.sum(q * f_perp, axis=-1), -1.0, 1.0))
    phi = np.arctan2(np.sum(q * f_par, axis=-1), np.sum(q * lat, axis=-1))
    return eps, phi


def gain(pattern: GainPattern, eps, phi):
    """Linear gain of a pattern at incident angles (eps, phi)."""
    return pattern.gain(eps, phi)


def unit_directions(source, target):
    """Unit vectors and distances from source point(s) to target point(s)."""
    d = np.asarray(target, dtype=float) - np.asarray(source, dtype=float)
    dist = np.linalg.norm(d, axis=-1)
    if np.any(dist == 0):
        raise DegenerateGeometryError("source and target coincide")
    return d / dist[..., None], dist


def directional_gain(pattern: GainPattern, orientation: Orientation, source_pos, target_pos):
    """Gain of an antenna at ``source_pos`` with ``orientation`` toward ``target_pos``."""
    q, _ = unit_directions(source_pos, target_pos)
    return gain_toward(pattern, orientation, q)


def gain_toward(pattern: GainPattern, orientation: Orientation, q):
    """Gain toward unit direction(s) q, broadcasting against stacked orientations."""
    if isinstance(pattern, CosinePattern):
        return pattern.gain_from_cos(np.sum(q * orientation.pointing, axis=-1))
    eps = np.arccos(np.clip(np.sum(q * orientation.pointing, axis=-1), -1.0, 1.0))
    phi = np.arctan2(np.sum(q * orientation.reference, axis=-1), np.sum(q * orientation.lateral, axis=-1))
    return pattern.gain(eps, phi)


def pattern_power_integral(pattern: GainPattern, n_eps: int = 360, n_phi: int = 720,
                           order: int = 4) -> float:
    """Integral of G(eps, phi) sin(eps) over the sphere.

    Composite Gauss-Legendre in eps (panels aligned with eps = pi/2 so the
    cosine pattern's cut-off is a panel edge) and the periodic trapezoid
    rule in phi.  ``n_eps`` counts nodes, not panels.
    """
    if n_eps % (2 * order):
        raise InvalidParameterError("n_eps must be a multiple of 2 * order")
    panels = n_eps // order
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, np.pi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    eps = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w_eps = (half[:, None] * w[None, :]).ravel()
    phi = -np.pi + 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    w_phi = 2.0 * np.pi / n_phi
    g = pattern.gain(eps[:, None], phi[None, :])
    g = np.broadcast_to(g, (eps.size, phi.size))
    val = float(np.sum(g * (np.sin(eps) * w_eps)[:, None]) * w_phi)
    if not np.isfinite(val):
        raise NumericError("pattern quadrature did not produce a finite value")
    return val


def polarization_gain(orientation: Orientation, direction, p_r):
    """Polarization matching factor: projection of f_par onto the wavefront, dotted with p_r."""
    q = _unit(direction)
    pr = _unit(p_r, "receive polarization")
    f_par = orientation.reference
    p_t = f_par - np.sum(f_par * q, axis=-1, keepdims=True) * q
    return np.sum(p_t * pr, axis=-1)
