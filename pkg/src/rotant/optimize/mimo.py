"""Point-to-point MIMO capacity with rotatable antennas at both ends."""

from __future__ import annotations

import numpy as np

from ..channel import Scenario, mimo_channel
from ..geometry import ArrayLayout, project_to_cone
from ..radiation import CosinePattern, unit_directions
from ._core import (
    OptimizationResult,
    as_pointing,
    ascent_step,
    mirror_project,
    pointing_orientations,
    relative_gain,
    require_cosine,
    waterfill,
)

INNER_STEPS = 5


class _MimoLink:
    """LoS MIMO link with cached geometry; H[r, t] = base * A_t(u . f_t) * A_r(-u . g_r)."""

    def __init__(self, scenario: Scenario, rx_layout: ArrayLayout, rx_pattern):
        self.tx_pattern = require_cosine(scenario.pattern)
        self.rx_pattern = require_cosine(rx_pattern)
        u, d = unit_directions(scenario.layout.positions[None, :, :], rx_layout.positions[:, None, :])
        self.u = u
        self.base = np.sqrt(scenario.beta0) / d * np.exp(-2j * np.pi * d / scenario.wavelength)
        self.noise = scenario.noise_power

    def parts(self, ft, fr):
        at, dt = self.tx_pattern.amplitude_from_cos(np.einsum("rti,ti->rt", self.u, ft))
        ar, dr = self.rx_pattern.amplitude_from_cos(np.einsum("rti,ri->rt", -self.u, fr))
        return at, dt, ar, dr

    def channel(self, ft, fr):
        at, _, ar, _ = self.parts(ft, fr)
        return self.base * at * ar

    def capacity(self, h, cov):
        m = np.eye(h.shape[0]) + h @ cov @ h.conj().T / self.noise
        _, logdet = np.linalg.slogdet(m)
        return float(logdet / np.log(2.0))

    def gradients(self, ft, fr, cov):
        """Gradients of log-det capacity in the tx and rx pointing vectors."""
        at, dt, ar, dr = self.parts(ft, fr)
        h = self.base * at * ar
        a = np.eye(h.shape[0]) + h @ cov @ h.conj().T / self.noise
        # Wirtinger coefficient: dC = 2 Re sum M * dH
        m = (cov @ h.conj().T @ np.linalg.inv(a)).T / (self.noise * np.log(2.0))
        gt = 2.0 * np.real(np.einsum("rt,rt,rti->ti", m * self.base * ar, dt, self.u))
        gr = 2.0 * np.real(np.einsum("rt,rt,rti->ri", m * self.base * at, dr, -self.u))
        return gt, gr


def waterfill_covariance(h, power: float, noise: float):
    """Capacity-achieving transmit covariance: water-filling over the right singular vectors."""
    _, s, vh = np.linalg.svd(h)
    p = waterfill(s ** 2 / noise, power)
    v = vh.conj().T[:, : s.size]
    return (v * p) @ v.conj().T, p


def default_mimo_init(scenario: Scenario, rx_layout: ArrayLayout):
    """Tx antennas toward the rx centroid, rx antennas toward the tx centroid, both cone-clamped."""
    tm = scenario.constraint.theta_max
    ft = project_to_cone(rx_layout.positions.mean(axis=0)[None, :] - scenario.layout.positions, tm)
    fr = mirror_project(scenario.layout.positions.mean(axis=0)[None, :] - rx_layout.positions, tm)
    return ft, fr


def mimo_capacity_bcd(scenario: Scenario, rx_layout: ArrayLayout, tx_init=None, rx_init=None,
                      power: float | None = None, tol: float = 1e-6, max_iter: int = 200,
                      rx_pattern: CosinePattern | None = None) -> OptimizationResult:
    """Block coordinate ascent over (covariance, tx pointing, rx pointing).

    The transmit cone is around +e1 and the receive cone around -e1.
    Returns the capacity in bps/Hz; ``beamformers`` holds the covariance.
    """
    p_tot = scenario.tx_power if power is None else power
    tm = scenario.constraint.theta_max
    link = _MimoLink(scenario, rx_layout, scenario.pattern if rx_pattern is None else rx_pattern)
    d_ft, d_fr = default_mimo_init(scenario, rx_layout)
    ft = d_ft if tx_init is None else as_pointing(tx_init, scenario.n_antennas)
    fr = d_fr if rx_init is None else as_pointing(rx_init, rx_layout.n)
    proj_t = lambda x: project_to_cone(x, tm)
    proj_r = lambda x: mirror_project(x, tm)

    cov, _ = waterfill_covariance(link.channel(ft, fr), p_tot, link.noise)
    val = link.capacity(link.channel(ft, fr), cov)
    trace = [(0, val)]
    status = "iteration-limit"
    for it in range(1, max_iter + 1):
        old = val
        cov, _ = waterfill_covariance(link.channel(ft, fr), p_tot, link.noise)
        val = link.capacity(link.channel(ft, fr), cov)
        for _ in range(INNER_STEPS):
            gt, _ = link.gradients(ft, fr, cov)
            ft, val, ok = ascent_step(lambda x: link.capacity(link.channel(x, fr), cov), ft, gt, val, proj_t)
            if not ok:
                break
        for _ in range(INNER_STEPS):
            _, gr = link.gradients(ft, fr, cov)
            fr, val, ok = ascent_step(lambda x: link.capacity(link.channel(ft, x), cov), fr, gr, val, proj_r)
            if not ok:
                break
        trace.append((it, val))
        if relative_gain(val, old) < tol:
            status = "converged"
            break
    cov, pw = waterfill_covariance(link.channel(ft, fr), p_tot, link.noise)
    final = max(link.capacity(link.channel(ft, fr), cov), val)
    if final > trace[-1][1]:
        trace.append((trace[-1][0] + 1, final))
    return OptimizationResult(
        orientations=pointing_orientations(ft),
        beamformers=cov,
        trace=trace,
        status=status,
        objective=final,
        info={"rx_orientations": pointing_orientations(fr), "stream_powers": pw,
              "channel": link.channel(ft, fr)},
    )


def mimo_capacity(scenario: Scenario, rx_layout: ArrayLayout, tx_orient, rx_orient,
                  power: float | None = None, rx_pattern=None) -> float:
    """Water-filling capacity for given orientations (baselines and checks)."""
    p_tot = scenario.tx_power if power is None else power
    h = mimo_channel(scenario, tx_orient, rx_layout, rx_orient, rx_pattern)
    _, p = waterfill_covariance(h, p_tot, scenario.noise_power)
    s = np.linalg.svd(h, compute_uv=False)
    return float(np.sum(np.log2(1.0 + p * s ** 2 / scenario.noise_power)))
