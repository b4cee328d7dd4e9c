"""Uplink multi-user max-min SINR with ZF or MMSE receivers."""

from __future__ import annotations

import numpy as np

from ..channel import Scenario, user_paths
from ..errors import ConfigurationError, InfeasibleError
from ..geometry import as_orientations, project_to_cone
from ._core import (
    OptimizationResult,
    as_pointing,
    PathModel,
    maxmin_step,
    pointing_orientations,
    relative_gain,
    require_cosine,
)

INNER_STEPS = 5
RECEIVERS = ("ZF", "MMSE")


def mmse_sinr(h, powers, noise: float, with_coef: bool = False):
    """SINR of each user under MMSE receivers; optionally the Wirtinger coefficients of every SINR.

    ``h`` is (K, N).  gamma_k = P_k h_k^H B_k^{-1} h_k with B_k the
    interference-plus-noise covariance of user k.
    """
    k, n = h.shape
    hc = h.T  # N x K
    r = noise * np.eye(n) + (hc * powers) @ hc.conj().T
    x = np.linalg.solve(r, hc)  # R^{-1} h_k
    s = np.real(np.einsum("nk,nk->k", hc.conj(), x))
    s = np.minimum(s, (1.0 - 1e-15) / powers)
    gamma = powers * s / (1.0 - powers * s)
    if not with_coef:
        return gamma
    v = x / (1.0 - powers * s)  # B_k^{-1} h_k by Sherman-Morrison
    coef = np.zeros((k, k, n), dtype=complex)
    for i in range(k):
        # d gamma_i / d h_j for j != i: -P_i P_j (h_j^H v_i) conj(v_i)
        proj = hc.conj().T @ v[:, i]
        coef[i] = -powers[i] * (powers * proj)[:, None] * np.conj(v[:, i])[None, :]
        coef[i, i] = powers[i] * np.conj(v[:, i])
    return gamma, coef


def zf_sinr(h, powers, noise: float, with_coef: bool = False):
    """SINR under zero forcing: gamma_k = P_k / (sigma^2 [(H^H H)^{-1}]_kk)."""
    k, n = h.shape
    if k > n:
        raise InfeasibleError(f"zero forcing needs K <= N (K={k}, N={n})")
    hc = h.T
    gram = hc.conj().T @ hc
    try:
        c = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        gamma = np.zeros(k)
        return (gamma, np.zeros((k, k, n), dtype=complex)) if with_coef else gamma
    ckk = np.real(np.diag(c))
    bad = ~(ckk > 0) | ~np.isfinite(ckk)
    ckk = np.where(bad, np.inf, ckk)
    gamma = powers / (noise * ckk)
    if not with_coef:
        return gamma
    hcc = hc @ c  # column k is H c_k
    coef = np.zeros((k, k, n), dtype=complex)
    for i in range(k):
        if bad[i]:
            continue
        scale = powers[i] / (noise * ckk[i] ** 2)
        coef[i] = scale * c[:, i][:, None] * np.conj(hcc[:, i])[None, :]
    return gamma, coef


def receive_beamformers(h, powers, noise: float, receiver: str):
    """Unit-norm combiners w_k applied as w_k^T y (columns of the returned N x K matrix)."""
    hc = h.T
    if receiver == "ZF":
        w = hc @ np.linalg.pinv(hc.conj().T @ hc)
    else:
        r = noise * np.eye(hc.shape[0]) + (hc * powers) @ hc.conj().T
        w = np.linalg.solve(r, hc)
    w = np.conj(w)
    return w / np.maximum(np.linalg.norm(w, axis=0, keepdims=True), 1e-300)


def sinr(h, powers, noise, receiver: str, with_coef: bool = False):
    if receiver == "ZF":
        return zf_sinr(h, powers, noise, with_coef)
    if receiver == "MMSE":
        return mmse_sinr(h, powers, noise, with_coef)
    raise ConfigurationError(f"receiver must be one of {RECEIVERS}")


def user_model(scenario: Scenario) -> PathModel:
    return PathModel.from_pathsets(scenario.pattern, [user_paths(scenario, k) for k in range(scenario.n_users)])


def centroid_init(scenario: Scenario, points=None) -> np.ndarray:
    """Every antenna toward the centroid of the given points (users by default), cone-clamped."""
    pts = scenario.users if points is None else np.asarray(points, dtype=float).reshape(-1, 3)
    target = pts.mean(axis=0)
    return project_to_cone(target[None, :] - scenario.layout.positions, scenario.constraint.theta_max)


def maxmin_sinr_ao(scenario: Scenario, receiver: str = "MMSE", init=None, tol: float = 1e-6,
                   max_iter: int = 200, tied: bool = False) -> OptimizationResult:
    """Alternate receivers and orientations to maximize the minimum user SINR.

    The receivers are the closed-form ZF/MMSE rules, so the SINR of each
    orientation set is evaluated with its optimal receivers.  The
    orientation step ascends the minimum along the min-norm element of the
    nearly active SINR gradients.  ``objective`` is the max-min rate
    log2(1 + min SINR).
    """
    require_cosine(scenario.pattern)
    if receiver not in RECEIVERS:
        raise ConfigurationError(f"receiver must be one of {RECEIVERS}")
    if receiver == "ZF" and scenario.n_users > scenario.n_antennas:
        raise InfeasibleError("zero forcing needs K <= N")
    model = user_model(scenario)
    powers = scenario.user_powers
    noise = scenario.noise_power
    tm = scenario.constraint.theta_max
    f = centroid_init(scenario) if init is None else as_pointing(init, scenario.n_antennas)
    if tied:
        f = np.tile(f[0], (f.shape[0], 1))
    project = lambda x: project_to_cone(x, tm)

    def values_and_grads(p):
        h = model.channels(p)
        g, coef = sinr(h, powers, noise, receiver, with_coef=True)
        grads = np.stack([model.gradient(p, coef[i]) for i in range(g.size)])
        return g, grads

    def objective(p):
        return float(np.min(sinr(model.channels(p), powers, noise, receiver)))

    val = objective(f)
    trace = [(0, val)]
    status = "iteration-limit"
    for it in range(1, max_iter + 1):
        old = val
        for _ in range(INNER_STEPS):
            f, val, ok = maxmin_step(values_and_grads, f, project, tied=tied, objective=objective)
            if not ok:
                break
        trace.append((it, val))
        if relative_gain(val, old) < tol:
            status = "converged"
            break
    h = model.channels(f)
    gam = sinr(h, powers, noise, receiver)
    return OptimizationResult(
        orientations=pointing_orientations(f),
        beamformers=receive_beamformers(h, powers, noise, receiver),
        trace=trace,
        status=status,
        objective=float(np.log2(1.0 + np.min(gam))),
        info={"sinr": gam, "min_sinr": float(np.min(gam)), "channels": h},
    )


def maxmin_rate(scenario: Scenario, orientations, receiver: str = "MMSE") -> float:
    """log2(1 + min SINR) at given orientations (baselines)."""
    model = user_model(scenario)
    p = as_orientations(orientations, scenario.n_antennas).pointing
    g = sinr(model.channels(p), scenario.user_powers, scenario.noise_power, receiver)
    return float(np.log2(1.0 + np.min(g)))
