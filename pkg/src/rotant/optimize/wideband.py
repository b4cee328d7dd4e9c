"""OFDM uplink sum rate with subcarrier assignment, per-user power and orientations."""

from __future__ import annotations

import numpy as np

from ..channel import Scenario, WidebandConfig, user_paths
from ..geometry import project_to_cone
from ._core import (
    OptimizationResult,
    as_pointing,
    PathModel,
    ascent_step,
    pointing_orientations,
    relative_gain,
    require_cosine,
    waterfill,
)
from .multiuser import centroid_init

INNER_STEPS = 5
MAX_GREEDY_PASSES = 10


def wideband_model(scenario: Scenario, wideband: WidebandConfig) -> PathModel:
    """Per-subcarrier path coefficients coef[k, n, p, l] (gain factor excluded)."""
    sets = [user_paths(scenario, k) for k in range(scenario.n_users)]
    fc = scenario.carrier_frequency
    f = fc + wideband.frequencies
    coefs = []
    for ps in sets:
        base = ps.coef * np.exp(2j * np.pi * fc * ps.delays)
        coefs.append(base[:, :, None] * np.exp(-2j * np.pi * ps.delays[:, :, None] * f[None, None, :]))
    return PathModel.from_pathsets(scenario.pattern, sets, coef=np.stack(coefs))


def subcarrier_noise(scenario: Scenario, wideband: WidebandConfig) -> float:
    """Noise per subcarrier: the total noise power spread evenly over the L subcarriers."""
    return scenario.noise_power / wideband.subcarriers


def _rates(gains, assign, powers, prefix):
    """Sum rate (bps/Hz) given gains (K, L), owner per subcarrier (-1 = unused) and powers (L,)."""
    l_idx = np.flatnonzero(assign >= 0)
    g = gains[assign[l_idx], l_idx]
    return float(np.sum(np.log2(1.0 + powers[l_idx] * g)) / prefix)


def _user_powers(gains, assign, budgets):
    """Water-filling of every user's budget over its assigned subcarriers."""
    p = np.zeros(gains.shape[1])
    for k in range(gains.shape[0]):
        idx = np.flatnonzero(assign == k)
        if idx.size:
            p[idx] = waterfill(gains[k, idx], budgets[k])
    return p


def allocate(gains, budgets, prefix: float, assign=None):
    """Assignment and powers: strongest-user start (unless given), water-filling, greedy moves.

    A single-subcarrier move to another user is kept only if the sum rate
    rises after re-water-filling both affected users.
    """
    k_users, n_sc = gains.shape
    if assign is None:
        assign = np.argmax(gains, axis=0)
    assign = assign.copy()
    powers = _user_powers(gains, assign, budgets)
    best = _rates(gains, assign, powers, prefix)
    for _ in range(MAX_GREEDY_PASSES):
        changed = False
        for l in range(n_sc):
            owner = assign[l]
            for k in range(k_users):
                if k == owner:
                    continue
                trial = assign.copy()
                trial[l] = k
                tp = powers.copy()
                for u in (owner, k):
                    idx = np.flatnonzero(trial == u)
                    tp[trial == u] = waterfill(gains[u, idx], budgets[u]) if idx.size else 0.0
                val = _rates(gains, trial, tp, prefix)
                if val > best * (1 + 1e-12):
                    assign, powers, best, owner, changed = trial, tp, val, k, True
        if not changed:
            break
    return assign, powers, best


def wideband_sumrate_ao(scenario: Scenario, wideband: WidebandConfig, init=None, tol: float = 1e-6,
                        max_iter: int = 200, optimize_orientation: bool = True) -> OptimizationResult:
    """Alternate subcarrier/power allocation and orientations to maximize the OFDM sum rate.

    Each user's power budget is its entry in ``scenario.user_powers``.
    With ``optimize_orientation=False`` only the allocation runs, which is
    how fixed and random orientation baselines are scored.
    """
    require_cosine(scenario.pattern)
    model = wideband_model(scenario, wideband)
    noise = subcarrier_noise(scenario, wideband)
    prefix = float(wideband.subcarriers + wideband.cp_length)
    budgets = scenario.user_powers
    tm = scenario.constraint.theta_max
    f = centroid_init(scenario) if init is None else as_pointing(init, scenario.n_antennas)
    project = lambda x: project_to_cone(x, tm)

    def gains_of(p):
        h = model.channels(p)  # (K, L, N)
        return np.sum(np.abs(h) ** 2, axis=-1) / noise, h

    g, _ = gains_of(f)
    assign, powers, val = allocate(g, budgets, prefix)
    trace = [(0, val)]
    status = "converged"
    if optimize_orientation:
        status = "iteration-limit"
        for it in range(1, max_iter + 1):
            old = val
            owner_onehot = np.zeros_like(g)
            used = assign >= 0
            owner_onehot[assign[used], np.flatnonzero(used)] = 1.0
            pw = owner_onehot * powers[None, :]

            def objective(p):
                gg, _ = gains_of(p)
                return float(np.sum(np.log2(1.0 + pw * gg)) / prefix)

            for _ in range(INNER_STEPS):
                gg, h = gains_of(f)
                # d/dh of sum log2(1 + P ||h||^2 / s2): P/(s2 ln2 (1 + P g)) conj(h)
                w = pw / (noise * np.log(2.0) * (1.0 + pw * gg) * prefix)
                grad = model.gradient(f, w[:, :, None] * np.conj(h))
                f, val, ok = ascent_step(objective, f, grad, val, project)
                if not ok:
                    break
            g, _ = gains_of(f)
            assign, powers, val2 = allocate(g, budgets, prefix, assign=assign)
            val = max(val, val2)
            trace.append((it, val))
            if relative_gain(val, old) < tol:
                status = "converged"
                break
    rates = np.zeros(scenario.n_users)
    for k in range(scenario.n_users):
        idx = np.flatnonzero(assign == k)
        rates[k] = np.sum(np.log2(1.0 + powers[idx] * g[k, idx])) / prefix
    return OptimizationResult(
        orientations=pointing_orientations(f),
        beamformers={"assignment": assign, "powers": powers},
        trace=trace,
        status=status,
        objective=float(trace[-1][1]),
        info={"user_rates": rates},
    )
