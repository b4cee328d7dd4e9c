"""Min-echo-power maximization for downlink ISAC under per-user rate floors.

For a fixed orientation set the communication beamformers and the probing
covariance decouple (separate budgets, separate resources): the rate
floors are a feasibility question answered by downlink power
minimization, and the probing covariance maximizes the minimum echo over
the sample points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import Scenario, los_paths, user_paths
from ..errors import ConfigurationError, InvalidParameterError
from ..geometry import E1, project_to_cone
from ._core import (
    OptimizationResult,
    as_pointing,
    PathModel,
    ascent_step,
    maxmin_step,
    min_norm_combination,
    pointing_orientations,
    relative_gain,
    require_cosine,
)

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
INNER_STEPS = 5
COV_STEPS = 200
FIXED_POINT_ITERS = 500
GUARD_MARGIN = 0.1


def disk_samples(center, radius: float, m: int) -> np.ndarray:
    """Deterministic near-uniform points in a horizontal disk (sunflower layout)."""
    i = np.arange(m)
    r = radius * np.sqrt((i + 0.5) / m)
    a = i * GOLDEN_ANGLE
    c = np.asarray(center, dtype=float)
    return np.stack([c[0] + r * np.cos(a), c[1] + r * np.sin(a), np.full(m, c[2])], axis=1)


@dataclass(frozen=True)
class SensingTask:
    """Sensing region, its sample points, target RCS, rate floor and the two power budgets (W)."""

    center: np.ndarray
    radius: float
    n_samples: int = 8
    points: np.ndarray | None = None
    rcs: complex = 1.0
    rate_min: float = 0.0
    power_comm: float = 1.0
    power_sense: float = 1.0
    user_noise: float | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidParameterError("need at least one sample point")
        if not self.radius >= 0:
            raise InvalidParameterError("radius must be >= 0")
        if self.power_comm <= 0 or self.power_sense <= 0:
            raise InvalidParameterError("power budgets must be positive")
        if self.rate_min < 0:
            raise InvalidParameterError("rate floor must be >= 0")
        c = np.asarray(self.center, dtype=float).reshape(3)
        object.__setattr__(self, "center", c)
        pts = disk_samples(c, self.radius, self.n_samples) if self.points is None else (
            np.asarray(self.points, dtype=float).reshape(-1, 3))
        if pts.shape[0] != self.n_samples:
            raise ConfigurationError(f"{pts.shape[0]} sample points but n_samples={self.n_samples}")
        if np.any(np.linalg.norm(pts - c, axis=1) > self.radius * (1 + 1e-12) + 1e-12):
            raise ConfigurationError("sample points must lie inside the region")
        object.__setattr__(self, "points", pts)


# --- communication feasibility -------------------------------------------------------

def min_downlink_power(h, gamma: float, noise: float, with_grad: bool = False):
    """Minimum total power meeting SINR gamma at every user with h_k^T w_k signalling.

    Uses the uplink-downlink duality fixed point for the beam directions and
    a linear solve for the downlink powers.  Returns (total power, W) or
    (inf, None) when the targets cannot be met.  With ``with_grad`` a third
    item holds the Wirtinger coefficients of the minimum power in h; the
    dual uplink powers are the Lagrange multipliers of the SINR
    constraints, so the envelope theorem gives them directly.
    """
    k, n = h.shape
    if k == 0 or gamma <= 0:
        out = (0.0, np.zeros((n, k), dtype=complex))
        return out + (np.zeros((k, n), dtype=complex),) if with_grad else out
    if k > n:
        return (np.inf, None, None) if with_grad else (np.inf, None)
    hh = np.conj(h).T / np.sqrt(noise)  # effective channels as columns, noise-normalized
    lam = np.zeros(k)
    for _ in range(FIXED_POINT_ITERS):
        full = np.eye(n) + (hh * lam) @ hh.conj().T
        x = np.linalg.solve(full, hh)
        s = np.real(np.einsum("nk,nk->k", hh.conj(), x))
        # remove own contribution: h^H B_k^{-1} h = s / (1 - lam s)
        with np.errstate(divide="ignore", invalid="ignore"):  # a null channel signals infeasibility
            s_own = s / (1.0 - lam * s)
            new = gamma / s_own
        if not np.all(np.isfinite(new)) or np.any(new > 1e30):
            return (np.inf, None, None) if with_grad else (np.inf, None)
        if np.max(np.abs(new - lam) / np.maximum(new, 1e-300)) < 1e-12:
            lam = new
            break
        lam = new
    full = np.eye(n) + (hh * lam) @ hh.conj().T
    u = np.linalg.solve(full, hh)
    u = u / np.linalg.norm(u, axis=0, keepdims=True)
    g = np.abs(hh.conj().T @ u) ** 2  # g[i, j] = |h_i^H u_j|^2 (noise-normalized)
    a = -g.copy()
    a[np.diag_indices(k)] = np.diag(g) / gamma
    try:
        p = np.linalg.solve(a, np.ones(k))
    except np.linalg.LinAlgError:
        return (np.inf, None, None) if with_grad else (np.inf, None)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        return (np.inf, None, None) if with_grad else (np.inf, None)
    w = u * np.sqrt(p)
    if not with_grad:
        return float(p.sum()), w
    outer = np.einsum("nk,mk->knm", w, w.conj())
    total = outer.sum(axis=0)
    coef = np.zeros((k, n), dtype=complex)
    for i in range(k):
        # Q_i = w_i w_i^H / gamma - sum_{j != i} w_j w_j^H
        q = outer[i] * (1.0 / gamma + 1.0) - total
        coef[i] = -lam[i] * (q @ np.conj(h[i])) / noise
    return float(p.sum()), w, coef


def rates(h, w, noise: float):
    """Per-user downlink rates log2(1 + |h_k^T w_k|^2 / (sum_j!=k |h_k^T w_j|^2 + sigma^2))."""
    r = np.abs(h @ w) ** 2
    sig = np.diag(r)
    return np.log2(1.0 + sig / (r.sum(axis=1) - sig + noise))


# --- probing covariance --------------------------------------------------------------

def project_covariance(s, budget: float):
    """Projection onto {S >= 0, tr S <= budget} through the eigenvalues."""
    s = 0.5 * (s + s.conj().T)
    w, v = np.linalg.eigh(s)
    w = np.maximum(w, 0.0)
    if w.sum() > budget:
        # project the eigenvalues onto the scaled simplex
        u = np.sort(w)[::-1]
        css = np.cumsum(u) - budget
        idx = np.arange(1, w.size + 1)
        rho = np.nonzero(u - css / idx > 0)[0][-1]
        w = np.maximum(w - css[rho] / (rho + 1.0), 0.0)
    return (v * w) @ v.conj().T


def echo_powers(h_t, cov, rcs):
    """|sigma_T|^2 ||h||^2 h^T S h* for every sample point (rows of ``h_t``)."""
    nrm = np.sum(np.abs(h_t) ** 2, axis=1)
    quad = np.real(np.einsum("mi,ij,mj->m", h_t, cov, np.conj(h_t)))
    return abs(rcs) ** 2 * nrm * quad


def optimize_covariance(h_t, rcs, budget: float, init=None, steps: int = COV_STEPS):
    """Max-min echo over {S >= 0, tr S <= budget} by projected ascent.

    Each echo is linear in S with gradient A_m = |sigma|^2 ||h_m||^2 conj(h_m) h_m^T;
    the ascent direction is the min-norm element of the nearly active
    gradients and steps are accepted only if the minimum grows.
    """
    n = h_t.shape[1]
    s = budget / n * np.eye(n, dtype=complex) if init is None else np.array(init, dtype=complex)
    v = np.conj(h_t)
    amats = (abs(rcs) ** 2 * np.sum(np.abs(h_t) ** 2, axis=1))[:, None, None] * np.einsum("mi,mj->mij", v, v.conj())
    vals = echo_powers(h_t, s, rcs)
    f0 = float(vals.min())
    for _ in range(steps):
        improved = False
        for delta in (0.05, 0.01, 0.0):
            act = np.flatnonzero(vals <= f0 + delta * abs(f0))
            g = amats[act]
            if np.real(np.trace(s)) >= budget * (1 - 1e-9):
                # on the budget face: move along the trace-free part
                g = g - (np.real(np.trace(g, axis1=1, axis2=2)) / n)[:, None, None] * np.eye(n)
            flat = np.concatenate([g.real.reshape(len(act), -1), g.imag.reshape(len(act), -1)], axis=1)
            lam = min_norm_combination(flat)
            d = np.tensordot(lam, g, axes=1)
            nd = np.linalg.norm(d)
            if nd == 0:
                continue
            d = d / nd * budget
            t = 1.0
            for _ in range(30):
                cand = project_covariance(s + t * d, budget)
                cv = echo_powers(h_t, cand, rcs)
                if cv.min() > f0 * (1 + 1e-12):
                    s, vals, f0, improved = cand, cv, float(cv.min()), True
                    break
                t *= 0.5
            if improved:
                break
        if not improved:
            break
    return s, f0


# --- solver --------------------------------------------------------------------------

def _candidates(scenario: Scenario, task: SensingTask, tied: bool):
    pos = scenario.layout.positions
    tm = scenario.constraint.theta_max
    n = pos.shape[0]
    out = [project_to_cone(task.center[None, :] - pos, tm), np.tile(E1, (n, 1))]
    if scenario.n_users:
        rr = np.array([scenario.users[i % scenario.n_users] for i in range(n)])
        out.append(project_to_cone(rr - pos, tm))
        # part of the array toward each user, the rest toward the region
        mix = out[0].copy()
        for i in range(scenario.n_users):
            mix[i::scenario.n_users + 1] = project_to_cone(scenario.users[i][None, :] - pos[i::scenario.n_users + 1], tm)
        out.append(mix)
        for i in range(scenario.n_users):
            out.append(project_to_cone(scenario.users[i][None, :] - pos, tm))
    if tied:
        out = [np.tile(project_to_cone(np.mean(c, axis=0), tm), (n, 1)) for c in out]
    return out


class _IsacProblem:
    def __init__(self, scenario: Scenario, task: SensingTask):
        require_cosine(scenario.pattern)
        self.scenario = scenario
        self.task = task
        self.targets = PathModel.from_pathsets(scenario.pattern, [los_paths(scenario, q) for q in task.points])
        self.users = (PathModel.from_pathsets(scenario.pattern, [user_paths(scenario, k) for k in range(scenario.n_users)])
                      if scenario.n_users else None)
        self.noise = scenario.noise_power if task.user_noise is None else task.user_noise
        self.gamma = 2.0 ** task.rate_min - 1.0

    def target_channels(self, f):
        return self.targets.channels(f)

    def comm(self, f):
        if self.users is None:
            return 0.0, None
        return min_downlink_power(self.users.channels(f), self.gamma, self.noise)

    def power_grad(self, f):
        """Minimum comm power and its gradient in the pointing vectors."""
        h = self.users.channels(f)
        p, _, coef = min_downlink_power(h, self.gamma, self.noise, with_grad=True)
        if not np.isfinite(p):
            return p, None
        return p, self.users.gradient(f, coef)

    def feasible(self, f):
        return self.comm(f)[0] <= self.task.power_comm * (1 + 1e-9)

    def echo_min(self, f, cov):
        return float(echo_powers(self.target_channels(f), cov, self.task.rcs).min())

    def echo_grads(self, f, cov):
        h = self.target_channels(f)
        nrm = np.sum(np.abs(h) ** 2, axis=1)
        quad = np.real(np.einsum("mi,ij,mj->m", h, cov, np.conj(h)))
        sh = np.conj(h) @ cov.T  # rows: S conj(h_m)
        coef = abs(self.task.rcs) ** 2 * (quad[:, None] * np.conj(h) + nrm[:, None] * sh)
        vals = abs(self.task.rcs) ** 2 * nrm * quad
        grads = np.stack([self.targets.gradient(f, _single(coef, m, len(vals))) for m in range(len(vals))])
        return vals, grads


def _single(coef, m, k):
    out = np.zeros_like(coef)
    out[m] = coef[m]
    return out


def _phase_one(problem: _IsacProblem, f, project, tied, max_steps=200):
    """Descend the minimum comm power until the rate floors fit the budget."""
    users = problem.users

    def neg_power(p):
        return -problem.comm(p)[0]

    def values_and_grads(p):
        h = users.channels(p)
        nrm = np.sum(np.abs(h) ** 2, axis=1)
        grads = np.stack([users.gradient(p, _single(np.conj(h), k, h.shape[0])) for k in range(h.shape[0])])
        return nrm, grads

    for _ in range(max_steps):
        if problem.feasible(f):
            return f, True
        pw, grad = problem.power_grad(f)
        if grad is not None:
            f, _, ok = ascent_step(neg_power, f, -grad, -pw, project, tied=tied)
        else:
            # targets unreachable at any power: strengthen the weakest user channel first
            f, _, ok = maxmin_step(values_and_grads, f, project, tied=tied)
        if not ok:
            break
    return f, problem.feasible(f)


def isac_minecho_bcd(scenario: Scenario, task: SensingTask, tol: float = 1e-6, max_iter: int = 200,
                     tied: bool = False, init=None, warm_start: OptimizationResult | None = None,
                     optimize_orientation: bool = True) -> OptimizationResult:
    """Block ascent over (comm beamformers and probing covariance, orientations).

    ``tied`` restricts all antennas to one common orientation (array-wise
    rotation).  ``init`` fixes the starting orientations; otherwise several
    deterministic candidates are scored after a covariance step and the
    best feasible one is kept.  ``warm_start`` adds a previous solution as
    a candidate.  With ``optimize_orientation=False`` only the resource
    step runs at ``init`` (fixed and random baselines).  ``objective`` is
    the minimum echo power in watts (nan when infeasible).
    """
    problem = _IsacProblem(scenario, task)
    tm = scenario.constraint.theta_max
    project = lambda x: project_to_cone(x, tm)
    n = scenario.n_antennas
    if init is not None:
        cands = [as_pointing(init, n)]
    else:
        cands = _candidates(scenario, task, tied)
    if warm_start is not None and warm_start.status != "infeasible":
        cands.append(np.atleast_2d(warm_start.orientations.pointing).copy())

    best = None
    for c in cands:
        f = c
        if not problem.feasible(f):
            if not optimize_orientation or problem.users is None:
                continue
            f, ok = _phase_one(problem, f, project, tied)
            if not ok:
                continue
        s0 = None
        if warm_start is not None and c is cands[-1] and warm_start.status != "infeasible":
            s0 = warm_start.beamformers["covariance"]
        cov, val = optimize_covariance(problem.target_channels(f), task.rcs, task.power_sense, init=s0)
        if best is None or val > best[2]:
            best = (f, cov, val)
    if best is None:
        n_users = scenario.n_users
        return OptimizationResult(
            orientations=pointing_orientations(cands[0]),
            beamformers={"comm": None, "covariance": None},
            trace=[], status="infeasible", objective=float("nan"),
            info={"rate_min": task.rate_min, "n_users": n_users},
        )
    f, cov, val = best
    trace = [(0, val)]
    status = "converged"
    if optimize_orientation:
        status = "iteration-limit"

        def objective(p):
            if not problem.feasible(p):
                return -np.inf
            return problem.echo_min(p, cov)

        for it in range(1, max_iter + 1):
            old = val
            for _ in range(INNER_STEPS):
                guard = None
                if problem.users is not None:
                    pw, pg = problem.power_grad(f)
                    if pg is not None and pw > (1.0 - GUARD_MARGIN) * task.power_comm:
                        guard = -pg
                f, val, ok = maxmin_step(lambda p: problem.echo_grads(p, cov), f, project, tied=tied,
                                         objective=objective, guard=guard)
                if not ok:
                    break
            cov, v2 = optimize_covariance(problem.target_channels(f), task.rcs, task.power_sense, init=cov)
            val = max(val, v2)
            trace.append((it, val))
            if relative_gain(val, old) < tol:
                status = "converged"
                break
    p_used, w = problem.comm(f)
    return OptimizationResult(
        orientations=pointing_orientations(f),
        beamformers={"comm": w, "covariance": cov},
        trace=trace,
        status=status,
        objective=float(trace[-1][1]),
        info={"comm_power": p_used, "echo": echo_powers(problem.target_channels(f), cov, task.rcs),
              "rates": rates(problem.users.channels(f), w, problem.noise) if problem.users is not None else None},
    )
