"""Shared machinery for the orientation solvers.

Pointing vectors are optimized directly on the unit sphere intersected
with the boresight cone.  A step moves along the tangent-plane gradient
and is pulled back by normalizing and projecting onto the cone, with
Armijo backtracking on the true objective so no accepted step lowers it.

Channels are written as h[n] = sum_p coef[n, p] * A(dirs[n, p] . f_n) with
A = sqrt(gain).  Objectives report Wirtinger coefficients C with
dU = 2 Re sum C * dh, which the chain rule turns into gradients in f.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ConfigurationError
from ..geometry import Orientation, as_orientations, project_to_cone
from ..radiation import CosinePattern

ARMIJO = 1e-4
MAX_HALVINGS = 30
TRACE_SLACK = 1e-9


@dataclass
class OptimizationResult:
    """Final orientations, beamformers/covariances, objective trace and status."""

    orientations: Orientation
    beamformers: object
    trace: list = field(default_factory=list)
    status: str = "converged"
    objective: float = float("nan")
    info: dict = field(default_factory=dict)

    def trace_values(self) -> np.ndarray:
        return np.array([v for _, v in self.trace], dtype=float)

    def is_monotone(self, slack: float = TRACE_SLACK) -> bool:
        v = self.trace_values()
        return bool(np.all(np.diff(v) >= -slack * np.maximum(1.0, np.abs(v[:-1]))))


def require_cosine(pattern):
    if not isinstance(pattern, CosinePattern):
        raise ConfigurationError("orientation solvers need the cosine pattern")
    return pattern


def pointing_orientations(pointing) -> Orientation:
    return Orientation.from_pointing(np.asarray(pointing, dtype=float))


def as_pointing(init, n: int) -> np.ndarray:
    """Pointing vectors (n, 3) from an Orientation, a list of them, or a raw array."""
    if isinstance(init, np.ndarray) or (isinstance(init, (list, tuple)) and init
                                         and not isinstance(init[0], Orientation)):
        p = np.asarray(init, dtype=float)
        p = np.tile(p, (n, 1)) if p.ndim == 1 else p.copy()
        if p.shape != (n, 3):
            raise ConfigurationError(f"expected {n} pointing vectors, got shape {p.shape}")
        return p / np.linalg.norm(p, axis=1, keepdims=True)
    return np.atleast_2d(as_orientations(init, n).pointing).copy()


def mirror_project(target, theta_max):
    """Projection onto the cone around -e1 (receive side)."""
    return -project_to_cone(-np.asarray(target, dtype=float), theta_max)


@dataclass
class PathModel:
    """Stacked path data for several links sharing one antenna array.

    ``dirs`` has shape (K, N, P, 3) and ``coef`` shape (K, N, P) or
    (K, N, P, L) for per-subcarrier coefficients.
    """

    pattern: CosinePattern
    dirs: np.ndarray
    coef: np.ndarray

    @staticmethod
    def from_pathsets(pattern, pathsets, coef=None) -> "PathModel":
        dirs = np.stack([p.dirs for p in pathsets])
        c = np.stack([p.coef for p in pathsets]) if coef is None else coef
        return PathModel(require_cosine(pattern), dirs, c)

    def cosines(self, pointing):
        return np.einsum("knpi,ni->knp", self.dirs, pointing)

    def channels(self, pointing):
        amp, _ = self.pattern.amplitude_from_cos(self.cosines(pointing))
        if self.coef.ndim == 4:
            return np.einsum("knpl,knp->kln", self.coef, amp)
        return np.einsum("knp,knp->kn", self.coef, amp)

    def gradient(self, pointing, wcoef):
        """Gradient in f (N, 3) of an objective whose Wirtinger coefficients are ``wcoef``.

        ``wcoef`` has shape (K, N) or (K, L, N) for per-subcarrier channels.
        """
        _, der = self.pattern.amplitude_from_cos(self.cosines(pointing))
        if self.coef.ndim == 4:
            x = np.einsum("kln,knpl->knp", wcoef, self.coef)
        else:
            x = wcoef[:, :, None] * self.coef
        return 2.0 * np.real(np.einsum("knp,knp,knpi->ni", x, der, self.dirs))


def tangent(pointing, grad):
    return grad - np.sum(grad * pointing, axis=1, keepdims=True) * pointing


def ascent_step(objective: Callable, pointing, grad, f0: float, project: Callable,
                tied: bool = False):
    """One projected-gradient step with Armijo backtracking.

    ``objective`` maps pointing (N, 3) to a float (``-inf`` marks an
    infeasible point).  With ``tied`` all antennas share one pointing
    vector and the summed gradient moves it.  Returns (pointing, value,
    accepted).
    """
    if tied:
        p0 = pointing[0]
        g = np.sum(grad, axis=0)
        d = g - (g @ p0) * p0
        scale = np.linalg.norm(d)
        if not np.isfinite(scale) or scale < 1e-300:
            return pointing, f0, False
        d = d / scale
        t = 1.0
        for _ in range(MAX_HALVINGS):
            p = project(p0 + t * d)
            cand = np.tile(p, (pointing.shape[0], 1))
            fn = objective(cand)
            lin = g @ (p - p0)
            if fn > f0 and fn >= f0 + ARMIJO * max(lin, 0.0):
                return cand, fn, True
            t *= 0.5
        return pointing, f0, False
    d = tangent(pointing, grad)
    scale = np.max(np.linalg.norm(d, axis=1))
    if not np.isfinite(scale) or scale < 1e-300:
        return pointing, f0, False
    d = d / scale
    t = 1.0
    for _ in range(MAX_HALVINGS):
        cand = project(pointing + t * d)
        fn = objective(cand)
        lin = float(np.sum(grad * (cand - pointing)))
        if fn > f0 and fn >= f0 + ARMIJO * max(lin, 0.0):
            return cand, fn, True
        t *= 0.5
    return pointing, f0, False


def simplex_projection(v, total=1.0):
    """Euclidean projection onto {x >= 0, sum x = total}."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def min_norm_combination(vectors, iters: int = 300):
    """Weights of the minimum-norm point in the convex hull of the given vectors."""
    v = np.asarray(vectors, dtype=float).reshape(len(vectors), -1)
    m = v.shape[0]
    if m == 1:
        return np.ones(1)
    gram = v @ v.T
    lip = max(np.linalg.eigvalsh(gram)[-1], 1e-300)
    lam = np.full(m, 1.0 / m)
    for _ in range(iters):
        lam = simplex_projection(lam - gram @ lam / lip)
    return lam


def maxmin_step(values_and_grads: Callable, pointing, project: Callable, tied: bool = False,
                objective: Callable | None = None, deltas=(0.05, 0.01, 0.0), guard=None):
    """Ascent step on min_k u_k(f) using the min-norm element of nearly active gradients.

    ``values_and_grads`` returns (values (K,), grads (K, N, 3)).  ``guard``
    is an optional (N, 3) gradient of a nearly active constraint margin; it
    joins the hull (rescaled to the active gradients) so the direction also
    keeps the constraint satisfied to first order.
    """
    vals, grads = values_and_grads(pointing)
    f0 = float(np.min(vals))
    obj = objective or (lambda p: float(np.min(values_and_grads(p)[0])))

    def reduce(g):
        if tied:
            t = np.sum(g, axis=0)
            return t - (t @ pointing[0]) * pointing[0]
        return tangent(pointing, g)

    for delta in deltas:
        act = np.flatnonzero(vals <= f0 + delta * abs(f0))
        full = grads[act]
        gs = np.array([reduce(g) for g in full])
        if guard is not None:
            gg = reduce(guard)
            ng = np.linalg.norm(gg)
            if ng > 0:
                scale = np.median([np.linalg.norm(g) for g in gs]) / ng
                gs = np.concatenate([gs, (gg * scale)[None]])
                full = np.concatenate([full, (guard * scale)[None]])
        lam = min_norm_combination(gs)
        direction = np.tensordot(lam, full, axes=1)
        p, f, ok = ascent_step(obj, pointing, direction, f0, project, tied=tied)
        if ok:
            return p, f, True
    return pointing, f0, False


def waterfill(gains, budget: float):
    """Powers p_i = max(mu - 1/g_i, 0) with sum p_i = budget; zero-gain channels get nothing."""
    g = np.asarray(gains, dtype=float)
    p = np.zeros_like(g)
    active = np.flatnonzero(g > 0)
    if active.size == 0 or budget <= 0:
        return p
    inv = 1.0 / g[active]
    order = np.argsort(inv)
    inv_sorted = inv[order]
    csum = np.cumsum(inv_sorted)
    ks = np.arange(1, inv_sorted.size + 1)
    mu_cand = (budget + csum) / ks
    valid = mu_cand > inv_sorted
    k = int(np.nonzero(valid)[0][-1]) + 1
    mu = mu_cand[k - 1]
    p[active] = np.maximum(mu - inv, 0.0)
    # exact budget despite rounding
    s = p.sum()
    if s > 0:
        p *= budget / s
    return p


def relative_gain(new: float, old: float) -> float:
    return (new - old) / max(abs(old), 1e-300)
