"""Maximum-likelihood path estimation by alternating minimization."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import least_squares

from ..channel import Scenario
from .model import COND_LIMIT, BlockManifold, PathParameters, direction
from .pilots import Measurement
from .schedule import PilotSchedule

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
SEPARATION_STEPS = 3


def angle_grid(step: float):
    """Zenith over [0, pi] and azimuth over the front half [-pi/2, pi/2] at the given step."""
    theta = np.linspace(0.0, np.pi, int(round(np.pi / step)) + 1)
    xi = np.linspace(-np.pi / 2, np.pi / 2, int(round(np.pi / step)) + 1)
    return theta, xi


def grid_directions(step: float):
    theta, xi = angle_grid(step)
    tt, xx = np.meshgrid(theta, xi, indexing="ij")
    return tt.ravel(), xx.ravel(), direction(tt.ravel(), xx.ravel())


def golden_section(f, a: float, b: float, tol: float):
    """Minimizer of a unimodal f on [a, b] to an interval width of tol."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def grid_correlation(manifold: BlockManifold, r, dirs, chunk: int = 4096):
    """|a_j^H r|^2 / ||a_j||^2 over grid directions for block-stacked data r (M, N)."""
    out = np.zeros(dirs.shape[0])
    for s in range(0, dirs.shape[0], chunk):
        d = dirs[s:s + chunk]
        amp = manifold.amplitudes(d)  # (M, N, J)
        steer = manifold.steering(d)  # (N, J)
        # sum_m sum_n amp * conj(steer) * r[m, n]
        num = np.einsum("mnj,nj,mn->j", amp, np.conj(steer), r)
        den = np.sum(amp ** 2, axis=(0, 1))
        with np.errstate(invalid="ignore", divide="ignore"):
            out[s:s + chunk] = np.where(den > 0, np.abs(num) ** 2 / den, 0.0)
    return out


def _far_enough(u, chosen, min_angle):
    return all(np.arccos(np.clip(u @ c, -1.0, 1.0)) >= min_angle for c in chosen)


def _repeated_views(schedule: PilotSchedule) -> bool:
    p = schedule.pointing()
    return schedule.blocks > 1 and bool(np.allclose(p, p[0]))


def ml_estimate(meas: Measurement, schedule: PilotSchedule, scenario: Scenario, q: int, k: int = 0,
                tol: float = 1e-12, max_iter: int = 100, grid_step: float = np.deg2rad(1.0),
                angle_tol: float = 1e-6, sweep_tol: float = 1e-4) -> PathParameters:
    """Alternating minimization of ||y - S(F; eta) beta||^2 for user k with Q + 1 paths.

    The beta step is the closed-form least squares fit; the eta step runs
    golden-section searches over each path's zenith and azimuth in turn
    (bracket of one grid step around the current value) and keeps a move
    only if the residual drops.  The start is a greedy pick of Q + 1 grid
    directions.  Once a sweep gains less than ``sweep_tol`` of the data
    energy, all angles are polished jointly by Levenberg-Marquardt on the
    beta-eliminated residual (kept only if it lowers the residual).
    ``info["residuals"]`` is the residual trace, one entry per sweep plus
    one for the polish.
    """
    z = meas.despread(k)
    zf = z.reshape(-1)
    energy = float(np.vdot(zf, zf).real)
    n_paths = q + 1
    if energy == 0.0:
        zeros = np.zeros(n_paths)
        return PathParameters(np.zeros(n_paths, dtype=complex), zeros + np.pi / 2, zeros,
                              info={"residuals": [0.0]})

    manifold = BlockManifold(scenario, schedule.orientations)

    def solve(a):
        g = a.conj().T @ a
        try:
            beta = np.linalg.solve(g, a.conj().T @ zf)
        except np.linalg.LinAlgError:
            beta, *_ = np.linalg.lstsq(a, zf, rcond=None)
        r = zf - a @ beta
        return float(np.vdot(r, r).real), beta

    def fit(th, xi):
        a = manifold.atoms(direction(th, xi))
        res, beta = solve(a)
        return res, beta, a

    # greedy start on the grid
    gt, gx, gd = grid_directions(grid_step)
    th, xi, chosen = [], [], []
    r = z
    for _ in range(n_paths):
        c = grid_correlation(manifold, r, gd)
        for j in np.argsort(c)[::-1]:
            if _far_enough(gd[j], chosen, SEPARATION_STEPS * grid_step):
                break
        th.append(gt[j])
        xi.append(gx[j])
        chosen.append(gd[j])
        _, beta, a = fit(np.array(th), np.array(xi))
        r = (zf - a @ beta).reshape(z.shape)
    th, xi = np.array(th), np.array(xi)
    res, beta, a = fit(th, xi)
    trace = [res]
    for _ in range(max_iter):
        prev = res
        for p in range(n_paths):
            for which in ("theta", "xi"):
                cur = th[p] if which == "theta" else xi[p]
                lo, hi = cur - grid_step, cur + grid_step
                if which == "theta":
                    lo, hi = max(lo, 0.0), min(hi, np.pi)

                def f(v, p=p, which=which):
                    # only column p changes along this coordinate
                    t, x = (v, xi[p]) if which == "theta" else (th[p], v)
                    a2 = a.copy()
                    a2[:, p] = manifold.atoms(direction(t, x))[:, 0]
                    return solve(a2)[0]

                v, fv = golden_section(f, lo, hi, angle_tol)
                if fv < res:
                    if which == "theta":
                        th[p] = v
                    else:
                        xi[p] = v
                    res = fv
                    a[:, p] = manifold.atoms(direction(th[p], xi[p]))[:, 0]
        res, beta, a = fit(th, xi)
        trace.append(res)
        if prev - res <= sweep_tol * energy:
            break

    # joint polish of all angles on the beta-eliminated residual
    def vp(x):
        a_ = manifold.atoms(direction(x[:n_paths], x[n_paths:]))
        r_ = (zf - a_ @ solve(a_)[1]) / np.sqrt(energy)  # scale-free
        return np.concatenate([r_.real, r_.imag])

    lo = np.concatenate([np.zeros(n_paths), np.full(n_paths, -np.inf)])
    hi = np.concatenate([np.full(n_paths, np.pi), np.full(n_paths, np.inf)])
    sol = least_squares(vp, np.clip(np.concatenate([th, xi]), lo, hi), bounds=(lo, hi),
                        xtol=1e-10, ftol=tol, gtol=1e-14, max_nfev=100 * (2 * n_paths + 1))
    r_new, b_new, a_new = fit(sol.x[:n_paths], sol.x[n_paths:])
    if r_new < res:
        th, xi, res, beta, a = sol.x[:n_paths].copy(), sol.x[n_paths:].copy(), r_new, b_new, a_new
    trace.append(res)
    status = "converged" if sol.status > 0 else "iteration-limit"
    s = np.linalg.svd(a, compute_uv=False)
    if _repeated_views(schedule) or s[-1] <= s[0] / COND_LIMIT:
        status = "ill-conditioned"
        warnings.warn("ML observation matrix is ill-conditioned (repeated or degenerate views)",
                      RuntimeWarning, stacklevel=2)
    xi = np.angle(np.exp(1j * xi))
    return PathParameters(beta, th, xi, status=status, info={"residuals": trace})
