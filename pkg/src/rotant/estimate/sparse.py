"""Grid dictionaries and orthogonal matching pursuit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import Scenario
from ..errors import ConfigurationError, InvalidSparsityError
from .model import stacked_atoms
from .schedule import PilotSchedule

UNIT_TOL = 1e-8
VISIBLE = 1e-6  # atoms weaker than this fraction of the strongest are treated as unseen


def angle_dictionary(scenario: Scenario, schedule: PilotSchedule, dirs):
    """Unit-norm block-stacked atoms for the given directions and their original norms.

    Directions the antennas barely see (edge-on directions where the
    normalized atom would be pure, possibly aliased, steering) are dropped, as are
    repeats of an earlier direction (the poles of an angle grid); the
    returned index array maps dictionary columns back to ``dirs``.
    """
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    _, first = np.unique(np.round(dirs, 12), axis=0, return_index=True)
    a = stacked_atoms(scenario, schedule.orientations, dirs)
    norms = np.linalg.norm(a, axis=0)
    keep = np.intersect1d(np.flatnonzero(norms > VISIBLE * norms.max()), first)
    return a[:, keep] / norms[keep], norms[keep], keep


@dataclass
class SparseResult:
    support: np.ndarray
    coefs: np.ndarray
    residuals: list = field(default_factory=list)


def omp_recover(y, dictionary, sparsity: int, eps: float = 0.0) -> SparseResult:
    """Greedy sparse fit: add the column most correlated with the residual, refit by least squares.

    Stops after ``sparsity`` atoms, once ||r||^2 <= eps, or when a new atom
    no longer lowers the residual.  ``residuals`` holds ||r||^2 after each
    stage, starting with ||y||^2.
    """
    y = np.asarray(y).reshape(-1)
    phi = np.asarray(dictionary)
    if phi.shape[0] != y.size:
        raise ConfigurationError(f"dictionary has {phi.shape[0]} rows for {y.size} measurements")
    if sparsity > y.size:
        raise InvalidSparsityError(f"sparsity {sparsity} exceeds {y.size} measurements")
    if sparsity < 0:
        raise InvalidSparsityError("sparsity must be >= 0")
    if not np.allclose(np.linalg.norm(phi, axis=0), 1.0, atol=UNIT_TOL):
        raise ConfigurationError("dictionary columns must be unit-norm")
    support: list[int] = []
    coefs = np.zeros(0, dtype=complex)
    r = y.astype(complex)
    res = [float(np.vdot(r, r).real)]
    while len(support) < min(sparsity, phi.shape[1]) and res[-1] > eps:
        corr = np.abs(phi.conj().T @ r)
        corr[support] = -1.0
        j = int(np.argmax(corr))
        trial = support + [j]
        c, *_ = np.linalg.lstsq(phi[:, trial], y, rcond=None)
        r_new = y - phi[:, trial] @ c
        val = float(np.vdot(r_new, r_new).real)
        if val >= res[-1]:
            break
        support, coefs, r = trial, c, r_new
        res.append(val)
    return SparseResult(np.array(support, dtype=int), coefs, res)
