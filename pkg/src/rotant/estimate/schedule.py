"""Block-wise orientation schedules for channel training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, InfeasibleError, InvalidParameterError
from ..geometry import Orientation, RotationConstraint, in_cone, quantize_orientation

STRATEGIES = ("fixed", "dynamic-designed", "dynamic-random")
GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True)
class PilotSchedule:
    """T_a training slots split into M blocks of T_b slots, one orientation set per block."""

    total_slots: int
    blocks: int
    orientations: tuple
    strategy: str

    def __post_init__(self):
        if self.blocks < 1:
            raise InvalidParameterError("need at least one block")
        if self.total_slots % self.blocks:
            raise ConfigurationError(f"T_a={self.total_slots} is not a multiple of M={self.blocks}")
        if len(self.orientations) != self.blocks:
            raise ConfigurationError(f"{len(self.orientations)} orientation sets for {self.blocks} blocks")
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"strategy must be one of {STRATEGIES}")
        object.__setattr__(self, "orientations", tuple(self.orientations))

    @property
    def slots_per_block(self) -> int:
        return self.total_slots // self.blocks

    @property
    def n_antennas(self) -> int:
        return len(self.orientations[0])

    def pointing(self) -> np.ndarray:
        """Pointing vectors of every block, shape (M, N, 3)."""
        return np.stack([np.atleast_2d(o.pointing) for o in self.orientations])


def fibonacci_cap(m: int, theta_max: float) -> np.ndarray:
    """M near-uniform unit vectors on the cap of half-angle theta_max around e1.

    Equal-area rings in cos(theta) with golden-angle azimuth steps.  A
    single point sits at the cap center.
    """
    if m < 1:
        raise InvalidParameterError("need at least one sample")
    if m == 1:
        return np.array([[1.0, 0.0, 0.0]])
    i = np.arange(m)
    c = 1.0 - (1.0 - np.cos(theta_max)) * (i + 0.5) / m
    s = np.sqrt(np.maximum(1.0 - c ** 2, 0.0))
    a = i * GOLDEN_ANGLE
    return np.stack([c, s * np.cos(a), s * np.sin(a)], axis=1)


def random_cap(rng, size, theta_max: float) -> np.ndarray:
    """Uniform samples (by area) of the cap around e1."""
    c = 1.0 - (1.0 - np.cos(theta_max)) * rng.random(size)
    s = np.sqrt(np.maximum(1.0 - c ** 2, 0.0))
    a = rng.uniform(0.0, 2.0 * np.pi, size)
    return np.stack([c, s * np.cos(a), s * np.sin(a)], axis=-1)


def _orient(points, constraint: RotationConstraint) -> Orientation:
    if constraint.is_discrete:
        return Orientation.stack(quantize_orientation(p, constraint) for p in points)
    return Orientation.from_pointing(points)


def schedule_orientations(constraint: RotationConstraint, n: int, m: int, strategy: str,
                          total_slots: int = 64, seed: int | None = None) -> PilotSchedule:
    """Orientation sets for M training blocks.

    fixed: every antenna along e1 in every block.  dynamic-designed:
    antenna n in block m takes Fibonacci cap point (m + n) mod M, so each
    block views M directions across the array and each antenna sweeps the
    whole cap over the blocks.  dynamic-random: independent uniform cap
    samples per antenna and block from ``seed``.
    """
    if m < 1:
        raise InvalidParameterError("M must be >= 1")
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"strategy must be one of {STRATEGIES}")
    tm = constraint.theta_max
    if constraint.is_discrete and strategy != "fixed":
        available = len(constraint.feasible_codebook())
        if m > available:
            raise InfeasibleError(f"{m} blocks but only {available} feasible codewords")
    if strategy == "fixed" or tm == 0.0:
        pts = np.tile([1.0, 0.0, 0.0], (m, n, 1))
    elif strategy == "dynamic-designed":
        cap = fibonacci_cap(m, tm)
        idx = (np.arange(m)[:, None] + np.arange(n)[None, :]) % m
        pts = cap[idx]
    else:
        pts = random_cap(np.random.default_rng(seed), (m, n), tm)
    sets = tuple(_orient(p, constraint) for p in pts)
    for o in sets:
        if not np.all(in_cone(np.atleast_2d(o.pointing), tm, tol=1e-9)):
            raise InfeasibleError("scheduled orientation violates the rotation cone")
    return PilotSchedule(total_slots, m, sets, strategy)
