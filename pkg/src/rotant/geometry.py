"""Rotation math for antennas and arrays.

Each antenna starts with its boresight (pointing vector) along e1 and its
reference vector along e3.  Rotations are roll/pitch/yaw about the fixed
x, y, z axes applied in that order, so R = Rz(yaw) Ry(pitch) Rx(roll).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    InfeasibleError,
    InvalidAngleError,
    InvalidDirectionError,
)

TWO_PI = 2.0 * np.pi
E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

ORTHO_TOL = 1e-12
MODES = ("3D", "2D", "1D-x", "1D-y", "1D-z")


def _canonical(a: float) -> float:
    a = float(a)
    if not np.isfinite(a):
        raise InvalidAngleError(f"angle must be finite, got {a}")
    r = a % TWO_PI
    # a tiny negative input can round up to exactly 2*pi
    return 0.0 if r >= TWO_PI else r


@dataclass(frozen=True)
class RotationAngles:
    """Roll (about x), pitch (about y) and yaw (about z), reduced into [0, 2*pi)."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("roll", "pitch", "yaw"):
            object.__setattr__(self, name, _canonical(getattr(self, name)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.roll, self.pitch, self.yaw)


def _as_angles(angles) -> RotationAngles:
    if isinstance(angles, RotationAngles):
        return angles
    return RotationAngles(*angles)


def _rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_matrix(angles) -> np.ndarray:
    """Return Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    ang = _as_angles(angles)
    return _rz(ang.yaw) @ _ry(ang.pitch) @ _rx(ang.roll)


@dataclass(frozen=True)
class Orientation:
    """Pointing and reference unit vectors of one antenna, or a stack of them.

    ``pointing`` and ``reference`` have shape (3,) or (N, 3).  The lateral
    axis (the image of e2 under the antenna rotation) is f_par x f_perp,
    which holds for every proper rotation and is also used for
    orientations built from zenith/azimuth angles.
    """

    pointing: np.ndarray
    reference: np.ndarray
    _checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        p = np.array(self.pointing, dtype=float)
        r = np.array(self.reference, dtype=float)
        if p.shape != r.shape or p.shape[-1] != 3:
            raise ConfigurationError(f"pointing/reference shapes differ: {p.shape} vs {r.shape}")
        if self._checked:
            npn = np.linalg.norm(p, axis=-1)
            nrn = np.linalg.norm(r, axis=-1)
            dot = np.sum(p * r, axis=-1)
            if (np.any(np.abs(npn - 1) > ORTHO_TOL) or np.any(np.abs(nrn - 1) > ORTHO_TOL)
                    or np.any(np.abs(dot) > ORTHO_TOL)):
                raise InvalidDirectionError("pointing/reference must be orthonormal")
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "pointing", p)
        object.__setattr__(self, "reference", r)

    @property
    def lateral(self) -> np.ndarray:
        return np.cross(self.reference, self.pointing)

    def __len__(self) -> int:
        if self.pointing.ndim == 1:
            return 1
        return self.pointing.shape[0]

    def __getitem__(self, idx) -> "Orientation":
        p = np.atleast_2d(self.pointing)[idx]
        r = np.atleast_2d(self.reference)[idx]
        return Orientation(p, r, _checked=False)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @staticmethod
    def stack(items: Iterable["Orientation"]) -> "Orientation":
        items = list(items)
        p = np.stack([np.reshape(o.pointing, 3) for o in items])
        r = np.stack([np.reshape(o.reference, 3) for o in items])
        return Orientation(p, r, _checked=False)

    @staticmethod
    def from_pointing(pointing) -> "Orientation":
        """Orientation whose pointing vector is given, reference built from zenith/azimuth."""
        p = np.asarray(pointing, dtype=float)
        tz, ta = zenith_azimuth(p)
        return orient_from_zenith_azimuth(tz, ta)

    @staticmethod
    def boresight(n: int | None = None) -> "Orientation":
        """Unrotated orientation (pointing e1, reference e3), optionally stacked n times."""
        if n is None:
            return Orientation(E1.copy(), E3.copy())
        return Orientation(np.tile(E1, (n, 1)), np.tile(E3, (n, 1)))


def as_orientations(orients, n: int | None = None) -> Orientation:
    """Coerce a list of Orientation or a stacked Orientation into a stacked one of length n."""
    if isinstance(orients, Orientation):
        out = orients if orients.pointing.ndim == 2 else Orientation(
            orients.pointing[None, :], orients.reference[None, :], _checked=False)
    else:
        out = Orientation.stack(orients)
    if n is not None and len(out) != n:
        raise ConfigurationError(f"expected {n} orientations, got {len(out)}")
    return out


def orient_antenna(angles, mode: str = "3D") -> Orientation:
    """Pointing/reference vectors of an antenna rotated by ``angles`` under a rotation mode.

    2D ignores roll.  The 1D modes keep only the angle about their own axis.
    """
    ang = _as_angles(angles)
    if mode == "3D":
        eff = ang
    elif mode == "2D":
        eff = RotationAngles(0.0, ang.pitch, ang.yaw)
    elif mode == "1D-x":
        eff = RotationAngles(ang.roll, 0.0, 0.0)
    elif mode == "1D-y":
        eff = RotationAngles(0.0, ang.pitch, 0.0)
    elif mode == "1D-z":
        eff = RotationAngles(0.0, 0.0, ang.yaw)
    else:
        raise ConfigurationError(f"unknown rotation mode {mode!r}; expected one of {MODES}")
    r = rotation_matrix(eff)
    return Orientation(r[:, 0].copy(), r[:, 2].copy())


def orient_from_zenith_azimuth(theta_z, theta_a) -> Orientation:
    """Orientation from the boresight's zenith angle (from e1) and azimuth (in the y-z plane, from e2).

    Accepts scalars or equal-shape arrays.
    """
    tz = np.asarray(theta_z, dtype=float)
    ta = np.asarray(theta_a, dtype=float)
    if not (np.all(np.isfinite(tz)) and np.all(np.isfinite(ta))):
        raise InvalidAngleError("zenith/azimuth must be finite")
    if np.any(tz < 0) or np.any(tz > np.pi):
        raise InvalidAngleError("zenith angle must lie in [0, pi]")
    if np.any(ta < 0) or np.any(ta >= TWO_PI):
        raise InvalidAngleError("azimuth angle must lie in [0, 2*pi)")
    cz, sz = np.cos(tz), np.sin(tz)
    ca, sa = np.cos(ta), np.sin(ta)
    p = np.stack([cz, sz * ca, sz * sa], axis=-1)
    r = np.stack([-sz, cz * ca, cz * sa], axis=-1)
    return Orientation(p, r)


def zenith_azimuth(pointing) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of the zenith/azimuth map; azimuth returned in [0, 2*pi)."""
    p = np.asarray(pointing, dtype=float)
    n = np.linalg.norm(p, axis=-1)
    if np.any(n == 0):
        raise InvalidDirectionError("zero pointing vector")
    p = p / n[..., None]
    tz = np.arccos(np.clip(p[..., 0], -1.0, 1.0))
    ta = np.arctan2(p[..., 2], p[..., 1]) % TWO_PI
    ta = np.where(ta >= TWO_PI, 0.0, ta)
    return tz, ta


@dataclass(frozen=True)
class ArrayLayout:
    """Antenna positions (N, 3) in meters plus the array rotation center."""

    positions: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    spacing: float | None = None
    topology: str = "arbitrary"
    shape: tuple[int, ...] | None = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        ctr = np.array(self.center, dtype=float).reshape(3)
        if len(np.unique(pos, axis=0)) != len(pos):
            raise ConfigurationError("antenna positions must be pairwise distinct")
        if self.topology not in ("ULA", "UPA", "arbitrary"):
            raise ConfigurationError(f"unknown topology {self.topology!r}")
        pos.setflags(write=False)
        ctr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "center", ctr)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def aperture(self) -> float:
        if self.n == 1:
            return 0.0
        d = self.positions - self.positions.mean(axis=0)
        return 2.0 * float(np.max(np.linalg.norm(d, axis=1)))

    @staticmethod
    def ula(n: int, spacing: float, axis: str = "y", center=(0.0, 0.0, 0.0)) -> "ArrayLayout":
        """N-element line array centered on ``center`` along the given axis."""
        if n < 1:
            raise ConfigurationError("ULA needs at least one antenna")
        ax = {"x": E1, "y": E2, "z": E3}[axis]
        ctr = np.asarray(center, dtype=float)
        offs = (np.arange(n) - (n - 1) / 2.0) * spacing
        pos = ctr + offs[:, None] * ax
        return ArrayLayout(pos, ctr, spacing, "ULA", (n,))

    @staticmethod
    def upa(ny: int, nz: int, spacing: float, center=(0.0, 0.0, 0.0)) -> "ArrayLayout":
        """Planar array in the y-z plane; index n = iy * nz + iz (matches a_y kron a_z)."""
        if ny < 1 or nz < 1:
            raise ConfigurationError("UPA needs positive dimensions")
        ctr = np.asarray(center, dtype=float)
        iy, iz = np.meshgrid(np.arange(ny), np.arange(nz), indexing="ij")
        y = (iy.ravel() - (ny - 1) / 2.0) * spacing
        z = (iz.ravel() - (nz - 1) / 2.0) * spacing
        pos = ctr + y[:, None] * E2 + z[:, None] * E3
        return ArrayLayout(pos, ctr, spacing, "UPA", (ny, nz))


def rotate_array(layout: ArrayLayout, array_angles, per_antenna: Sequence | None = None):
    """Rotate a whole array about its center; optional extra per-antenna rotations.

    Returns (positions (N, 3), stacked Orientation).
    """
    ra = rotation_matrix(array_angles)
    n = layout.n
    if per_antenna is not None and len(per_antenna) != n:
        raise ConfigurationError(f"per_antenna has {len(per_antenna)} entries for {n} antennas")
    pos = (layout.positions - layout.center) @ ra.T + layout.center
    if per_antenna is None:
        p = np.tile(ra[:, 0], (n, 1))
        r = np.tile(ra[:, 2], (n, 1))
    else:
        mats = np.stack([ra @ rotation_matrix(a) for a in per_antenna])
        p, r = mats[:, :, 0], mats[:, :, 2]
    return pos, Orientation(p, r)


@dataclass(frozen=True)
class RotationConstraint:
    """Boresight cone half-angle plus optional discrete per-axis angle grids.

    ``levels`` holds (I_roll, I_pitch, I_yaw); None means continuous.  Grid
    i on an axis is lower + i * step with step = (upper - lower) / I for a
    full-circle range and (upper - lower) / (I - 1) otherwise.
    """

    theta_max: float = np.pi / 6
    bounds: tuple[tuple[float, float], ...] = ((0.0, TWO_PI), (0.0, TWO_PI), (0.0, TWO_PI))
    levels: tuple[int, int, int] | None = None

    def __post_init__(self):
        tm = float(self.theta_max)
        if not np.isfinite(tm) or tm < 0 or tm > np.pi / 2 + 1e-15:
            raise InvalidAngleError("theta_max must lie in [0, pi/2]")
        object.__setattr__(self, "theta_max", min(tm, np.pi / 2))
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(b) != 3 or any(lo > hi for lo, hi in b):
            raise ConfigurationError("bounds need lower <= upper on each of three axes")
        object.__setattr__(self, "bounds", b)
        if self.levels is not None:
            lv = tuple(int(i) for i in self.levels)
            if len(lv) != 3 or any(i < 1 for i in lv):
                raise ConfigurationError("level counts must be >= 1")
            object.__setattr__(self, "levels", lv)

    @property
    def is_discrete(self) -> bool:
        return self.levels is not None

    def axis_grid(self, axis: int) -> np.ndarray:
        if self.levels is None:
            raise ConfigurationError("continuous constraint has no grid")
        lo, hi = self.bounds[axis]
        count = self.levels[axis]
        if count == 1:
            return np.array([lo])
        span = hi - lo
        step = span / count if span >= TWO_PI - 1e-12 else span / (count - 1)
        return lo + step * np.arange(count)

    def codebook(self) -> tuple[list[tuple[int, int, int]], Orientation]:
        """All grid orientations, yaw index outermost, roll innermost."""
        g_roll, g_pitch, g_yaw = (self.axis_grid(i) for i in range(3))
        idx, ps, rs = [], [], []
        for iy, ip, ir in itertools.product(range(len(g_yaw)), range(len(g_pitch)), range(len(g_roll))):
            o = orient_antenna(RotationAngles(g_roll[ir], g_pitch[ip], g_yaw[iy]), "3D")
            idx.append((iy, ip, ir))
            ps.append(o.pointing)
            rs.append(o.reference)
        return idx, Orientation(np.array(ps), np.array(rs), _checked=False)

    def feasible_codebook(self) -> Orientation:
        _, book = self.codebook()
        ok = in_cone(book.pointing, self.theta_max)
        if not np.any(ok):
            raise InfeasibleError("no codeword satisfies the boresight cone")
        return book[np.flatnonzero(ok)]


def in_cone(pointing, theta_max: float, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(pointing, dtype=float)
    return np.arccos(np.clip(p[..., 0], -1.0, 1.0)) <= theta_max + tol


def quantize_orientation(target, constraint: RotationConstraint) -> Orientation:
    """Nearest feasible codeword to the target boresight; ties go to the lowest grid index.

    ``target`` may be an Orientation or a pointing 3-vector.
    """
    if not constraint.is_discrete:
        raise ConfigurationError("quantize_orientation needs finite level counts")
    t = target.pointing if isinstance(target, Orientation) else np.asarray(target, dtype=float)
    t = np.reshape(t, 3)
    nt = np.linalg.norm(t)
    if nt == 0:
        raise InvalidDirectionError("zero target direction")
    t = t / nt
    book = constraint.feasible_codebook()
    ang = np.arccos(np.clip(book.pointing @ t, -1.0, 1.0))
    # first index within rounding of the minimum
    best = int(np.flatnonzero(ang <= ang.min() + 1e-12)[0])
    return book[best]


def project_to_cone(target, theta_max: float) -> np.ndarray:
    """Closest boresight in the cone arccos(f . e1) <= theta_max to a target direction.

    Works on a single 3-vector or a stack (N, 3).  Inputs are normalized.
    """
    q = np.asarray(target, dtype=float)
    nq = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(nq == 0):
        raise InvalidDirectionError("zero target direction")
    q = q / nq
    tz = np.arccos(np.clip(q[..., 0], -1.0, 1.0))
    ta = np.arctan2(q[..., 2], q[..., 1])
    tz_c = np.minimum(tz, theta_max)
    clamped = np.stack([np.cos(tz_c), np.sin(tz_c) * np.cos(ta), np.sin(tz_c) * np.sin(ta)], axis=-1)
    inside = (tz <= theta_max)[..., None]
    return np.where(inside, q, clamped)
