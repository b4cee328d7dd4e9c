from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotant.errors import ConfigurationError, InfeasibleError, InvalidAngleError, InvalidDirectionError
from rotant.geometry import (
    E1,
    E2,
    E3,
    ArrayLayout,
    Orientation,
    RotationAngles,
    RotationConstraint,
    orient_antenna,
    orient_from_zenith_azimuth,
    project_to_cone,
    quantize_orientation,
    rotate_array,
    rotation_matrix,
    zenith_azimuth,
)

angle = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)


def closed_form_rotation(phi, theta, psi):
    """Entry-by-entry expansion of Rz Ry Rx, written out independently."""
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st_ = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array([
        [ct * cp, sf * st_ * cp - cf * sp, cf * st_ * cp + sf * sp],
        [ct * sp, sf * st_ * sp + cf * cp, cf * st_ * sp - sf * cp],
        [-st_, sf * ct, cf * ct],
    ])


class TestRotationMatrix:
    def test_identity(self):
        assert np.array_equal(rotation_matrix((0, 0, 0)), np.eye(3))

    def test_yaw_quarter_turn(self):
        np.testing.assert_allclose(rotation_matrix((0, 0, np.pi / 2)) @ E1, E2, atol=1e-15)

    def test_generic_orthogonal(self):
        r = rotation_matrix((0.3, 0.7, 1.1))
        assert np.max(np.abs(r.T @ r - np.eye(3))) <= 1e-12
        assert abs(np.linalg.det(r) - 1) <= 1e-12

    def test_matches_expanded_form(self):
        r = rotation_matrix((0.3, 0.7, 1.1))
        np.testing.assert_allclose(r, closed_form_rotation(0.3, 0.7, 1.1), atol=1e-15)

    def test_non_finite(self):
        with pytest.raises(InvalidAngleError):
            rotation_matrix((np.nan, 0, 0))
        with pytest.raises(InvalidAngleError):
            RotationAngles(0, np.inf, 0)

    def test_canonicalization(self):
        a = RotationAngles(-np.pi / 2, 5 * np.pi, 2 * np.pi)
        assert a.roll == pytest.approx(1.5 * np.pi)
        assert a.pitch == pytest.approx(np.pi)
        assert a.yaw == 0.0

    @given(angle, angle, angle)
    def test_orthogonal_property(self, a, b, c):
        r = rotation_matrix((a, b, c))
        assert np.max(np.abs(r.T @ r - np.eye(3))) <= 1e-12
        assert abs(np.linalg.det(r) - 1) <= 1e-12


class TestOrientAntenna:
    def test_identity(self):
        o = orient_antenna((0, 0, 0))
        np.testing.assert_array_equal(o.pointing, E1)
        np.testing.assert_array_equal(o.reference, E3)

    def test_1d_y(self):
        o = orient_antenna((0, np.pi / 2, 0), "1D-y")
        np.testing.assert_allclose(o.pointing, [0, 0, -1], atol=1e-15)
        np.testing.assert_allclose(o.reference, [1, 0, 0], atol=1e-15)

    def test_2d_example(self):
        o = orient_antenna((0.9, np.pi / 4, np.pi / 4), "2D")
        np.testing.assert_allclose(o.pointing, [0.5, 0.5, -np.sqrt(0.5)], atol=1e-12)

    @pytest.mark.parametrize("mode,angles,fp,fr", [
        ("1D-x", (0.4, 1.0, 2.0), lambda a: [1, 0, 0], lambda a: [0, -np.sin(a[0]), np.cos(a[0])]),
        ("1D-y", (1.0, 0.4, 2.0), lambda a: [np.cos(a[1]), 0, -np.sin(a[1])],
         lambda a: [np.sin(a[1]), 0, np.cos(a[1])]),
        ("1D-z", (1.0, 2.0, 0.4), lambda a: [np.cos(a[2]), np.sin(a[2]), 0], lambda a: [0, 0, 1]),
    ])
    def test_1d_modes_match_reduced_formulas(self, mode, angles, fp, fr):
        o = orient_antenna(angles, mode)
        np.testing.assert_allclose(o.pointing, fp(angles), atol=1e-15)
        np.testing.assert_allclose(o.reference, fr(angles), atol=1e-15)

    def test_2d_reference_formula(self):
        th, ps = 0.7, 2.3
        o = orient_antenna((0.0, th, ps), "2D")
        ref = [np.sin(th) * np.cos(ps), np.sin(th) * np.sin(ps), np.cos(th)]
        np.testing.assert_allclose(o.reference, ref, atol=1e-15)

    def test_unknown_mode(self):
        with pytest.raises(ConfigurationError):
            orient_antenna((0, 0, 0), "4D")

    @given(angle, angle, angle)
    def test_orthonormal(self, a, b, c):
        o = orient_antenna((a, b, c))
        assert abs(np.linalg.norm(o.pointing) - 1) <= 1e-12
        assert abs(np.linalg.norm(o.reference) - 1) <= 1e-12
        assert abs(o.pointing @ o.reference) <= 1e-12

    @given(angle, angle)
    def test_3d_without_roll_equals_2d(self, b, c):
        o3 = orient_antenna((0.0, b, c), "3D")
        o2 = orient_antenna((1.234, b, c), "2D")
        np.testing.assert_allclose(o3.pointing, o2.pointing, atol=1e-15)
        np.testing.assert_allclose(o3.reference, o2.reference, atol=1e-15)

    def test_lateral_is_rotated_e2(self):
        ang = (0.3, 0.7, 1.1)
        o = orient_antenna(ang)
        np.testing.assert_allclose(o.lateral, rotation_matrix(ang) @ E2, atol=1e-15)


class TestZenithAzimuth:
    def test_zenith_zero(self):
        o = orient_from_zenith_azimuth(0.0, 1.3)
        np.testing.assert_allclose(o.pointing, E1, atol=1e-15)

    def test_quarter(self):
        o = orient_from_zenith_azimuth(np.pi / 2, 0.0)
        np.testing.assert_allclose(o.pointing, E2, atol=1e-15)
        np.testing.assert_allclose(o.reference, -E1, atol=1e-15)

    def test_pi_over_six(self):
        o = orient_from_zenith_azimuth(np.pi / 6, np.pi / 2)
        np.testing.assert_allclose(o.pointing, [0.8660254037844387, 0.0, 0.5], atol=1e-12)

    def test_out_of_range(self):
        with pytest.raises(InvalidAngleError):
            orient_from_zenith_azimuth(-0.1, 0.0)
        with pytest.raises(InvalidAngleError):
            orient_from_zenith_azimuth(0.1, 2 * np.pi)

    def test_vectorized_roundtrip(self):
        rng = np.random.default_rng(0)
        tz = rng.uniform(0, np.pi, 50)
        ta = rng.uniform(0, 2 * np.pi, 50)
        o = orient_from_zenith_azimuth(tz, ta)
        tz2, ta2 = zenith_azimuth(o.pointing)
        np.testing.assert_allclose(tz2, tz, atol=1e-12)
        np.testing.assert_allclose(np.cos(ta2 - ta), 1.0, atol=1e-12)

    def test_matches_euler_without_roll(self):
        # zenith/azimuth pointing coincides with some Euler rotation's pointing
        o = orient_from_zenith_azimuth(0.4, 1.0)
        th = -np.arcsin(o.pointing[2])
        ps = np.arctan2(o.pointing[1], o.pointing[0])
        np.testing.assert_allclose(orient_antenna((0, th, ps), "2D").pointing, o.pointing, atol=1e-12)


class TestRotateArray:
    def test_no_rotation(self):
        lay = ArrayLayout.ula(4, 0.0625)
        pos, o = rotate_array(lay, (0, 0, 0))
        np.testing.assert_array_equal(pos, lay.positions)
        np.testing.assert_array_equal(o.pointing, np.tile(E1, (4, 1)))

    def test_yaw_quarter(self):
        lay = ArrayLayout.ula(4, 0.0625)
        pos, o = rotate_array(lay, (0, 0, np.pi / 2))
        np.testing.assert_allclose(pos[:, 1:], 0.0, atol=1e-15)
        np.testing.assert_allclose(pos[:, 0], -lay.positions[:, 1], atol=1e-15)
        np.testing.assert_allclose(o.pointing, np.tile(E2, (4, 1)), atol=1e-15)

    def test_joint(self):
        lay = ArrayLayout.ula(3, 0.1)
        per = [RotationAngles(0, np.pi / 6, 0)] * 3
        _, o = rotate_array(lay, (0, 0, np.pi / 3), per)
        want = rotation_matrix((0, 0, np.pi / 3)) @ rotation_matrix((0, np.pi / 6, 0)) @ E1
        np.testing.assert_allclose(o.pointing, np.tile(want, (3, 1)), atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            rotate_array(ArrayLayout.ula(3, 0.1), (0, 0, 0), [RotationAngles()] * 2)

    @settings(max_examples=50)
    @given(angle, angle, angle)
    def test_distances_preserved(self, a, b, c):
        lay = ArrayLayout.upa(3, 2, 0.07, center=(1.0, -2.0, 0.5))
        pos, _ = rotate_array(lay, (a, b, c))
        d0 = np.linalg.norm(lay.positions[:, None] - lay.positions[None], axis=-1)
        d1 = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
        assert np.max(np.abs(d0 - d1)) <= 1e-9


class TestLayouts:
    def test_upa_ordering(self):
        lay = ArrayLayout.upa(2, 3, 1.0)
        # index iy * nz + iz
        np.testing.assert_allclose(lay.positions[1] - lay.positions[0], [0, 0, 1])
        np.testing.assert_allclose(lay.positions[3] - lay.positions[0], [0, 1, 0])

    def test_duplicates_rejected(self):
        with pytest.raises(ConfigurationError):
            ArrayLayout(np.zeros((2, 3)))


class TestProjectToCone:
    def test_inside(self):
        np.testing.assert_array_equal(project_to_cone(E1, np.pi / 6), E1)

    def test_clamp(self):
        np.testing.assert_allclose(project_to_cone(E2, np.pi / 6), [np.cos(np.pi / 6), 0.5, 0.0], atol=1e-12)

    def test_interior_unchanged(self):
        t = orient_from_zenith_azimuth(np.pi / 12, 0.8).pointing
        np.testing.assert_array_equal(project_to_cone(t, np.pi / 6), t)

    def test_zero(self):
        with pytest.raises(InvalidDirectionError):
            project_to_cone(np.zeros(3), 0.3)

    def test_is_closest_point_on_cap(self):
        # brute force over a dense cap grid
        rng = np.random.default_rng(1)
        tm = np.pi / 6
        tz, ta = np.meshgrid(np.linspace(0, tm, 301), np.linspace(0, 2 * np.pi, 1441))
        cap = orient_from_zenith_azimuth(tz.ravel(), ta.ravel() % (2 * np.pi)).pointing
        for _ in range(20):
            t = rng.normal(size=3)
            t /= np.linalg.norm(t)
            p = project_to_cone(t, tm)
            assert p @ t >= np.max(cap @ t) - 1e-6

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0, np.pi / 2))
    def test_idempotent_and_inside(self, x, y, z, tm):
        v = np.array([x, y, z])
        if np.linalg.norm(v) < 1e-6:
            return
        p = project_to_cone(v, tm)
        assert np.arccos(np.clip(p[0], -1, 1)) <= tm + 1e-12
        np.testing.assert_allclose(project_to_cone(p, tm), p, atol=1e-12)


class TestQuantize:
    def _yaw_only(self, count=8):
        return RotationConstraint(theta_max=np.pi / 2, levels=(1, 1, count))

    def test_on_grid(self):
        c = self._yaw_only(8)
        tgt = orient_antenna((0, 0, np.pi / 4))
        np.testing.assert_allclose(quantize_orientation(tgt, c).pointing, tgt.pointing, atol=1e-12)

    def test_single_codeword(self):
        c = RotationConstraint(theta_max=np.pi / 2, levels=(1, 1, 1))
        q = quantize_orientation(orient_from_zenith_azimuth(0.4, 2.0), c)
        np.testing.assert_array_equal(q.pointing, E1)

    def test_midway_tie_breaks_low(self):
        c = self._yaw_only(8)
        tgt = orient_antenna((0, 0, np.pi / 8))
        q = quantize_orientation(tgt, c)
        np.testing.assert_allclose(q.pointing, E1, atol=1e-12)
        # enumeration oracle: both neighbors are equidistant
        book = [orient_antenna((0, 0, i * np.pi / 4)).pointing for i in range(8)]
        d = [np.arccos(np.clip(b @ tgt.pointing, -1, 1)) for b in book]
        assert abs(d[0] - d[1]) < 1e-12

    def test_respects_cone(self):
        c = RotationConstraint(theta_max=np.pi / 6, levels=(1, 8, 8))
        q = quantize_orientation(E2, c)
        assert np.arccos(q.pointing[0]) <= np.pi / 6 + 1e-12

    def test_infeasible(self):
        c = RotationConstraint(theta_max=0.1, bounds=((0, 0), (1.0, 1.0), (0, 0)), levels=(1, 1, 1))
        with pytest.raises(InfeasibleError):
            quantize_orientation(E1, c)

    def test_matches_enumeration(self):
        c = RotationConstraint(theta_max=np.pi / 4, levels=(2, 6, 6))
        rng = np.random.default_rng(3)
        grids = [c.axis_grid(i) for i in range(3)]
        for _ in range(10):
            t = rng.normal(size=3)
            t[0] = abs(t[0])
            t /= np.linalg.norm(t)
            best, best_d = None, np.inf
            for ps, th, ph in itertools.product(grids[2], grids[1], grids[0]):
                p = orient_antenna((ph, th, ps)).pointing
                if np.arccos(np.clip(p[0], -1, 1)) > np.pi / 4 + 1e-12:
                    continue
                d = np.arccos(np.clip(p @ t, -1, 1))
                if d < best_d - 1e-12:
                    best, best_d = p, d
            np.testing.assert_allclose(quantize_orientation(t, c).pointing, best, atol=1e-12)

    @settings(max_examples=30)
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
    def test_composition(self, x, y, z):
        v = np.array([x, y, z])
        if np.linalg.norm(v) < 1e-6:
            return
        c = RotationConstraint(theta_max=np.pi / 6, levels=(1, 6, 12))
        p = project_to_cone(v, c.theta_max)
        a = quantize_orientation(Orientation.from_pointing(p), c)
        b = quantize_orientation(p, c)
        np.testing.assert_array_equal(a.pointing, b.pointing)

    def test_bad_levels(self):
        with pytest.raises(ConfigurationError):
            RotationConstraint(levels=(0, 1, 1))
        with pytest.raises(InvalidAngleError):
            RotationConstraint(theta_max=2.0)
