"""Segment-frame and rigid-body kinematics tests.

Oracle values here were computed by hand from the angle definitions
(clamped arcsin of direction cosines, two-branch out-of-plane angle)
and are frozen independently of the implementation.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cabledyn.errors import DegenerateSegment, GimbalSingularity
from cabledyn.geometry import (
    EPS_LENGTH,
    auv_rotation,
    euler_rotation,
    segment_frame,
    segment_length,
    segment_tangents,
)

finite_coord = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


def vec3(draw_x, draw_y, draw_z):
    return np.array([draw_x, draw_y, draw_z])


class TestSegmentFrame:
    def test_negative_x_chord(self):
        # chord (-1, 0, 0): in-plane angle 0, out-of-plane angle 0
        f = segment_frame([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        assert f.length == pytest.approx(1.0, abs=1e-15)
        assert f.phi == pytest.approx(0.0, abs=1e-15)
        assert f.gamma == pytest.approx(0.0, abs=1e-15)

    def test_positive_x_chord_takes_supplement_branch(self):
        f = segment_frame([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        assert f.phi == pytest.approx(0.0, abs=1e-15)
        assert f.gamma == pytest.approx(np.pi, abs=1e-12)

    def test_lateral_chord_pins_gamma(self):
        # chord along +y: phi = pi/2 and gamma falls back to 0
        f = segment_frame([0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        assert f.phi == pytest.approx(np.pi / 2, abs=1e-12)
        assert f.gamma == pytest.approx(0.0, abs=1e-15)

    def test_vertical_chord(self):
        f = segment_frame([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        assert f.phi == pytest.approx(0.0, abs=1e-15)
        assert f.gamma == pytest.approx(np.pi / 2, abs=1e-12)

    def test_oblique_chord_frozen_values(self):
        # chord (1, 2, 2)/3: phi = arcsin(2/3), gamma on the supplement branch
        f = segment_frame([0.0, 0.0, 0.0], [1.0, 2.0, 2.0])
        assert f.length == pytest.approx(3.0, rel=1e-15)
        assert f.phi == pytest.approx(0.729727656226966, rel=1e-12)
        assert f.gamma == pytest.approx(2.0344439357957027, rel=1e-12)

    def test_rotation_is_orthogonal_with_unit_determinant(self):
        f = segment_frame([0.2, -1.0, 0.5], [1.4, 0.3, -2.2])
        r = f.rotation
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateSegment):
            segment_frame([1.0, 2.0, 3.0], [1.0, 2.0, 3.0 + 0.99 * EPS_LENGTH])

    @settings(max_examples=300, deadline=None)
    @given(finite_coord, finite_coord, finite_coord, finite_coord, finite_coord, finite_coord)
    def test_tangent_reconstruction(self, ax, ay, az, bx, by, bz):
        a = np.array([ax, ay, az])
        b = np.array([bx, by, bz])
        d = b - a
        l = np.linalg.norm(d)
        if l < 1e-6:
            return
        f = segment_frame(a, b)
        # angle pair must reproduce the chord direction to tight tolerance
        assert np.linalg.norm(f.unit_tangent() - d / l) < 1e-9

    def test_tangent_reconstruction_axis_cases(self):
        for d in ([-1, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]):
            f = segment_frame([0.0, 0.0, 0.0], d)
            assert np.linalg.norm(f.unit_tangent() - np.asarray(d, float)) < 1e-12


class TestSegmentLength:
    def test_plain_distance(self):
        assert segment_length([0, 0, 0], [3.0, 4.0, 0.0]) == pytest.approx(5.0)

    def test_epsilon_guard(self):
        with pytest.raises(DegenerateSegment):
            segment_length([0, 0, 0], [0, 0, 0])


class TestSegmentTangents:
    def test_matches_per_segment_frames(self):
        rng = np.random.default_rng(7)
        pos = np.cumsum(rng.normal(size=(6, 3)), axis=0)
        tangents, lengths = segment_tangents(pos)
        for s in range(5):
            f = segment_frame(pos[s], pos[s + 1])
            assert lengths[s] == pytest.approx(f.length, rel=1e-14)
            assert np.allclose(tangents[s], f.unit_tangent(), atol=1e-9)


class TestAuvRotation:
    def test_identity_at_zero_attitude(self):
        assert np.allclose(auv_rotation(0.0, 0.0, 0.0), np.eye(6), atol=1e-15)

    def test_yaw_quarter_turn_maps_surge_to_lateral(self):
        j = auv_rotation(0.0, 0.0, np.pi / 2)
        v = j[:3, :3] @ np.array([1.0, 0.0, 0.0])
        assert np.allclose(v, [0.0, 1.0, 0.0], atol=1e-12)

    def test_gimbal_singularity(self):
        with pytest.raises(GimbalSingularity):
            auv_rotation(0.1, np.pi / 2, -0.2)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-3.0, 3.0),
        st.floats(-1.4, 1.4),
        st.floats(-3.0, 3.0),
    )
    def test_linear_block_is_rotation(self, phi, theta, psi):
        r = euler_rotation(phi, theta, psi)
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    def test_angular_block_inverts_euler_rates(self):
        # body rates recovered from Euler rates must round-trip
        phi, theta, psi = 0.3, -0.5, 1.1
        j2 = auv_rotation(phi, theta, psi)[3:, 3:]
        cph, sph = np.cos(phi), np.sin(phi)
        cth, sth = np.cos(theta), np.sin(theta)
        # analytic forward map Euler-rates -> body rates
        fwd = np.array([
            [1.0, 0.0, -sth],
            [0.0, cph, sph * cth],
            [0.0, -sph, cph * cth],
        ])
        assert np.allclose(j2 @ fwd, np.eye(3), atol=1e-12)
