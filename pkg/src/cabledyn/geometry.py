"""Segment frames and rigid-body kinematics.

Everything lives in a right-handed Earth frame: x forward (tow
direction in the shipped scenarios), y lateral, z up. Angles are
radians, lengths metres.

A cable segment between consecutive nodes carries an orientation
frame parameterised by an in-plane angle ``phi`` (rotation about the
Earth z axis, from the xy projection) and an out-of-plane angle
``gamma``. The pair is recovered from the node positions alone, so
the frame is a pure function of geometry.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSegment, GimbalSingularity

EPS_LENGTH = 1e-9
EPS_GIMBAL = 1e-6
# below this xz-projection fraction the out-of-plane angle is
# unobservable (chord along y); pinned to 0
_EPS_COSPHI = 1e-12


@dataclass(frozen=True)
class SegmentFrame:
    """Orientation and length of one cable segment.

    Attributes
    ----------
    length : float
        Euclidean distance between the two nodes, m.
    phi : float
        Elevation of the segment over the xz plane, rad, in [-pi/2, pi/2].
    gamma : float
        Rotation about the intermediate y axis, rad, in [-pi/2, 3pi/2).
    rotation : (3, 3) ndarray
        Orthogonal matrix R_y(gamma) @ R_z(phi).
    """

    length: float
    phi: float
    gamma: float
    rotation: np.ndarray

    def unit_tangent(self):
        """Earth-frame unit vector from the first node to the second.

        Reconstructed from the stored angles as
        ``(-cos(gamma)*cos(phi), sin(phi), sin(gamma)*cos(phi))``;
        matches the defining chord direction to round-off for every
        branch of the angle extraction.
        """
        cp, sp = np.cos(self.phi), np.sin(self.phi)
        cg, sg = np.cos(self.gamma), np.sin(self.gamma)
        return np.array([-cg * cp, sp, sg * cp])


def segment_length(p_a, p_b):
    """Distance between two node positions; raises DegenerateSegment
    when it falls below EPS_LENGTH."""
    l = float(np.linalg.norm(np.asarray(p_b, dtype=float) - np.asarray(p_a, dtype=float)))
    if l < EPS_LENGTH:
        raise DegenerateSegment(f"segment length {l:.3e} m below {EPS_LENGTH:.0e} m")
    return l


def segment_frame(p_a, p_b):
    """Build the orientation frame of the segment from node ``p_a`` to ``p_b``.

    Parameters
    ----------
    p_a, p_b : (3,) array_like
        Earth-frame node positions, m.

    Returns
    -------
    SegmentFrame

    Raises
    ------
    DegenerateSegment
        If the nodes are closer than EPS_LENGTH.

    Notes
    -----
    ``phi`` is arcsin(dy / l). ``gamma`` is a two-branch arcsin on
    ``dz / (l cos(phi))``: the direct branch when dx <= 0, the
    supplement otherwise, covering the full circle of headings and
    giving gamma in [-pi/2, 3pi/2). Both angles are evaluated through
    the equivalent arctan2 forms, which stay well conditioned where
    arcsin loses digits near +-1 (that conditioning is what lets the
    tangent reconstruction hold to 1e-9). When the xz projection
    vanishes (chord along y) gamma is pinned to 0.
    """
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    d = p_b - p_a
    l = float(np.linalg.norm(d))
    if l < EPS_LENGTH:
        raise DegenerateSegment(f"segment length {l:.3e} m below {EPS_LENGTH:.0e} m")

    r_xz = float(np.hypot(d[0], d[2]))
    phi = float(np.arctan2(d[1], r_xz))
    if r_xz < _EPS_COSPHI * l:
        gamma = 0.0
    else:
        # both arcsin branches collapse to sin(gamma) = dz / r_xz,
        # cos(gamma) = -dx / r_xz
        gamma = float(np.arctan2(d[2], -d[0]))
        if gamma < -np.pi / 2:
            gamma += 2.0 * np.pi

    cg, sg = np.cos(gamma), np.sin(gamma)
    cp, sp = np.cos(phi), np.sin(phi)
    rotation = np.array([
        [cg * cp, -cg * sp, sg],
        [sp, cp, 0.0],
        [-sg * cp, sg * sp, cg],
    ])
    return SegmentFrame(length=l, phi=phi, gamma=gamma, rotation=rotation)


def segment_tangents(positions):
    """Unit tangents and lengths for every segment of a node chain.

    Vectorised companion of :func:`segment_frame` for the force
    assembly: no angles, just chord directions.

    Parameters
    ----------
    positions : (N, 3) ndarray

    Returns
    -------
    tangents : (N-1, 3) ndarray
        Unit vectors pointing from node s to node s+1.
    lengths : (N-1,) ndarray
    """
    positions = np.asarray(positions, dtype=float)
    d = positions[1:] - positions[:-1]
    lengths = np.linalg.norm(d, axis=1)
    safe = np.maximum(lengths, EPS_LENGTH)
    return d / safe[:, None], lengths


def euler_rotation(phi, theta, psi):
    """Body-to-Earth rotation for roll/pitch/yaw (z-y-x convention)."""
    cph, sph = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cps, sps = np.cos(psi), np.sin(psi)
    return np.array([
        [cps * cth, -sps * cph + cps * sth * sph, sps * sph + cps * cph * sth],
        [sps * cth, cps * cph + sph * sth * sps, -cps * sph + sth * sps * cph],
        [-sth, cth * sph, cth * cph],
    ])


def auv_rotation(phi, theta, psi):
    """6x6 velocity transform from body rates to Earth-frame rates.

    Upper-left block rotates linear velocity (z-y-x Euler), lower-right
    block maps body angular rates to Euler-angle rates.

    Raises
    ------
    GimbalSingularity
        If |cos(theta)| < EPS_GIMBAL (pitch at +-90 deg).
    """
    cth = np.cos(theta)
    if abs(cth) < EPS_GIMBAL:
        raise GimbalSingularity(f"pitch {theta:.6f} rad puts cos(theta) below {EPS_GIMBAL:.0e}")
    cph, sph = np.cos(phi), np.sin(phi)
    tth = np.tan(theta)
    j = np.zeros((6, 6))
    j[:3, :3] = euler_rotation(phi, theta, psi)
    j[3:, 3:] = np.array([
        [1.0, sph * tth, cph * tth],
        [0.0, cph, -sph],
        [0.0, sph / cth, cph / cth],
    ])
    return j
