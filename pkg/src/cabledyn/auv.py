"""Six-degree-of-freedom rigid-body vehicle model.

Body-frame state convention: generalized velocity
nu = (u, v, w, p, q, r) (surge, sway, heave, roll, pitch, yaw rates),
pose eta = (x, y, z, roll, pitch, yaw) in the Earth frame. Dynamics
are normalized to

    M nu_dot = tau_control + tau_thrust + tau_hydrostatic
               + tau_cable - C_A(nu) nu - D nu

with M the rigid-body plus added mass matrix, C_A the added-mass
Coriolis/centripetal matrix and D a positive diagonal linear damping.
The model is self-contained: the cable engine prescribes endpoint
motion and reports reaction forces, which can be fed back here as an
external wrench.

Hydrodynamic coefficient defaults are generic small-AUV values meant
for exercising the model, not measurements of any particular hull.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, SingularMassMatrix
from .geometry import auv_rotation, euler_rotation


def _skew(a):
    return np.array([
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ])


@dataclass
class AuvParams:
    """Inertial and hydrodynamic parameters of one vehicle."""

    mass: float = 13.17
    inertia: tuple = (0.05, 1.20, 1.20)
    added_mass: tuple = (1.31, 21.6, 21.6, 0.05, 1.98, 1.98)
    linear_damping: tuple = (3.0, 40.0, 40.0, 0.10, 2.0, 2.0)
    cable_attach: tuple = (0.0, 0.0, -0.05)

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ConfigInvalid(f"vehicle mass must be > 0, got {self.mass!r}")
        for name in ("inertia", "added_mass", "linear_damping", "cable_attach"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ConfigInvalid(f"vehicle {name} must be finite")
        if np.any(np.asarray(self.inertia) <= 0):
            raise ConfigInvalid("vehicle inertia entries must be > 0")
        if np.any(np.asarray(self.linear_damping) < 0):
            raise ConfigInvalid("vehicle damping entries must be >= 0")

    def rigid_body_mass(self):
        m = self.mass
        ix, iy, iz = self.inertia
        return np.diag([m, m, m, ix, iy, iz])

    def added_mass_matrix(self):
        """6x6 added-mass matrix, symmetrized.

        Accepts either six diagonal entries or a full 6x6 array; a
        full matrix is replaced by (A + A.T) / 2 so the Coriolis
        construction below stays energy-neutral.
        """
        a = np.asarray(self.added_mass, dtype=float)
        if a.shape == (6,):
            return np.diag(a)
        if a.shape == (6, 6):
            return 0.5 * (a + a.T)
        raise ConfigInvalid(f"added_mass must be 6 entries or 6x6, got shape {a.shape}")

    def total_mass_matrix(self):
        """M_RB + M_A; must be symmetric positive definite.

        Raises
        ------
        SingularMassMatrix
            If the combined matrix has a non-positive eigenvalue.
        """
        m = self.rigid_body_mass() + self.added_mass_matrix()
        eig = np.linalg.eigvalsh(m)
        if eig.min() <= 0:
            raise SingularMassMatrix(f"vehicle mass matrix has eigenvalue {eig.min():.3e}")
        return m


@dataclass
class AuvState:
    pose: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=float).reshape(6)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(6)


def coriolis_added(m_added, nu):
    """Added-mass Coriolis matrix C_A(nu), 6x6 and skew-symmetric.

    Block form: with a = M_A nu split into linear part a1 and angular
    part a2,

        C_A = [[    0     , -S(a1) ],
               [ -S(a1)   , -S(a2) ]]

    Skew symmetry makes nu' C_A nu vanish identically, so added-mass
    coupling never injects energy.
    """
    nu = np.asarray(nu, dtype=float)
    a = m_added @ nu
    s1 = _skew(a[:3])
    s2 = _skew(a[3:])
    c = np.zeros((6, 6))
    c[:3, 3:] = -s1
    c[3:, :3] = -s1
    c[3:, 3:] = -s2
    return c


def cable_wrench(attach_offset, rotation, force_earth):
    """Body-frame wrench produced by an Earth-frame cable force.

    Parameters
    ----------
    attach_offset : (3,) array_like
        Attachment point in body coordinates, m.
    rotation : (3, 3) ndarray
        Body-to-Earth rotation of the vehicle.
    force_earth : (3,) array_like
        Cable reaction force in the Earth frame, N.

    Returns
    -------
    (6,) ndarray: body-frame force and moment stacked.
    """
    f_body = np.asarray(rotation, dtype=float).T @ np.asarray(force_earth, dtype=float)
    m_body = np.cross(np.asarray(attach_offset, dtype=float), f_body)
    return np.concatenate([f_body, m_body])


def auv_kinematics(state):
    """Earth-frame pose rate eta_dot = J(attitude) nu."""
    roll, pitch, yaw = state.pose[3:]
    return auv_rotation(roll, pitch, yaw) @ state.velocity


def auv_dynamics(params, state, tau=None):
    """Body-frame acceleration nu_dot for the given external wrench.

    ``tau`` collects every applied generalized force (control,
    propulsion, hydrostatics, cable) already summed, body frame.
    """
    nu = state.velocity
    m = params.total_mass_matrix()
    c = coriolis_added(params.added_mass_matrix(), nu)
    d = np.asarray(params.linear_damping, dtype=float)
    rhs = -(c @ nu) - d * nu
    if tau is not None:
        rhs = rhs + np.asarray(tau, dtype=float)
    return np.linalg.solve(m, rhs)


def integrate_auv(params, state, dt, n_steps, wrench_fn=None):
    """Fixed-step RK4 on the coupled pose/velocity system.

    ``wrench_fn(t, state) -> (6,)`` supplies the applied wrench; None
    means unforced. Returns the final AuvState.
    """
    pose = state.pose.copy()
    nu = state.velocity.copy()
    t = 0.0

    def rates(t_, pose_, nu_):
        s = AuvState(pose_, nu_)
        tau = None if wrench_fn is None else wrench_fn(t_, s)
        return auv_kinematics(s), auv_dynamics(params, s, tau)

    for _ in range(n_steps):
        k1p, k1n = rates(t, pose, nu)
        k2p, k2n = rates(t + 0.5 * dt, pose + 0.5 * dt * k1p, nu + 0.5 * dt * k1n)
        k3p, k3n = rates(t + 0.5 * dt, pose + 0.5 * dt * k2p, nu + 0.5 * dt * k2n)
        k4p, k4n = rates(t + dt, pose + dt * k3p, nu + dt * k3n)
        pose = pose + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        nu = nu + dt / 6.0 * (k1n + 2 * k2n + 2 * k3n + k4n)
        t += dt
    return AuvState(pose, nu)


def body_to_earth(state):
    """3x3 body-to-Earth rotation at the state's attitude."""
    roll, pitch, yaw = state.pose[3:]
    return euler_rotation(roll, pitch, yaw)
