"""Vehicle-model contracts: energy neutrality of the added-mass
Coriolis coupling, dissipative damping, steady force balance."""

import numpy as np
import pytest

from cabledyn.auv import (
    AuvParams,
    AuvState,
    auv_dynamics,
    auv_kinematics,
    body_to_earth,
    cable_wrench,
    coriolis_added,
    integrate_auv,
)
from cabledyn.errors import ConfigInvalid, SingularMassMatrix


class TestParams:
    def test_mass_matrix_is_spd(self):
        m = AuvParams().total_mass_matrix()
        assert np.allclose(m, m.T)
        assert np.linalg.eigvalsh(m).min() > 0

    def test_full_added_mass_symmetrized(self):
        a = np.diag([1.0, 2, 3, 4, 5, 6.0])
        a[0, 1] = 0.4  # asymmetric entry gets split across the diagonal
        p = AuvParams(added_mass=tuple(map(tuple, a)))
        am = p.added_mass_matrix()
        assert np.allclose(am, am.T)
        assert am[0, 1] == pytest.approx(0.2)

    def test_non_spd_rejected(self):
        p = AuvParams(added_mass=(-50.0, 0, 0, 0, 0, 0))
        with pytest.raises(SingularMassMatrix):
            p.total_mass_matrix()

    def test_validation(self):
        with pytest.raises(ConfigInvalid):
            AuvParams(mass=0.0)
        with pytest.raises(ConfigInvalid):
            AuvParams(inertia=(1.0, -1.0, 1.0))


class TestCoriolis:
    def test_skew_symmetric(self):
        p = AuvParams()
        rng = np.random.default_rng(2)
        for _ in range(50):
            nu = rng.normal(size=6)
            c = coriolis_added(p.added_mass_matrix(), nu)
            assert np.allclose(c, -c.T, atol=1e-12)

    def test_energy_neutral_bulk(self):
        # nu' C(nu) nu must vanish for any velocity
        p = AuvParams()
        ma = p.added_mass_matrix()
        rng = np.random.default_rng(3)
        nus = rng.normal(scale=2.0, size=(10_000, 6))
        worst = max(abs(nu @ coriolis_added(ma, nu) @ nu) for nu in nus)
        assert worst < 1e-10


class TestDynamics:
    def test_rest_stays_at_rest(self):
        s = AuvState(np.zeros(6), np.zeros(6))
        assert np.allclose(auv_dynamics(AuvParams(), s), 0.0, atol=1e-15)

    def test_steady_thrust_balances_damping(self):
        p = AuvParams()
        u = 0.8
        thrust = np.array([p.linear_damping[0] * u, 0, 0, 0, 0, 0])
        s = AuvState(np.zeros(6), np.array([u, 0, 0, 0, 0, 0]))
        assert np.allclose(auv_dynamics(p, s, thrust), 0.0, atol=1e-12)

    def test_unforced_motion_dissipates(self):
        p = AuvParams()
        m = p.total_mass_matrix()
        rng = np.random.default_rng(4)
        for _ in range(200):
            nu = rng.normal(size=6)
            dnu = auv_dynamics(p, AuvState(np.zeros(6), nu))
            # d/dt (0.5 nu' M nu) = -nu' D nu <= 0
            assert nu @ m @ dnu <= 1e-12

    def test_free_decay_integration(self):
        p = AuvParams()
        s = integrate_auv(p, AuvState(np.zeros(6), np.array([1.0, 0, 0, 0, 0, 0])), 0.01, 400)
        assert 0 < s.velocity[0] < 1.0
        assert np.all(np.isfinite(s.pose))
        assert s.pose[0] > 0  # drifted forward while decaying


class TestKinematics:
    def test_identity_at_zero_attitude(self):
        s = AuvState(np.zeros(6), np.array([1.0, 0.5, -0.2, 0.1, 0.0, 0.3]))
        assert np.allclose(auv_kinematics(s), s.velocity)

    def test_yawed_surge(self):
        s = AuvState(np.array([0, 0, 0, 0, 0, np.pi / 2]), np.array([1.0, 0, 0, 0, 0, 0]))
        eta_dot = auv_kinematics(s)
        assert np.allclose(eta_dot[:3], [0.0, 1.0, 0.0], atol=1e-12)


class TestCableWrench:
    def test_identity_attitude(self):
        w = cable_wrench([0.0, 0.0, -0.1], np.eye(3), [10.0, 0.0, 0.0])
        assert np.allclose(w[:3], [10.0, 0, 0])
        # offset below the body origin, force forward: pitch moment about +y
        assert np.allclose(w[3:], [0.0, -1.0, 0.0], atol=1e-12)

    def test_rotated_attitude(self):
        s = AuvState(np.array([0, 0, 0, 0, 0, np.pi / 2]), np.zeros(6))
        r = body_to_earth(s)
        w = cable_wrench([0.0, 0, 0], r, [0.0, 5.0, 0.0])
        # Earth +y force on a vehicle yawed 90 deg: pure surge in body frame
        assert np.allclose(w[:3], [5.0, 0.0, 0.0], atol=1e-12)
        assert np.allclose(w[3:], 0.0, atol=1e-12)
