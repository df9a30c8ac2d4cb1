"""Integrator contracts: equilibrium, boundary fidelity, determinism,
backend agreement, divergence handling, steady detection and
taut/slack classification."""

import numpy as np
import pytest

from cabledyn.boundary import BoundaryPrescription, ConstantVelocityMotion, RampHoldMotion
from cabledyn.cable import CableProperties, CableState, CurrentField
from cabledyn.engine import (
    IntegratorConfig,
    Scenario,
    SimRecord,
    classify_taut_slack,
    run_scenario,
    steady_state_time,
    step,
)
from cabledyn.errors import ConfigInvalid, DivergedState, NotReached


def small_props(**overrides):
    base = dict(
        length=4.0,
        n_nodes=8,
        density=1025.0,
        water_density=1025.0,
        section_area=0.00384,
        drag_diameter=0.07,
        youngs_modulus=1.0e6,
        normal_drag_coeff=1.8306,
        tangential_drag_coeff=0.0756,
        added_mass_coeff=1.3,
    )
    base.update(overrides)
    return CableProperties(**base)


def fixed_ends(separation, length=4.0, n_nodes=8, **prop_overrides):
    props = small_props(length=length, n_nodes=n_nodes, **prop_overrides)
    bp = BoundaryPrescription(
        ConstantVelocityMotion([0.0, separation / 2, 0.0], [0, 0, 0]),
        ConstantVelocityMotion([0.0, -separation / 2, 0.0], [0, 0, 0]),
    )
    return props, bp


def tow_scenario(backend="auto", dt=1e-3, t_end=3.0, scheme="explicit-rk4", **kw):
    props, _ = fixed_ends(3.0)
    bp = BoundaryPrescription(
        ConstantVelocityMotion([0.0, 1.5, 0.0], [0.5, 0, 0]),
        ConstantVelocityMotion([0.0, -1.5, 0.0], [0.5, 0, 0]),
    )
    cfg = IntegratorConfig(dt=dt, t_end=t_end, record_stride=10, scheme=scheme,
                           backend=backend, record_positions=True, **kw)
    return Scenario(props=props, boundary=bp, integrator=cfg, label="tow-test")


class TestConfigValidation:
    def test_integrator_rejects_bad_values(self):
        with pytest.raises(ConfigInvalid):
            IntegratorConfig(dt=0.0)
        with pytest.raises(ConfigInvalid):
            IntegratorConfig(t_end=-1.0)
        with pytest.raises(ConfigInvalid):
            IntegratorConfig(scheme="leapfrog")
        with pytest.raises(ConfigInvalid):
            IntegratorConfig(record_stride=0)

    def test_scenario_theta_range(self):
        props, bp = fixed_ends(3.0)
        with pytest.raises(ConfigInvalid):
            Scenario(props=props, boundary=bp, theta_taut=1.5)


class TestEquilibrium:
    @pytest.mark.parametrize("backend", ["numpy", "numba"])
    def test_straight_neutral_cable_stays_put(self, backend):
        # endpoints at exactly the natural length, zero motion: every
        # force vanishes and the state must not drift
        props, bp = fixed_ends(4.0)
        cfg = IntegratorConfig(dt=1e-3, t_end=0.5, record_stride=50,
                               backend=backend, record_positions=True)
        scn = Scenario(props=props, boundary=bp, integrator=cfg,
                       initial_velocities="zero")
        rec = run_scenario(scn)
        init = scn.initial_state()
        assert np.allclose(rec.final_state.positions, init.positions, atol=1e-12)
        # round-off strain on the linspace chord leaves femto-newton
        # tensions; anything above nano-newtons would be a real force
        assert np.allclose(rec.forces, 0.0, atol=1e-9)
        assert rec.taut.all()

    def test_single_step_equilibrium(self):
        props, bp = fixed_ends(4.0)
        state = Scenario(props=props, boundary=bp, initial_velocities="zero").initial_state()
        cfg = IntegratorConfig(dt=1e-3, t_end=1.0)
        out = step(state, props, CurrentField.zero(), bp, cfg)
        assert np.allclose(out.positions, state.positions, atol=1e-12)
        assert out.time == pytest.approx(1e-3)


class TestRecords:
    def test_boundary_fidelity_exact(self):
        scn = tow_scenario(backend="numba", t_end=2.0)
        rec = run_scenario(scn)
        for r, t in enumerate(rec.times):
            assert np.array_equal(rec.positions[r, 0], scn.boundary.position(t, 0))
            assert np.array_equal(rec.positions[r, -1], scn.boundary.position(t, 1))

    def test_uniform_time_grid_and_shapes(self):
        scn = tow_scenario(t_end=1.0)
        rec = run_scenario(scn)
        assert rec.n_records == 101
        assert np.allclose(np.diff(rec.times), 0.01)
        assert rec.forces.shape == (101, 2, 3)
        assert rec.positions.shape == (101, 8, 3)
        assert np.all(np.isfinite(rec.forces))

    def test_force_channels_layout(self):
        scn = tow_scenario(t_end=0.5)
        rec = run_scenario(scn)
        flat = rec.force_channels()
        assert np.array_equal(flat[:, :3], rec.forces[:, 0, :])
        assert np.array_equal(flat[:, 3:], rec.forces[:, 1, :])


class TestDeterminism:
    @pytest.mark.parametrize("backend", ["numpy", "numba"])
    def test_bit_identical_repeat(self, backend):
        a = run_scenario(tow_scenario(backend=backend, t_end=1.0))
        b = run_scenario(tow_scenario(backend=backend, t_end=1.0))
        assert np.array_equal(a.forces, b.forces)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.final_state.velocities, b.final_state.velocities)

    def test_backends_agree(self):
        a = run_scenario(tow_scenario(backend="numpy", t_end=1.5))
        b = run_scenario(tow_scenario(backend="numba", t_end=1.5))
        assert np.allclose(a.positions, b.positions, atol=1e-9)
        assert np.allclose(a.forces, b.forces, atol=1e-7)

    def test_chunking_invisible(self):
        a = run_scenario(tow_scenario(backend="numba", t_end=1.0, chunk_steps=137))
        b = run_scenario(tow_scenario(backend="numba", t_end=1.0, chunk_steps=20000))
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.forces, b.forces)


class TestSchemes:
    def test_semi_implicit_tracks_rk4_at_small_dt(self):
        a = run_scenario(tow_scenario(scheme="explicit-rk4", dt=2e-4, t_end=1.0))
        b = run_scenario(tow_scenario(scheme="semi-implicit-euler", dt=2e-4, t_end=1.0))
        dev = np.abs(a.final_state.positions - b.final_state.positions).max()
        assert dev < 5e-3


class TestDivergence:
    def test_oversized_step_diverges_with_partial_record(self):
        # stiff cable + huge dt: the explicit scheme must blow up and
        # report the failure time with the records collected so far
        scn = tow_scenario(dt=0.5, t_end=20.0)
        scn = Scenario(
            props=small_props(youngs_modulus=3.68e8, length=4.0, n_nodes=8),
            boundary=scn.boundary,
            integrator=IntegratorConfig(dt=0.5, t_end=20.0, record_stride=1, record_positions=True),
            label="diverge-test",
        )
        with pytest.raises(DivergedState) as exc_info:
            run_scenario(scn)
        err = exc_info.value
        assert err.record is not None
        assert err.record.diverged
        assert err.time is not None and 0 < err.time <= 20.0
        assert err.record.n_records >= 1
        assert np.all(np.isfinite(err.record.forces))


class TestSteadyStateTime:
    def _record(self, times, channels):
        forces = np.asarray(channels, dtype=float).reshape(len(times), 2, 3)
        return SimRecord(
            times=np.asarray(times, dtype=float),
            forces=forces,
            taut=np.ones(len(times), dtype=bool),
            positions=None,
            final_state=None,
            meta={},
        )

    def test_constant_record_returns_zero(self):
        t = np.linspace(0, 10, 101)
        rec = self._record(t, np.ones((101, 6)))
        assert steady_state_time(rec, window=2.0, tol=0.05) == 0.0

    def test_settling_record(self):
        t = np.linspace(0, 20, 201)
        decay = np.exp(-t)[:, None] * np.ones(6)
        rec = self._record(t, 5.0 * decay + 1.0)
        st = steady_state_time(rec, window=2.0, tol=0.05)
        # 5 e^-t peak-to-peak over a 2 s window drops below 0.05 N
        # around t = ln(5 (1 - e^-2) / 0.05) = 4.5 s
        assert 2.0 < st < 6.0

    def test_never_settles(self):
        t = np.linspace(0, 10, 101)
        noisy = np.sin(3 * t)[:, None] * np.ones(6)
        with pytest.raises(NotReached):
            steady_state_time(self._record(t, noisy), window=2.0, tol=0.05)

    def test_record_shorter_than_window(self):
        t = np.linspace(0, 1, 11)
        with pytest.raises(NotReached):
            steady_state_time(self._record(t, np.ones((11, 6))), window=5.0, tol=0.05)

    def test_early_stop_in_run(self):
        scn = tow_scenario(backend="numba", t_end=60.0, chunk_steps=2000,
                           stop_on_steady=True, steady_window=2.0, steady_tol=0.02)
        rec = run_scenario(scn)
        assert rec.times[-1] < 60.0
        assert "stopped_steady_at" in rec.meta


class TestClassify:
    def test_straight_at_natural_length_is_taut(self):
        props = small_props(length=4.0)
        pos = np.zeros((8, 3))
        pos[:, 0] = np.linspace(0, 4.0, 8)
        assert classify_taut_slack(pos, props) == "taut"

    def test_bowed_half_separation_is_slack(self):
        props = small_props(length=4.0)
        pos = np.zeros((8, 3))
        pos[:, 0] = np.linspace(0, 2.0, 8)
        pos[:, 2] = -np.sin(np.linspace(0, np.pi, 8))
        assert classify_taut_slack(pos, props) == "slack"

    def test_threshold_knob(self):
        props = small_props(length=4.0)
        pos = np.zeros((8, 3))
        pos[:, 0] = np.linspace(0, 3.9, 8)  # chord ratio 0.975
        assert classify_taut_slack(pos, props, theta_taut=0.98) == "slack"
        assert classify_taut_slack(pos, props, theta_taut=0.97) == "taut"

    def test_accepts_state(self):
        props = small_props(length=4.0)
        pos = np.zeros((8, 3))
        pos[:, 0] = np.linspace(0, 4.0, 8)
        state = CableState(pos, np.zeros((8, 3)))
        assert classify_taut_slack(state, props) == "taut"


class TestStepConsistency:
    def test_step_matches_run_scenario_single_step(self):
        scn = tow_scenario(backend="numpy", dt=1e-3, t_end=1e-3)
        scn.integrator = IntegratorConfig(dt=1e-3, t_end=1e-3, record_stride=1,
                                          backend="numpy", record_positions=True)
        rec = run_scenario(scn)
        state0 = scn.initial_state()
        out = step(state0, scn.props, scn.current, scn.boundary, scn.integrator)
        assert np.allclose(out.positions, rec.final_state.positions, atol=1e-14)
        assert np.allclose(out.velocities, rec.final_state.velocities, atol=1e-14)
