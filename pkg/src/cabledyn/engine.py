"""Time integration of the cable node system.

A scenario bundles the cable, the prescribed endpoint motions, the
ambient current and the integrator settings. Both endpoints are
kinematic: their rows are overwritten with the prescription at every
stage, and the force a vehicle must apply to realize that motion
(nodal mass times prescribed acceleration minus the assembled
cable-side force) is what gets recorded.

Two execution paths share the same formulas: a numba kernel for
uniform currents (the common case, and the only one the shipped
scenarios use) and a numpy fallback that accepts arbitrary current
callables. A given configuration always selects the same path, so
repeated runs are bit-identical.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .boundary import BoundaryPrescription
from .cable import CableProperties, CableState, CurrentField, cable_forces, node_masses
from .errors import ConfigInvalid, DivergedState, NotReached
from .geometry import segment_tangents

SCHEMES = ("explicit-rk4", "semi-implicit-euler")
DEFAULT_THETA_TAUT = 0.98


@dataclass
class IntegratorConfig:
    """Time-stepping settings.

    ``record_stride`` counts steps between record rows; row r holds
    the state after step r * record_stride. ``chunk_steps`` bounds how
    many steps run per kernel call (it also sets the granularity of
    the optional steady-state early exit, so identification runs use
    a smaller value than the default).
    """

    dt: float = 1e-3
    scheme: str = "explicit-rk4"
    t_end: float = 40.0
    record_stride: int = 10
    record_positions: bool = False
    backend: str = "auto"
    chunk_steps: int = 20000
    stop_on_steady: bool = False
    steady_window: float = 5.0
    steady_tol: float = 0.05

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigInvalid(f"dt must be > 0, got {self.dt!r}")
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigInvalid(f"t_end must be > 0, got {self.t_end!r}")
        if self.scheme not in SCHEMES:
            raise ConfigInvalid(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not isinstance(self.record_stride, int) or self.record_stride < 1:
            raise ConfigInvalid(f"record_stride must be an int >= 1, got {self.record_stride!r}")
        if self.backend not in ("auto", "numpy", "numba"):
            raise ConfigInvalid(f"backend must be auto, numpy or numba, got {self.backend!r}")
        if not isinstance(self.chunk_steps, int) or self.chunk_steps < 1:
            raise ConfigInvalid(f"chunk_steps must be an int >= 1, got {self.chunk_steps!r}")
        if self.steady_window <= 0 or self.steady_tol <= 0:
            raise ConfigInvalid("steady_window and steady_tol must be > 0")


@dataclass
class Scenario:
    """Everything one integration needs."""

    props: CableProperties
    boundary: BoundaryPrescription
    current: CurrentField = field(default_factory=CurrentField.zero)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    theta_taut: float = DEFAULT_THETA_TAUT
    initial_positions: np.ndarray = None
    initial_velocities: str = "interpolated"
    label: str = ""

    def __post_init__(self):
        if not 0 < self.theta_taut <= 1.0:
            raise ConfigInvalid(f"theta_taut must be in (0, 1], got {self.theta_taut!r}")
        if isinstance(self.initial_velocities, str):
            if self.initial_velocities not in ("interpolated", "zero"):
                raise ConfigInvalid(
                    "initial_velocities must be 'interpolated', 'zero' or an array"
                )

    def initial_state(self):
        """Nodes on the straight chord between the endpoints at t = 0
        unless explicit positions were given; boundary rows always come
        from the prescription."""
        n = self.props.n_nodes
        p0 = self.boundary.position(0.0, 0)
        p1 = self.boundary.position(0.0, 1)
        if self.initial_positions is not None:
            pos = np.array(self.initial_positions, dtype=float)
            if pos.shape != (n, 3):
                raise ConfigInvalid(f"initial_positions must be ({n}, 3), got {pos.shape}")
            pos[0] = p0
            pos[-1] = p1
        else:
            frac = np.linspace(0.0, 1.0, n)[:, None]
            pos = (1.0 - frac) * p0 + frac * p1
        v0 = self.boundary.velocity(0.0, 0)
        v1 = self.boundary.velocity(0.0, 1)
        if isinstance(self.initial_velocities, str):
            if self.initial_velocities == "zero":
                vel = np.zeros((n, 3))
                vel[0], vel[-1] = v0, v1
            else:
                frac = np.linspace(0.0, 1.0, n)[:, None]
                vel = (1.0 - frac) * v0 + frac * v1
        else:
            vel = np.array(self.initial_velocities, dtype=float)
            if vel.shape != (n, 3):
                raise ConfigInvalid(f"initial_velocities must be ({n}, 3), got {vel.shape}")
            vel[0], vel[-1] = v0, v1
        return CableState(pos, vel, 0.0)


@dataclass
class SimRecord:
    """Downsampled integration output on a uniform time grid."""

    times: np.ndarray
    forces: np.ndarray
    taut: np.ndarray
    positions: np.ndarray
    final_state: CableState
    meta: dict
    diverged: bool = False

    @property
    def n_records(self):
        return self.times.size

    def endpoint_force(self, end):
        """(R, 3) recorded reaction force at endpoint 0 or 1."""
        return self.forces[:, end, :]

    def force_channels(self):
        """(R, 6) forces flattened as Fx1, Fy1, Fz1, Fx2, Fy2, Fz2."""
        return self.forces.reshape(self.n_records, 6)

    def truncated(self, n_rows):
        return SimRecord(
            times=self.times[:n_rows].copy(),
            forces=self.forces[:n_rows].copy(),
            taut=self.taut[:n_rows].copy(),
            positions=None if self.positions is None else self.positions[:n_rows].copy(),
            final_state=self.final_state,
            meta=dict(self.meta),
            diverged=self.diverged,
        )


def _resolve_backend(cfg, current):
    if cfg.backend == "numpy":
        return "numpy"
    if cfg.backend == "numba":
        if not current.is_uniform:
            raise ConfigInvalid("numba backend requires a uniform current")
        return "numba"
    return "numba" if current.is_uniform else "numpy"


def _accelerations(props, pos, vel, current, t):
    """Numpy-path accelerations plus forces and masses (all nodes)."""
    f = cable_forces(props, CableState(pos, vel, t), current)
    _, lengths = segment_tangents(pos)
    m = node_masses(props, lengths)
    return f / m[:, None], f, m


def _numpy_chunk(scheme, pos, vel, props, current, prm, dt, n_steps, g_offset, t_offset,
                 bp_a, bv_a, ba_a, bp_h, bv_h,
                 stride, rec_f, rec_taut, rec_pos, record_positions):
    """Reference implementation of the kernel contract (shared shapes
    and record layout), accepting any CurrentField.

    Times are formed as t_offset + dt * integer so that repeated runs
    and the record grid agree bit for bit.
    """
    n = pos.shape[0]
    interior = slice(1, n - 1)
    for k in range(n_steps):
        t = t_offset + dt * (g_offset + k)
        if scheme == _kernels.RK4:
            a1, _, _ = _accelerations(props, pos, vel, current, t)
            x2 = pos + 0.5 * dt * vel
            v2 = vel + 0.5 * dt * a1
            x2[0], x2[-1] = bp_h[k, 0], bp_h[k, 1]
            v2[0], v2[-1] = bv_h[k, 0], bv_h[k, 1]
            a2, _, _ = _accelerations(props, x2, v2, current, t + 0.5 * dt)
            x3 = pos + 0.5 * dt * v2
            v3 = vel + 0.5 * dt * a2
            x3[0], x3[-1] = bp_h[k, 0], bp_h[k, 1]
            v3[0], v3[-1] = bv_h[k, 0], bv_h[k, 1]
            a3, _, _ = _accelerations(props, x3, v3, current, t + 0.5 * dt)
            x4 = pos + dt * v3
            v4 = vel + dt * a3
            x4[0], x4[-1] = bp_a[k + 1, 0], bp_a[k + 1, 1]
            v4[0], v4[-1] = bv_a[k + 1, 0], bv_a[k + 1, 1]
            a4, _, _ = _accelerations(props, x4, v4, current, t + dt)
            pos[interior] += dt / 6.0 * (vel + 2.0 * (v2 + v3) + v4)[interior]
            vel[interior] += dt / 6.0 * (a1 + 2.0 * (a2 + a3) + a4)[interior]
        else:
            a1, _, _ = _accelerations(props, pos, vel, current, t)
            vel[interior] += dt * a1[interior]
            pos[interior] += dt * vel[interior]

        pos[0], pos[-1] = bp_a[k + 1, 0], bp_a[k + 1, 1]
        vel[0], vel[-1] = bv_a[k + 1, 0], bv_a[k + 1, 1]

        g = g_offset + k + 1
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            return g

        if g % stride == 0:
            r = g // stride
            _, f, m = _accelerations(props, pos, vel, current, t + dt)
            rec_f[r, 0] = m[0] * ba_a[k + 1, 0] - f[0]
            rec_f[r, 1] = m[-1] * ba_a[k + 1, 1] - f[-1]
            chord = np.linalg.norm(pos[-1] - pos[0])
            rec_taut[r] = 1 if chord / props.length >= prm[_kernels.P_THETA] else 0
            if record_positions:
                rec_pos[r] = pos
    return -1


def step(state, props, current, boundary, cfg):
    """Advance one time step with the configured scheme (numpy path).

    Returns the new CableState; boundary rows follow the prescription
    exactly. Raises DivergedState if the result is non-finite.
    """
    pos = state.positions.copy()
    vel = state.velocities.copy()
    t = state.time
    dt = cfg.dt
    times_int = np.array([t, t + dt])
    times_half = np.array([t + 0.5 * dt])
    bp_a, bv_a, ba_a = boundary.sample(times_int)
    bp_h, bv_h, _ = boundary.sample(times_half)
    prm = _kernels.pack_params(
        props,
        current.uniform_velocity if current.is_uniform else (0.0, 0.0, 0.0),
        DEFAULT_THETA_TAUT,
    )
    scheme = _kernels.RK4 if cfg.scheme == "explicit-rk4" else _kernels.SEMI_IMPLICIT
    rec_f = np.zeros((1, 2, 3))
    rec_taut = np.zeros(1, dtype=np.uint8)
    rec_pos = np.zeros((0, pos.shape[0], 3))
    fail = _numpy_chunk(scheme, pos, vel, props, current, prm, dt, 1, 0, t,
                        bp_a, bv_a, ba_a, bp_h, bv_h,
                        10**9, rec_f, rec_taut, rec_pos, False)
    if fail >= 0:
        raise DivergedState("state became non-finite during step", time=t + dt)
    return CableState(pos, vel, t + dt)


def _initial_reaction(props, state, current, boundary, prm, backend):
    bacc = np.stack([boundary.acceleration(0.0, 0), boundary.acceleration(0.0, 1)])
    if backend == "numba":
        n = state.positions.shape[0]
        f = np.empty((n, 3))
        m = np.empty(n)
        out = np.empty((2, 3))
        _kernels.endpoint_reactions(state.positions, state.velocities, prm, bacc, f, m, out)
        return out
    _, f, m = _accelerations(props, state.positions, state.velocities, current, 0.0)
    return np.stack([m[0] * bacc[0] - f[0], m[-1] * bacc[-1] - f[-1]])


def run_scenario(scenario):
    """Integrate the scenario to t_end and return the SimRecord.

    Raises DivergedState (with the partial record attached) when the
    state goes non-finite; with ``stop_on_steady`` set, the run ends
    early once the trailing-window force criterion is met.
    """
    cfg = scenario.integrator
    props = scenario.props
    current = scenario.current
    boundary = scenario.boundary
    boundary.validate(cfg.t_end)

    n_steps = int(round(cfg.t_end / cfg.dt))
    if n_steps < 1:
        raise ConfigInvalid(f"t_end {cfg.t_end} shorter than one step dt {cfg.dt}")
    stride = cfg.record_stride
    n_rec = n_steps // stride + 1

    state = scenario.initial_state()
    pos = state.positions.copy()
    vel = state.velocities.copy()

    backend = _resolve_backend(cfg, current)
    cur_vec = current.uniform_velocity if current.is_uniform else (0.0, 0.0, 0.0)
    prm = _kernels.pack_params(props, cur_vec, scenario.theta_taut)
    scheme = _kernels.RK4 if cfg.scheme == "explicit-rk4" else _kernels.SEMI_IMPLICIT

    n = props.n_nodes
    rec_f = np.zeros((n_rec, 2, 3))
    rec_taut = np.zeros(n_rec, dtype=np.uint8)
    rec_pos = np.zeros((n_rec, n, 3)) if cfg.record_positions else np.zeros((0, n, 3))

    rec_f[0] = _initial_reaction(props, state, current, boundary, prm, backend)
    chord0 = np.linalg.norm(pos[-1] - pos[0])
    rec_taut[0] = 1 if chord0 / props.length >= scenario.theta_taut else 0
    if cfg.record_positions:
        rec_pos[0] = pos

    meta = {
        "label": scenario.label,
        "dt": cfg.dt,
        "scheme": cfg.scheme,
        "t_end": n_steps * cfg.dt,
        "record_stride": stride,
        "n_nodes": n,
        "cable_length": props.length,
        "theta_taut": scenario.theta_taut,
        "backend": backend,
    }

    # record times as dt * integer step index: bit-identical to the
    # grids the chunks sample the prescription on
    times_full = cfg.dt * (stride * np.arange(n_rec))

    def build_record(rows, diverged=False):
        return SimRecord(
            times=times_full[:rows].copy(),
            forces=rec_f[:rows].copy(),
            taut=rec_taut[:rows].astype(bool),
            positions=rec_pos[:rows].copy() if cfg.record_positions else None,
            final_state=CableState(pos.copy(), vel.copy(), done * cfg.dt),
            meta=meta,
            diverged=diverged,
        )

    done = 0
    while done < n_steps:
        k_chunk = min(cfg.chunk_steps, n_steps - done)
        grid = cfg.dt * np.arange(done, done + k_chunk + 1)
        half = cfg.dt * (np.arange(done, done + k_chunk) + 0.5)
        bp_a, bv_a, ba_a = boundary.sample(grid)
        bp_h, bv_h, _ = boundary.sample(half)

        if backend == "numba":
            fail = _kernels.run_chunk(
                scheme, pos, vel, prm, cfg.dt, k_chunk, done,
                bp_a, bv_a, ba_a, bp_h, bv_h,
                stride, rec_f, rec_taut, rec_pos, cfg.record_positions,
            )
        else:
            fail = _numpy_chunk(
                scheme, pos, vel, props, current, prm, cfg.dt, k_chunk, done, 0.0,
                bp_a, bv_a, ba_a, bp_h, bv_h,
                stride, rec_f, rec_taut, rec_pos, cfg.record_positions,
            )

        if fail >= 0:
            # records written so far cover completed steps before the
            # failing one
            rows = (fail - 1) // stride + 1 if fail >= 1 else 1
            t_fail = fail * cfg.dt
            done = fail
            partial = build_record(rows, diverged=True)
            raise DivergedState(
                f"integration diverged at t = {t_fail:.6g} s (step {fail})",
                record=partial,
                time=t_fail,
            )

        done += k_chunk

        if cfg.stop_on_steady and done < n_steps:
            rows = done // stride + 1
            probe = build_record(rows)
            try:
                steady_state_time(probe, window=cfg.steady_window, tol=cfg.steady_tol)
            except NotReached:
                continue
            meta["stopped_steady_at"] = done * cfg.dt
            return probe

    return build_record(n_rec)


def steady_state_time(record, window=5.0, tol=0.05):
    """Earliest time after which every endpoint-force channel varies
    less than ``tol`` (peak to peak) over any trailing ``window``.

    Returns the start time of the first window of the persistently
    quiet suffix (0.0 for a record that is quiet from the start).

    Raises
    ------
    NotReached
        If the record is shorter than the window or the final window
        is not quiet.
    """
    times = record.times
    if times.size < 2:
        raise NotReached("record too short to certify a steady state")
    rec_dt = times[1] - times[0]
    w = max(1, int(round(window / rec_dt)))
    if times.size <= w:
        raise NotReached(f"record spans {times[-1]:.3g} s, shorter than the {window} s window")
    channels = record.force_channels()
    view = np.lib.stride_tricks.sliding_window_view(channels, w + 1, axis=0)
    ptp = view.max(axis=-1) - view.min(axis=-1)
    quiet = np.all(ptp < tol, axis=1)
    if not quiet[-1]:
        raise NotReached("force variation above tolerance at the end of the record")
    not_quiet = np.nonzero(~quiet)[0]
    first = 0 if not_quiet.size == 0 else not_quiet[-1] + 1
    return float(max(times[first + w] - window, 0.0))


def classify_taut_slack(state_or_positions, props, theta_taut=DEFAULT_THETA_TAUT):
    """"taut" when the endpoint chord reaches theta_taut of the
    natural length, "slack" otherwise."""
    pos = getattr(state_or_positions, "positions", state_or_positions)
    pos = np.asarray(pos, dtype=float)
    chord = float(np.linalg.norm(pos[-1] - pos[0]))
    return "taut" if chord / props.length >= theta_taut else "slack"
