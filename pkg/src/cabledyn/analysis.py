"""Post-processing studies built on the cable engine.

Covers mesh and time-step convergence metrics, material and length
sweeps of the steady tow formation, numerical linearization of the
one-step state map around a snapshot, and eigen-spectra of the
resulting matrices.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .boundary import BoundaryPrescription, ConstantVelocityMotion
from .cable import CurrentField, node_masses
from .engine import IntegratorConfig, Scenario, run_scenario, step
from .errors import (ConfigInvalid, DegenerateSegment, DivergedState,
                     EigenNoConvergence, NotReached)

FORCE_DEV_CHANNELS = ("Fx1", "Fy1", "Fx2", "Fy2")
_FORCE_DEV_IDX = np.array([0, 1, 3, 4])


def resample_to_arclength(positions, m):
    """Resample a polyline at m stations uniform in arc length.

    Returns an (m, 3) array; station 0 and m-1 coincide with the first
    and last input nodes.  Raises DegenerateSegment when consecutive
    input nodes coincide.
    """
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
        raise ConfigInvalid("positions must be (N, 3) with N >= 2")
    if m < 2:
        raise ConfigInvalid("station count must be at least 2")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(seg < 1e-12):
        raise DegenerateSegment("coincident nodes in configuration")
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    stations = np.linspace(0.0, arc[-1], m)
    out = np.empty((m, 3))
    for axis in range(3):
        out[:, axis] = np.interp(stations, arc, pts[:, axis])
    return out


@dataclass(frozen=True)
class DeviationReport:
    """Geometric distance summary between two resampled configurations."""

    midpoint: float
    average: float
    max: float
    runtime: float = 0.0

    def is_nan(self):
        return math.isnan(self.average)


NAN_REPORT = DeviationReport(float("nan"), float("nan"), float("nan"),
                             float("nan"))


def config_deviation(test, reference, runtime=0.0):
    """Per-station deviation metrics between equally sampled polylines.

    The midpoint figure is taken at the station nearest half arc length,
    exact when the station count is odd.
    """
    a = np.asarray(test, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ConfigInvalid("configurations must share a station count")
    dist = np.linalg.norm(a - b, axis=1)
    return DeviationReport(midpoint=float(dist[(len(dist) - 1) // 2]),
                           average=float(dist.mean()),
                           max=float(dist.max()),
                           runtime=runtime)


def _steady_forces(record, window):
    sel = record.times >= record.times[-1] - window
    return record.force_channels()[sel].mean(axis=0)


@dataclass(frozen=True)
class ConvergenceRow:
    """One refinement level: geometry deviation plus force deviations."""

    level: float
    report: DeviationReport
    force_dev: np.ndarray
    force_avg: float
    diverged: bool = False


def _nan_row(level, runtime):
    rep = DeviationReport(float("nan"), float("nan"), float("nan"), runtime)
    return ConvergenceRow(level=level, report=rep,
                          force_dev=np.full(4, np.nan),
                          force_avg=float("nan"), diverged=True)


def spatial_convergence(scenario, n_list, stations=101, steady_window=5.0):
    """Steady-state deviations for each node count versus the finest.

    Returns rows ordered as n_list; the reference is its largest entry.
    """
    n_list = list(n_list)
    if not n_list:
        raise ConfigInvalid("n_list is empty")
    n_ref = max(n_list)
    shapes, forces, runtimes = {}, {}, {}
    for n in sorted(set(n_list)):
        props = scenario.props.with_resolution(n)
        scn = replace(scenario, props=props, initial_positions=None)
        t0 = time.perf_counter()
        rec = run_scenario(scn)
        runtimes[n] = time.perf_counter() - t0
        shapes[n] = resample_to_arclength(rec.final_state.positions, stations)
        forces[n] = _steady_forces(rec, steady_window)
    rows = []
    for n in n_list:
        dev = np.abs(forces[n] - forces[n_ref])[_FORCE_DEV_IDX]
        rows.append(ConvergenceRow(
            level=float(n),
            report=config_deviation(shapes[n], shapes[n_ref],
                                    runtime=runtimes[n]),
            force_dev=dev,
            force_avg=float(dev.mean())))
    return rows


def temporal_convergence(scenario, dt_list, stations=101, steady_window=5.0):
    """Steady-state deviations for each time step versus the smallest.

    Diverged runs produce NaN rows; the sweep always completes.
    """
    dt_list = list(dt_list)
    if not dt_list:
        raise ConfigInvalid("dt_list is empty")
    dt_ref = min(dt_list)
    shapes, forces, runtimes, failed = {}, {}, {}, set()
    for dt in sorted(set(dt_list), reverse=True):
        stride = max(1, int(round(0.01 / dt)))
        cfg = replace(scenario.integrator, dt=dt, record_stride=stride)
        scn = replace(scenario, integrator=cfg)
        t0 = time.perf_counter()
        try:
            rec = run_scenario(scn)
        except DivergedState:
            runtimes[dt] = time.perf_counter() - t0
            failed.add(dt)
            continue
        runtimes[dt] = time.perf_counter() - t0
        shapes[dt] = resample_to_arclength(rec.final_state.positions,
                                           stations)
        forces[dt] = _steady_forces(rec, steady_window)
    if dt_ref in failed:
        raise ConfigInvalid("reference time step diverged")
    rows = []
    for dt in dt_list:
        if dt in failed:
            rows.append(_nan_row(float(dt), runtimes[dt]))
            continue
        dev = np.abs(forces[dt] - forces[dt_ref])[_FORCE_DEV_IDX]
        rows.append(ConvergenceRow(
            level=float(dt),
            report=config_deviation(shapes[dt], shapes[dt_ref],
                                    runtime=runtimes[dt]),
            force_dev=dev,
            force_avg=float(dev.mean())))
    return rows


def midpoint_offset(positions, axis=0):
    """Arc-midpoint coordinate relative to the endpoints' midpoint.

    Negative values mean the cable midpoint trails the vehicles along
    the given axis.  This is the X_mid figure of the material sweep.
    """
    pts = np.asarray(positions, dtype=float)
    mid = resample_to_arclength(pts, 3)[1]
    anchor = 0.5 * (pts[0] + pts[-1])
    return float(mid[axis] - anchor[axis])


@dataclass(frozen=True)
class SweepCell:
    """Steady outcome of one (diameter, modulus) combination."""

    d: float
    E: float
    forces: np.ndarray
    x_mid: float
    diverged: bool = False

    def row(self):
        """Values in the pinned column order d,E,Fx1,Fy1,Fx2,Fy2,X_mid."""
        f = self.forces
        return [self.d, self.E, f[0, 0], f[0, 1], f[1, 0], f[1, 1],
                self.x_mid]


def _tracked_props(base, d, E):
    # the swept diameter is geometric: cross-section, drag reference
    # length and therefore mass, buoyancy and axial stiffness follow it
    return replace(base, drag_diameter=d, section_area=math.pi * d * d / 4.0,
                   youngs_modulus=E)


def _stable_dt(props, dt, v_ref=2.0):
    """Shrink dt when a fast cell parameterization would break RK4.

    Two explicit-integration limits are covered: the taut axial mode
    (frequency grows with modulus) and the drag relaxation time, which
    collapses for thin light cables where drag scales with d but mass
    with d^2.
    """
    l0 = props.rest_length
    m_min = node_masses(props, np.full(props.n_segments, l0)).min()
    omega = math.sqrt(2.0 * props.youngs_modulus * props.section_area /
                      (l0 * m_min))
    out = min(dt, 0.7 / omega) if omega > 0 else dt
    drag = 0.5 * props.water_density * props.normal_drag_coeff * \
        props.drag_diameter * l0 * v_ref
    if drag > 0:
        out = min(out, 0.3 * m_min / drag)
    return out


def material_sweep(scenario, d_range, E_range, samples, threads=1,
                   steady_window=5.0):
    """Log-spaced grid over diameter and modulus of the tow formation.

    Each cell reruns the scenario with the tracked properties and
    reports steady endpoint forces plus the trailing midpoint offset.
    Diverged cells carry NaNs and the sweep continues.  Cells run
    independently (optionally threaded); output order is row-major in
    (d, E) regardless of thread count.
    """
    d_lo, d_hi = d_range
    e_lo, e_hi = E_range
    if min(d_lo, d_hi, e_lo, e_hi) <= 0.0:
        raise ConfigInvalid("sweep ranges must be positive")
    if isinstance(samples, int):
        n_d = n_e = samples
    else:
        n_d, n_e = samples
    ds = np.logspace(math.log10(d_lo), math.log10(d_hi), n_d)
    es = np.logspace(math.log10(e_lo), math.log10(e_hi), n_e)
    grid = [(float(d), float(E)) for d in ds for E in es]

    def run_cell(cell):
        d, E = cell
        props = _tracked_props(scenario.props, d, E)
        cfg = replace(scenario.integrator,
                      dt=_stable_dt(props, scenario.integrator.dt))
        scn = replace(scenario, props=props, integrator=cfg,
                      initial_positions=None)
        try:
            rec = run_scenario(scn)
        except DivergedState:
            return SweepCell(d, E, np.full((2, 3), np.nan), float("nan"),
                             diverged=True)
        forces = _steady_forces(rec, steady_window).reshape(2, 3)
        x_mid = midpoint_offset(rec.final_state.positions)
        return SweepCell(d, E, forces, x_mid)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_cell, grid))
    return [run_cell(c) for c in grid]


@dataclass(frozen=True)
class LengthRow:
    """One cable length of the similarity study."""

    length: float
    positions: np.ndarray
    normalized: np.ndarray
    midpoint_normalized: np.ndarray
    forces: np.ndarray


def length_sweep(props, fractions, lengths, speed=1.0, t_end=60.0, dt=1e-3,
                 stations=101, steady_window=5.0):
    """Run the same fractional formation at several cable lengths.

    fractions = (lateral, along) as multiples of the cable length.
    Configurations are normalized by translating the endpoints' midpoint
    to the origin and dividing by the length, which makes shapes of a
    scale-similar family coincide.
    """
    f_lat, f_along = fractions
    if math.hypot(f_lat, f_along) > 1.0:
        raise ConfigInvalid("fractional separation exceeds the cable length")
    rows = []
    for L in lengths:
        cell = replace(props, length=float(L))
        vel = (speed, 0.0, 0.0)
        boundary = BoundaryPrescription(
            ConstantVelocityMotion((0.0, 0.0, 0.0), vel),
            ConstantVelocityMotion((f_along * L, f_lat * L, 0.0), vel))
        scn = Scenario(props=cell, boundary=boundary,
                       current=CurrentField.zero(),
                       integrator=IntegratorConfig(dt=dt, t_end=t_end,
                                                   record_stride=10))
        rec = run_scenario(scn)
        pos = rec.final_state.positions
        shape = resample_to_arclength(pos, stations)
        anchor = 0.5 * (pos[0] + pos[-1])
        normalized = (shape - anchor) / L
        rows.append(LengthRow(length=float(L), positions=pos,
                              normalized=normalized,
                              midpoint_normalized=normalized[(stations - 1) // 2],
                              forces=_steady_forces(rec, steady_window).reshape(2, 3)))
    return rows


def normalized_midpoint_spread(rows):
    """Largest pairwise distance between normalized midpoints."""
    mids = np.array([r.midpoint_normalized for r in rows])
    spread = 0.0
    for i in range(len(mids)):
        for j in range(i + 1, len(mids)):
            spread = max(spread, float(np.linalg.norm(mids[i] - mids[j])))
    return spread


def _frozen_boundary(state):
    return BoundaryPrescription(
        ConstantVelocityMotion(state.positions[0].copy(), (0.0, 0.0, 0.0)),
        ConstantVelocityMotion(state.positions[-1].copy(), (0.0, 0.0, 0.0)))


def linearize(state, props, dt, current=None, delta=1e-6,
              scheme="explicit-rk4"):
    """Jacobian of the one-step map over interior node states.

    The state vector stacks interior positions then interior velocities
    (6 (N-2) entries); boundary nodes are frozen at their snapshot
    positions.  Columns are central differences with per-coordinate
    steps delta * (1 + |x_k|).
    """
    if delta <= 0.0:
        raise ConfigInvalid("delta must be positive")
    current = current if current is not None else CurrentField.zero()
    boundary = _frozen_boundary(state)
    cfg = IntegratorConfig(dt=dt, t_end=dt, scheme=scheme, record_stride=1,
                           backend="numpy")
    n_int = props.n_nodes - 2
    dim = 6 * n_int

    base_pos = state.positions.copy()
    base_vel = state.velocities.copy()
    base_vel[0] = 0.0
    base_vel[-1] = 0.0

    def advance(x):
        st = state.copy()
        st.positions = base_pos.copy()
        st.velocities = base_vel.copy()
        st.positions[1:-1] = x[:3 * n_int].reshape(n_int, 3)
        st.velocities[1:-1] = x[3 * n_int:].reshape(n_int, 3)
        st.time = 0.0
        out = step(st, props, current, boundary, cfg)
        return np.concatenate([out.positions[1:-1].reshape(-1),
                               out.velocities[1:-1].reshape(-1)])

    x0 = np.concatenate([base_pos[1:-1].reshape(-1),
                         base_vel[1:-1].reshape(-1)])
    steps = delta * (1.0 + np.abs(x0))
    A = np.empty((dim, dim))
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = steps[k]
        A[:, k] = (advance(x0 + e) - advance(x0 - e)) / (2.0 * steps[k])
    return A


def force_jacobian(state, props, current=None, delta=1e-6):
    """Interior force sensitivity to interior positions, central diffs."""
    from .cable import CableState, cable_forces

    current = current if current is not None else CurrentField.zero()
    n_int = props.n_nodes - 2
    pos = state.positions.copy()
    vel = state.velocities.copy()

    def forces_of(p_flat):
        p = pos.copy()
        p[1:-1] = p_flat.reshape(n_int, 3)
        st = CableState(p, vel, state.time)
        return cable_forces(props, st, current)[1:-1].reshape(-1)

    x0 = pos[1:-1].reshape(-1)
    steps = delta * (1.0 + np.abs(x0))
    J = np.empty((3 * n_int, 3 * n_int))
    for k in range(3 * n_int):
        e = np.zeros(3 * n_int)
        e[k] = steps[k]
        J[:, k] = (forces_of(x0 + e) - forces_of(x0 - e)) / (2.0 * steps[k])
    return J


@dataclass(frozen=True)
class SpectralReport:
    """Eigen-structure of a one-step state map.

    Modes are sorted by magnitude descending.  Influence maps hold, for
    each of the leading modes, the per-node per-axis magnitudes of the
    eigenvector position components, and of those components propagated
    through the force Jacobian (None when no snapshot was supplied).
    """

    eigenvalues: np.ndarray
    magnitudes: np.ndarray
    phases: np.ndarray
    stable: np.ndarray
    position_influence: np.ndarray
    force_influence: np.ndarray | None

    @property
    def n_stable(self):
        return int(self.stable.sum())

    def max_dominant_stable_phase(self, n_modes=6):
        """Largest phase angle among the leading stable modes.

        Stability filters first, then the n_modes largest-magnitude
        survivors count, so marginal drift modes never mask the result.
        """
        sel = np.nonzero(self.stable)[0][:n_modes]
        if sel.size == 0:
            raise NotReached("matrix has no stable mode")
        return float(self.phases[sel].max())


def spectral_report(A, state=None, props=None, current=None, n_modes=6,
                    delta=1e-6):
    """Full eigendecomposition with per-node influence of leading modes."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigInvalid("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ConfigInvalid("matrix must be finite")
    try:
        lam, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as err:
        raise EigenNoConvergence(str(err)) from err
    order = np.lexsort((-lam.real, -np.abs(lam)))
    lam = lam[order]
    vecs = vecs[:, order]
    mags = np.abs(lam)
    phases = np.abs(np.angle(lam))

    n_modes = min(n_modes, lam.size)
    dim = A.shape[0]
    pos_inf = None
    force_inf = None
    if dim % 6 == 0:
        n_int = dim // 6
        pos_parts = vecs[:3 * n_int, :n_modes]
        pos_inf = np.abs(pos_parts.T.reshape(n_modes, n_int, 3))
        if state is not None and props is not None:
            J = force_jacobian(state, props, current=current, delta=delta)
            fcols = J @ pos_parts
            force_inf = np.abs(fcols.T.reshape(n_modes, n_int, 3))
    if pos_inf is None:
        pos_inf = np.zeros((0, 0, 3))

    return SpectralReport(eigenvalues=lam, magnitudes=mags, phases=phases,
                          stable=mags < 1.0, position_influence=pos_inf,
                          force_influence=force_inf)


def snapshot_states(scenario, settle_fraction=0.5):
    """Extract full taut and slack snapshot states from one scenario.

    Runs the scenario once, then picks the record times where the
    prescribed endpoint chord is longest (deep taut) and shortest (deep
    slack), skipping the leading settle_fraction of the record so
    startup transients are excluded.  Each snapshot is recovered by
    rerunning up to its time, which makes node velocities available.
    Returns (taut_state, slack_state, taut_time, slack_time).
    """
    rec = run_scenario(scenario)
    if not (rec.taut.any() and (~rec.taut).any()):
        raise NotReached("scenario never produced both taut and slack states")
    times = rec.times
    lo = int(settle_fraction * (len(times) - 1))
    window = times[lo:]
    ends = scenario.boundary.sample(window)[0]
    chord = np.linalg.norm(ends[:, 1] - ends[:, 0], axis=1)
    t_taut = float(window[chord.argmax()])
    t_slack = float(window[chord.argmin()])

    def state_at(t):
        cfg = replace(scenario.integrator, t_end=t, stop_on_steady=False)
        return run_scenario(replace(scenario, integrator=cfg)).final_state

    return state_at(t_taut), state_at(t_slack), t_taut, t_slack
