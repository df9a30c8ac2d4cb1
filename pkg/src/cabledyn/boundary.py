"""Prescribed motion of the two cable endpoints.

The cable's first and last node follow externally imposed vehicle
trajectories; every motion law here supplies consistent position,
velocity and acceleration so the integrator can evaluate boundary
kinematics exactly at stage times and the reaction extraction can use
the exact endpoint acceleration.

Smooth transitions use the C2 quintic step s(u) = 10u^3 - 15u^4 + 6u^5
(zero velocity and acceleration at both ends), either on a coordinate
directly or on a speed profile (integrated analytically).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, UnknownProfile


def smoothstep(u):
    """C2 quintic step on [0, 1], clamped outside."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def smoothstep_deriv(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    uu = np.where(inside, u, 0.0)
    return np.where(inside, 30.0 * uu**2 * (1.0 - uu) ** 2, 0.0)


def smoothstep_deriv2(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    uu = np.where(inside, u, 0.0)
    return np.where(inside, 60.0 * uu * (1.0 - uu) * (1.0 - 2.0 * uu), 0.0)


def smoothstep_integral(u):
    """Integral of smoothstep from 0 to u (integral over [0,1] is 1/2)."""
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, 0.0, 1.0)
    base = uc**4 * (2.5 - 3.0 * uc + uc**2)
    return base + np.maximum(u - 1.0, 0.0)


class EndpointMotion:
    """Interface: position/velocity/acceleration of one endpoint.

    Implementations are vectorized over time: scalar t gives (3,),
    an array of shape (T,) gives (T, 3).
    """

    def position(self, t):
        raise NotImplementedError

    def velocity(self, t):
        raise NotImplementedError

    def acceleration(self, t):
        raise NotImplementedError


def _broadcast(t, vec):
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return np.asarray(vec, dtype=float)
    return np.broadcast_to(np.asarray(vec, dtype=float), t.shape + (3,)).copy()


class ConstantVelocityMotion(EndpointMotion):
    def __init__(self, start, velocity):
        self.start = np.asarray(start, dtype=float)
        self.vel = np.asarray(velocity, dtype=float)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return self.start + np.multiply.outer(t, self.vel)

    def velocity(self, t):
        return _broadcast(t, self.vel)

    def acceleration(self, t):
        return _broadcast(t, np.zeros(3))


class RampHoldMotion(EndpointMotion):
    """Speed ramps from zero to ``speed`` along ``direction`` with a
    quintic profile over [t_start, t_end], then holds."""

    def __init__(self, start, direction, speed, t_start, t_end):
        if t_end <= t_start:
            raise ConfigInvalid("ramp interval must have t_end > t_start")
        self.start = np.asarray(start, dtype=float)
        d = np.asarray(direction, dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise ConfigInvalid("ramp direction must be non-zero")
        self.direction = d / n
        self.speed = float(speed)
        self.t0 = float(t_start)
        self.duration = float(t_end - t_start)

    def _u(self, t):
        return (np.asarray(t, dtype=float) - self.t0) / self.duration

    def position(self, t):
        dist = self.speed * self.duration * smoothstep_integral(self._u(t))
        return self.start + np.multiply.outer(dist, self.direction)

    def velocity(self, t):
        return np.multiply.outer(self.speed * smoothstep(self._u(t)), self.direction)

    def acceleration(self, t):
        a = self.speed * smoothstep_deriv(self._u(t)) / self.duration
        return np.multiply.outer(a, self.direction)


class SinusoidalSurgeMotion(EndpointMotion):
    """Speed v_mean + amplitude * sin(omega t + phase) along a fixed axis."""

    def __init__(self, start, direction, v_mean, amplitude, omega, phase=0.0):
        self.start = np.asarray(start, dtype=float)
        d = np.asarray(direction, dtype=float)
        self.direction = d / np.linalg.norm(d)
        self.v_mean = float(v_mean)
        self.amp = float(amplitude)
        self.omega = float(omega)
        self.phase = float(phase)
        if self.omega == 0:
            raise ConfigInvalid("sinusoidal profile needs omega != 0")

    def position(self, t):
        t = np.asarray(t, dtype=float)
        dist = self.v_mean * t - self.amp / self.omega * (
            np.cos(self.omega * t + self.phase) - np.cos(self.phase)
        )
        return self.start + np.multiply.outer(dist, self.direction)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        v = self.v_mean + self.amp * np.sin(self.omega * t + self.phase)
        return np.multiply.outer(v, self.direction)

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        a = self.amp * self.omega * np.cos(self.omega * t + self.phase)
        return np.multiply.outer(a, self.direction)


class TransitionMotion(EndpointMotion):
    """A base motion plus smooth per-axis position offsets.

    ``moves`` is a list of (axis, t_start, t_end, delta): the given
    coordinate shifts by delta over the interval with the quintic
    profile. Axes may repeat; offsets add.
    """

    def __init__(self, base, moves):
        self.base = base
        checked = []
        for axis, t0, t1, delta in moves:
            if axis not in (0, 1, 2):
                raise ConfigInvalid(f"move axis must be 0, 1 or 2, got {axis!r}")
            if t1 <= t0:
                raise ConfigInvalid("move interval must have t_end > t_start")
            checked.append((int(axis), float(t0), float(t1), float(delta)))
        self.moves = checked

    def position(self, t):
        p = self.base.position(t)
        t = np.asarray(t, dtype=float)
        for axis, t0, t1, delta in self.moves:
            p[..., axis] += delta * smoothstep((t - t0) / (t1 - t0))
        return p

    def velocity(self, t):
        v = self.base.velocity(t)
        t = np.asarray(t, dtype=float)
        for axis, t0, t1, delta in self.moves:
            v[..., axis] += delta * smoothstep_deriv((t - t0) / (t1 - t0)) / (t1 - t0)
        return v

    def acceleration(self, t):
        a = self.base.acceleration(t)
        t = np.asarray(t, dtype=float)
        for axis, t0, t1, delta in self.moves:
            a[..., axis] += delta * smoothstep_deriv2((t - t0) / (t1 - t0)) / (t1 - t0) ** 2
        return a


class SplineMotion(EndpointMotion):
    """Cubic-spline interpolation of sampled waypoints.

    Velocity and acceleration come from the spline derivatives;
    evaluation outside the sampled window holds the end values with
    zero velocity.
    """

    def __init__(self, times, points):
        from scipy.interpolate import CubicSpline

        times = np.asarray(times, dtype=float)
        points = np.asarray(points, dtype=float)
        if times.ndim != 1 or times.size < 4:
            raise ConfigInvalid("spline motion needs at least 4 samples")
        if np.any(np.diff(times) <= 0):
            raise ConfigInvalid("spline sample times must be strictly increasing")
        if points.shape != (times.size, 3):
            raise ConfigInvalid(f"spline points must be (T, 3), got {points.shape}")
        self.t_min = float(times[0])
        self.t_max = float(times[-1])
        self._spline = CubicSpline(times, points, axis=0, bc_type="clamped")

    def position(self, t):
        tc = np.clip(np.asarray(t, dtype=float), self.t_min, self.t_max)
        return self._spline(tc)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.t_min, self.t_max)
        v = self._spline(tc, 1)
        inside = ((t >= self.t_min) & (t <= self.t_max)).astype(float)
        return v * inside[..., None] if t.ndim else v * inside

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.t_min, self.t_max)
        a = self._spline(tc, 2)
        inside = ((t >= self.t_min) & (t <= self.t_max)).astype(float)
        return a * inside[..., None] if t.ndim else a * inside


class BoundaryPrescription:
    """Paired motions of the cable's first and last node."""

    def __init__(self, first, last):
        self.motions = (first, last)

    def position(self, t, end):
        return self.motions[end].position(t)

    def velocity(self, t, end):
        return self.motions[end].velocity(t)

    def acceleration(self, t, end):
        return self.motions[end].acceleration(t)

    def sample(self, times):
        """Evaluate both endpoints on a time grid.

        Returns (pos, vel, acc), each shaped (T, 2, 3).
        """
        times = np.asarray(times, dtype=float)
        pos = np.stack([m.position(times) for m in self.motions], axis=1)
        vel = np.stack([m.velocity(times) for m in self.motions], axis=1)
        acc = np.stack([m.acceleration(times) for m in self.motions], axis=1)
        return pos, vel, acc

    def validate(self, t_end, n_check=64, tol_scale=1e-6):
        """Finite-difference consistency of velocity vs position.

        Raises ConfigInvalid when the analytic velocity disagrees with
        the centered difference of positions beyond
        tol_scale * (1 + |v|) anywhere on a coarse probe grid.
        """
        h = 1e-4
        times = np.linspace(h, max(t_end - h, 2 * h), n_check)
        for end in (0, 1):
            v = self.motions[end].velocity(times)
            fd = (self.motions[end].position(times + h) - self.motions[end].position(times - h)) / (2 * h)
            err = np.abs(fd - v)
            # quintic profiles have bounded third derivatives, so the
            # centered difference converges at O(h^2); the tolerance
            # leaves two orders of headroom
            tol = tol_scale * (1.0 + np.abs(v)) + 1e2 * h**2 * (1.0 + np.abs(v))
            if np.any(err > tol):
                worst = float(err.max())
                raise ConfigInvalid(
                    f"endpoint {end} velocity inconsistent with position derivative "
                    f"(max error {worst:.3e})"
                )


_PROFILE_BUILDERS = {}


def _register(name):
    def deco(fn):
        _PROFILE_BUILDERS[name] = fn
        return fn
    return deco


@_register("constant_velocity")
def _build_constant(params):
    return ConstantVelocityMotion(params["start"], params["velocity"])


@_register("ramp_hold")
def _build_ramp(params):
    return RampHoldMotion(
        params["start"], params["direction"], params["speed"],
        params["t_start"], params["t_end"],
    )


@_register("sinusoidal")
def _build_sine(params):
    return SinusoidalSurgeMotion(
        params["start"], params["direction"], params["v_mean"],
        params["amplitude"], params["omega"], params.get("phase", 0.0),
    )


@_register("ramp_hold_transition")
def _build_transition(params):
    base = RampHoldMotion(
        params["start"], params["direction"], params["speed"],
        params["t_start"], params["t_end"],
    )
    moves = [(m["axis"], m["t_start"], m["t_end"], m["delta"]) for m in params["moves"]]
    return TransitionMotion(base, moves)


@_register("spline")
def _build_spline(params):
    return SplineMotion(params["times"], params["points"])


def prescribe(profile, params):
    """Build one endpoint motion from a profile name and parameter dict.

    Raises UnknownProfile for unregistered names; the message lists
    what is available.
    """
    try:
        builder = _PROFILE_BUILDERS[profile]
    except KeyError:
        known = ", ".join(sorted(_PROFILE_BUILDERS))
        raise UnknownProfile(f"profile {profile!r} not registered (known: {known})") from None
    try:
        return builder(params)
    except KeyError as exc:
        raise ConfigInvalid(f"profile {profile!r} missing parameter {exc}") from None


def profile_names():
    return sorted(_PROFILE_BUILDERS)
