"""Compiled inner loops for the cable integrator.

The force assembly and time stepping are written against plain
float64 arrays so numba can compile them once and reuse the cache.
Only uniform currents and pre-sampled boundary kinematics reach this
path; anything more exotic falls back to the numpy reference
implementation in the engine, which shares the exact formulas.

Parameter vector layout (index constants below): segment rest length,
axial stiffness E*sigma, bending factor EI/l0^3, structural and added
lineal densities, net buoyant lineal density, gravity vector, drag
prefactors, uniform current vector, taut threshold, cable length.
"""

import math

import numpy as np
from numba import njit

P_L0 = 0
P_EA = 1
P_KBEND = 2
P_LINM = 3
P_LINAM = 4
P_LINB = 5
P_GX, P_GY, P_GZ = 6, 7, 8
P_CDN = 9
P_CDT = 10
P_CURX, P_CURY, P_CURZ = 11, 12, 13
P_THETA = 14
P_LENGTH = 15
N_PARAMS = 16

RK4 = 0
SEMI_IMPLICIT = 1

_EPS_L = 1e-9


def pack_params(props, current_vec, theta_taut):
    """Build the kernel parameter vector from CableProperties."""
    rho_am = props.water_density if props.added_mass_density == "water" else props.density
    prm = np.zeros(N_PARAMS)
    prm[P_L0] = props.rest_length
    prm[P_EA] = props.youngs_modulus * props.section_area
    prm[P_KBEND] = props.bending_stiffness / props.rest_length**3
    prm[P_LINM] = props.density * props.section_area
    prm[P_LINAM] = rho_am * props.section_area * props.added_mass_coeff
    prm[P_LINB] = (props.density - props.water_density) * props.section_area
    prm[P_GX], prm[P_GY], prm[P_GZ] = props.gravity
    prm[P_CDN] = 0.5 * props.water_density * props.drag_diameter * props.normal_drag_coeff
    prm[P_CDT] = 0.5 * props.water_density * props.drag_diameter * np.pi * props.tangential_drag_coeff
    prm[P_CURX], prm[P_CURY], prm[P_CURZ] = np.asarray(current_vec, dtype=float)
    prm[P_THETA] = theta_taut
    prm[P_LENGTH] = props.length
    return prm


@njit(cache=True, nogil=True)
def node_forces(pos, vel, prm, f, masses):
    """Total nodal forces and scalar masses for one cable state.

    Fills ``f`` (N, 3) and ``masses`` (N,) in place. Collapsed
    segments (below the length epsilon) contribute no tension or
    drag that step; the caller's divergence check handles anything
    worse.
    """
    n = pos.shape[0]
    l0 = prm[P_L0]
    ea = prm[P_EA]
    kbend = prm[P_KBEND]
    lin_total = prm[P_LINM] + prm[P_LINAM]
    lin_b = prm[P_LINB]
    gx, gy, gz = prm[P_GX], prm[P_GY], prm[P_GZ]
    cdn = prm[P_CDN]
    cdt = prm[P_CDT]
    cx, cy, cz = prm[P_CURX], prm[P_CURY], prm[P_CURZ]

    for i in range(n):
        f[i, 0] = 0.0
        f[i, 1] = 0.0
        f[i, 2] = 0.0
        masses[i] = 0.0

    for s in range(n - 1):
        dx = pos[s + 1, 0] - pos[s, 0]
        dy = pos[s + 1, 1] - pos[s, 1]
        dz = pos[s + 1, 2] - pos[s, 2]
        l = math.sqrt(dx * dx + dy * dy + dz * dz)
        linv = 1.0 / l if l > _EPS_L else 0.0
        ux = dx * linv
        uy = dy * linv
        uz = dz * linv

        eps = l / l0 - 1.0
        if eps < 0.0:
            eps = 0.0

        # one-sided tension pulls both end nodes together
        t_mag = ea * eps
        f[s, 0] += t_mag * ux
        f[s, 1] += t_mag * uy
        f[s, 2] += t_mag * uz
        f[s + 1, 0] -= t_mag * ux
        f[s + 1, 1] -= t_mag * uy
        f[s + 1, 2] -= t_mag * uz

        half = 0.5 * l
        masses[s] += lin_total * half
        masses[s + 1] += lin_total * half

        wb = lin_b * half
        f[s, 0] += wb * gx
        f[s, 1] += wb * gy
        f[s, 2] += wb * gz
        f[s + 1, 0] += wb * gx
        f[s + 1, 1] += wb * gy
        f[s + 1, 2] += wb * gz

        # quadratic drag, tributary half-length per adjacent node
        span = math.sqrt(1.0 + eps) * half
        for node in range(s, s + 2):
            vrx = vel[node, 0] - cx
            vry = vel[node, 1] - cy
            vrz = vel[node, 2] - cz
            vt = vrx * ux + vry * uy + vrz * uz
            vtx = vt * ux
            vty = vt * uy
            vtz = vt * uz
            vnx = vrx - vtx
            vny = vry - vty
            vnz = vrz - vtz
            vn_mag = math.sqrt(vnx * vnx + vny * vny + vnz * vnz)
            cn_k = cdn * span * vn_mag
            ct_k = cdt * span * abs(vt)
            f[node, 0] -= cn_k * vnx + ct_k * vtx
            f[node, 1] -= cn_k * vny + ct_k * vty
            f[node, 2] -= cn_k * vnz + ct_k * vtz

    if kbend != 0.0:
        for i in range(1, n - 1):
            for c in range(3):
                f[i, c] -= kbend * (pos[i + 1, c] - 2.0 * pos[i, c] + pos[i - 1, c])
        for c in range(3):
            f[0, c] -= kbend * (2.0 * pos[0, c] - 5.0 * pos[1, c] + 4.0 * pos[2, c] - pos[3, c])
            f[n - 1, c] -= kbend * (
                2.0 * pos[n - 1, c] - 5.0 * pos[n - 2, c] + 4.0 * pos[n - 3, c] - pos[n - 4, c]
            )


@njit(cache=True, nogil=True)
def endpoint_reactions(pos, vel, prm, bacc, f, masses, out):
    """Reaction forces the two vehicles must apply, (2, 3).

    Boundary-node balance: reaction = m_node * prescribed_acc minus
    the assembled cable-side force on that node.
    """
    node_forces(pos, vel, prm, f, masses)
    n = pos.shape[0]
    for c in range(3):
        out[0, c] = masses[0] * bacc[0, c] - f[0, c]
        out[1, c] = masses[n - 1] * bacc[1, c] - f[n - 1, c]


@njit(cache=True, nogil=True)
def chord_is_taut(pos, prm):
    n = pos.shape[0]
    dx = pos[n - 1, 0] - pos[0, 0]
    dy = pos[n - 1, 1] - pos[0, 1]
    dz = pos[n - 1, 2] - pos[0, 2]
    chord = math.sqrt(dx * dx + dy * dy + dz * dz)
    return 1 if chord / prm[P_LENGTH] >= prm[P_THETA] else 0


@njit(cache=True, nogil=True)
def _all_finite(pos, vel):
    n = pos.shape[0]
    for i in range(n):
        for c in range(3):
            if not (math.isfinite(pos[i, c]) and math.isfinite(vel[i, c])):
                return False
    return True


@njit(cache=True, nogil=True)
def run_chunk(scheme, pos, vel, prm, dt, n_steps, g_offset,
              bp_a, bv_a, ba_a, bp_h, bv_h,
              stride, rec_f, rec_taut, rec_pos, record_positions):
    """Advance ``n_steps`` steps in place, recording as configured.

    Boundary kinematics arrive pre-sampled: ``bp_a``/``bv_a``/``ba_a``
    on the chunk's integer grid (n_steps + 1 entries), ``bp_h``/``bv_h``
    on the half grid (n_steps entries). Record row r corresponds to
    global step r * stride; ``g_offset`` is the global index of this
    chunk's first step. Returns -1 on success, otherwise the global
    step index at which the state became non-finite.
    """
    n = pos.shape[0]
    a1 = np.empty((n, 3))
    a2 = np.empty((n, 3))
    a3 = np.empty((n, 3))
    a4 = np.empty((n, 3))
    x2 = np.empty((n, 3))
    x3 = np.empty((n, 3))
    x4 = np.empty((n, 3))
    v2 = np.empty((n, 3))
    v3 = np.empty((n, 3))
    v4 = np.empty((n, 3))
    fbuf = np.empty((n, 3))
    mbuf = np.empty(n)
    rbuf = np.empty((2, 3))

    for k in range(n_steps):
        if scheme == RK4:
            node_forces(pos, vel, prm, fbuf, mbuf)
            for i in range(1, n - 1):
                inv_m = 1.0 / mbuf[i]
                for c in range(3):
                    a1[i, c] = fbuf[i, c] * inv_m

            half_dt = 0.5 * dt
            for i in range(1, n - 1):
                for c in range(3):
                    x2[i, c] = pos[i, c] + half_dt * vel[i, c]
                    v2[i, c] = vel[i, c] + half_dt * a1[i, c]
            for c in range(3):
                x2[0, c] = bp_h[k, 0, c]
                v2[0, c] = bv_h[k, 0, c]
                x2[n - 1, c] = bp_h[k, 1, c]
                v2[n - 1, c] = bv_h[k, 1, c]
            node_forces(x2, v2, prm, fbuf, mbuf)
            for i in range(1, n - 1):
                inv_m = 1.0 / mbuf[i]
                for c in range(3):
                    a2[i, c] = fbuf[i, c] * inv_m

            for i in range(1, n - 1):
                for c in range(3):
                    x3[i, c] = pos[i, c] + half_dt * v2[i, c]
                    v3[i, c] = vel[i, c] + half_dt * a2[i, c]
            for c in range(3):
                x3[0, c] = bp_h[k, 0, c]
                v3[0, c] = bv_h[k, 0, c]
                x3[n - 1, c] = bp_h[k, 1, c]
                v3[n - 1, c] = bv_h[k, 1, c]
            node_forces(x3, v3, prm, fbuf, mbuf)
            for i in range(1, n - 1):
                inv_m = 1.0 / mbuf[i]
                for c in range(3):
                    a3[i, c] = fbuf[i, c] * inv_m

            for i in range(1, n - 1):
                for c in range(3):
                    x4[i, c] = pos[i, c] + dt * v3[i, c]
                    v4[i, c] = vel[i, c] + dt * a3[i, c]
            for c in range(3):
                x4[0, c] = bp_a[k + 1, 0, c]
                v4[0, c] = bv_a[k + 1, 0, c]
                x4[n - 1, c] = bp_a[k + 1, 1, c]
                v4[n - 1, c] = bv_a[k + 1, 1, c]
            node_forces(x4, v4, prm, fbuf, mbuf)
            for i in range(1, n - 1):
                inv_m = 1.0 / mbuf[i]
                for c in range(3):
                    a4[i, c] = fbuf[i, c] * inv_m

            sixth = dt / 6.0
            for i in range(1, n - 1):
                for c in range(3):
                    pos[i, c] += sixth * (vel[i, c] + 2.0 * (v2[i, c] + v3[i, c]) + v4[i, c])
                    vel[i, c] += sixth * (a1[i, c] + 2.0 * (a2[i, c] + a3[i, c]) + a4[i, c])
        else:
            # semi-implicit Euler: velocity first, position with the
            # updated velocity
            node_forces(pos, vel, prm, fbuf, mbuf)
            for i in range(1, n - 1):
                inv_m = 1.0 / mbuf[i]
                for c in range(3):
                    vel[i, c] += dt * fbuf[i, c] * inv_m
                    pos[i, c] += dt * vel[i, c]

        # boundary rows follow the prescription exactly
        for c in range(3):
            pos[0, c] = bp_a[k + 1, 0, c]
            vel[0, c] = bv_a[k + 1, 0, c]
            pos[n - 1, c] = bp_a[k + 1, 1, c]
            vel[n - 1, c] = bv_a[k + 1, 1, c]

        g = g_offset + k + 1
        if not _all_finite(pos, vel):
            return g

        if g % stride == 0:
            r = g // stride
            endpoint_reactions(pos, vel, prm, ba_a[k + 1], fbuf, mbuf, rbuf)
            for e in range(2):
                for c in range(3):
                    rec_f[r, e, c] = rbuf[e, c]
            rec_taut[r] = chord_is_taut(pos, prm)
            if record_positions:
                for i in range(n):
                    for c in range(3):
                        rec_pos[r, i, c] = pos[i, c]
    return -1


def warmup():
    """Trigger JIT compilation on a toy problem (cached afterwards)."""
    n = 4
    pos = np.zeros((n, 3))
    pos[:, 0] = np.linspace(0.0, 1.0, n)
    vel = np.zeros((n, 3))
    prm = np.zeros(N_PARAMS)
    prm[P_L0] = 1.0 / 3.0
    prm[P_EA] = 10.0
    prm[P_LINM] = 1.0
    prm[P_LINAM] = 0.5
    prm[P_THETA] = 0.98
    prm[P_LENGTH] = 1.0
    steps = 2
    grid = np.zeros((steps + 1, 2, 3))
    grid[:, 1, 0] = 1.0
    half = np.zeros((steps, 2, 3))
    half[:, 1, 0] = 1.0
    zero = np.zeros((steps + 1, 2, 3))
    rec_f = np.zeros((1, 2, 3))
    rec_taut = np.zeros(1, dtype=np.uint8)
    rec_pos = np.zeros((0, n, 3))
    for scheme in (RK4, SEMI_IMPLICIT):
        run_chunk(scheme, pos.copy(), vel.copy(), prm, 1e-4, steps, 0,
                  grid, np.zeros_like(grid), zero, half, np.zeros_like(half),
                  1000, rec_f, rec_taut, rec_pos, False)
