"""Cable discretisation: nodal masses and force assembly.

The cable is a chain of N point masses joined by N-1 massless
elastic segments. Forces per node:

* elastic tension: one-sided linear law, a segment only pulls when
  stretched past its rest length;
* net buoyancy: (cable density - water density) times tributary
  volume, acting along gravity;
* hydrodynamic drag: quadratic in the relative flow, split into
  components normal and tangential to each adjacent segment with
  tributary (half-segment) lengths;
* optional bending resistance: second-difference stencil scaled by
  EI / l0^3, with one-sided stencils at the ends.

All quantities SI. Gravity default (0, 0, -9.81): z is up, so a
denser-than-water cable sinks.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigInvalid, SingularMassMatrix
from .geometry import EPS_LENGTH, segment_tangents

GRAVITY = (0.0, 0.0, -9.81)


@dataclass(frozen=True)
class CableProperties:
    """Physical and discretisation parameters of the cable.

    Attributes
    ----------
    length : float
        Unstretched cable length, m.
    n_nodes : int
        Number of lumped masses (>= 4, or >= 3 when bending_stiffness
        is zero; boundary stencils need four points).
    density : float
        Cable material density, kg/m^3.
    water_density : float
        Ambient fluid density, kg/m^3.
    section_area : float
        Load-bearing cross-section, m^2.
    drag_diameter : float
        Hydrodynamic reference diameter, m.
    youngs_modulus : float
        Axial stiffness modulus, Pa.
    normal_drag_coeff, tangential_drag_coeff : float
        Quadratic drag coefficients for cross-flow and axial flow.
    added_mass_coeff : float
        Added-mass coefficient (dimensionless).
    bending_stiffness : float
        Flexural rigidity EI, N m^2. Zero disables the stencil.
    gravity : tuple of 3 floats
        Gravitational acceleration vector, m/s^2.
    added_mass_density : str
        Which density scales added mass: "water" (physical default)
        or "cable".
    """

    length: float
    n_nodes: int
    density: float
    water_density: float
    section_area: float
    drag_diameter: float
    youngs_modulus: float
    normal_drag_coeff: float
    tangential_drag_coeff: float
    added_mass_coeff: float = 1.0
    bending_stiffness: float = 0.0
    gravity: tuple = GRAVITY
    added_mass_density: str = "water"

    def __post_init__(self):
        positive = {
            "length": self.length,
            "density": self.density,
            "water_density": self.water_density,
            "section_area": self.section_area,
            "drag_diameter": self.drag_diameter,
            "youngs_modulus": self.youngs_modulus,
        }
        for name, val in positive.items():
            if not (isinstance(val, (int, float)) and np.isfinite(val) and val > 0):
                raise ConfigInvalid(f"cable {name} must be finite and > 0, got {val!r}")
        nonneg = {
            "normal_drag_coeff": self.normal_drag_coeff,
            "tangential_drag_coeff": self.tangential_drag_coeff,
            "added_mass_coeff": self.added_mass_coeff,
            "bending_stiffness": self.bending_stiffness,
        }
        for name, val in nonneg.items():
            if not (np.isfinite(val) and val >= 0):
                raise ConfigInvalid(f"cable {name} must be finite and >= 0, got {val!r}")
        min_nodes = 3 if self.bending_stiffness == 0.0 else 4
        if not isinstance(self.n_nodes, int) or self.n_nodes < min_nodes:
            raise ConfigInvalid(
                f"n_nodes must be an int >= {min_nodes} "
                f"(bending stencil needs 4 points), got {self.n_nodes!r}"
            )
        if self.added_mass_density not in ("water", "cable"):
            raise ConfigInvalid(
                f"added_mass_density must be 'water' or 'cable', got {self.added_mass_density!r}"
            )
        g = np.asarray(self.gravity, dtype=float)
        if g.shape != (3,) or not np.all(np.isfinite(g)):
            raise ConfigInvalid(f"gravity must be a finite 3-vector, got {self.gravity!r}")
        object.__setattr__(self, "gravity", tuple(float(x) for x in g))

    @property
    def n_segments(self):
        return self.n_nodes - 1

    @property
    def rest_length(self):
        """Unstretched length of one segment, m."""
        return self.length / self.n_segments

    def with_resolution(self, n_nodes):
        """Same cable rediscretised with a different node count."""
        return replace(self, n_nodes=int(n_nodes))


@dataclass
class CableState:
    """Positions and velocities of every node at one instant."""

    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ConfigInvalid(f"positions must be (N, 3), got {self.positions.shape}")
        if self.velocities.shape != self.positions.shape:
            raise ConfigInvalid(
                f"velocities shape {self.velocities.shape} != positions shape {self.positions.shape}"
            )

    def copy(self):
        return CableState(self.positions.copy(), self.velocities.copy(), self.time)


class CurrentField:
    """Ambient water velocity as a function of position and time.

    Wraps either a constant vector (the fast integration path handles
    this case natively) or an arbitrary callable ``f(position, t)``.
    """

    def __init__(self, fn=None, uniform=None):
        if (fn is None) == (uniform is None):
            raise ConfigInvalid("CurrentField needs exactly one of fn / uniform")
        self._fn = fn
        self.uniform_velocity = None if uniform is None else np.asarray(uniform, dtype=float)
        if self.uniform_velocity is not None and self.uniform_velocity.shape != (3,):
            raise ConfigInvalid("uniform current must be a 3-vector")

    @classmethod
    def zero(cls):
        return cls(uniform=(0.0, 0.0, 0.0))

    @classmethod
    def uniform(cls, velocity):
        return cls(uniform=velocity)

    @property
    def is_uniform(self):
        return self.uniform_velocity is not None

    def velocity(self, position, t):
        if self.is_uniform:
            return self.uniform_velocity
        return np.asarray(self._fn(position, t), dtype=float)

    def at_nodes(self, positions, t):
        """(N, 3) current velocities at the given node positions."""
        if self.is_uniform:
            return np.broadcast_to(self.uniform_velocity, positions.shape)
        return np.array([self.velocity(p, t) for p in positions], dtype=float)


def tributary_lengths(lengths):
    """Per-node tributary length: half of each adjacent segment.

    End nodes own half of their single segment; the sum equals the
    total chain length.
    """
    lengths = np.asarray(lengths, dtype=float)
    out = np.zeros(lengths.size + 1)
    out[:-1] += 0.5 * lengths
    out[1:] += 0.5 * lengths
    return out


def node_masses(props, lengths):
    """Scalar structural-plus-added mass per node, kg.

    Structural mass is density * section * tributary length of the
    instantaneous (stretched) segments; added mass is the ambient
    displaced mass scaled by the added-mass coefficient. Both are
    isotropic, so a scalar per node represents the full 3x3 block.
    """
    trib = tributary_lengths(lengths)
    rho_am = props.water_density if props.added_mass_density == "water" else props.density
    m = props.density * props.section_area * trib
    m_added = rho_am * props.section_area * props.added_mass_coeff * trib
    return m + m_added


def node_mass_matrix(props, lengths):
    """Per-node 3x3 mass blocks (diagonal, isotropic).

    Raises
    ------
    SingularMassMatrix
        If any nodal mass is not strictly positive.
    """
    m = node_masses(props, lengths)
    if np.any(~np.isfinite(m)) or np.any(m <= 0.0):
        raise SingularMassMatrix(f"non-positive nodal mass: min {m.min():.3e} kg")
    return m[:, None, None] * np.eye(3)[None, :, :]


def segment_strain(lengths, rest_length):
    """One-sided engineering strain: max(l / l0 - 1, 0).

    A slack segment (shorter than rest length) carries no tension.
    """
    return np.maximum(np.asarray(lengths, dtype=float) / rest_length - 1.0, 0.0)


def elastic_forces(props, positions):
    """Nodal forces from one-sided segment tension, (N, 3).

    Each stretched segment pulls both of its end nodes toward each
    other with magnitude E * sigma * strain, so internal forces cancel
    pairwise (Newton's third law holds exactly).
    """
    tangents, lengths = segment_tangents(positions)
    strain = segment_strain(lengths, props.rest_length)
    t_mag = props.youngs_modulus * props.section_area * strain
    pull = t_mag[:, None] * tangents
    f = np.zeros_like(positions, dtype=float)
    f[:-1] += pull
    f[1:] -= pull
    return f


def net_buoyancy(props, lengths):
    """Weight-minus-buoyancy force per node, (N, 3).

    (density - water_density) * tributary volume * gravity vector;
    positive density difference plus downward gravity gives a sinking
    force, a buoyant cable (density < water) rises.
    """
    vol = props.section_area * tributary_lengths(lengths)
    g = np.asarray(props.gravity)
    return (props.density - props.water_density) * vol[:, None] * g[None, :]


def drag_force(props, v_rel, tangent, strain, length):
    """Drag on one segment span of given length, N.

    The relative flow is split along / across the segment tangent;
    each part gets a quadratic drag with its own coefficient. The
    tangential term carries the extra pi of the wetted-surface
    formulation; both scale with sqrt(1 + strain) to track the
    stretched wetted length.
    """
    v_rel = np.asarray(v_rel, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    v_t = (v_rel @ tangent) * tangent
    v_n = v_rel - v_t
    stretch = np.sqrt(1.0 + strain)
    common = 0.5 * props.water_density * stretch * length * props.drag_diameter
    d_n = -common * props.normal_drag_coeff * np.linalg.norm(v_n) * v_n
    d_t = -common * np.pi * props.tangential_drag_coeff * np.linalg.norm(v_t) * v_t
    return d_n + d_t


def drag_forces(props, positions, velocities, current_at_nodes):
    """Nodal drag forces with tributary segment lengths, (N, 3).

    Each node's relative velocity is decomposed against each adjacent
    segment separately and charged that segment's half length, which
    keeps the assembly mirror-symmetric for symmetric configurations.
    """
    tangents, lengths = segment_tangents(positions)
    strain = segment_strain(lengths, props.rest_length)
    v_rel = np.asarray(velocities, dtype=float) - np.asarray(current_at_nodes, dtype=float)

    stretch = np.sqrt(1.0 + strain)
    rho = props.water_density
    dprime = props.drag_diameter
    f = np.zeros_like(v_rel)
    # side = 0: segment s acts on node s; side = 1: on node s + 1
    for side in (0, 1):
        v = v_rel[side : side + len(lengths)]
        vt_mag = np.einsum("ij,ij->i", v, tangents)
        v_t = vt_mag[:, None] * tangents
        v_n = v - v_t
        common = 0.5 * rho * stretch * (0.5 * lengths) * dprime
        d_n = -(common * props.normal_drag_coeff * np.linalg.norm(v_n, axis=1))[:, None] * v_n
        d_t = -(common * np.pi * props.tangential_drag_coeff * np.abs(vt_mag))[:, None] * v_t
        f[side : side + len(lengths)] += d_n + d_t
    return f


def bending_forces(props, positions):
    """Second-difference bending resistance, (N, 3).

    Interior nodes get -(EI / l0^3) * (P[i+1] - 2 P[i] + P[i-1]);
    the ends use the one-sided four-point stencils
    -(EI / l0^3) * (2 P[0] - 5 P[1] + 4 P[2] - P[3]) and its mirror.
    Identically zero for EI = 0 or an equally spaced straight chain.
    """
    f = np.zeros_like(positions, dtype=float)
    if props.bending_stiffness == 0.0:
        return f
    p = np.asarray(positions, dtype=float)
    k = props.bending_stiffness / props.rest_length**3
    f[1:-1] = -k * (p[2:] - 2.0 * p[1:-1] + p[:-2])
    f[0] = -k * (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3])
    f[-1] = -k * (2.0 * p[-1] - 5.0 * p[-2] + 4.0 * p[-3] - p[-4])
    return f


def cable_forces(props, state, current):
    """Total nodal force array (N, 3): elastic + buoyancy + drag + bending."""
    _, lengths = segment_tangents(state.positions)
    cur = current.at_nodes(state.positions, state.time)
    return (
        elastic_forces(props, state.positions)
        + net_buoyancy(props, lengths)
        + drag_forces(props, state.positions, state.velocities, cur)
        + bending_forces(props, state.positions)
    )
