"""Periodic-orbit constructions and stability probes.

Wedge formulas are stated in a *wedge frame*: the lab frame turned so the
bisector points into the opening, with ``q0`` on the wall at negative ``y``
and the rotational coordinate measured with the opposite sense to the lab's.
Under the lab tangent convention (``cross(tangent, normal) = +1``) the
wedge-frame spin ``x0'`` corresponds to a lab spin of ``-x0'``; the helper
:func:`path_reversing_spin` gives the lab value directly and the two agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import (
    NO_FORCE,
    ForceField,
    MassDistribution,
    ParticleState,
    SimulationError,
    run_orbit,
    run_raw,
)
from .geometry import (
    Point,
    Table,
    WedgeSpec,
    local_frame,
    make_half_plane,
    make_two_disk_table,
    make_wedge,
    two_disk_contact_points,
)


# ------------------------------------------------------------ matrices


def bounce_velocity_matrix(mass: MassDistribution) -> np.ndarray:
    """Velocity map between consecutive bounces on a flat floor."""
    c, s = mass.cos_sin
    return np.array([[-c, s, 0.0], [s, c, 0.0], [0.0, 0.0, -1.0]])


def path_reversing_spin(velocity: Point, tangent: Point, gamma: float) -> float:
    """Lab spin making ``(spin, v . tangent)`` an eigenvector of T with eigenvalue -1.

    With that spin a collision simply reverses the full velocity.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    return (velocity[0] * tangent[0] + velocity[1] * tangent[1]) / gamma


# ------------------------------------------------------------ half plane


def _half_plane_state(mass: MassDistribution, speed: float, z0: float, sign: float,
                      elevation: float) -> ParticleState:
    planar = speed * math.cos(elevation)
    xdot = planar / math.sqrt(1.0 + mass.gamma ** 2)
    ydot = sign * mass.gamma * xdot
    return ParticleState(0.0, (0.0, z0), (xdot, ydot, speed * math.sin(elevation)))


def _closes(state: ParticleState, mass: MassDistribution, g: float, tol: float = 1e-9) -> bool:
    orbit = run_orbit(state, make_half_plane(), ForceField(g), mass, n_collisions=4)
    p = orbit.points
    if len(p) < 4:
        return False
    scale = max(1.0, float(np.max(np.abs(p))))
    return bool(np.all(np.abs(p[2:4] - p[0:2]) <= tol * scale))


@lru_cache(maxsize=None)
def half_plane_ratio_sign(gamma: float) -> float:
    """Sign s such that y'/x' = s * gamma closes the bouncing orbit.

    Decided by simulating both signs; exactly one must close.
    """
    mass = MassDistribution(gamma)
    closing = [s for s in (1.0, -1.0)
               if _closes(_half_plane_state(mass, 1.0, 0.5, s, math.pi / 4.0), mass, 1.0)]
    if len(closing) != 1:
        raise SimulationError(f"expected exactly one closing sign, got {closing}")
    return closing[0]


def construct_half_plane_bounce(mass: MassDistribution, speed: float = 1.0, z0: float = 0.0,
                                elevation: float = math.pi / 4.0) -> ParticleState:
    """Start state whose bounces on the floor close up every two collisions."""
    if mass.gamma <= 0.0:
        raise ValueError("gamma = 0 gives no rotational coupling; the closure condition is degenerate")
    if not speed > 0.0 or z0 < 0.0:
        raise ValueError("need speed > 0 and z0 >= 0")
    if not 0.0 < elevation < math.pi / 2.0:
        raise ValueError("elevation must lie in (0, pi/2)")
    return _half_plane_state(mass, speed, z0, half_plane_ratio_sign(mass.gamma), elevation)


def period_displacements(points: np.ndarray, period: int = 2) -> np.ndarray:
    """Displacement between collision i and i + period for all i."""
    points = np.asarray(points)
    return points[period:] - points[:-period]


# ------------------------------------------------------------ wedge


@dataclass(frozen=True)
class WedgePeriodicSpec:
    half_angle: float
    launch_angle: float
    distance: float = 1.0
    g: float = 1.0
    gamma: float = 1.0 / math.sqrt(2.0)
    orientation: str = "opening-up"

    def __post_init__(self):
        if not 0.0 < self.half_angle < math.pi / 2.0:
            raise ValueError("wedge half-angle must lie in (0, pi/2)")
        if not 0.0 < self.launch_angle < math.pi / 2.0:
            raise ValueError(f"launch angle {self.launch_angle} must lie in (0, pi/2): "
                             "sin(2 theta) vanishes at the ends and the launch speed diverges")
        if not (self.distance > 0.0 and self.g > 0.0 and self.gamma > 0.0):
            raise ValueError("distance, g and gamma must be positive")
        if self.orientation not in ("opening-up", "opening-down"):
            raise ValueError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class WedgePeriodicOrbit:
    state: ParticleState
    table: Table = field(repr=False)
    force: ForceField
    mass: MassDistribution
    q0: Point
    q1: Point
    speed: float
    spin: float  # wedge-frame spin
    flight_time: float


def wedge_speed(g: float, d: float, theta: float) -> float:
    """Launch speed carrying the particle across a chord of length d at angle theta.

    Projectile range ``v^2 sin(2 theta) / g = d``.
    """
    if not (g > 0.0 and d > 0.0):
        raise ValueError("g and d must be positive")
    s2 = math.sin(2.0 * theta)
    if not 0.0 < theta < math.pi / 2.0 or s2 <= 0.0:
        raise ValueError(f"launch angle {theta} makes sin(2 theta) vanish; no finite speed")
    return math.sqrt(g * d / s2)


def wedge_spin(v: float, theta: float, phi: float, gamma: float) -> float:
    """Wedge-frame spin for a path-reversing 2-periodic orbit."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    return v * (math.sin(theta) * math.cos(phi) - math.cos(theta) * math.sin(phi)) / gamma


def _wedge_to_lab(orientation: str):
    sgn = 1.0 if orientation == "opening-up" else -1.0
    return lambda p: (sgn * p[0], sgn * p[1])


def wedge_contact_points(half_angle: float, distance: float,
                         orientation: str = "opening-up") -> tuple[Point, Point]:
    h = 0.5 * distance / math.tan(half_angle)
    lab = _wedge_to_lab(orientation)
    return lab((-0.5 * distance, h)), lab((0.5 * distance, h))


def construct_wedge_periodic(spec: WedgePeriodicSpec,
                             force_direction: Point | None = None) -> WedgePeriodicOrbit:
    """Initial state at q0 of the path-reversing 2-periodic wedge orbit.

    The force must point from the opening toward the vertex: down for an
    upward-opening wedge, up for a downward-opening one.
    """
    expected = (0.0, -1.0) if spec.orientation == "opening-up" else (0.0, 1.0)
    if force_direction is not None and (abs(force_direction[0] - expected[0]) > 1e-12
                                        or abs(force_direction[1] - expected[1]) > 1e-12):
        raise ValueError(
            f"a {spec.orientation} wedge needs the force along {expected}, got {force_direction}")
    v = wedge_speed(spec.g, spec.distance, spec.launch_angle)
    spin_w = wedge_spin(v, spec.launch_angle, spec.half_angle, spec.gamma)
    lab = _wedge_to_lab(spec.orientation)
    q0, q1 = wedge_contact_points(spec.half_angle, spec.distance, spec.orientation)
    vy, vz = lab((v * math.cos(spec.launch_angle), v * math.sin(spec.launch_angle)))
    state = ParticleState(0.0, q0, (-spin_w, vy, vz))
    table = make_wedge(WedgeSpec(spec.half_angle, spec.orientation))
    return WedgePeriodicOrbit(state, table, ForceField(spec.g, expected),
                              MassDistribution(spec.gamma), q0, q1, v, spin_w,
                              2.0 * v * math.sin(spec.launch_angle) / spec.g)


def no_force_wedge_condition(ydot: float, xdot: float, phi: float) -> float:
    """Mass constant for which a horizontal wedge-frame orbit has period two."""
    if xdot == 0.0:
        raise ValueError("rotational velocity must be nonzero")
    return -(ydot / xdot) * math.sin(phi)


def construct_wedge_periodic_no_force(half_angle: float, distance: float, speed: float,
                                      gamma: float,
                                      orientation: str = "opening-up") -> WedgePeriodicOrbit:
    """Horizontal orbit between opposite wall points with no force."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    spin_w = -speed * math.sin(half_angle) / gamma
    lab = _wedge_to_lab(orientation)
    q0, q1 = wedge_contact_points(half_angle, distance, orientation)
    vy, vz = lab((speed, 0.0))
    return WedgePeriodicOrbit(ParticleState(0.0, q0, (-spin_w, vy, vz)),
                              make_wedge(WedgeSpec(half_angle, orientation)), NO_FORCE,
                              MassDistribution(gamma), q0, q1, speed, spin_w, distance / speed)


def closure_error(orbit: WedgePeriodicOrbit, n_collisions: int = 2) -> float:
    """Largest relative distance of even collisions from q0 and odd ones from q1."""
    res = run_orbit(orbit.state, orbit.table, orbit.force, orbit.mass, n_collisions)
    if len(res.events) < n_collisions:
        return math.inf
    pts = res.points
    q = np.array([orbit.q1, orbit.q0])
    err = np.max(np.linalg.norm(pts - q[np.arange(len(pts)) % 2], axis=1))
    return float(err / np.linalg.norm(np.subtract(orbit.q1, orbit.q0)))


# ------------------------------------------------------------ linear stability


def ellipticity_threshold(beta: float, phi: float) -> float:
    c2 = math.cos(beta / 2.0) ** 2
    cphi = math.cos(phi)
    if cphi <= 1e-12:
        raise ValueError("cos(phi) = 0: the threshold diverges and every orbit is elliptic")
    return (2.0 - 2.0 * c2 * cphi * cphi) / (c2 * cphi)


def is_linearly_stable_no_force(kappa: float, d: float, beta: float, phi: float) -> bool:
    """Elliptic test for the 2-periodic orbit between two circular arcs."""
    if not (kappa > 0.0 and d > 0.0):
        raise ValueError("kappa and d must be positive")
    return kappa * d < ellipticity_threshold(beta, phi)


# ------------------------------------------------------------ survival


@dataclass(frozen=True)
class EscapeCriterion:
    """When a perturbed orbit counts as having left the scatterers."""

    max_flight: float = math.inf
    components: tuple[int, ...] | None = None


def survival_count(state: ParticleState, table: Table, force: ForceField,
                   mass: MassDistribution, max_collisions: int = 1000,
                   escape: EscapeCriterion = EscapeCriterion()) -> tuple[int, str]:
    """Collisions on the target components before escape, capped at max_collisions.

    Status is ``capped``, ``escaped``, ``pinched`` or ``numerical``.
    """
    status, n, rec, _, _ = run_raw(state, table, force, mass, max_collisions,
                                   max_flight=escape.max_flight)
    if escape.components is not None:
        ids = rec[:, 4].astype(int)
        off = np.flatnonzero(~np.isin(ids, escape.components))
        if off.size:
            return int(off[0]), "escaped"
    if status == "count":
        return n, "capped"
    if status in ("escaped", "exited", "time"):
        return n, "escaped"
    return n, status


@dataclass(frozen=True)
class StabilityGridSpec:
    radius_range: tuple[float, float] = (0.05, 0.95)
    n_radius: int = 20
    angle_range: tuple[float, float] = (0.05, math.pi / 2.0 - 0.05)
    n_angle: int = 20
    perturbation: float = 1e-3
    max_collisions: int = 1000
    gamma: float = 1.0 / math.sqrt(2.0)
    g: float = 1.0
    launch_angle: float = 0.1
    contact_angle: float = 0.4
    tangent_margin: float = 0.1

    def __post_init__(self):
        if self.n_radius < 2 or self.n_angle < 2:
            raise ValueError("grids need at least two samples per axis")
        if not self.perturbation > 0.0:
            raise ValueError("perturbation must be positive")
        if self.max_collisions < 1:
            raise ValueError("max_collisions must be >= 1")

    @property
    def radii(self) -> np.ndarray:
        return np.linspace(*self.radius_range, self.n_radius)

    @property
    def angles(self) -> np.ndarray:
        return np.linspace(*self.angle_range, self.n_angle)


SCENARIOS = ("no-force-horizontal", "force-periodic", "fixed-contact-angle")


@dataclass(frozen=True)
class GridRow:
    axis1: float
    axis2: float
    survival_count: int
    status: str
    low_confidence: bool = False


def two_disk_setup(radius: float, contact_angle: float, launch_angle: float, gamma: float,
                   g: float, perturbation: float):
    """Perturbed start state for the two-disk 2-periodic orbit.

    With ``g == 0`` the unperturbed orbit is horizontal (launch angle 0) and
    the perturbation is an absolute launch-angle offset; with force the
    launch angle is scaled by ``1 + perturbation``.  Speed and spin are those
    of the unperturbed orbit.
    """
    table = make_two_disk_table(radius)
    q0, q1 = two_disk_contact_points(radius, contact_angle)
    d = math.dist(q0, q1)
    tangent, _ = local_frame(table, 0, q0)
    if g == 0.0:
        v = 1.0
        theta0 = 0.0
        theta = perturbation
        force = NO_FORCE
    else:
        v = wedge_speed(g, d, launch_angle)
        theta0 = launch_angle
        theta = launch_angle * (1.0 + perturbation)
        force = ForceField(g, (0.0, -1.0))
    spin = path_reversing_spin((v * math.cos(theta0), v * math.sin(theta0)), tangent, gamma)
    state = ParticleState(0.0, q0, (spin, v * math.cos(theta), v * math.sin(theta)))
    return state, table, force, EscapeCriterion(max_flight=10.0 * d / v)


def _grid_cell(args):
    radius, contact, launch, spec = args
    state, table, force, escape = two_disk_setup(radius, contact, launch, spec.gamma,
                                                 spec.g if launch > 0.0 else 0.0,
                                                 spec.perturbation)
    try:
        return survival_count(state, table, force, MassDistribution(spec.gamma),
                              spec.max_collisions, escape)
    except SimulationError:
        return 0, "numerical"


def stability_grid(spec: StabilityGridSpec, scenario: str, threads: int = 1) -> list[GridRow]:
    """Survival counts over (radius, contact angle) or (radius, launch angle)."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    cells = []
    meta = []
    for r in spec.radii:
        for a in spec.angles:
            if scenario == "no-force-horizontal":
                cells.append((r, a, 0.0, spec))
                contact = a
            elif scenario == "force-periodic":
                cells.append((r, a, spec.launch_angle, spec))
                contact = a
            else:
                cells.append((r, spec.contact_angle, a, spec))
                contact = spec.contact_angle
            meta.append((float(r), float(a), contact > math.pi / 2.0 - spec.tangent_margin))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(_grid_cell, cells))
    else:
        results = [_grid_cell(c) for c in cells]
    return [GridRow(r, a, n, st, low) for (r, a, low), (n, st) in zip(meta, results)]


def analytic_stable(radius: float, contact_angle: float, gamma: float) -> bool:
    d = 2.0 - 2.0 * radius * math.cos(contact_angle)
    return is_linearly_stable_no_force(1.0 / radius, d, MassDistribution(gamma).beta,
                                       contact_angle)


def period_two_multipliers(state: ParticleState, table: Table, force: ForceField,
                           mass: MassDistribution, h: float = 1e-7) -> np.ndarray:
    """Eigenvalues of the finite-difference Jacobian of the two-collision return map.

    ``state`` sits on a boundary component at a point of a 2-periodic orbit.
    Coordinates are arclength along that component's tangent and the three
    outgoing velocity components.  A modulus above one marks a linearly
    unstable orbit.
    """
    comp = min(table.components, key=lambda c: c.distance(state.pos))
    tan, _ = local_frame(table, comp.component_id, state.pos)

    def step(u):
        pos = (state.pos[0] + u[0] * tan[0], state.pos[1] + u[0] * tan[1])
        res = run_orbit(ParticleState(0.0, pos, tuple(u[1:])), table, force, mass, 2)
        if len(res.events) < 2 or res.events[1].component_id != comp.component_id:
            raise SimulationError("perturbed orbit did not return to its starting component")
        ev = res.events[1]
        s = (ev.point[0] - state.pos[0]) * tan[0] + (ev.point[1] - state.pos[1]) * tan[1]
        return np.array([s, *ev.v_out])

    u0 = np.array([0.0, *state.vel])
    jac = np.empty((4, 4))
    for i in range(4):
        du = np.zeros(4)
        du[i] = h
        jac[:, i] = (step(u0 + du) - step(u0 - du)) / (2.0 * h)
    return np.linalg.eigvals(jac)
