"""Free flight, the no-slip collision map and the collision-to-collision loop.

Local velocity coordinates at a wall are ``(rot, tan, nrm)``: the rotational
velocity, the component along the wall tangent, and the component along the
*inward* normal (negative while approaching the wall).  The no-slip map is

    T = [[-cos b, -sin b,  0],
         [-sin b,  cos b,  0],
         [     0,      0, -1]],   b = 2 arctan(gamma)

which only flips the normal coordinate, so its action does not depend on
whether that coordinate is measured along the inward or outward normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _engine
from .geometry import RULE_CODES, Point, Table, local_frame

APPROACH_TOL = 1e-10


class CollisionError(ValueError):
    """A velocity was handed to a collision map while leaving the wall."""


class SimulationError(RuntimeError):
    """Numerical failure inside the event loop."""


@dataclass(frozen=True)
class MassDistribution:
    gamma: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")

    @property
    def beta(self) -> float:
        return 2.0 * math.atan(self.gamma)

    @classmethod
    def from_beta(cls, beta: float) -> "MassDistribution":
        if not 0.0 <= beta < math.pi:
            raise ValueError("beta must lie in [0, pi)")
        return cls(math.tan(beta / 2.0))

    @property
    def cos_sin(self) -> tuple[float, float]:
        # rational form avoids the arctan/cos round trip
        g2 = self.gamma * self.gamma
        return (1.0 - g2) / (1.0 + g2), 2.0 * self.gamma / (1.0 + g2)


POINT_MASS = MassDistribution(0.0)
UNIFORM_DISK = MassDistribution(1.0 / math.sqrt(2.0))
RING = MassDistribution(1.0)


@dataclass(frozen=True)
class ForceField:
    g: float = 0.0
    direction: Point = (0.0, -1.0)

    def __post_init__(self):
        if not self.g >= 0.0:
            raise ValueError("force magnitude must be >= 0")
        if self.g > 0.0 and abs(math.hypot(*self.direction) - 1.0) > 1e-12:
            raise ValueError("force direction must be a unit vector")

    @property
    def acceleration(self) -> Point:
        return (self.g * self.direction[0], self.g * self.direction[1])


NO_FORCE = ForceField(0.0)


@dataclass(frozen=True)
class ParticleState:
    """Orientation ``x``, lab position ``pos = (y, z)``, velocity ``(x', y', z')``."""

    x: float = 0.0
    pos: Point = (0.0, 0.0)
    vel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    t: float = 0.0
    shift: Point = (0.0, 0.0)

    def __post_init__(self):
        vals = (self.x, *self.pos, *self.vel, self.t, *self.shift)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite particle state {self}")

    @property
    def unwrapped(self) -> Point:
        return (self.pos[0] + self.shift[0], self.pos[1] + self.shift[1])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, *self.pos, *self.vel, self.t, *self.shift], dtype=float)

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "ParticleState":
        return cls(float(a[0]), (float(a[1]), float(a[2])),
                   (float(a[3]), float(a[4]), float(a[5])), float(a[6]),
                   (float(a[7]), float(a[8])))

    def speed(self) -> float:
        return math.sqrt(sum(v * v for v in self.vel))


def energy(state: ParticleState, force: ForceField = NO_FORCE) -> float:
    """Kinetic energy (rotational included) plus potential of the constant force."""
    ay, az = force.acceleration
    py, pz = state.unwrapped
    return 0.5 * sum(v * v for v in state.vel) - (ay * py + az * pz)


@dataclass(frozen=True)
class CollisionEvent:
    t_flight: float
    point: Point
    component_id: int
    v_in: tuple[float, float, float]
    v_out: tuple[float, float, float]
    frame: tuple[Point, Point]
    t: float = 0.0
    cell: tuple[int, int] | None = None
    x: float = 0.0


@dataclass(frozen=True)
class Escaped:
    """The particle crossed an absorbing component."""

    t_flight: float
    point: Point
    component_id: int
    state: ParticleState


@dataclass(frozen=True)
class NoEvent:
    pass


@dataclass(frozen=True)
class VertexHit:
    t_flight: float
    point: Point


# ------------------------------------------------------------ collision maps


def collision_matrix(mass: MassDistribution) -> np.ndarray:
    c, s = mass.cos_sin
    return np.array([[-c, -s, 0.0], [-s, c, 0.0], [0.0, 0.0, -1.0]])


def _check_approach(v_local: Sequence[float]) -> None:
    scale = math.sqrt(sum(v * v for v in v_local))
    if v_local[2] >= -APPROACH_TOL * scale:
        raise CollisionError(f"velocity {tuple(v_local)} is not moving into the wall")


def no_slip_reflect(v_local: Sequence[float], mass: MassDistribution) -> tuple[float, float, float]:
    _check_approach(v_local)
    c, s = mass.cos_sin
    rot, tan, nrm = v_local
    return (-c * rot - s * tan, -s * rot + c * tan, -nrm)


def specular_reflect(v_local: Sequence[float]) -> tuple[float, float, float]:
    _check_approach(v_local)
    rot, tan, nrm = v_local
    return (rot, tan, -nrm)


def to_local(vel: Sequence[float], frame: tuple[Point, Point]) -> tuple[float, float, float]:
    (ty, tz), (ny, nz) = frame
    return (vel[0], vel[1] * ty + vel[2] * tz, vel[1] * ny + vel[2] * nz)


def to_lab(v_local: Sequence[float], frame: tuple[Point, Point]) -> tuple[float, float, float]:
    (ty, tz), (ny, nz) = frame
    rot, tan, nrm = v_local
    return (rot, tan * ty + nrm * ny, tan * tz + nrm * nz)


# ------------------------------------------------------------ flight


def propagate(state: ParticleState, dt: float, force: ForceField = NO_FORCE) -> ParticleState:
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    ay, az = force.acceleration
    vx, vy, vz = state.vel
    y, z = state.pos
    return replace(
        state,
        x=state.x + vx * dt,
        pos=(y + vy * dt + 0.5 * ay * dt * dt, z + vz * dt + 0.5 * az * dt * dt),
        vel=(vx, vy + ay * dt, vz + az * dt),
        t=state.t + dt,
    )


# ------------------------------------------------------------ event loop


@dataclass
class Orbit:
    """Result of :func:`run_orbit`."""

    events: list[CollisionEvent]
    status: str
    final: ParticleState
    initial: ParticleState
    table: Table = field(repr=False)
    force: ForceField = NO_FORCE

    @property
    def points(self) -> np.ndarray:
        return np.array([e.point for e in self.events]).reshape(-1, 2)


def _rule_code(rule: str | None) -> int:
    if rule is None:
        return -1
    if rule not in ("no-slip", "specular"):
        raise ValueError(f"rule override must be 'no-slip' or 'specular', got {rule!r}")
    return RULE_CODES[rule]


def run_raw(state: ParticleState, table: Table, force: ForceField, mass: MassDistribution,
            n_collisions: int, t_max: float = math.inf, rule: str | None = None,
            max_flight: float = math.inf, record: bool = True):
    """Thin wrapper over the compiled loop; returns (status, n, rec, final_array, extras)."""
    s = state.as_array()
    geo, meta, lat = table.packed
    ay, az = force.acceleration
    cb, sb = mass.cos_sin
    rows = max(n_collisions, 1) if record else 1
    rows = min(rows, 10_000_000)
    rec = np.zeros((rows, _engine.REC_COLS))
    ring = np.zeros((_engine.RING, 2))
    status, n, lk, lj, fill = _engine.run(
        s, ay, az, geo, meta, lat, cb, sb, _rule_code(rule), n_collisions, t_max,
        max_flight, table.scale, rec, record, ring)
    return _engine.STATUS_NAMES[status], n, rec[:n] if record else None, s, (lk, lj, fill, ring)


def _events_from_rec(rec: np.ndarray, t0: float) -> list[CollisionEvent]:
    events = []
    for row in rec:
        n = (float(row[13]), float(row[14]))
        frame = ((n[1], -n[0]), n)
        vin = (float(row[7]), float(row[8]), float(row[9]))
        vout = (float(row[10]), float(row[11]), float(row[12]))
        cell = (int(row[5]), int(row[6]))
        events.append(CollisionEvent(float(row[1]), (float(row[2]), float(row[3])),
                                     int(row[4]), vin, vout, frame, float(row[0]), cell,
                                     float(row[15])))
    return events


def run_orbit(state: ParticleState, table: Table, force: ForceField = NO_FORCE,
              mass: MassDistribution = UNIFORM_DISK, n_collisions: int = 100,
              t_max: float = math.inf, rule: str | None = None,
              max_flight: float = math.inf) -> Orbit:
    """Advance through collisions until a count, time, escape, or pinch.

    Status is one of ``count``, ``time``, ``escaped`` (no further collision
    or flight longer than ``max_flight``), ``exited`` (absorbing boundary),
    ``pinched`` (vertex hit or stagnation) or ``numerical``.
    """
    status, n, rec, s, _ = run_raw(state, table, force, mass, n_collisions, t_max, rule,
                                   max_flight)
    events = _events_from_rec(rec, state.t)
    if status == "numerical":
        raise SimulationError(
            f"event loop failed after {n} collisions from {state}; last array state {s.tolist()}")
    return Orbit(events, status, ParticleState.from_array(s), state, table, force)


def next_collision(state: ParticleState, table: Table, force: ForceField = NO_FORCE,
                   mass: MassDistribution = UNIFORM_DISK, rule: str | None = None,
                   max_flight: float = math.inf):
    """First collision along the ballistic arc from ``state``.

    Periodic walls are passed through.  Returns a CollisionEvent, an Escaped
    record for absorbing components, a VertexHit, or NoEvent.
    """
    status, n, rec, s, _ = run_raw(state, table, force, mass, 1, math.inf, rule, max_flight)
    final = ParticleState.from_array(s)
    if status == "count":
        ev = _events_from_rec(rec, state.t)[0]
        frame = local_frame(table, ev.component_id, ev.point, tol=1e-6)
        return replace(ev, frame=frame)
    if status == "exited":
        geo, meta, lat = table.packed
        y, z = final.pos
        # the absorbing component is the one the point lies on
        comp = min((c for c in table.components if c.rule == "exit"),
                   key=lambda c: c.distance((y, z)))
        return Escaped(final.t - state.t, final.pos, comp.component_id, final)
    if status == "pinched":
        return VertexHit(final.t - state.t, final.pos)
    if status == "numerical":
        raise SimulationError(f"event detection failed from {state}")
    return NoEvent()
