"""Batch drivers: Galton boards, phase portraits and channel probes."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Sequence

import numpy as np

from .dynamics import (
    NO_FORCE,
    ForceField,
    MassDistribution,
    ParticleState,
    run_raw,
    to_local,
)
from .geometry import (
    SQRT3,
    GeometryError,
    Table,
    local_frame,
    make_channel,
    make_galton_board,
)

# ------------------------------------------------------------ randomness


def particle_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one particle or orbit."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ------------------------------------------------------------ Galton board


@dataclass(frozen=True)
class GaltonConfig:
    spacing: float = 1.0
    scatterer_radius: float = 0.42
    top_height: float = 1.5
    n_rows: int = 20
    n_particles: int = 10_000
    speed: float = 1.0
    spin: float = 0.0
    drop_point: tuple[float, float] = (0.0, 0.5)
    t_max: float = 1000.0
    seed: int = 0
    rule: str = "no-slip"
    gamma: float = 1.0 / math.sqrt(2.0)
    g: float = 1.0
    directions: str = "downward"  # or "full"
    random_spin: bool = False
    max_collisions: int = 10_000_000

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if self.rule not in ("no-slip", "specular"):
            raise ValueError(f"rule must be 'no-slip' or 'specular', got {self.rule!r}")
        if self.directions not in ("downward", "full"):
            raise ValueError("directions must be 'downward' or 'full'")
        if not self.speed > 0.0 or self.g < 0.0:
            raise ValueError("need speed > 0 and g >= 0")
        if not self.terminal_height < self.drop_point[1] < self.top_height:
            raise ValueError("drop point must lie between the terminal line and the ceiling")
        board = self.board()
        if not board.contains(self.drop_point):
            raise ValueError(f"drop point {self.drop_point} is inside a scatterer")

    @property
    def terminal_height(self) -> float:
        return -(self.n_rows - 0.5) * self.spacing * SQRT3 / 2.0

    @property
    def mass(self) -> MassDistribution:
        return MassDistribution(self.gamma if self.rule == "no-slip" else 0.0)

    def board(self) -> Table:
        try:
            return make_galton_board(self.spacing, self.scatterer_radius, self.top_height,
                                     self.terminal_height, self.rule)
        except GeometryError as exc:
            raise ValueError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["drop_point"] = list(self.drop_point)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GaltonConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown Galton config keys {sorted(extra)}")
        d = dict(d)
        if "drop_point" in d:
            d["drop_point"] = tuple(float(x) for x in d["drop_point"])
        return cls(**d)


def galton_initial_state(config: GaltonConfig, index: int) -> ParticleState:
    rng = particle_rng(config.seed, index)
    if config.directions == "downward":
        a = rng.uniform(math.pi, 2.0 * math.pi)
    else:
        a = rng.uniform(0.0, 2.0 * math.pi)
    spin = rng.uniform(-config.speed, config.speed) if config.random_spin else config.spin
    return ParticleState(0.0, config.drop_point,
                         (spin, config.speed * math.cos(a), config.speed * math.sin(a)))


@dataclass(frozen=True)
class GaltonOutcome:
    particle: int
    seed: int
    status: str  # arrived | unfinished | pinched | escaped | numerical
    terminal_y: float
    arrival_t: float
    n_collisions: int
    energy_drift: float = 0.0
    last_cell: tuple[int, int] | None = None
    bbox: tuple[float, float, float, float] | None = None  # last 10^3 collisions


_GALTON_STATUS = {"exited": "arrived", "time": "unfinished", "count": "unfinished",
                  "pinched": "pinched", "escaped": "escaped", "numerical": "numerical"}


def _energy(a: np.ndarray, ay: float, az: float) -> float:
    return 0.5 * (a[3] ** 2 + a[4] ** 2 + a[5] ** 2) - ay * (a[1] + a[7]) - az * (a[2] + a[8])


def run_galton_particle(config: GaltonConfig, index: int, table: Table | None = None
                        ) -> GaltonOutcome:
    table = table if table is not None else config.board()
    state = galton_initial_state(config, index)
    force = ForceField(config.g)
    ay, az = force.acceleration
    e0 = _energy(state.as_array(), ay, az)
    try:
        status, n, _, s, (lk, lj, fill, ring) = run_raw(
            state, table, force, config.mass, config.max_collisions, config.t_max,
            record=False)
    except Exception:  # noqa: BLE001 - per-particle failures never abort the batch
        return GaltonOutcome(index, config.seed, "numerical", math.nan, math.nan, 0)
    status = _GALTON_STATUS[status]
    drift = abs(_energy(s, ay, az) - e0) / max(abs(e0), 1.0)
    if status == "arrived":
        return GaltonOutcome(index, config.seed, status, float(s[1] + s[7]), float(s[6]), n,
                             drift)
    pts = ring[:min(fill, len(ring))]
    bbox = None
    if len(pts):
        bbox = (float(pts[:, 0].min()), float(pts[:, 1].min()),
                float(pts[:, 0].max()), float(pts[:, 1].max()))
    return GaltonOutcome(index, config.seed, status, math.nan, math.nan, n, drift,
                         (int(lk), int(lj)), bbox)


@dataclass
class GaltonResult:
    config: GaltonConfig
    outcomes: list[GaltonOutcome]

    @property
    def arrived(self) -> list[tuple[float, float]]:
        return [(o.terminal_y, o.arrival_t) for o in self.outcomes if o.status == "arrived"]

    @property
    def unfinished(self) -> int:
        return sum(o.status != "arrived" for o in self.outcomes)

    @property
    def arrival_fraction(self) -> float:
        return 1.0 - self.unfinished / len(self.outcomes)

    @property
    def trapped(self) -> list[GaltonOutcome]:
        """Unarrived particles with their last lattice cell and recent bounding box."""
        return [o for o in self.outcomes if o.status != "arrived"]

    @property
    def max_energy_drift(self) -> float:
        return max((o.energy_drift for o in self.outcomes), default=0.0)

    def displacements(self) -> np.ndarray:
        return np.array([y for y, _ in self.arrived]) - self.config.drop_point[0]


def run_galton(config: GaltonConfig, threads: int = 1) -> GaltonResult:
    table = config.board()
    outcomes = _map(lambda i: run_galton_particle(config, i, table),
                    range(config.n_particles), threads)
    return GaltonResult(config, outcomes)


def histogram(values: Sequence[float], n_bins: int, range_: tuple[float, float]
              ) -> tuple[np.ndarray, int, int]:
    """Counts per bin over ``[lo, hi)`` plus (underflow, overflow) counts."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = range_
    if not hi > lo:
        raise ValueError("histogram range must have hi > lo")
    v = np.asarray(values, dtype=float)
    counts = np.zeros(n_bins, dtype=np.int64)
    if v.size == 0:
        return counts, 0, 0
    under = int(np.sum(v < lo))
    over = int(np.sum(v >= hi))
    inside = v[(v >= lo) & (v < hi)]
    idx = np.minimum(((inside - lo) / (hi - lo) * n_bins).astype(np.int64), n_bins - 1)
    np.add.at(counts, idx, 1)
    return counts, under, over


def sample_skewness(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    d = v - v.mean()
    return float(np.mean(d ** 3) / np.mean(d ** 2) ** 1.5)


def is_unimodal(counts: Sequence[int], noise: float = 3.0) -> bool:
    """Counts rise to one peak and then fall, allowing Poisson-sized wiggles.

    A dip below an earlier maximum is tolerated up to ``noise`` standard
    deviations of the difference of the two counts.
    """
    c = np.asarray(counts, dtype=float)
    peak = int(np.argmax(c))

    def monotone(seq):
        best = -np.inf
        for x in seq:
            if x < best and best - x > noise * math.sqrt(best + x):
                return False
            best = max(best, x)
        return True

    return monotone(c[:peak + 1]) and monotone(c[peak:][::-1])


def galton_histogram(result: GaltonResult, spacings_per_bin: int = 1
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Counts of arrived displacements with bin edges on last-row scatterer centres.

    Particles leave through the gaps of the bottom row, so bins that are not
    a whole number of spacings wide alias that pattern into spurious dips.
    Returns (counts, edges); the edges cover every arrival.
    """
    if spacings_per_bin < 1:
        raise ValueError("spacings_per_bin must be >= 1")
    cfg = result.config
    w = cfg.spacing * spacings_per_bin
    anchor = cfg.board().lattice.center(cfg.n_rows - 1, 0)[0] - cfg.drop_point[0]
    d = result.displacements()
    if d.size == 0:
        return np.zeros(0, dtype=np.int64), np.array([anchor])
    lo = anchor + math.floor((d.min() - anchor) / w) * w
    n = max(1, math.floor((d.max() - lo) / w) + 1)
    counts, _, _ = histogram(d, n, (lo, lo + n * w))
    return counts, lo + w * np.arange(n + 1)


# ------------------------------------------------------------ phase portraits


@dataclass(frozen=True)
class PhasePortraitConfig:
    table: Table = field(repr=False)
    mass: MassDistribution = MassDistribution()
    force: ForceField = NO_FORCE
    n_orbits: int = 50
    collisions_per_orbit: int = 500
    seed: int = 0
    region: str = "uniform"

    def __post_init__(self):
        if self.n_orbits < 1 or self.collisions_per_orbit < 1:
            raise ValueError("n_orbits and collisions_per_orbit must be >= 1")
        if self.region != "uniform":
            raise ValueError(f"unknown sampling region {self.region!r}")
        if not list(self.table.reflective()):
            raise ValueError("phase portraits need at least one reflecting component")

    def to_dict(self) -> dict[str, Any]:
        return {"table": self.table.to_dict(), "gamma": self.mass.gamma,
                "g": self.force.g, "force_direction": list(self.force.direction),
                "n_orbits": self.n_orbits, "collisions_per_orbit": self.collisions_per_orbit,
                "seed": self.seed, "region": self.region}


@dataclass(frozen=True)
class PhasePoint:
    orbit_id: int
    collision_index: int
    s: float
    v: tuple[float, float, float]  # unit (rot, tan, nrm), nrm >= 0


def boundary_parameter(table: Table, component_id: int, point: Sequence[float]) -> float:
    """Arclength parameter in [0, 1), components concatenated in id order."""
    comps = sorted(table.reflective(), key=lambda c: c.component_id)
    k = [c.component_id for c in comps].index(component_id)
    u = comps[k].arclength_fraction(point, table.scale)
    return (k + u) / len(comps)


def _boundary_point(table: Table, s: float):
    comps = sorted(table.reflective(), key=lambda c: c.component_id)
    k = min(int(s * len(comps)), len(comps) - 1)
    c = comps[k]
    u = s * len(comps) - k
    if c.is_segment:
        lo, hi = c.extent
        if math.isinf(lo) or math.isinf(hi):
            t = table.scale * math.tan(math.pi * (min(max(u, 0.05), 0.95) - 0.5))
        else:
            t = lo + u * (hi - lo)
        p = (c.anchor[0] + t * c.direction[0], c.anchor[1] + t * c.direction[1])
    else:
        a0, span = c.extent
        a = a0 + u * span
        p = (c.anchor[0] + c.radius * math.cos(a), c.anchor[1] + c.radius * math.sin(a))
    return c.component_id, p


def phase_initial_state(config: PhasePortraitConfig, orbit_id: int) -> ParticleState:
    """Uniform boundary point and outgoing unit velocity on the upper hemisphere."""
    rng = particle_rng(config.seed, orbit_id)
    while True:
        cid, p = _boundary_point(config.table, rng.uniform())
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        v[2] = abs(v[2])
        if v[2] < 1e-3:
            continue
        (ty, tz), (ny, nz) = local_frame(config.table, cid, p)
        return ParticleState(0.0, p, (float(v[0]), float(v[1] * ty + v[2] * ny),
                                      float(v[1] * tz + v[2] * nz)))


def velocity_disk_projection(v: Sequence[float]) -> tuple[float, float]:
    """Drop the normal component of a unit outgoing velocity, keeping (rot, tan)."""
    return float(v[0]), float(v[1])


def sample_orbit(config: PhasePortraitConfig, orbit_id: int) -> tuple[list[PhasePoint], str]:
    state = phase_initial_state(config, orbit_id)
    status, n, rec, _, _ = run_raw(state, config.table, config.force, config.mass,
                                   config.collisions_per_orbit)
    pts = []
    for i, row in enumerate(rec):
        n_y, n_z = row[13], row[14]
        loc = np.array(to_local(row[10:13], ((n_z, -n_y), (n_y, n_z))))
        loc /= np.linalg.norm(loc)
        s = boundary_parameter(config.table, int(row[4]), (row[2], row[3]))
        pts.append(PhasePoint(orbit_id, i, s, (float(loc[0]), float(loc[1]), float(loc[2]))))
    return pts, status


def sample_phase_portrait(config: PhasePortraitConfig, threads: int = 1
                          ) -> tuple[list[PhasePoint], dict[int, str]]:
    """Collision records for ``n_orbits`` random orbits and each orbit's final status."""
    res = _map(lambda i: sample_orbit(config, i), range(config.n_orbits), threads)
    points = [p for pts, _ in res for p in pts]
    return points, {i: st for i, (_, st) in enumerate(res)}


def count_clusters(points: Sequence[Sequence[float]], radius: float = 1e-6) -> int:
    """Number of groups when points closer than ``radius`` are linked."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return 0
    from scipy.cluster.hierarchy import fcluster, linkage

    if len(pts) == 1:
        return 1
    return int(fcluster(linkage(pts, method="single"), radius, criterion="distance").max())


# ------------------------------------------------------------ channels


@dataclass
class ChannelResult:
    orientation: str
    checkpoints: tuple[int, ...]
    extents: np.ndarray  # (n_trials, len(checkpoints)) maximum axial displacement
    dropped: int  # trials that never touch a wall
    max_energy_drift: float

    def growth(self) -> np.ndarray:
        """Relative extent growth between the first and last checkpoint, per trial."""
        e = self.extents
        return (e[:, -1] - e[:, 0]) / np.maximum(e[:, 0], 1e-300)


def channel_setup(width: float, orientation: str, g: float, speed: float):
    if orientation in ("none", "parallel"):
        table = make_channel(width, "vertical")
        force = NO_FORCE if orientation == "none" else ForceField(g, (0.0, -1.0))
        return table, force, 1
    if orientation == "orthogonal":
        return make_channel(width, "horizontal"), ForceField(g, (0.0, -1.0)), 0
    raise ValueError(f"unknown force orientation {orientation!r}")


def run_channel_boundedness(width: float, orientation: str, mass: MassDistribution,
                            n_trials: int = 100, n_collisions: int = 20_000, seed: int = 0,
                            g: float = 1.0, speed: float = 1.0, threads: int = 1,
                            checkpoints: Sequence[int] | None = None) -> ChannelResult:
    """Maximum axial excursion of random channel orbits at several collision counts.

    ``none`` and ``parallel`` use a vertical channel (axis along z); ``orthogonal``
    uses a horizontal channel with the force across it; there each trial's
    launch direction is drawn so that its normal kinetic energy carries it from
    the midline to the upper wall.  Collisions only flip the normal velocity,
    so the normal motion is then a fixed bounce between the two walls.
    """
    if not width > 0.0:
        raise ValueError("width must be positive")
    table, force, axis = channel_setup(width, orientation, g, speed)
    vz_min = math.sqrt(g * width) if orientation == "orthogonal" else 0.0
    if vz_min >= speed:
        raise ValueError("not enough energy to reach the upper wall")
    checkpoints = tuple(checkpoints or (n_collisions // 2, n_collisions))
    ay, az = force.acceleration

    def trial(i):
        rng = particle_rng(seed, i)
        a = rng.uniform(0.0, 2.0 * math.pi)
        while abs(speed * math.sin(a)) <= vz_min:
            a = rng.uniform(0.0, 2.0 * math.pi)
        if orientation == "orthogonal":
            pos = (0.0, width / 2.0)
        else:
            pos = (rng.uniform(-0.4, 0.4) * width, 0.0)
        state = ParticleState(0.0, pos, (0.0, speed * math.cos(a), speed * math.sin(a)))
        e0 = _energy(state.as_array(), ay, az)
        status, n, rec, s, _ = run_raw(state, table, force, mass, n_collisions)
        drift = abs(_energy(s, ay, az) - e0) / max(abs(e0), 1.0)
        if n < n_collisions:
            return None, drift
        disp = np.abs(rec[:, 2 + axis] - pos[axis])
        run_max = np.maximum.accumulate(disp)
        return np.array([run_max[c - 1] for c in checkpoints]), drift

    res = _map(trial, range(n_trials), threads)
    kept = [e for e, _ in res if e is not None]
    extents = np.array(kept).reshape(len(kept), len(checkpoints))
    return ChannelResult(orientation, checkpoints, extents, len(res) - len(kept),
                         max(d for _, d in res))
