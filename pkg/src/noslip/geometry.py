"""Billiard tables built from oriented boundary components.

A table is a tuple of components (straight pieces and circles/arcs), each
carrying a unit *inward* normal, a collision rule, and for periodic walls the
translation applied when the particle leaves through it.  Galton boards add a
triangular lattice of disk scatterers that is never materialised: scatterers
are produced by lattice-cell lookup.

Tangents are fixed by right-handedness with the inward normal,
``cross(tangent, normal) = +1``, i.e. ``tangent = (n_y, -n_x)``.  Using one
rule everywhere keeps the rotational velocity coordinate meaningful across
walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterator, Sequence

import numpy as np

Point = tuple[float, float]

RULES = ("no-slip", "specular", "periodic", "exit")
RULE_CODES = {name: i for i, name in enumerate(RULES)}
KIND_SEGMENT = 0
KIND_CIRCLE = 1
ON_BOUNDARY_TOL = 1e-8
SQRT3 = math.sqrt(3.0)


class GeometryError(ValueError):
    pass


def _unit(v: Sequence[float]) -> Point:
    n = math.hypot(v[0], v[1])
    if n == 0.0:
        raise GeometryError("zero-length direction")
    return (v[0] / n, v[1] / n)


def _rot90(v: Point) -> Point:
    return (-v[1], v[0])


@dataclass(frozen=True)
class BoundaryComponent:
    """One piece of boundary.

    For ``kind == 'segment'`` the piece is ``anchor + s * direction`` with
    ``s`` in ``extent`` (either end may be infinite).  For ``'circle'`` and
    ``'arc'``, ``anchor`` is the center and ``extent`` is (start angle, span).
    ``orientation`` picks the inward normal: ``+1`` means the left normal of a
    segment, or pointing away from the center of a circle (a scatterer).
    """

    kind: str
    component_id: int
    anchor: Point
    direction: Point = (1.0, 0.0)
    extent: tuple[float, float] = (-math.inf, math.inf)
    radius: float = 0.0
    orientation: int = 1
    rule: str = "no-slip"
    wrap: Point = (0.0, 0.0)
    corners: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        if self.kind not in ("segment", "circle", "arc"):
            raise GeometryError(f"unknown component kind {self.kind!r}")
        if self.rule not in RULES:
            raise GeometryError(f"unknown collision rule {self.rule!r}")
        if self.orientation not in (1, -1):
            raise GeometryError("orientation must be +1 or -1")
        if self.kind == "segment":
            lo, hi = self.extent
            if not lo < hi:
                raise GeometryError("segment endpoints must be distinct")
            if abs(math.hypot(*self.direction) - 1.0) > 1e-12:
                raise GeometryError("segment direction must be a unit vector")
        else:
            if not self.radius > 0.0:
                raise GeometryError("circle radius must be positive")
            span = self.extent[1]
            if not 0.0 < span <= 2.0 * math.pi + 1e-15:
                raise GeometryError("arc span must lie in (0, 2pi]")

    # constructors -------------------------------------------------------

    @classmethod
    def segment(cls, a: Point, b: Point, inward: Point, component_id: int = 0, **kw):
        d = (b[0] - a[0], b[1] - a[1])
        length = math.hypot(*d)
        if length == 0.0:
            raise GeometryError("segment endpoints must be distinct")
        return cls.ray(a, d, inward, component_id, extent=(0.0, length), **kw)

    @classmethod
    def ray(cls, anchor: Point, direction: Point, inward: Point, component_id: int = 0,
            extent=(0.0, math.inf), **kw):
        d = _unit(direction)
        left = _rot90(d)
        orient = 1 if left[0] * inward[0] + left[1] * inward[1] > 0 else -1
        return cls("segment", component_id, tuple(map(float, anchor)), d,
                   (float(extent[0]), float(extent[1])), orientation=orient, **kw)

    @classmethod
    def line(cls, point: Point, direction: Point, inward: Point, component_id: int = 0, **kw):
        return cls.ray(point, direction, inward, component_id,
                       extent=(-math.inf, math.inf), **kw)

    @classmethod
    def circle(cls, center: Point, radius: float, component_id: int = 0,
               scatterer: bool = True, **kw):
        return cls("circle", component_id, (float(center[0]), float(center[1])),
                   extent=(0.0, 2.0 * math.pi), radius=float(radius),
                   orientation=1 if scatterer else -1, **kw)

    @classmethod
    def arc(cls, center: Point, radius: float, start: float, span: float,
            component_id: int = 0, scatterer: bool = True, **kw):
        return cls("arc", component_id, (float(center[0]), float(center[1])),
                   extent=(float(start), float(span)), radius=float(radius),
                   orientation=1 if scatterer else -1, **kw)

    # geometry -----------------------------------------------------------

    @property
    def is_segment(self) -> bool:
        return self.kind == "segment"

    def endpoints(self) -> tuple[Point, Point]:
        (ax, ay), (dx, dy) = self.anchor, self.direction
        lo, hi = self.extent
        return (ax + lo * dx, ay + lo * dy), (ax + hi * dx, ay + hi * dy)

    def side(self, p: Sequence[float]) -> float:
        """Signed distance-like value, positive on the table side."""
        if self.is_segment:
            n = self.normal_at(p)
            return (p[0] - self.anchor[0]) * n[0] + (p[1] - self.anchor[1]) * n[1]
        r = math.hypot(p[0] - self.anchor[0], p[1] - self.anchor[1])
        return self.orientation * (r - self.radius)

    def normal_at(self, p: Sequence[float]) -> Point:
        if self.is_segment:
            left = _rot90(self.direction)
            return (self.orientation * left[0], self.orientation * left[1])
        w = _unit((p[0] - self.anchor[0], p[1] - self.anchor[1]))
        return (self.orientation * w[0], self.orientation * w[1])

    def distance(self, p: Sequence[float]) -> float:
        """Euclidean distance from p to the component itself."""
        ax, ay = self.anchor
        if self.is_segment:
            dx, dy = self.direction
            s = (p[0] - ax) * dx + (p[1] - ay) * dy
            s = min(max(s, self.extent[0]), self.extent[1])
            return math.hypot(p[0] - ax - s * dx, p[1] - ay - s * dy)
        ang = math.atan2(p[1] - ay, p[0] - ax)
        if self.kind == "arc" and not self._angle_in_arc(ang):
            a0, span = self.extent
            ends = [(ax + self.radius * math.cos(a), ay + self.radius * math.sin(a))
                    for a in (a0, a0 + span)]
            return min(math.hypot(p[0] - e[0], p[1] - e[1]) for e in ends)
        return abs(math.hypot(p[0] - ax, p[1] - ay) - self.radius)

    def _angle_in_arc(self, ang: float) -> bool:
        a0, span = self.extent
        return (ang - a0) % (2.0 * math.pi) <= span

    def arclength_fraction(self, p: Sequence[float], scale: float = 1.0) -> float:
        """Position of p along the component, normalised to [0, 1)."""
        ax, ay = self.anchor
        if self.is_segment:
            s = (p[0] - ax) * self.direction[0] + (p[1] - ay) * self.direction[1]
            lo, hi = self.extent
            if math.isinf(lo) or math.isinf(hi):
                u = 0.5 + math.atan(s / scale) / math.pi
            else:
                u = (s - lo) / (hi - lo)
        else:
            ang = math.atan2(p[1] - ay, p[0] - ax)
            a0, span = self.extent
            u = ((ang - a0) % (2.0 * math.pi)) / span
        return min(max(u, 0.0), math.nextafter(1.0, 0.0))

    def to_dict(self) -> dict[str, Any]:
        d = {
            "kind": self.kind, "component_id": self.component_id,
            "anchor": list(self.anchor), "direction": list(self.direction),
            "extent": [_json_float(x) for x in self.extent], "radius": self.radius,
            "orientation": self.orientation, "rule": self.rule,
            "wrap": list(self.wrap), "corners": list(self.corners),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BoundaryComponent":
        return cls(
            kind=d["kind"], component_id=int(d["component_id"]),
            anchor=tuple(d["anchor"]), direction=tuple(d.get("direction", (1.0, 0.0))),
            extent=tuple(float(x) for x in d.get("extent", (-math.inf, math.inf))),
            radius=float(d.get("radius", 0.0)), orientation=int(d.get("orientation", 1)),
            rule=d.get("rule", "no-slip"), wrap=tuple(d.get("wrap", (0.0, 0.0))),
            corners=tuple(d.get("corners", (True, True))),
        )


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class Lattice:
    """Triangular lattice of disk scatterers.

    Row ``k`` sits at height ``origin_z - k * spacing * sqrt(3)/2`` and its
    scatterers at ``origin_y + (j + (k mod 2)/2) * spacing``.
    """

    spacing: float
    radius: float
    origin: Point = (0.0, 0.0)
    rows: tuple[int, int] = (0, 2**40)
    rule: str = "no-slip"
    component_id: int = 0

    def __post_init__(self):
        if not self.spacing > 0.0:
            raise GeometryError("lattice spacing must be positive")
        if not 0.0 < self.radius < self.spacing / 2.0:
            raise GeometryError(
                f"scatterers overlap: need 0 < r < a/2, got r={self.radius}, a={self.spacing}")

    @property
    def row_height(self) -> float:
        return self.spacing * SQRT3 / 2.0

    def center(self, k: int, j: int) -> Point:
        return (self.origin[0] + (j + 0.5 * (k % 2)) * self.spacing,
                self.origin[1] - k * self.row_height)

    def centers_near(self, p: Sequence[float], radius: float) -> list[tuple[Point, tuple[int, int]]]:
        """Scatterer centers within ``radius`` of p, by row/column lookup."""
        h = self.row_height
        k_lo = max(self.rows[0], math.ceil((self.origin[1] - p[1] - radius) / h))
        k_hi = min(self.rows[1], math.floor((self.origin[1] - p[1] + radius) / h))
        found = []
        for k in range(k_lo, k_hi + 1):
            off = self.origin[0] + 0.5 * (k % 2) * self.spacing
            j_lo = math.ceil((p[0] - radius - off) / self.spacing)
            j_hi = math.floor((p[0] + radius - off) / self.spacing)
            for j in range(j_lo, j_hi + 1):
                c = self.center(k, j)
                if math.hypot(c[0] - p[0], c[1] - p[1]) <= radius:
                    found.append((c, (k, j)))
        return found

    def nearest(self, p: Sequence[float], tol: float = 1e-12) -> list[tuple[Point, tuple[int, int]]]:
        """All scatterers whose center is (to ``tol``) nearest to p."""
        reach = self.spacing
        while True:
            cands = self.centers_near(p, reach)
            if cands:
                break
            reach *= 2.0
        dist = [math.hypot(c[0] - p[0], c[1] - p[1]) for c, _ in cands]
        best = min(dist)
        return [cand for cand, d in zip(cands, dist) if d <= best + tol * max(1.0, best)]


@dataclass(frozen=True)
class WedgeSpec:
    half_angle: float
    orientation: str = "opening-up"
    vertex: Point = (0.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.half_angle < math.pi / 2.0:
            raise GeometryError(f"wedge half-angle must lie in (0, pi/2), got {self.half_angle}")
        if self.orientation not in ("opening-up", "opening-down"):
            raise GeometryError(f"unknown wedge orientation {self.orientation!r}")


@dataclass(frozen=True)
class Tiling:
    kind: str = "none"
    params: tuple[float, ...] = ()


@dataclass(frozen=True)
class Table:
    components: tuple[BoundaryComponent, ...]
    tiling: Tiling = Tiling()
    name: str = ""
    scale: float = 1.0
    lattice: Lattice | None = None
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ids = [c.component_id for c in self.components]
        if self.lattice is not None:
            ids.append(self.lattice.component_id)
        if len(set(ids)) != len(ids):
            raise GeometryError(f"duplicate component ids {ids}")

    def component(self, component_id: int) -> BoundaryComponent:
        for c in self.components:
            if c.component_id == component_id:
                return c
        raise KeyError(component_id)

    def contains(self, p: Sequence[float]) -> bool:
        """Strict interior test: on the table side of every component."""
        if any(c.side(p) <= 0.0 for c in self.components):
            return False
        if self.lattice is not None:
            lat = self.lattice
            for c, _ in lat.centers_near(p, lat.radius):
                if math.hypot(p[0] - c[0], p[1] - c[1]) <= lat.radius:
                    return False
        return True

    def reflective(self) -> Iterator[BoundaryComponent]:
        return (c for c in self.components if c.rule in ("no-slip", "specular"))

    def to_dict(self) -> dict[str, Any]:
        if self.source:
            return dict(self.source)
        return {
            "kind": "components", "name": self.name, "scale": self.scale,
            "components": [c.to_dict() for c in self.components],
        }

    @cached_property
    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Array form consumed by the compiled event loop."""
        n = len(self.components)
        geo = np.zeros((n, 12))
        meta = np.zeros((n, 4), dtype=np.int64)
        for i, c in enumerate(self.components):
            if c.is_segment:
                nrm = c.normal_at(c.anchor)
                geo[i, :8] = (*c.anchor, *c.direction, *c.extent, *nrm)
                meta[i, 0] = KIND_SEGMENT
            else:
                geo[i, :6] = (*c.anchor, c.radius, c.orientation, *c.extent)
                geo[i, 6] = 1.0 if c.kind == "circle" else 0.0
                meta[i, 0] = KIND_CIRCLE
            geo[i, 8:10] = c.wrap
            meta[i, 1] = RULE_CODES[c.rule]
            meta[i, 2] = c.component_id
            meta[i, 3] = int(c.corners[0]) | (int(c.corners[1]) << 1)
        lat = np.zeros(9)
        if self.lattice is not None:
            L = self.lattice
            lat[:] = (1.0, L.spacing, L.radius, L.origin[0], L.origin[1],
                      L.rows[0], L.rows[1], RULE_CODES[L.rule], L.component_id)
        return geo, meta, lat


def _finish(table: Table, source: dict) -> Table:
    object.__setattr__(table, "source", source)
    return table


# ------------------------------------------------------------ local frames


def local_frame(table: Table, component_id: int, point: Sequence[float],
                tol: float = ON_BOUNDARY_TOL) -> tuple[Point, Point]:
    """(tangent, inward normal) at a boundary point.

    Raises GeometryError when ``point`` is farther than ``tol * table.scale``
    from the component.
    """
    lat = table.lattice
    if lat is not None and component_id == lat.component_id:
        (c, _), *_ = lat.nearest(point)
        dist = abs(math.hypot(point[0] - c[0], point[1] - c[1]) - lat.radius)
        if dist > tol * table.scale:
            raise GeometryError(f"point {tuple(point)} is {dist:.3g} off the lattice scatterers")
        n = _unit((point[0] - c[0], point[1] - c[1]))
    else:
        comp = table.component(component_id)
        dist = comp.distance(point)
        if dist > tol * table.scale:
            raise GeometryError(
                f"point {tuple(point)} is {dist:.3g} off component {component_id}")
        n = comp.normal_at(point)
    return (n[1], -n[0]), n


# ------------------------------------------------------------ constructors


def make_half_plane(rule: str = "no-slip") -> Table:
    line = BoundaryComponent.line((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), 0, rule=rule)
    return _finish(Table((line,), name="half-plane"), {"kind": "half-plane", "rule": rule})


def wedge_walls(spec: WedgeSpec) -> tuple[Point, Point, Point, Point]:
    """Unit directions of the (left, right) walls and their inward normals."""
    s, c = math.sin(spec.half_angle), math.cos(spec.half_angle)
    if spec.orientation == "opening-up":
        return (-s, c), (s, c), (c, s), (-c, s)
    return (-s, -c), (s, -c), (c, -s), (-c, -s)


def make_wedge(spec: WedgeSpec, rule: str = "no-slip") -> Table:
    dl, dr, nl, nr = wedge_walls(spec)
    left = BoundaryComponent.ray(spec.vertex, dl, nl, 0, rule=rule, corners=(True, False))
    right = BoundaryComponent.ray(spec.vertex, dr, nr, 1, rule=rule, corners=(True, False))
    src = {"kind": "wedge", "half_angle": spec.half_angle, "orientation": spec.orientation,
           "vertex": list(spec.vertex), "rule": rule}
    return _finish(Table((left, right), name="wedge", scale=1.0), src)


def _polygon_walls(vertices: Sequence[Point], rule: str, wraps=None) -> list[BoundaryComponent]:
    cx = sum(v[0] for v in vertices) / len(vertices)
    cy = sum(v[1] for v in vertices) / len(vertices)
    walls = []
    for i, a in enumerate(vertices):
        b = vertices[(i + 1) % len(vertices)]
        mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        inward = (cx - mid[0], cy - mid[1])
        kw = {"rule": rule}
        if wraps is not None:
            kw = {"rule": "periodic", "wrap": wraps[i]}
        walls.append(BoundaryComponent.segment(a, b, inward, i, **kw))
    return walls


def regular_polygon_vertices(n: int, circumradius: float = 1.0,
                             rotation: float = 0.0) -> list[Point]:
    return [(circumradius * math.cos(rotation + 2.0 * math.pi * i / n),
             circumradius * math.sin(rotation + 2.0 * math.pi * i / n)) for i in range(n)]


def make_regular_polygon(n: int, circumradius: float = 1.0, rule: str = "no-slip") -> Table:
    if n < 3:
        raise GeometryError("a polygon needs at least 3 sides")
    # flat bottom edge so that "down" is a wall normal
    rot = -math.pi / 2.0 - math.pi / n
    walls = _polygon_walls(regular_polygon_vertices(n, circumradius, rot), rule)
    src = {"kind": "polygon", "sides": n, "circumradius": circumradius, "rule": rule}
    return _finish(Table(tuple(walls), name=f"{n}-gon", scale=circumradius), src)


def make_sinai_cell(cell: str, side: float, scatterer_radius: float, periodic: bool,
                    rule: str = "no-slip") -> Table:
    """Square or hexagonal cell with a central disk scatterer."""
    if cell == "square":
        h = side / 2.0
        verts = [(-h, -h), (h, -h), (h, h), (-h, h)]
        apothem = h
        tiling = Tiling("periodic-rectangle", (side, side)) if periodic else Tiling()
    elif cell == "hexagon":
        verts = regular_polygon_vertices(6, side)
        apothem = side * SQRT3 / 2.0
        tiling = Tiling("periodic-hexagon", (side,)) if periodic else Tiling()
    else:
        raise GeometryError(f"unknown cell {cell!r}")
    if not 0.0 < scatterer_radius < apothem:
        raise GeometryError(
            f"scatterer of radius {scatterer_radius} does not fit strictly inside the cell")
    wraps = None
    if periodic:
        # leaving through a wall re-enters through the opposite one
        wraps = []
        for i, a in enumerate(verts):
            b = verts[(i + 1) % len(verts)]
            mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
            wraps.append((-2.0 * mid[0], -2.0 * mid[1]))
    walls = _polygon_walls(verts, rule, wraps)
    disk = BoundaryComponent.circle((0.0, 0.0), scatterer_radius, len(walls), rule=rule)
    src = {"kind": "sinai-cell", "cell": cell, "side": side,
           "scatterer_radius": scatterer_radius, "periodic": periodic, "rule": rule}
    return _finish(Table(tuple(walls) + (disk,), tiling=tiling, name=f"sinai-{cell}",
                         scale=side), src)


def make_galton_board(spacing: float = 1.0, scatterer_radius: float = 0.25,
                      top_height: float = 1.5, terminal_height: float | None = None,
                      rule: str = "no-slip") -> Table:
    """Triangular peg lattice with rows at heights 0, -h, -2h, ...

    A reflecting ceiling sits at ``top_height`` and an absorbing line at
    ``terminal_height`` (default: midway between rows 19 and 20).
    """
    if not 2.0 * scatterer_radius < spacing:
        raise GeometryError(
            f"scatterers overlap: need 2r < a, got r={scatterer_radius}, a={spacing}")
    h = spacing * SQRT3 / 2.0
    if terminal_height is None:
        terminal_height = -19.5 * h
    if not top_height > 0.0 > terminal_height:
        raise GeometryError("need top_height > 0 > terminal_height")
    ceiling = BoundaryComponent.line((0.0, top_height), (1.0, 0.0), (0.0, -1.0), 0, rule=rule)
    floor = BoundaryComponent.line((0.0, terminal_height), (1.0, 0.0), (0.0, 1.0), 1,
                                   rule="exit")
    lattice = Lattice(spacing, scatterer_radius, rule=rule, component_id=2)
    src = {"kind": "galton", "spacing": spacing, "scatterer_radius": scatterer_radius,
           "top_height": top_height, "terminal_height": terminal_height, "rule": rule}
    table = Table((ceiling, floor), Tiling("triangular-lattice", (spacing, scatterer_radius)),
                  name="galton", scale=spacing, lattice=lattice)
    return _finish(table, src)


def two_disk_contact_points(radius: float, contact_angle: float,
                            center_distance: float = 2.0) -> tuple[Point, Point]:
    """Mirror-image points on the two disks at angle ``contact_angle`` above horizontal."""
    h = center_distance / 2.0
    c, s = math.cos(contact_angle), math.sin(contact_angle)
    return (-h + radius * c, radius * s), (h - radius * c, radius * s)


def make_two_disk_table(radius: float, center_distance: float = 2.0,
                        rule: str = "no-slip") -> Table:
    if not 0.0 < radius < center_distance / 2.0:
        raise GeometryError(f"disk radius must lie in (0, {center_distance / 2.0}), got {radius}")
    h = center_distance / 2.0
    disks = (BoundaryComponent.circle((-h, 0.0), radius, 0, rule=rule),
             BoundaryComponent.circle((h, 0.0), radius, 1, rule=rule))
    src = {"kind": "two-disk", "radius": radius, "center_distance": center_distance,
           "rule": rule}
    return _finish(Table(disks, name="two-disk", scale=center_distance), src)


def make_channel(width: float, axis: str = "vertical", rule: str = "no-slip") -> Table:
    """Infinite strip. ``axis`` names the direction the channel runs in."""
    if not width > 0.0:
        raise GeometryError("channel width must be positive")
    h = width / 2.0
    if axis == "vertical":
        walls = (BoundaryComponent.line((-h, 0.0), (0.0, 1.0), (1.0, 0.0), 0, rule=rule),
                 BoundaryComponent.line((h, 0.0), (0.0, 1.0), (-1.0, 0.0), 1, rule=rule))
    elif axis == "horizontal":
        walls = (BoundaryComponent.line((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), 0, rule=rule),
                 BoundaryComponent.line((0.0, width), (1.0, 0.0), (0.0, -1.0), 1, rule=rule))
    else:
        raise GeometryError(f"unknown channel axis {axis!r}")
    src = {"kind": "channel", "width": width, "axis": axis, "rule": rule}
    return _finish(Table(walls, name=f"{axis}-channel", scale=width), src)


def table_from_dict(d: dict[str, Any]) -> Table:
    """Inverse of :meth:`Table.to_dict`."""
    kind = d.get("kind")
    rule = d.get("rule", "no-slip")
    if kind == "half-plane":
        return make_half_plane(rule)
    if kind == "wedge":
        spec = WedgeSpec(float(d["half_angle"]), d.get("orientation", "opening-up"),
                         tuple(d.get("vertex", (0.0, 0.0))))
        return make_wedge(spec, rule)
    if kind == "polygon":
        return make_regular_polygon(int(d["sides"]), float(d.get("circumradius", 1.0)), rule)
    if kind == "sinai-cell":
        return make_sinai_cell(d["cell"], float(d["side"]), float(d["scatterer_radius"]),
                               bool(d.get("periodic", False)), rule)
    if kind == "galton":
        return make_galton_board(float(d.get("spacing", 1.0)),
                                 float(d.get("scatterer_radius", 0.25)),
                                 float(d.get("top_height", 1.5)),
                                 d.get("terminal_height"), rule)
    if kind == "two-disk":
        return make_two_disk_table(float(d["radius"]), float(d.get("center_distance", 2.0)), rule)
    if kind == "channel":
        return make_channel(float(d["width"]), d.get("axis", "vertical"), rule)
    if kind == "components":
        comps = tuple(BoundaryComponent.from_dict(c) for c in d["components"])
        return Table(comps, name=d.get("name", ""), scale=float(d.get("scale", 1.0)))
    raise GeometryError(f"unknown table kind {kind!r}")


def with_rule(table: Table, rule: str) -> Table:
    """Copy of ``table`` with every reflecting component switched to ``rule``."""
    comps = tuple(replace(c, rule=rule) if c.rule in ("no-slip", "specular") else c
                  for c in table.components)
    lat = replace(table.lattice, rule=rule) if table.lattice is not None else None
    src = dict(table.source, rule=rule) if table.source else {}
    return _finish(Table(comps, table.tiling, table.name, table.scale, lat), src)
