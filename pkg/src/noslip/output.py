"""SVG rendering of tables, trajectories and phase portraits, plus tabular writers.

Documents are assembled by hand so that identical input gives identical
bytes: coordinates are printed with a fixed number of digits and colours are
a pure function of the orbit id.
"""

from __future__ import annotations

import colorsys
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .dynamics import NO_FORCE, CollisionEvent, ForceField, ParticleState
from .geometry import Table

MAX_MARKERS = 200_000
ARC_SAMPLES = 32


def orbit_color(orbit_id: int) -> str:
    """Well-spread deterministic colour: golden-ratio hue steps."""
    hue = (0.61803398875 * orbit_id) % 1.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.45, 0.75)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _f(x: float) -> str:
    s = f"{x:.5f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


# ------------------------------------------------------------ scene


@dataclass
class Polyline:
    points: np.ndarray
    color: str = "#000000"
    width: float = 1.0
    cls: str = "line"


@dataclass
class Circle:
    center: tuple[float, float]
    radius: float
    color: str = "#000000"
    fill: str = "none"
    width: float = 1.0
    cls: str = "circle"


@dataclass
class PointSet:
    points: np.ndarray
    color: str = "#000000"
    radius: float = 1.0
    cls: str = "pt"


@dataclass
class Scene:
    viewport: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax (lab units)
    items: list = field(default_factory=list)
    title: str = ""
    size: tuple[int, int] = (600, 600)

    def __post_init__(self):
        x0, y0, x1, y1 = self.viewport
        if not (x1 > x0 and y1 > y0):
            raise ValueError("viewport must have positive area")

    def to_svg(self) -> str:
        x0, y0, x1, y1 = self.viewport
        w, h = self.size
        sx = w / (x1 - x0)
        sy = h / (y1 - y0)
        k = min(sx, sy)

        def tx(p):
            return (p[0] - x0) * k, (y1 - p[1]) * k

        out = io.StringIO()
        out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
        out.write(f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                  f'width="{_f((x1 - x0) * k)}" height="{_f((y1 - y0) * k)}" '
                  f'viewBox="0 0 {_f((x1 - x0) * k)} {_f((y1 - y0) * k)}">\n')
        if self.title:
            out.write(f"<title>{escape(self.title)}</title>\n")
        out.write('<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>\n')
        for it in self.items:
            if isinstance(it, Polyline):
                pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (tx(p) for p in it.points))
                out.write(f'<polyline class="{it.cls}" fill="none" stroke="{it.color}" '
                          f'stroke-width="{_f(it.width)}" points="{pts}"/>\n')
            elif isinstance(it, Circle):
                cx, cy = tx(it.center)
                out.write(f'<circle class="{it.cls}" cx="{_f(cx)}" cy="{_f(cy)}" '
                          f'r="{_f(it.radius * k)}" fill="{it.fill}" stroke="{it.color}" '
                          f'stroke-width="{_f(it.width)}"/>\n')
            elif isinstance(it, PointSet):
                seen = set()
                out.write(f'<g class="{it.cls}" fill="{it.color}">\n')
                for p in it.points:
                    a, b = tx(p)
                    key = (_f(a), _f(b))
                    if key in seen:
                        continue
                    seen.add(key)
                    out.write(f'<circle cx="{key[0]}" cy="{key[1]}" r="{_f(it.radius)}"/>\n')
                out.write("</g>\n")
        out.write("</svg>\n")
        return out.getvalue()


# ------------------------------------------------------------ tables


def _clip_param(anchor, direction, lo, hi, viewport):
    x0, y0, x1, y1 = viewport
    for a, d, m0, m1 in ((anchor[0], direction[0], x0, x1), (anchor[1], direction[1], y0, y1)):
        if abs(d) < 1e-15:
            if not m0 <= a <= m1:
                return None
            continue
        t0, t1 = sorted(((m0 - a) / d, (m1 - a) / d))
        lo, hi = max(lo, t0), min(hi, t1)
    return (lo, hi) if hi > lo else None


def arc_points(center, radius, start, span, n=ARC_SAMPLES) -> np.ndarray:
    a = start + span * np.linspace(0.0, 1.0, max(n, ARC_SAMPLES) + 1)
    return np.column_stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)])


def table_items(table: Table, viewport) -> list:
    items: list = []
    for c in table.components:
        color = {"no-slip": "#202020", "specular": "#2060c0", "periodic": "#a0a0a0",
                 "exit": "#c03030"}[c.rule]
        if c.is_segment:
            span = _clip_param(c.anchor, c.direction, *c.extent, viewport)
            if span is None:
                continue
            pts = np.array([[c.anchor[0] + t * c.direction[0], c.anchor[1] + t * c.direction[1]]
                            for t in span])
            items.append(Polyline(pts, color, 1.5, "boundary"))
        else:
            items.append(Polyline(arc_points(c.anchor, c.radius, *c.extent, 64), color, 1.5,
                                  "boundary"))
    lat = table.lattice
    if lat is not None:
        x0, y0, x1, y1 = viewport
        h = lat.row_height
        for k in range(max(lat.rows[0], math.floor(-y1 / h) - 1),
                       min(lat.rows[1], math.ceil(-y0 / h) + 1) + 1):
            for j in range(math.floor(x0 / lat.spacing) - 1, math.ceil(x1 / lat.spacing) + 2):
                cen = lat.center(k, j)
                if x0 - lat.radius <= cen[0] <= x1 + lat.radius and \
                        y0 - lat.radius <= cen[1] <= y1 + lat.radius:
                    items.append(Circle(cen, lat.radius, "#202020", "#e8e8e8", 1.0, "scatterer"))
    return items


# ------------------------------------------------------------ trajectories


def flight_arc(p0, v0, acc, dt, n=ARC_SAMPLES) -> np.ndarray:
    t = np.linspace(0.0, dt, max(n, ARC_SAMPLES) + 1)
    return np.column_stack([p0[0] + v0[0] * t + 0.5 * acc[0] * t * t,
                            p0[1] + v0[1] * t + 0.5 * acc[1] * t * t])


def trajectory_arcs(initial: ParticleState, events: Sequence[CollisionEvent],
                    force: ForceField = NO_FORCE, n=ARC_SAMPLES) -> list[np.ndarray]:
    """Sampled flight arcs, one per event, in the unfolded plane."""
    arcs = []
    p, v = initial.pos, initial.vel[1:]
    for ev in events:
        arcs.append(flight_arc(p, v, force.acceleration, ev.t_flight, n))
        p = ev.point
        v = ev.v_out[1:]
    return arcs


def _bounds(arrays: Iterable[np.ndarray], pad: float = 0.05):
    pts = np.vstack(list(arrays))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    m = pad * max(span)
    return (float(lo[0] - m), float(lo[1] - m), float(hi[0] + m), float(hi[1] + m))


@dataclass(frozen=True)
class RenderOptions:
    size: tuple[int, int] = (600, 600)
    viewport: tuple[float, float, float, float] | None = None
    samples_per_arc: int = ARC_SAMPLES
    color: str = "#c02060"
    title: str = ""


def render_trajectory(table: Table, events: Sequence[CollisionEvent],
                      initial: ParticleState | None = None, force: ForceField = NO_FORCE,
                      options: RenderOptions = RenderOptions()) -> str:
    """Table outline, flight arcs and start/end dots."""
    arcs = trajectory_arcs(initial, events, force, options.samples_per_arc) \
        if (initial is not None and events) else []
    if options.viewport is not None:
        vp = options.viewport
    elif arcs:
        vp = _bounds(arcs)
    else:
        vp = (-2.0 * table.scale, -2.0 * table.scale, 2.0 * table.scale, 2.0 * table.scale)
    scene = Scene(vp, table_items(table, vp), options.title, options.size)
    for a in arcs:
        scene.items.append(Polyline(a, options.color, 1.0, "arc"))
    if arcs:
        r = 0.01 * max(vp[2] - vp[0], vp[3] - vp[1])
        scene.items.append(Circle(tuple(arcs[0][0]), r, options.color, options.color, 1.0,
                                  "marker"))
        scene.items.append(Circle(tuple(arcs[-1][-1]), r, options.color, options.color, 1.0,
                                  "marker"))
    return scene.to_svg()


# ------------------------------------------------------------ phase portraits


def thin(n: int, cap: int = MAX_MARKERS) -> np.ndarray:
    """Deterministic subset of range(n) of size at most ``cap``."""
    if n <= cap:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, cap).round().astype(np.int64))


def phase_coordinates(points, mode: str) -> np.ndarray:
    if mode == "velocity-disk":
        return np.array([[p.v[0], p.v[1]] for p in points]).reshape(-1, 2)
    if mode == "s-vs-angle":
        return np.array([[p.s, math.atan2(p.v[1], p.v[2])] for p in points]).reshape(-1, 2)
    raise ValueError(f"unknown phase-portrait mode {mode!r}")


def render_phase_portrait(points, mode: str = "velocity-disk",
                          options: RenderOptions = RenderOptions()) -> str:
    coords = phase_coordinates(points, mode)
    keep = thin(len(points))
    if mode == "velocity-disk":
        vp = (-1.05, -1.05, 1.05, 1.05)
        frame = [Circle((0.0, 0.0), 1.0, "#404040", "none", 1.0, "frame")]
    else:
        vp = (-0.02, -math.pi / 2 - 0.05, 1.02, math.pi / 2 + 0.05)
        frame = [Polyline(np.array([[0, -math.pi / 2], [1, -math.pi / 2], [1, math.pi / 2],
                                    [0, math.pi / 2], [0, -math.pi / 2]]), "#404040", 1.0,
                          "frame")]
    scene = Scene(vp, frame, options.title, options.size)
    ids = np.array([points[i].orbit_id for i in keep], dtype=np.int64)
    for oid in sorted(set(ids.tolist())):
        sel = keep[ids == oid]
        scene.items.append(PointSet(coords[sel], orbit_color(oid), 1.2, "orbit"))
    return scene.to_svg()


# ------------------------------------------------------------ tabular writers


def _cell(x: Any) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.generic):
        return _json_safe(x.item())
    return x


def write_ndjson(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(_json_safe(r), separators=(",", ":")) + "\n")


GALTON_HEADER = ("particle", "seed", "status", "terminal_y", "arrival_t", "n_collisions")
GRID_HEADER = ("axis1", "axis2", "survival_count", "status")
EVENT_HEADER = ("index", "t", "t_flight", "y", "z", "component_id", "x", "xdot_in",
                "ydot_in", "zdot_in", "xdot_out", "ydot_out", "zdot_out", "status")


def galton_rows(outcomes):
    for o in outcomes:
        yield (o.particle, o.seed, o.status, o.terminal_y, o.arrival_t, o.n_collisions)


def phase_records(points):
    for p in points:
        yield {"orbit_id": p.orbit_id, "collision_index": p.collision_index, "s": p.s,
               "v_rot": p.v[0], "v_tan": p.v[1], "v_nrm": p.v[2]}


def event_rows(events, status: str):
    """One row per collision and a final row carrying the termination status."""
    for i, e in enumerate(events):
        yield (i, e.t, e.t_flight, e.point[0], e.point[1], e.component_id, e.x, *e.v_in,
               *e.v_out, "")
    yield (len(events), "", "", "", "", "", "", "", "", "", "", "", "", status)


def write_metadata(path: str | Path, command: str, config: dict, wall_time: float,
                   extra: dict | None = None) -> None:
    meta = {"command": command, "config": config, "version": __version__,
            "wall_time_s": wall_time, "written": time.strftime("%Y-%m-%dT%H:%M:%S")}
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(_json_safe(meta), fh, indent=2)
        fh.write("\n")


# ------------------------------------------------------------ charts


def render_histogram(counts: Sequence[int], range_: tuple[float, float],
                     options: RenderOptions = RenderOptions()) -> str:
    counts = np.asarray(counts, dtype=float)
    lo, hi = range_
    top = max(float(counts.max()) if counts.size else 1.0, 1.0)
    scene = Scene((lo, -0.02, hi, 1.02), [], options.title, options.size)
    edges = np.linspace(lo, hi, len(counts) + 1)
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        h = c / top
        scene.items.append(Polyline(np.array([[a, 0], [a, h], [b, h], [b, 0]]),
                                    "#2060c0", 1.0, "bar"))
    scene.items.append(Polyline(np.array([[lo, 0], [hi, 0]]), "#000000", 1.0, "axis"))
    return scene.to_svg()


def render_grid(rows, max_count: int, options: RenderOptions = RenderOptions()) -> str:
    """Survival counts as grey cells; darker means more collisions survived."""
    a1 = np.array(sorted({r.axis1 for r in rows}))
    a2 = np.array(sorted({r.axis2 for r in rows}))
    d1 = (a1[-1] - a1[0]) / max(len(a1) - 1, 1) or 1.0
    d2 = (a2[-1] - a2[0]) / max(len(a2) - 1, 1) or 1.0
    vp = (a2[0] - d2, a1[0] - d1, a2[-1] + d2, a1[-1] + d1)
    scene = Scene(vp, [], options.title, options.size)
    for r in rows:
        level = min(r.survival_count / max_count, 1.0)
        shade = "#{0:02x}{0:02x}{0:02x}".format(round(255 * (1.0 - level)))
        x, y = r.axis2, r.axis1
        sq = np.array([[x - d2 / 2, y - d1 / 2], [x + d2 / 2, y - d1 / 2],
                       [x + d2 / 2, y + d1 / 2], [x - d2 / 2, y + d1 / 2],
                       [x - d2 / 2, y - d1 / 2]])
        scene.items.append(Polyline(sq, shade, 0.0, "cell"))
    return scene.to_svg()
