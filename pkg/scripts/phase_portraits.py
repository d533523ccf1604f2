"""Velocity phase portraits for a gallery of no-slip tables.

Each table gets an NDJSON dump of its phase points and an SVG scatter in the
velocity disk, plus a per-table count of distinct visited locations.
"""

import argparse
import math
import os
from pathlib import Path

from noslip import output
from noslip.dynamics import NO_FORCE, ForceField, MassDistribution
from noslip.experiments import (
    PhasePortraitConfig,
    count_clusters,
    sample_phase_portrait,
    velocity_disk_projection,
)
from noslip.geometry import make_regular_polygon, make_sinai_cell

DISK = MassDistribution(1 / math.sqrt(2))


def gallery():
    yield "triangle", make_regular_polygon(3), DISK, NO_FORCE
    yield "square", make_regular_polygon(4), DISK, NO_FORCE
    yield "pentagon", make_regular_polygon(5), DISK, NO_FORCE
    yield "square-point-mass", make_regular_polygon(4), MassDistribution(0.0), NO_FORCE
    yield "sinai-square", make_sinai_cell("square", 2.0, 0.5, periodic=True), DISK, NO_FORCE
    yield "sinai-hexagon", make_sinai_cell("hexagon", 1.0, 0.3, periodic=True), DISK, NO_FORCE
    yield "sinai-square-gravity", make_sinai_cell("square", 2.0, 0.5, periodic=True), DISK, \
        ForceField(0.5)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--orbits", type=int, default=30)
    p.add_argument("--collisions", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", type=Path, default=Path("phase-out"))
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name, table, mass, force in gallery():
        cfg = PhasePortraitConfig(table, mass, force, args.orbits, args.collisions, args.seed)
        points, status = sample_phase_portrait(cfg, args.threads)
        output.write_ndjson(args.out / f"{name}.ndjson", output.phase_records(points))
        (args.out / f"{name}.svg").write_text(
            output.render_phase_portrait(points, options=output.RenderOptions(title=name)))
        proj = [velocity_disk_projection(q.v) for q in points]
        done = sum(s == "count" for s in status.values())
        print(f"{name:<22} {len(points):>7} points  {count_clusters(proj, 1e-6):>7} "
              f"distinct locations  {done}/{args.orbits} orbits complete")


if __name__ == "__main__":
    main()
