"""Construct path-reversing 2-periodic orbits in wedges and probe their stability.

Prints the launch speed, spin and closure error for a few wedges, then
bisects the launch angle at which the orbit for a fixed half-angle turns
linearly unstable, and writes trajectory SVGs.
"""

import argparse
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from noslip import output
from noslip.dynamics import run_orbit
from noslip.orbits import (
    WedgePeriodicSpec,
    closure_error,
    construct_wedge_periodic,
    period_two_multipliers,
)


def modulus(spec):
    o = construct_wedge_periodic(spec)
    return float(np.max(np.abs(period_two_multipliers(o.state, o.table, o.force, o.mass))))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--half-angle", type=float, default=math.pi / 7)
    p.add_argument("--collisions", type=int, default=100)
    p.add_argument("--out", type=Path, default=Path("wedge-out"))
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    specs = [WedgePeriodicSpec(math.pi / 6, math.pi / 4),
             WedgePeriodicSpec(math.pi / 4, math.pi / 8),
             WedgePeriodicSpec(args.half_angle, 0.3),
             WedgePeriodicSpec(args.half_angle, 1.0),
             WedgePeriodicSpec(math.pi / 5, 0.6, orientation="opening-down")]
    print(f"{'phi':>6} {'theta':>6} {'orientation':<12} {'v':>9} {'spin':>9} "
          f"{'err(2)':>8} {f'err({args.collisions})':>9} {'|mult|':>7}")
    for i, spec in enumerate(specs):
        o = construct_wedge_periodic(spec)
        print(f"{spec.half_angle:6.3f} {spec.launch_angle:6.3f} {spec.orientation:<12} "
              f"{o.speed:9.5f} {o.spin:9.5f} {closure_error(o, 2):8.1e} "
              f"{closure_error(o, args.collisions):9.1e} {modulus(spec):7.4f}")
        run = run_orbit(o.state, o.table, o.force, o.mass, 6)
        (args.out / f"wedge-{i}.svg").write_text(
            output.render_trajectory(o.table, run.events, o.state, o.force))

    # a slightly wrong spin drifts off the periodic orbit but stays near it
    o = construct_wedge_periodic(WedgePeriodicSpec(args.half_angle, 0.3))
    s = o.state
    bent = replace(s, vel=(s.vel[0] * 1.001, s.vel[1], s.vel[2]))
    run = run_orbit(bent, o.table, o.force, o.mass, 400)
    (args.out / "perturbed.svg").write_text(
        output.render_trajectory(o.table, run.events, bent, o.force))

    lo, hi = 0.3, 1.4
    if modulus(WedgePeriodicSpec(args.half_angle, hi)) <= 1 + 1e-6:
        print("no instability up to launch angle 1.4")
        return
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if modulus(WedgePeriodicSpec(args.half_angle, mid)) <= 1 + 1e-6 \
            else (lo, mid)
    print(f"\nhalf-angle {args.half_angle:.6f}: linear stability lost at launch angle "
          f"{lo:.7f}")


if __name__ == "__main__":
    main()
