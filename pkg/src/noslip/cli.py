"""Command-line front end.

Every subcommand reads a JSON config (``--config``), applies flag
overrides, validates against a per-command schema, runs, and writes its
artifacts plus ``metadata.json`` into ``--out``.  A metadata sidecar from an
earlier run is itself accepted as a config.

Exit codes: 0 success, 1 invalid config, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any

import jsonschema

from . import output
from .dynamics import (
    ForceField,
    MassDistribution,
    ParticleState,
    SimulationError,
    run_orbit,
)
from .experiments import (
    GaltonConfig,
    PhasePortraitConfig,
    galton_histogram,
    run_channel_boundedness,
    run_galton,
    sample_phase_portrait,
)
from .geometry import GeometryError, table_from_dict
from .orbits import (
    SCENARIOS,
    StabilityGridSpec,
    WedgePeriodicSpec,
    closure_error,
    construct_wedge_periodic,
    stability_grid,
)


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


_num = {"type": "number"}
_int = {"type": "integer"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_force = {"type": "object", "properties": {"g": _num, "direction": _pair},
          "additionalProperties": False}
_table = {"type": "object", "required": ["kind"]}

SCHEMAS: dict[str, dict] = {
    "simulate": {
        "type": "object",
        "required": ["table", "initial"],
        "properties": {
            "table": _table, "gamma": _num, "force": _force,
            "initial": {"type": "object", "required": ["pos", "vel"],
                        "properties": {"x": _num, "pos": _pair,
                                       "vel": {"type": "array", "items": _num,
                                               "minItems": 3, "maxItems": 3}},
                        "additionalProperties": False},
            "n_collisions": _int, "t_max": {"type": ["number", "null"]},
            "rule": {"enum": [None, "no-slip", "specular"]},
            "seed": _int,
        },
        "additionalProperties": False,
    },
    "periodic": {
        "type": "object",
        "required": ["half_angle", "launch_angle"],
        "properties": {
            "half_angle": _num, "launch_angle": _num, "distance": _num, "g": _num,
            "gamma": _num, "orientation": {"enum": ["opening-up", "opening-down"]},
            "force_direction": _pair, "n_collisions": _int, "seed": _int,
        },
        "additionalProperties": False,
    },
    "galton": {"type": "object", "properties": {
        "spacing": _num, "scatterer_radius": _num, "top_height": _num, "n_rows": _int,
        "n_particles": _int, "speed": _num, "spin": _num, "drop_point": _pair, "t_max": _num,
        "seed": _int, "rule": {"enum": ["no-slip", "specular"]}, "gamma": _num, "g": _num,
        "directions": {"enum": ["downward", "full"]}, "random_spin": {"type": "boolean"},
        "max_collisions": _int, "spacings_per_bin": _int}, "additionalProperties": False},
    "phase-portrait": {
        "type": "object", "required": ["table"],
        "properties": {"table": _table, "gamma": _num, "force": _force, "n_orbits": _int,
                       "collisions_per_orbit": _int, "seed": _int,
                       "region": {"enum": ["uniform"]},
                       "mode": {"enum": ["velocity-disk", "s-vs-angle"]}},
        "additionalProperties": False,
    },
    "stability-grid": {
        "type": "object",
        "properties": {"scenario": {"enum": list(SCENARIOS)}, "radius_range": _pair,
                       "n_radius": _int, "angle_range": _pair, "n_angle": _int,
                       "perturbation": _num, "max_collisions": _int, "gamma": _num, "g": _num,
                       "launch_angle": _num, "contact_angle": _num, "tangent_margin": _num,
                       "seed": _int},
        "additionalProperties": False,
    },
    "channel": {
        "type": "object",
        "properties": {"width": _num, "orientation": {"enum": ["none", "parallel", "orthogonal"]},
                       "gamma": _num, "n_trials": _int, "n_collisions": _int, "g": _num,
                       "speed": _num, "seed": _int},
        "additionalProperties": False,
    },
}


def load_config(command: str, path: str | None, seed: int | None) -> dict[str, Any]:
    cfg: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if isinstance(cfg, dict) and "config" in cfg and "command" in cfg:
            if cfg["command"] != command:
                raise ConfigError(f"sidecar was written by {cfg['command']!r}, not {command!r}")
            cfg = cfg["config"]
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if seed is not None:
        cfg["seed"] = seed
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid {command} config: {exc.message}") from exc
    return cfg


def _force(cfg) -> ForceField:
    f = cfg.get("force", {})
    return ForceField(float(f.get("g", 0.0)), tuple(f.get("direction", (0.0, -1.0))))


# ------------------------------------------------------------ commands


def cmd_simulate(cfg, out: Path, threads: int, svg: bool) -> dict:
    table = table_from_dict(cfg["table"])
    force = _force(cfg)
    mass = MassDistribution(float(cfg.get("gamma", 1.0 / math.sqrt(2.0))))
    ini = cfg["initial"]
    state = ParticleState(float(ini.get("x", 0.0)), tuple(ini["pos"]), tuple(ini["vel"]))
    if not table.contains(state.pos) and min(c.distance(state.pos)
                                             for c in table.components) > 1e-9 * table.scale:
        raise ConfigError(f"initial position {state.pos} is outside the table")
    t_max = cfg.get("t_max")
    orbit = run_orbit(state, table, force, mass, int(cfg.get("n_collisions", 100)),
                      math.inf if t_max is None else float(t_max), cfg.get("rule"))
    output.write_csv(out / "events.csv", output.EVENT_HEADER,
                     output.event_rows(orbit.events, orbit.status))
    if svg:
        (out / "trajectory.svg").write_text(
            output.render_trajectory(table, orbit.events, state, force))
    print(f"{len(orbit.events)} collisions, status {orbit.status}")
    return {"status": orbit.status, "n_collisions": len(orbit.events)}


def cmd_periodic(cfg, out: Path, threads: int, svg: bool) -> dict:
    spec = WedgePeriodicSpec(
        float(cfg["half_angle"]), float(cfg["launch_angle"]), float(cfg.get("distance", 1.0)),
        float(cfg.get("g", 1.0)), float(cfg.get("gamma", 1.0 / math.sqrt(2.0))),
        cfg.get("orientation", "opening-up"))
    fd = cfg.get("force_direction")
    orbit = construct_wedge_periodic(spec, tuple(fd) if fd is not None else None)
    n = int(cfg.get("n_collisions", 2))
    err = closure_error(orbit, n)
    if not math.isfinite(err):
        raise NumericalError("constructed orbit did not complete its collisions")
    print(f"v = {orbit.speed!r}")
    print(f"x0' (wedge frame) = {orbit.spin!r}")
    print(f"initial state: pos = {orbit.state.pos}, vel = {orbit.state.vel}")
    print(f"closure error after {n} collisions = {err:.3e}")
    res = {"speed": orbit.speed, "wedge_spin": orbit.spin, "pos": list(orbit.state.pos),
           "vel": list(orbit.state.vel), "q0": list(orbit.q0), "q1": list(orbit.q1),
           "flight_time": orbit.flight_time, "closure_error": err, "n_collisions": n}
    with open(out / "periodic.json", "w") as fh:
        json.dump(res, fh, indent=2)
    if svg:
        o = run_orbit(orbit.state, orbit.table, orbit.force, orbit.mass, n)
        (out / "trajectory.svg").write_text(
            output.render_trajectory(orbit.table, o.events, orbit.state, orbit.force))
    return res


def cmd_galton(cfg, out: Path, threads: int, svg: bool) -> dict:
    cfg = dict(cfg)
    per_bin = int(cfg.pop("spacings_per_bin", 1))
    config = GaltonConfig.from_dict(cfg)
    result = run_galton(config, threads)
    output.write_csv(out / "galton.csv", output.GALTON_HEADER,
                     output.galton_rows(result.outcomes))
    counts, edges = galton_histogram(result, per_bin)
    if svg and counts.size:
        (out / "histogram.svg").write_text(
            output.render_histogram(counts, (float(edges[0]), float(edges[-1]))))
    trapped = [{"particle": o.particle, "status": o.status, "last_cell": o.last_cell,
                "bbox": o.bbox} for o in result.trapped]
    print(f"arrived {int(counts.sum())} / {config.n_particles} ({result.arrival_fraction:.4f})")
    return {"arrival_fraction": result.arrival_fraction, "unfinished": result.unfinished,
            "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
            "trapped": trapped, "max_energy_drift": result.max_energy_drift,
            "resolved_config": config.to_dict()}


def cmd_phase_portrait(cfg, out: Path, threads: int, svg: bool) -> dict:
    table = table_from_dict(cfg["table"])
    config = PhasePortraitConfig(table, MassDistribution(float(cfg.get("gamma", 1 / math.sqrt(2)))),
                                 _force(cfg), int(cfg.get("n_orbits", 50)),
                                 int(cfg.get("collisions_per_orbit", 500)),
                                 int(cfg.get("seed", 0)), cfg.get("region", "uniform"))
    points, statuses = sample_phase_portrait(config, threads)
    output.write_ndjson(out / "phase.ndjson", output.phase_records(points))
    if svg:
        (out / "phase.svg").write_text(
            output.render_phase_portrait(points, cfg.get("mode", "velocity-disk")))
    print(f"{len(points)} phase points from {config.n_orbits} orbits")
    return {"n_points": len(points), "orbit_status": {str(k): v for k, v in statuses.items()}}


def cmd_stability_grid(cfg, out: Path, threads: int, svg: bool) -> dict:
    cfg = dict(cfg)
    scenario = cfg.pop("scenario", "no-force-horizontal")
    cfg.pop("seed", None)
    for k in ("radius_range", "angle_range"):
        if k in cfg:
            cfg[k] = tuple(cfg[k])
    spec = StabilityGridSpec(**cfg)
    rows = stability_grid(spec, scenario, threads)
    output.write_csv(out / "grid.csv", output.GRID_HEADER,
                     ((r.axis1, r.axis2, r.survival_count, r.status) for r in rows))
    if svg:
        (out / "grid.svg").write_text(output.render_grid(rows, spec.max_collisions))
    low = [[r.axis1, r.axis2] for r in rows if r.low_confidence]
    print(f"{len(rows)} cells, {sum(r.status == 'capped' for r in rows)} capped")
    return {"low_confidence_cells": low}


def cmd_channel(cfg, out: Path, threads: int, svg: bool) -> dict:
    res = run_channel_boundedness(
        float(cfg.get("width", 1.0)), cfg.get("orientation", "none"),
        MassDistribution(float(cfg.get("gamma", 1.0 / math.sqrt(2.0)))),
        int(cfg.get("n_trials", 100)), int(cfg.get("n_collisions", 20_000)),
        int(cfg.get("seed", 0)), float(cfg.get("g", 1.0)), float(cfg.get("speed", 1.0)),
        threads)
    header = ["trial"] + [f"extent_{c}" for c in res.checkpoints]
    output.write_csv(out / "channel.csv", header,
                     ([i, *map(float, e)] for i, e in enumerate(res.extents)))
    growth = res.growth()
    gmax = float(growth.max()) if growth.size else 0.0
    print(f"max relative growth {gmax:.3e} over {len(growth)} trials; dropped {res.dropped}")
    return {"max_growth": gmax, "dropped": res.dropped,
            "max_energy_drift": res.max_energy_drift}


COMMANDS = {
    "simulate": cmd_simulate,
    "periodic": cmd_periodic,
    "galton": cmd_galton,
    "phase-portrait": cmd_phase_portrait,
    "stability-grid": cmd_stability_grid,
    "channel": cmd_channel,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noslip", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR", default=".")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1, metavar="N")
        sp.add_argument("--svg", dest="svg", action="store_true", default=True)
        sp.add_argument("--no-svg", dest="svg", action="store_false")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.command, args.config, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        extra = COMMANDS[args.command](cfg, out, max(1, args.threads), args.svg)
    except (ConfigError, GeometryError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SimulationError, NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    output.write_metadata(out / "metadata.json", args.command, cfg,
                          time.perf_counter() - t0, extra)
    return 0


if __name__ == "__main__":
    sys.exit(main())
