import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noslip.dynamics import NO_FORCE, ForceField, MassDistribution, ParticleState, run_orbit
from noslip.experiments import (
    GaltonConfig,
    PhasePortraitConfig,
    count_clusters,
    galton_histogram,
    galton_initial_state,
    histogram,
    is_unimodal,
    particle_rng,
    run_channel_boundedness,
    run_galton,
    sample_phase_portrait,
    sample_skewness,
    velocity_disk_projection,
)
from noslip.geometry import make_regular_polygon, make_sinai_cell

DISK = MassDistribution(1 / math.sqrt(2))


# ------------------------------------------------------------ histogram


def test_histogram_examples():
    counts, under, over = histogram([0, 0, 1], 2, (0, 2))
    assert counts.tolist() == [2, 1] and (under, over) == (0, 0)
    counts, _, _ = histogram([0.7] * 5, 4, (0, 1))
    assert np.count_nonzero(counts) == 1 and counts.sum() == 5
    counts, under, over = histogram([], 3, (0, 1))
    assert counts.tolist() == [0, 0, 0] and (under, over) == (0, 0)
    with pytest.raises(ValueError):
        histogram([1.0], 0, (0, 1))


@given(st.lists(st.floats(-10, 10), max_size=200), st.integers(1, 30))
def test_histogram_preserves_total_count(values, n_bins):
    counts, under, over = histogram(values, n_bins, (-3.0, 4.0))
    assert counts.sum() + under + over == len(values)


def test_skewness_and_unimodality():
    rng = np.random.default_rng(0)
    x = rng.normal(size=20_000)
    assert abs(sample_skewness(x)) < 0.05
    assert sample_skewness(rng.exponential(size=20_000)) > 1.5
    counts, _, _ = histogram(x, 20, (-4, 4))
    assert is_unimodal(counts)
    assert not is_unimodal([10, 200, 10, 200, 10])
    # sparse tails: 8 then 2 is within Poisson noise of the difference
    assert is_unimodal([0, 2, 8, 2, 7, 40, 90, 40, 3])
    assert not is_unimodal([0, 400, 250, 400, 0])


# ------------------------------------------------------------ Galton


def test_particle_streams_are_independent_of_evaluation_order():
    a = [particle_rng(3, i).uniform() for i in range(5)]
    b = [particle_rng(3, i).uniform() for i in reversed(range(5))][::-1]
    assert a == b
    assert len(set(a)) == 5


def test_galton_initial_directions_point_down():
    cfg = GaltonConfig(n_particles=10)
    for i in range(50):
        s = galton_initial_state(cfg, i)
        assert s.vel[2] <= 0.0 and s.vel[0] == 0.0
        assert math.hypot(s.vel[1], s.vel[2]) == pytest.approx(1.0)


def test_galton_run_is_reproducible_and_thread_independent():
    cfg = GaltonConfig(n_particles=40, t_max=200.0, seed=11)
    a = run_galton(cfg, threads=1)
    b = run_galton(cfg, threads=4)
    assert a.outcomes == b.outcomes
    assert run_galton(cfg).outcomes == a.outcomes


def test_galton_energy_is_conserved_per_particle():
    res = run_galton(GaltonConfig(n_particles=40, t_max=300.0))
    assert res.max_energy_drift < 1e-8


def test_more_time_never_loses_arrivals():
    short = run_galton(GaltonConfig(n_particles=60, t_max=60.0, seed=2))
    long = run_galton(GaltonConfig(n_particles=60, t_max=240.0, seed=2))
    assert long.arrival_fraction >= short.arrival_fraction
    for s, l in zip(short.outcomes, long.outcomes):
        if s.status == "arrived":
            assert l.status == "arrived"
            assert l.arrival_t == s.arrival_t


def test_unfinished_particles_carry_trap_diagnostics():
    res = run_galton(GaltonConfig(n_particles=30, t_max=20.0))
    assert res.unfinished > 0
    for o in res.trapped:
        assert o.last_cell is not None
        y0, z0, y1, z1 = o.bbox
        assert y0 <= y1 and z0 <= z1


def test_galton_histogram_edges_sit_on_bottom_row_centres():
    cfg = GaltonConfig(n_particles=200, t_max=400.0)
    res = run_galton(cfg)
    counts, edges = galton_histogram(res)
    assert counts.sum() == len(res.displacements())
    assert np.allclose(np.diff(edges), cfg.spacing)
    centre = cfg.board().lattice.center(cfg.n_rows - 1, 0)[0] - cfg.drop_point[0]
    assert np.allclose(np.mod(edges - centre + 0.25, cfg.spacing), 0.25)
    counts2, edges2 = galton_histogram(res, 3)
    assert counts2.sum() == counts.sum()
    assert np.allclose(np.diff(edges2), 3 * cfg.spacing)
    with pytest.raises(ValueError):
        galton_histogram(res, 0)


def test_straight_drop_down_an_empty_column_without_force():
    cfg = GaltonConfig(spacing=100.0, scatterer_radius=1.0, n_rows=1, drop_point=(25.0, 0.5),
                       g=0.0)
    board = cfg.board()
    orbit = run_orbit(ParticleState(pos=(25.0, 0.5), vel=(0.0, 0.0, -1.0)), board, NO_FORCE,
                      cfg.mass, 10)
    assert orbit.status == "exited"
    assert orbit.final.t == pytest.approx(0.5 - cfg.terminal_height, rel=1e-12)


def test_galton_config_round_trip_and_validation():
    cfg = GaltonConfig(n_particles=5, rule="specular")
    assert GaltonConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.mass.gamma == 0.0
    with pytest.raises(ValueError):
        GaltonConfig.from_dict({"n_particles": 5, "colour": "red"})
    for kw in (dict(n_particles=0), dict(t_max=0.0), dict(rule="sticky"),
               dict(scatterer_radius=0.6), dict(drop_point=(0.0, 0.0))):
        with pytest.raises(ValueError):
            GaltonConfig(**kw)


# ------------------------------------------------------------ phase portraits


def test_velocity_disk_projection_examples():
    assert velocity_disk_projection((0.0, 0.0, 1.0)) == (0.0, 0.0)
    assert velocity_disk_projection((1.0, 0.0, 0.0)) == (1.0, 0.0)


def test_projection_lies_in_unit_disk():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        v[2] = abs(v[2])
        u, w = velocity_disk_projection(v)
        assert u * u + w * w <= 1.0 + 1e-12


def test_phase_points_are_unit_outgoing_velocities():
    cfg = PhasePortraitConfig(make_sinai_cell("square", 2.0, 0.5, periodic=True), DISK,
                              ForceField(0.5), n_orbits=5, collisions_per_orbit=200)
    points, status = sample_phase_portrait(cfg)
    assert set(status.values()) == {"count"}
    assert len(points) == 1000
    for p in points:
        assert np.linalg.norm(p.v) == pytest.approx(1.0, abs=1e-9)
        assert p.v[2] >= -1e-12
        assert 0.0 <= p.s < 1.0


def test_point_mass_keeps_its_spin_rate_in_the_square():
    cfg = PhasePortraitConfig(make_regular_polygon(4), MassDistribution(0.0), NO_FORCE,
                              n_orbits=6, collisions_per_orbit=300)
    points, _ = sample_phase_portrait(cfg)
    for o in range(6):
        rot = np.array([abs(p.v[0]) for p in points if p.orbit_id == o])
        assert np.ptp(rot) < 1e-12


def test_triangle_orbits_are_periodic_with_few_clusters():
    cfg = PhasePortraitConfig(make_regular_polygon(3), DISK, NO_FORCE, n_orbits=12,
                              collisions_per_orbit=240)
    points, _ = sample_phase_portrait(cfg)
    for o in range(12):
        pts = [p for p in points if p.orbit_id == o]
        v = np.array([p.v for p in pts])
        s = np.array([p.s for p in pts])
        period = next(k for k in range(1, 13)
                      if np.allclose(v[k:], v[:-k], atol=1e-9) and np.allclose(s[k:], s[:-k], atol=1e-9))
        assert 12 % period == 0
        proj = [velocity_disk_projection(p.v) for p in pts]
        assert count_clusters(proj, 1e-6) <= period


def test_phase_portrait_is_deterministic():
    cfg = PhasePortraitConfig(make_regular_polygon(5), DISK, n_orbits=4, collisions_per_orbit=50,
                              seed=9)
    assert sample_phase_portrait(cfg) == sample_phase_portrait(cfg, threads=3)


def test_phase_config_validation():
    with pytest.raises(ValueError):
        PhasePortraitConfig(make_regular_polygon(3), n_orbits=0)
    with pytest.raises(ValueError):
        PhasePortraitConfig(make_regular_polygon(3), region="corners")


def test_count_clusters():
    assert count_clusters([]) == 0
    assert count_clusters([(0, 0)]) == 1
    assert count_clusters([(0, 0), (0, 1e-8), (1, 1)]) == 2


# ------------------------------------------------------------ channels


@pytest.mark.parametrize("orientation", ["none", "parallel", "orthogonal"])
def test_channel_extent_stops_growing(orientation):
    res = run_channel_boundedness(1.0, orientation, DISK, n_trials=8, n_collisions=2000,
                                  speed=2.0)
    assert res.extents.shape == (8 - res.dropped, 2)
    assert np.all(np.isfinite(res.extents))
    assert np.max(res.growth()) < 0.01
    assert res.max_energy_drift < 1e-9


def test_channel_rejects_bad_setups():
    with pytest.raises(ValueError):
        run_channel_boundedness(0.0, "none", DISK)
    with pytest.raises(ValueError):
        run_channel_boundedness(1.0, "diagonal", DISK)
    with pytest.raises(ValueError):
        run_channel_boundedness(4.0, "orthogonal", DISK, speed=1.0)
