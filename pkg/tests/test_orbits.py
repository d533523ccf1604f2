import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noslip.dynamics import (
    ForceField,
    MassDistribution,
    ParticleState,
    propagate,
    run_orbit,
)
from noslip.geometry import make_half_plane
from noslip.orbits import (
    SCENARIOS,
    EscapeCriterion,
    StabilityGridSpec,
    WedgePeriodicSpec,
    analytic_stable,
    bounce_velocity_matrix,
    closure_error,
    construct_half_plane_bounce,
    construct_wedge_periodic,
    construct_wedge_periodic_no_force,
    ellipticity_threshold,
    half_plane_ratio_sign,
    is_linearly_stable_no_force,
    no_force_wedge_condition,
    period_displacements,
    period_two_multipliers,
    stability_grid,
    survival_count,
    two_disk_setup,
    wedge_speed,
    wedge_spin,
)
from noslip.orbits import _closes, _half_plane_state

DISK = MassDistribution(1 / math.sqrt(2))


# ------------------------------------------------------------ bounce matrix


def test_bounce_matrix_examples():
    np.testing.assert_allclose(bounce_velocity_matrix(MassDistribution(0.0)),
                               np.diag([-1.0, 1.0, -1.0]))
    np.testing.assert_allclose(bounce_velocity_matrix(MassDistribution(1.0)),
                               [[0, 1, 0], [1, 0, 0], [0, 0, -1]], atol=1e-15)


@given(st.floats(0, 10))
def test_bounce_matrix_is_an_involution(g):
    S = bounce_velocity_matrix(MassDistribution(g))
    np.testing.assert_allclose(S @ S, np.eye(3), atol=1e-12)


# ------------------------------------------------------------ half plane


@pytest.mark.parametrize("gamma", [0.3, 1 / math.sqrt(2), 1.0, 2.5])
def test_exactly_one_ratio_sign_closes(gamma):
    m = MassDistribution(gamma)
    closes = [_closes(_half_plane_state(m, 1.0, 0.5, s, math.pi / 4), m, 1.0) for s in (1, -1)]
    assert closes.count(True) == 1
    assert half_plane_ratio_sign(gamma) == (1.0 if closes[0] else -1.0)


def test_half_plane_bounce_closes_every_two_collisions():
    s = construct_half_plane_bounce(DISK, speed=1.0, z0=0.5)
    orbit = run_orbit(s, make_half_plane(), ForceField(1.0), DISK, n_collisions=50)
    assert len(orbit.events) == 50
    assert np.max(np.abs(period_displacements(orbit.points))) < 1e-8


def test_half_plane_off_condition_drifts_at_a_constant_rate():
    s = construct_half_plane_bounce(DISK, speed=1.0, z0=0.5)
    s = replace(s, vel=(s.vel[0], 1.1 * s.vel[1], s.vel[2]))
    orbit = run_orbit(s, make_half_plane(), ForceField(1.0), DISK, n_collisions=50)
    drift = period_displacements(orbit.points)[::2]
    assert np.linalg.norm(drift[0]) > 1e-3
    assert np.max(np.abs(drift - drift[0])) < 1e-9


@given(st.floats(0.5, 1.5), st.floats(-1, 1), st.floats(0.2, 1.3))
def test_half_plane_velocity_is_two_periodic_for_any_ratio(scale, spin, elev):
    s = construct_half_plane_bounce(DISK, speed=1.0, z0=0.3, elevation=elev)
    s = replace(s, vel=(s.vel[0] + spin, scale * s.vel[1], s.vel[2]))
    orbit = run_orbit(s, make_half_plane(), ForceField(1.0), DISK, n_collisions=12)
    v = np.array([e.v_out for e in orbit.events])
    np.testing.assert_allclose(v[2:], v[:-2], atol=1e-10)


def test_half_plane_bounce_rejects_point_mass_and_bad_inputs():
    with pytest.raises(ValueError):
        construct_half_plane_bounce(MassDistribution(0.0))
    with pytest.raises(ValueError):
        construct_half_plane_bounce(DISK, speed=0.0)
    with pytest.raises(ValueError):
        construct_half_plane_bounce(DISK, z0=-1.0)


# ------------------------------------------------------------ wedge formulas


def test_wedge_speed_examples():
    # range v^2 sin(2 theta) / g equals the chord length d
    assert wedge_speed(1.0, 1.0, math.pi / 4) == pytest.approx(1.0)
    assert wedge_speed(2.0, 1.0, math.pi / 4) == pytest.approx(math.sqrt(2.0))
    assert wedge_speed(1.0, 1.0, math.pi / 8) == pytest.approx(1.189207115002721)
    for bad in (0.0, math.pi / 2):
        with pytest.raises(ValueError):
            wedge_speed(1.0, 1.0, bad)


@given(st.floats(0.05, 1.5), st.floats(0.1, 5), st.floats(0.1, 5))
def test_wedge_speed_lands_at_chord_end(theta, g, d):
    # independent route: fly the projectile for its time of flight 2 v sin(theta) / g
    v = wedge_speed(g, d, theta)
    s = ParticleState(pos=(0.0, 0.0), vel=(0.0, v * math.cos(theta), v * math.sin(theta)))
    out = propagate(s, 2 * v * math.sin(theta) / g, ForceField(g))
    assert out.pos == pytest.approx((d, 0.0), abs=1e-9 * max(1.0, d))


def test_wedge_spin_examples():
    assert wedge_spin(1.3, 0.4, 0.4, 0.7) == 0.0
    assert wedge_spin(2.0, math.pi / 3, math.pi / 6, 1 / math.sqrt(2)) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        wedge_spin(1.0, 0.5, 0.3, 0.0)


@given(st.floats(0.1, 5), st.floats(0.05, 1.5), st.floats(0.05, 5))
def test_no_force_condition_is_the_zero_launch_limit_of_the_spin_formula(v, phi, gamma):
    spin = wedge_spin(v, 0.0, phi, gamma)
    assert spin * gamma / v == pytest.approx(-math.sin(phi))
    assert no_force_wedge_condition(v, spin, phi) == pytest.approx(gamma)


def test_no_force_condition_examples():
    assert no_force_wedge_condition(-1.0, 1.0, math.pi / 6) == pytest.approx(0.5)
    assert no_force_wedge_condition(-math.sqrt(2), 1.0, math.pi / 4) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        no_force_wedge_condition(1.0, 0.0, 0.3)


def test_no_force_orbit_is_two_periodic():
    o = construct_wedge_periodic_no_force(math.pi / 5, 1.0, 1.0, 0.6)
    assert no_force_wedge_condition(o.speed, o.spin, math.pi / 5) == pytest.approx(0.6)
    assert closure_error(o, 2) < 1e-8
    assert closure_error(o, 50) < 1e-8


def test_wedge_orbit_examples_close():
    up = construct_wedge_periodic(WedgePeriodicSpec(math.pi / 6, math.pi / 4))
    down = construct_wedge_periodic(WedgePeriodicSpec(math.pi / 6, math.pi / 4,
                                                      orientation="opening-down"))
    assert down.force.direction == (0.0, 1.0)
    for o in (up, down):
        assert closure_error(o, 2) < 1e-8


def test_wedge_orbit_is_path_reversing():
    o = construct_wedge_periodic(WedgePeriodicSpec(math.pi / 7, 0.7, gamma=0.9))
    orbit = run_orbit(o.state, o.table, o.force, o.mass, 2)
    first = orbit.events[0]
    assert first.point == pytest.approx(o.q1, abs=1e-12)
    np.testing.assert_allclose(first.v_out, -np.array(first.v_in), atol=1e-12)
    np.testing.assert_allclose(orbit.events[1].v_out, o.state.vel, atol=1e-12)


def test_run_orbit_returns_to_q0_over_a_hundred_collisions():
    o = construct_wedge_periodic(WedgePeriodicSpec(math.pi / 6, math.pi / 4))
    orbit = run_orbit(o.state, o.table, o.force, o.mass, 100)
    np.testing.assert_allclose(orbit.points[1::2], np.tile(o.q0, (50, 1)), atol=1e-6)


def test_force_must_point_toward_the_vertex():
    with pytest.raises(ValueError):
        construct_wedge_periodic(WedgePeriodicSpec(0.5, 0.5, orientation="opening-down"),
                                 force_direction=(0.0, -1.0))
    construct_wedge_periodic(WedgePeriodicSpec(0.5, 0.5), force_direction=(0.0, -1.0))


@pytest.mark.parametrize("kw", [dict(half_angle=0.0), dict(half_angle=math.pi / 2),
                                dict(launch_angle=0.0), dict(launch_angle=math.pi / 2),
                                dict(distance=0.0), dict(g=0.0), dict(gamma=0.0),
                                dict(orientation="sideways")])
def test_wedge_spec_validation(kw):
    args = dict(half_angle=0.5, launch_angle=0.5) | kw
    with pytest.raises(ValueError):
        WedgePeriodicSpec(**args)


wedge_specs = st.builds(
    WedgePeriodicSpec,
    half_angle=st.floats(0.1, 1.4), launch_angle=st.floats(0.1, 1.4),
    distance=st.floats(0.5, 2.0), g=st.floats(0.5, 2.0), gamma=st.floats(0.2, 2.0),
    orientation=st.sampled_from(["opening-up", "opening-down"]),
).filter(lambda s: abs(math.sin(s.launch_angle - s.half_angle)) >= 0.05)


@given(wedge_specs)
def test_wedge_orbit_closes_and_needs_its_spin(spec):
    o = construct_wedge_periodic(spec)
    assert closure_error(o, 2) < 1e-7
    s = o.state
    wrong = replace(o, state=replace(s, vel=(1.5 * s.vel[0], s.vel[1], s.vel[2])))
    # the landing point's sensitivity to spin dips near zero on a thin set of
    # wedges (down to ~5e-5 here), so the bar is ten times the closure tolerance
    assert closure_error(wrong, 2) > 1e-6


def test_perturbed_spin_stays_in_a_corridor():
    o = construct_wedge_periodic(WedgePeriodicSpec(math.pi / 7, 0.3))
    s = o.state
    p = replace(s, vel=(s.vel[0] * (1 + 1e-3), s.vel[1], s.vel[2]))
    orbit = run_orbit(p, o.table, o.force, o.mass, 2000)
    assert orbit.status == "count"
    target = np.array([o.q1, o.q0])[np.arange(2000) % 2]
    assert np.max(np.linalg.norm(orbit.points - target, axis=1)) < 1e-2


def test_launch_angle_stability_threshold():
    # elliptic at 1.121, hyperbolic at 1.126 (half-angle pi/7)
    def modulus(theta):
        o = construct_wedge_periodic(WedgePeriodicSpec(math.pi / 7, theta))
        return max(abs(period_two_multipliers(o.state, o.table, o.force, o.mass)))

    assert modulus(1.121) < 1 + 1e-6
    assert modulus(1.126) > 1.1
    lo, hi = 1.121, 1.126
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if modulus(mid) < 1 + 1e-6 else (lo, mid)
    assert abs(lo - 1.122) < 5e-4
    # frozen value of the bisection, independent of gamma
    assert lo == pytest.approx(1.1219974, abs=2e-6)


# ------------------------------------------------------------ ellipticity


def test_ellipticity_examples():
    beta = DISK.beta
    assert ellipticity_threshold(beta, 0.0) == pytest.approx(1.0)
    assert is_linearly_stable_no_force(0.9, 1.0, beta, 0.0)
    assert not is_linearly_stable_no_force(1.1, 1.0, beta, 0.0)
    assert ellipticity_threshold(0.0, math.pi / 3) == pytest.approx(3.0)
    assert is_linearly_stable_no_force(2.0, 1.0, 0.0, math.pi / 3)
    with pytest.raises(ValueError):
        ellipticity_threshold(beta, math.pi / 2)


@pytest.mark.parametrize("radius,contact", [(0.5, 0.3), (0.8, 1.0), (0.2, 0.2), (0.3, 0.9)])
def test_ellipticity_agrees_with_numerical_multipliers(radius, contact):
    state, table, force, _ = two_disk_setup(radius, contact, 0.0, DISK.gamma, 0.0, 0.0)
    lam = max(abs(period_two_multipliers(state, table, force, DISK)))
    assert (lam < 1 + 1e-6) == analytic_stable(radius, contact, DISK.gamma)


# ------------------------------------------------------------ survival


def test_survival_of_exact_orbit_is_capped():
    assert analytic_stable(0.8, 1.0, DISK.gamma)
    state, table, force, escape = two_disk_setup(0.8, 1.0, 0.0, DISK.gamma, 0.0, 0.0)
    assert survival_count(state, table, force, DISK, 500, escape) == (500, "capped")


def test_survival_of_missing_state_is_immediate():
    state, table, force, escape = two_disk_setup(0.5, 0.3, 0.0, DISK.gamma, 0.0, 0.0)
    away = replace(state, vel=(0.0, -1.0, 0.0))
    n, status = survival_count(away, table, force, DISK, 500, escape)
    assert n <= 1 and status == "escaped"


def test_survival_of_unstable_orbit_is_short():
    assert not analytic_stable(0.1, 0.3, DISK.gamma)
    state, table, force, escape = two_disk_setup(0.1, 0.3, 0.0, DISK.gamma, 0.0, 1e-3)
    n, status = survival_count(state, table, force, DISK, 1000, escape)
    assert status == "escaped" and n < 100


def test_escape_by_component():
    state, table, force, _ = two_disk_setup(0.5, 0.3, 0.0, DISK.gamma, 0.0, 0.0)
    n, status = survival_count(state, table, force, DISK, 50, EscapeCriterion(components=(0,)))
    assert (n, status) == (0, "escaped")


# ------------------------------------------------------------ grids


def test_stability_grid_shape_and_flags():
    spec = StabilityGridSpec(n_radius=3, n_angle=4, max_collisions=200)
    for scenario in SCENARIOS:
        rows = stability_grid(spec, scenario)
        assert len(rows) == 12
        assert {r.status for r in rows} <= {"capped", "escaped", "pinched", "numerical"}
        assert all(0 <= r.survival_count <= 200 for r in rows)
    rows = stability_grid(spec, "no-force-horizontal")
    assert [r.low_confidence for r in rows[:4]] == [False, False, False, True]
    with pytest.raises(ValueError):
        stability_grid(spec, "force-theorem")


def test_stability_grid_threads_do_not_change_results():
    spec = StabilityGridSpec(n_radius=3, n_angle=3, max_collisions=300)
    assert stability_grid(spec, "force-periodic", 1) == stability_grid(spec, "force-periodic", 3)


@pytest.mark.parametrize("kw", [dict(n_radius=1), dict(perturbation=0.0), dict(max_collisions=0)])
def test_grid_spec_validation(kw):
    with pytest.raises(ValueError):
        StabilityGridSpec(**kw)


def test_two_disk_force_setup_is_periodic_without_perturbation():
    state, table, force, _ = two_disk_setup(0.6, 0.4, 0.3, DISK.gamma, 1.0, 0.0)
    orbit = run_orbit(state, table, force, DISK, 20)
    np.testing.assert_allclose(orbit.points[1::2], np.tile(state.pos, (10, 1)), atol=1e-8)
