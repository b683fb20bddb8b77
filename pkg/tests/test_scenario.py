import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, strategies as st

from mmwave3gpp.scenario import (
    SCENARIO_PARAMS,
    Building,
    BuildingType,
    Scenario,
    Trajectory,
    Waypoint,
    link_geometry,
    position_at,
    segment_intersects_box,
    segment_intersects_buildings,
)

coord = st.floats(-500, 500, allow_nan=False)
point = st.tuples(coord, coord, st.floats(0, 50))


def test_table_defaults():
    assert SCENARIO_PARAMS[Scenario.UMi].isd == (200.0, 200.0)
    assert SCENARIO_PARAMS[Scenario.UMi].h_bs_default == 10.0
    assert SCENARIO_PARAMS[Scenario.UMa].isd == (500.0, 500.0)
    assert SCENARIO_PARAMS[Scenario.UMa].h_bs_default == 25.0
    assert SCENARIO_PARAMS[Scenario.RMa].isd == (1732.0, 5000.0)
    assert SCENARIO_PARAMS[Scenario.RMa].h_bs_default == 35.0
    for s in (Scenario.InMO, Scenario.InOO):
        assert SCENARIO_PARAMS[s].isd == (20.0, 20.0)
        assert SCENARIO_PARAMS[s].h_bs_default == 3.0
    for s in (Scenario.UMi, Scenario.UMa, Scenario.RMa):
        assert SCENARIO_PARAMS[s].d2d_min == 10.0


def test_frequency_ranges():
    assert SCENARIO_PARAMS[Scenario.RMa].fc_range == (6e9, 7e9)
    for s in Scenario:
        if s is not Scenario.RMa:
            assert SCENARIO_PARAMS[s].fc_range == (6e9, 100e9)


def test_indoor_kinds_share_tables():
    assert Scenario.InMO.table_key == Scenario.InOO.table_key == "InH"
    assert Scenario.UMi.table_key == "UMi"


def test_geometry_rural_example():
    g = link_geometry((0, 0, 35), (100, 0, 1.5))
    assert g.d2d == pytest.approx(100.0)
    assert g.d3d == pytest.approx(np.sqrt(100**2 + 33.5**2))
    assert g.d3d == pytest.approx(105.4621, abs=1e-4)


def test_geometry_vertical_link():
    g = link_geometry((3, 4, 10), (3, 4, 1.5))
    assert g.d2d == 0.0
    assert g.d3d == pytest.approx(8.5)


def test_geometry_same_height():
    g = link_geometry((0, 0, 7), (42, 0, 7))
    assert g.elevation == 0.0
    assert g.d3d == g.d2d == 42.0


def test_geometry_rejects_coincident_nodes():
    with pytest.raises(ValueError):
        link_geometry((1, 2, 3), (1, 2, 3))


def test_geometry_rejects_non_finite():
    with pytest.raises(ValueError):
        link_geometry((np.nan, 0, 0), (1, 2, 3))


@given(point, point)
def test_geometry_symmetry(a, b):
    if np.allclose(a, b):
        return
    ab, ba = link_geometry(a, b), link_geometry(b, a)
    assert ab.d2d == pytest.approx(ba.d2d)
    assert ab.d3d == pytest.approx(ba.d3d)
    assert ab.d3d >= ab.d2d >= 0
    if ab.d2d > 1e-6:
        diff = np.angle(np.exp(1j * (ab.azimuth - ba.azimuth - np.pi)))
        assert abs(diff) < 1e-9


def test_building_corners_validated():
    with pytest.raises(ValueError):
        Building((0, 0, 0), (1, 1, 0))


BOX = Building((0, 0, 0), (10, 10, 10), BuildingType.office)


def test_segment_above_buildings():
    assert not segment_intersects_buildings((-5, -5, 20), (15, 15, 20), [BOX])


def test_segment_from_inside_to_outside():
    assert segment_intersects_buildings((5, 5, 5), (50, 5, 5), [BOX])


def test_grazing_face_counts_as_hit():
    # the segment runs along the top face z = 10
    assert segment_intersects_box((-5, 5, 10), (15, 5, 10), BOX)
    # touching only the corner edge at x = 10, y = 10
    assert segment_intersects_box((20, 0, 5), (0, 20, 5), BOX)


def _exact_slab(p1, p2, lo, hi):
    # rational slab method as an independent oracle
    p1 = [Fraction(x) for x in p1]
    d = [Fraction(b) - a for a, b in zip(p1, p2)]
    t0, t1 = Fraction(0), Fraction(1)
    for ax in range(3):
        if d[ax] == 0:
            if not lo[ax] <= p1[ax] <= hi[ax]:
                return False
            continue
        ta, tb = (lo[ax] - p1[ax]) / d[ax], (hi[ax] - p1[ax]) / d[ax]
        t0, t1 = max(t0, min(ta, tb)), min(t1, max(ta, tb))
        if t0 > t1:
            return False
    return True


small = st.integers(-20, 30)


@given(st.tuples(small, small, small), st.tuples(small, small, small))
def test_slab_matches_rational_oracle(p1, p2):
    box = Building((0, 0, 0), (10, 10, 10))
    assert segment_intersects_box(p1, p2, box) == _exact_slab(p1, p2, (0, 0, 0), (10, 10, 10))


def _dense(p1, p2, box, n=10_000):
    t = np.linspace(0.0, 1.0, n)[:, None]
    pts = np.asarray(p1) + t * (np.asarray(p2) - np.asarray(p1))
    return bool(np.any(np.all((pts >= box.lo) & (pts <= box.hi), axis=1)))


def test_slab_matches_dense_sampling(rng):
    disagreements = 0
    for _ in range(300):
        lo = rng.uniform(-20, 20, 3)
        box = Building(tuple(lo), tuple(lo + rng.uniform(1, 15, 3)))
        p1, p2 = rng.uniform(-40, 40, 3), rng.uniform(-40, 40, 3)
        disagreements += segment_intersects_box(p1, p2, box) != _dense(p1, p2, box)
    # sampling can only miss very short chords through a corner
    assert disagreements <= 3


def test_single_waypoint_is_static():
    tr = Trajectory.static((1, 2, 3))
    assert np.array_equal(tr.position_at(123.0), [1, 2, 3])
    assert np.array_equal(tr.velocity_at(5.0), np.zeros(3))


def test_linear_interpolation():
    tr = Trajectory((Waypoint(0, (0, 0, 1.5)), Waypoint(10, (0, 10, 1.5))))
    assert np.allclose(position_at(tr, 5.0), (0, 5, 1.5))


def test_walking_user_trace():
    tr = Trajectory((Waypoint(0, (100, 0, 1.5)), Waypoint(60, (100, 60, 1.5))))
    assert np.allclose(tr.position_at(20.0), (100, 20, 1.5))
    assert np.allclose(tr.velocity_at(20.0), (0, 1, 0))


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        Trajectory(())


def test_query_outside_span_rejected():
    tr = Trajectory((Waypoint(0, (0, 0, 0)), Waypoint(1, (1, 0, 0))))
    with pytest.raises(ValueError):
        tr.position_at(2.0)


@given(st.lists(st.tuples(st.floats(0.1, 5), point), min_size=2, max_size=6), st.floats(0, 1))
def test_velocity_matches_finite_difference(steps, frac):
    t = 0.0
    wps = []
    for dt, p in steps:
        wps.append(Waypoint(t, p))
        t += dt
    tr = Trajectory(tuple(wps))
    t0, t1 = tr.span
    tq = t0 + frac * (t1 - t0)
    h = 1e-6 * (t1 - t0)
    seg = tr._segment(tq)
    a, b = wps[seg].t, wps[seg + 1].t
    lo, hi = max(tq - h, a), min(tq + h, b)
    if hi <= lo:
        return
    fd = (tr.position_at(hi) - tr.position_at(lo)) / (hi - lo)
    v = tr.velocity_at(tq)
    assert np.allclose(fd, v, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(v).max()))
