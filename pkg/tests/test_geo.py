import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eventcast.geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    Region,
    UnknownNameError,
    angular_difference,
    bearing_deg,
    builtin_registry,
    destination_point,
    distance_km,
    load_fishing_vessels,
    load_regions,
    point_in_polygon,
)

from conftest import make_event
from oracles import winding_number_contains


def test_distance_zero():
    p = GeoPoint(12.5, -33.0)
    assert distance_km(p, p) == 0.0


def test_distance_one_degree_latitude():
    expected = EARTH_RADIUS_KM * math.pi / 180.0
    assert distance_km(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0)) == pytest.approx(
        expected, abs=1e-9
    )
    assert abs(distance_km(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0)) - 111.195) < 1e-3


def test_distance_antipodal_half_circumference():
    d = distance_km(GeoPoint(0.0, 0.0), GeoPoint(180.0, 0.0))
    assert abs(d - math.pi * EARTH_RADIUS_KM) < 1e-6
    assert abs(d - 20015.09) < 0.01


coords = st.tuples(
    st.floats(min_value=-179.0, max_value=179.0, allow_nan=False),
    st.floats(min_value=-89.0, max_value=89.0, allow_nan=False),
).map(lambda t: GeoPoint(*t))


@given(coords, coords)
def test_distance_symmetry(p, q):
    assert abs(distance_km(p, q) - distance_km(q, p)) < 1e-6


@given(coords, coords, coords)
def test_distance_triangle_inequality(a, b, c):
    assert distance_km(a, c) <= distance_km(a, b) + distance_km(b, c) + 1e-6


@given(coords, st.floats(min_value=0.0, max_value=359.9), st.floats(min_value=0.1, max_value=500.0))
def test_destination_point_distance_roundtrip(origin, bearing, dist):
    dest = destination_point(origin, bearing, dist)
    assert distance_km(origin, dest) == pytest.approx(dist, rel=1e-6, abs=1e-6)


def _convex_polygon(center, n, radius_deg, rng):
    angles = np.sort(rng.uniform(0.0, 2 * math.pi, size=n))
    return tuple(
        GeoPoint(center.lon + radius_deg * math.cos(a), center.lat + radius_deg * math.sin(a))
        for a in angles
    )


def test_point_in_polygon_matches_winding_oracle():
    rng = np.random.default_rng(17)
    agreements = 0
    for case in range(5):
        center = GeoPoint(float(rng.uniform(-20, 20)), float(rng.uniform(-20, 20)))
        ring = _convex_polygon(center, int(rng.integers(3, 9)), float(rng.uniform(0.5, 3.0)), rng)
        for _ in range(200):
            p = GeoPoint(
                center.lon + float(rng.uniform(-4.0, 4.0)),
                center.lat + float(rng.uniform(-4.0, 4.0)),
            )
            assert point_in_polygon(p, ring) == winding_number_contains(p, ring)
            agreements += 1
    assert agreements == 1000


def test_region_circle_contains():
    region = Region("r", center=GeoPoint(0.0, 0.0), radius_km=10.0)
    inside = destination_point(GeoPoint(0.0, 0.0), 45.0, 9.9)
    outside = destination_point(GeoPoint(0.0, 0.0), 45.0, 10.1)
    assert region.contains(inside) and not region.contains(outside)


def test_region_validation():
    with pytest.raises(ValueError, match=">= 3"):
        Region("bad", polygon=(GeoPoint(0, 0), GeoPoint(1, 0)))
    with pytest.raises(ValueError, match="implicit"):
        Region("bad", polygon=(GeoPoint(0, 0), GeoPoint(1, 0), GeoPoint(1, 1), GeoPoint(0, 0)))
    with pytest.raises(ValueError, match="neither"):
        Region("bad")


def test_geopoint_range_validation():
    with pytest.raises(ValueError):
        GeoPoint(190.0, 0.0)
    with pytest.raises(ValueError):
        GeoPoint(0.0, -91.0)


PORT = GeoPoint(5.0, 43.0)
REG = builtin_registry(points={"PortCoords": PORT}, fishing_vessels=("trawler-1",))


def _event_at_km(dist, bearing=90.0, **attrs):
    pos = destination_point(PORT, bearing, dist)
    return make_event(lon=pos.lon, lat=pos.lat, **attrs)


def test_distance_bands_half_open_at_shared_edge():
    near = REG["Distance"]("x", ("PortCoords", 5.0, 7.0))
    far = REG["Distance"]("x", ("PortCoords", 7.0, 10.0))
    event = _event_at_km(6.0)
    assert near.evaluate(event) is True
    assert far.evaluate(event) is False


def test_within_circle_strict_upper_bound():
    atom = REG["WithinCircle"]("x", ("PortCoords", 5.0))
    assert atom.evaluate(_event_at_km(4.99)) is True
    assert atom.evaluate(_event_at_km(5.01)) is False


def test_heading_towards_cone():
    atom = REG["HeadingTowards"]("x", ("PortCoords",))
    pos = destination_point(PORT, 270.0, 10.0)  # 10 km due west: target bearing ~90
    towards = bearing_deg(pos, PORT)
    event_ok = make_event(lon=pos.lon, lat=pos.lat, heading=(towards + 10.0) % 360.0)
    event_bad = make_event(lon=pos.lon, lat=pos.lat, heading=(towards + 40.0) % 360.0)
    assert atom.evaluate(event_ok) is True
    assert atom.evaluate(event_bad) is False


def test_heading_towards_degenerate_at_target():
    atom = REG["HeadingTowards"]("x", ("PortCoords",))
    event = make_event(lon=PORT.lon, lat=PORT.lat, heading=123.0)
    assert atom.evaluate(event) is True


def test_is_fishing_vessel_membership():
    atom = REG["IsFishingVessel"]("x", ())
    assert atom.evaluate(make_event(key="trawler-1")) is True
    assert atom.evaluate(make_event(key="cargo-9")) is False


def test_in_area_polygon_and_circle():
    square = Region(
        "sq",
        polygon=(GeoPoint(0, 0), GeoPoint(2, 0), GeoPoint(2, 2), GeoPoint(0, 2)),
    )
    reg = builtin_registry(regions={"sq": square})
    atom = reg["InArea"]("x", ("sq",))
    assert atom.evaluate(make_event(lon=1.0, lat=1.0)) is True
    assert atom.evaluate(make_event(lon=3.0, lat=1.0)) is False


def test_unknown_point_or_region():
    with pytest.raises(UnknownNameError):
        REG["Distance"]("x", ("Atlantis", 0.0, 5.0))
    with pytest.raises(UnknownNameError):
        REG["InArea"]("x", ("Atlantis",))


def test_angular_difference_wraps():
    assert angular_difference(350.0, 10.0) == pytest.approx(20.0)
    assert angular_difference(10.0, 350.0) == pytest.approx(20.0)
    assert angular_difference(180.0, 0.0) == pytest.approx(180.0)


def test_load_regions_and_fishing_list(tmp_path):
    doc = [
        {"name": "PortCoords", "type": "point", "coords": [5.0, 43.0]},
        {"name": "Area51", "type": "circle", "center": [6.0, 42.0], "radius_km": 12.0},
        {
            "name": "Box",
            "type": "polygon",
            "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]],
        },
    ]
    regions_file = tmp_path / "regions.json"
    regions_file.write_text(json.dumps(doc))
    points, regions = load_regions(regions_file)
    assert points["PortCoords"] == GeoPoint(5.0, 43.0)
    assert regions["Area51"].radius_km == 12.0
    assert len(regions["Box"].polygon) == 4

    fishing_file = tmp_path / "fishing.txt"
    fishing_file.write_text("# ids\ntrawler-1\n\ntrawler-2\n")
    assert load_fishing_vessels(fishing_file) == {"trawler-1", "trawler-2"}
