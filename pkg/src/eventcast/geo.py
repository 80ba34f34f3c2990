"""Geospatial and kinematic predicates for vessel-trajectory streams.

All numeric bands are half-open ``[lo, hi)`` so that adjacent bands such as
(1.0, 9.0) and (9.0, 20.0) stay disjoint at the shared boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .algebra import Band, Event, PredicateAtom

EARTH_RADIUS_KM = 6371.0088

#: Default half-width of the HeadingTowards acceptance cone, degrees.
DEFAULT_HEADING_TOLERANCE = 15.0


class UnknownNameError(ValueError):
    """A pattern referenced a point, region, or list the registry lacks."""


@dataclass(frozen=True, slots=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of [-90, 90]")


@dataclass(frozen=True)
class Region:
    """A named area: either a polygon ring or a circle around a center."""

    name: str
    polygon: tuple[GeoPoint, ...] = ()
    center: GeoPoint | None = None
    radius_km: float = 0.0

    def __post_init__(self):
        if self.polygon:
            if len(self.polygon) < 3:
                raise ValueError(f"region {self.name!r}: polygon needs >= 3 vertices")
            if self.polygon[0] == self.polygon[-1]:
                raise ValueError(
                    f"region {self.name!r}: ring closure is implicit, drop the "
                    "repeated last vertex"
                )
        elif self.center is None:
            raise ValueError(f"region {self.name!r} has neither polygon nor circle")

    def contains(self, p: GeoPoint) -> bool:
        if self.polygon:
            return point_in_polygon(p, self.polygon)
        return distance_km(p, self.center) < self.radius_km


def distance_km(p: GeoPoint, q: GeoPoint) -> float:
    """Great-circle (haversine) distance in kilometers."""
    lam1, phi1 = math.radians(p.lon), math.radians(p.lat)
    lam2, phi2 = math.radians(q.lon), math.radians(q.lat)
    h = (
        math.sin((phi2 - phi1) / 2) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin((lam2 - lam1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def bearing_deg(p: GeoPoint, q: GeoPoint) -> float:
    """Initial great-circle bearing from p to q, degrees in [0, 360)."""
    lam1, phi1 = math.radians(p.lon), math.radians(p.lat)
    lam2, phi2 = math.radians(q.lon), math.radians(q.lat)
    dlam = lam2 - lam1
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return math.degrees(math.atan2(y, x)) % 360.0


def destination_point(origin: GeoPoint, bearing: float, dist_km: float) -> GeoPoint:
    """Point reached travelling ``dist_km`` from ``origin`` at ``bearing``."""
    delta = dist_km / EARTH_RADIUS_KM
    theta = math.radians(bearing)
    phi1 = math.radians(origin.lat)
    lam1 = math.radians(origin.lon)
    phi2 = math.asin(
        math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    )
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * math.sin(phi2),
    )
    lon = math.degrees(lam2)
    lon = (lon + 180.0) % 360.0 - 180.0
    return GeoPoint(lon, max(-90.0, min(90.0, math.degrees(phi2))))


def point_in_polygon(p: GeoPoint, ring: Sequence[GeoPoint]) -> bool:
    """Ray-casting containment test in lon/lat space (implicit ring closure)."""
    inside = False
    j = len(ring) - 1
    for i in range(len(ring)):
        a, b = ring[i], ring[j]
        if (a.lat > p.lat) != (b.lat > p.lat):
            x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon
            if p.lon < x:
                inside = not inside
        j = i
    return inside


def angular_difference(a: float, b: float) -> float:
    """Absolute difference between two headings, degrees in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def _event_position(event: Event) -> GeoPoint:
    return GeoPoint(float(event.attr("lon")), float(event.attr("lat")))


def builtin_registry(
    points: dict[str, GeoPoint] | None = None,
    regions: dict[str, Region] | None = None,
    fishing_vessels: Iterable[str] = (),
    heading_tolerance_deg: float = DEFAULT_HEADING_TOLERANCE,
) -> dict[str, Callable[[str, tuple], PredicateAtom]]:
    """Predicate constructors for the built-in maritime/kinematic atoms.

    Each constructor takes the bound event variable and the constant
    arguments as parsed from a pattern (floats and bare identifiers); named
    points and regions are resolved against the supplied dictionaries.
    """
    points = dict(points or {})
    regions = dict(regions or {})
    fishing = frozenset(fishing_vessels)
    tol = float(heading_tolerance_deg)

    def resolve_point(name) -> GeoPoint:
        if isinstance(name, str):
            if name in points:
                return points[name]
            r = regions.get(name)
            if r is not None and r.center is not None:
                return r.center
            raise UnknownNameError(f"unknown point {name!r}")
        raise UnknownNameError(f"expected a point name, got {name!r}")

    def resolve_region(name) -> Region:
        try:
            return regions[name]
        except (KeyError, TypeError):
            raise UnknownNameError(f"unknown region {name!r}") from None

    def distance(var, args):
        pname, lo, hi = args
        point = resolve_point(pname)
        lo, hi = float(lo), float(hi)

        def fn(event, _p=point, _lo=lo, _hi=hi):
            return _lo <= distance_km(_event_position(event), _p) < _hi

        band = Band(("dist", point.lon, point.lat), lo, hi)
        return PredicateAtom("Distance", (pname, lo, hi), fn, var=var, band=band)

    def within_circle(var, args):
        pname, radius = args
        point = resolve_point(pname)
        radius = float(radius)

        def fn(event, _p=point, _r=radius):
            return distance_km(_event_position(event), _p) < _r

        band = Band(("dist", point.lon, point.lat), 0.0, radius)
        return PredicateAtom("WithinCircle", (pname, radius), fn, var=var, band=band)

    def in_area(var, args):
        (rname,) = args
        region = resolve_region(rname)

        def fn(event, _r=region):
            return _r.contains(_event_position(event))

        band = None
        if not region.polygon:
            c = region.center
            band = Band(("dist", c.lon, c.lat), 0.0, region.radius_km)
        return PredicateAtom("InArea", (rname,), fn, var=var, band=band)

    def speed_between(var, args):
        lo, hi = float(args[0]), float(args[1])

        def fn(event, _lo=lo, _hi=hi):
            return _lo <= float(event.attr("speed")) < _hi

        return PredicateAtom(
            "SpeedBetween", (lo, hi), fn, var=var, band=Band(("attr", "speed"), lo, hi)
        )

    def heading_towards(var, args):
        (pname,) = args
        point = resolve_point(pname)

        def fn(event, _p=point, _tol=tol):
            pos = _event_position(event)
            if pos == _p:
                return True  # bearing degenerate when already at the target
            heading = float(event.attr("heading"))
            return angular_difference(heading, bearing_deg(pos, _p)) <= _tol

        return PredicateAtom("HeadingTowards", (pname,), fn, var=var)

    def is_fishing_vessel(var, args):
        if args:
            raise UnknownNameError("IsFishingVessel takes no constant arguments")

        def fn(event, _ids=fishing):
            return event.partition_key in _ids

        return PredicateAtom("IsFishingVessel", (), fn, var=var)

    def always_true(var, args):
        return PredicateAtom("True", (), lambda event: True, var=var)

    return {
        "Distance": distance,
        "WithinCircle": within_circle,
        "InArea": in_area,
        "SpeedBetween": speed_between,
        "HeadingTowards": heading_towards,
        "IsFishingVessel": is_fishing_vessel,
        "True": always_true,
    }


def load_regions(path: str | Path) -> tuple[dict[str, GeoPoint], dict[str, Region]]:
    """Load named points and regions from a JSON file.

    The file holds a list of objects with a ``type`` of ``point``, ``circle``
    or ``polygon``; circles use ``center: [lon, lat]`` and ``radius_km``,
    polygons a ``vertices`` list of ``[lon, lat]`` pairs.
    """
    entries = json.loads(Path(path).read_text())
    points: dict[str, GeoPoint] = {}
    regions: dict[str, Region] = {}
    for entry in entries:
        name = entry["name"]
        kind = entry.get("type", "circle")
        if kind == "point":
            points[name] = GeoPoint(*map(float, entry["coords"]))
        elif kind == "circle":
            center = GeoPoint(*map(float, entry["center"]))
            regions[name] = Region(name, center=center, radius_km=float(entry["radius_km"]))
        elif kind == "polygon":
            ring = tuple(GeoPoint(*map(float, v)) for v in entry["vertices"])
            regions[name] = Region(name, polygon=ring)
        else:
            raise ValueError(f"region entry {name!r} has unknown type {kind!r}")
    return points, regions


def load_fishing_vessels(path: str | Path) -> frozenset[str]:
    """One vessel id per line; blank lines and ``#`` comments ignored."""
    ids = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.append(line)
    return frozenset(ids)
