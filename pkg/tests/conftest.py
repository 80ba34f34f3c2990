import pytest

from eventcast.algebra import Event
from eventcast.geo import GeoPoint, Region, builtin_registry
from eventcast.pattern import parse_pattern
from eventcast.sfa import compile_snfa, determinize

# Two-symbol chase pattern: one slow event, then three fast ones.  Over the
# single speed predicate the alphabet has exactly two minterms, which makes
# this the workhorse for exhaustive oracles.
CHASE_TEXT = (
    "a · b · b · b WHERE SpeedBetween(a, 0.0, 10.0) "
    "AND NOT SpeedBetween(b, 0.0, 10.0) PARTITION BY vesselId"
)

PORT = GeoPoint(5.0, 43.0)
FISHING_AREA = Region("FishingArea", center=GeoPoint(6.5, 42.0), radius_km=30.0)

PORT_TEXT = """
# approach a port, dwell in the near band, then enter
x · y+ · z WHERE
    Distance(x, PortCoords, 7.0, 10.0) AND
    Distance(y, PortCoords, 5.0, 7.0) AND
    WithinCircle(z, PortCoords, 5.0)
PARTITION BY vesselId
"""

FISHING_TEXT = """
x · y* · z WHERE
    (IsFishingVessel(x) ∧ ¬InArea(x, FishingArea)) AND
    (InArea(y, FishingArea) ∧ SpeedBetween(y, 9.0, 20.0)) AND
    (InArea(z, FishingArea) ∧ SpeedBetween(z, 1.0, 9.0))
PARTITION BY vesselId
"""

FISHING_IDS = ("trawler-1", "trawler-2")


@pytest.fixture
def registry():
    return builtin_registry(
        points={"PortCoords": PORT},
        regions={"FishingArea": FISHING_AREA},
        fishing_vessels=FISHING_IDS,
    )


@pytest.fixture
def chase_spec(registry):
    return parse_pattern(CHASE_TEXT, registry)


@pytest.fixture
def chase_dfa(chase_spec):
    return determinize(compile_snfa(chase_spec))


@pytest.fixture
def port_spec(registry):
    return parse_pattern(PORT_TEXT, registry)


@pytest.fixture
def fishing_spec(registry):
    return parse_pattern(FISHING_TEXT, registry)


def make_event(ts=1.0, key="v1", **attrs):
    attrs.setdefault("vesselId", key)
    return Event(timestamp=float(ts), attributes=attrs, partition_key=key)


def slow_event(ts=1.0, key="v1"):
    """Induces the chase pattern's 'a' minterm (speed in [0, 10))."""
    return make_event(ts, key, speed=5.0)


def fast_event(ts=1.0, key="v1"):
    """Induces the chase pattern's 'b' minterm (speed outside [0, 10))."""
    return make_event(ts, key, speed=15.0)


def chase_events(symbols, key="v1", start_ts=1):
    """Symbol string (0 = slow/'a', 1 = fast/'b') to an event list."""
    return [
        (slow_event if s == 0 else fast_event)(ts=start_ts + i, key=key)
        for i, s in enumerate(symbols)
    ]
