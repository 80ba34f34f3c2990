"""Synthetic event streams with controlled minterm statistics.

A stream source samples a minterm index per event; an attribute emitter then
inverts the sampled minterm into concrete attribute values, so the induced
minterm sequence of the generated stream is exactly the sampled one.  This
stands in for recorded vessel data at desk scale.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .algebra import Event, Minterm
from .geo import (
    DEFAULT_HEADING_TOLERANCE,
    GeoPoint,
    Region,
    angular_difference,
    bearing_deg,
    destination_point,
    distance_km,
)
from .sfa import SymbolicDfa


class UninvertibleMintermError(RuntimeError):
    """No attribute assignment satisfies the sampled minterm."""


# --- minterm sources ---------------------------------------------------------


def _validate_row(row: np.ndarray, what: str) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if np.any(row < 0) or not math.isclose(row.sum(), 1.0, abs_tol=1e-9):
        raise ValueError(f"{what} must be a probability vector, got {row}")
    return row


def _draw(cum: np.ndarray, rng: np.random.Generator) -> int:
    sym = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(sym, len(cum) - 1)


class IidSource:
    """Independent draws from a fixed minterm distribution."""

    def __init__(self, probs: Sequence[float]):
        self.probs = _validate_row(np.asarray(probs), "probs")
        self._cum = np.cumsum(self.probs)

    def start(self):
        return None

    def sample(self, state, rng: np.random.Generator):
        return _draw(self._cum, rng), None


class MarkovSource:
    """Order-m Markov model over minterm indices.

    ``table`` maps each length-m history tuple to a probability row; histories
    shorter than m (stream warm-up) and missing keys fall back to
    ``marginal`` (uniform when not given).
    """

    def __init__(
        self,
        order: int,
        table: Mapping[tuple[int, ...], Sequence[float]],
        marginal: Sequence[float] | None = None,
    ):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.order = order
        self._cum = {}
        n_syms = None
        for key, row in table.items():
            key = tuple(key)
            if len(key) != order:
                raise ValueError(f"history {key} does not have length {order}")
            row = _validate_row(np.asarray(row), f"row for {key}")
            n_syms = len(row)
            self._cum[key] = np.cumsum(row)
        if n_syms is None:
            raise ValueError("table is empty")
        if marginal is None:
            marginal = np.full(n_syms, 1.0 / n_syms)
        self._marginal_cum = np.cumsum(_validate_row(np.asarray(marginal), "marginal"))

    def start(self):
        return ()

    def sample(self, state: tuple[int, ...], rng: np.random.Generator):
        cum = self._cum.get(state, self._marginal_cum) if len(state) == self.order else self._marginal_cum
        sym = _draw(cum, rng)
        return sym, (state + (sym,))[-self.order :] if self.order else ()


class ChainWalkSource:
    """Samples minterms conditioned on the automaton state of the walk.

    Mirrors the runtime's run semantics (reset to initial after a final
    entry), so the stream it generates follows, per engine state, exactly the
    per-state minterm distribution it was given.
    """

    def __init__(self, dfa: SymbolicDfa, symbol_probs: np.ndarray, reset_on_final: bool = True):
        symbol_probs = np.asarray(symbol_probs, dtype=np.float64)
        if symbol_probs.shape != (dfa.n_states, len(dfa.alphabet)):
            raise ValueError("need one symbol row per automaton state")
        self._cum = np.empty_like(symbol_probs)
        for q in range(dfa.n_states):
            if q in dfa.finals:
                self._cum[q] = 1.0  # never sampled: runs reset before leaving finals
                continue
            self._cum[q] = np.cumsum(_validate_row(symbol_probs[q], f"row {q}"))
        self.dfa = dfa
        self.reset_on_final = reset_on_final

    @classmethod
    def from_chain(cls, dfa: SymbolicDfa, symbol_counts: np.ndarray) -> "ChainWalkSource":
        """Build from learned per-state minterm counts; unvisited rows go uniform."""
        counts = np.asarray(symbol_counts, dtype=np.float64)
        probs = np.empty_like(counts)
        for q in range(counts.shape[0]):
            total = counts[q].sum()
            probs[q] = counts[q] / total if total > 0 else 1.0 / counts.shape[1]
        return cls(dfa, probs)

    def start(self):
        return self.dfa.initial

    def sample(self, state: int, rng: np.random.Generator):
        sym = _draw(self._cum[state], rng)
        nxt = self.dfa.delta[state][sym]
        if nxt in self.dfa.finals and self.reset_on_final:
            nxt = self.dfa.initial
        return sym, nxt


# --- interval arithmetic on half-open segments -------------------------------


def _intersect(segments, lo, hi):
    out = []
    for a, b in segments:
        a2, b2 = max(a, lo), min(b, hi)
        if a2 < b2:
            out.append((a2, b2))
    return out


def _subtract(segments, lo, hi):
    out = []
    for a, b in segments:
        if b <= lo or hi <= a:
            out.append((a, b))
            continue
        if a < lo:
            out.append((a, lo))
        if hi < b:
            out.append((hi, b))
    return out


def _solve_bands(constraints, domain) -> list[tuple[float, float]]:
    segments = [domain]
    for band, sign in constraints:
        if sign:
            segments = _intersect(segments, band.lo, band.hi)
        else:
            segments = _subtract(segments, band.lo, band.hi)
    return segments


def _pick(segments, rng: np.random.Generator) -> float | None:
    total = sum(b - a for a, b in segments)
    if total <= 0:
        return None
    u = rng.random() * total
    for a, b in segments:
        if u < b - a:
            return a + u
        u -= b - a
    return segments[-1][1] - 1e-12


# --- attribute emitter -------------------------------------------------------


class AttributeEmitter:
    """Invert a minterm into attribute values that satisfy it.

    Handles the built-in atom families: plain numeric bands (axis
    ``("attr", name)``), distance-to-point bands (positions are placed at a
    sampled distance and random bearing from the anchor point), polygon
    containment, heading cones, and fishing-list membership.  Unknown atoms
    make the minterm uninvertible.
    """

    def __init__(
        self,
        points: Mapping[str, GeoPoint] | None = None,
        regions: Mapping[str, Region] | None = None,
        fishing_vessels: Sequence[str] = (),
        heading_tolerance_deg: float = DEFAULT_HEADING_TOLERANCE,
        attr_domains: Mapping[str, tuple[float, float]] | None = None,
        distance_domain: tuple[float, float] = (0.0, 100.0),
        base: Mapping[str, float] | None = None,
        max_tries: int = 200,
    ):
        self.points = dict(points or {})
        self.regions = dict(regions or {})
        self.fishing = frozenset(fishing_vessels)
        self.tol = float(heading_tolerance_deg)
        self.attr_domains = dict(attr_domains or {})
        self.default_attr_domain = (0.0, 100.0)
        self.distance_domain = distance_domain
        self.base = dict(base) if base is not None else {
            "lon": 0.0,
            "lat": 0.0,
            "speed": 0.0,
            "heading": 0.0,
        }
        self.max_tries = max_tries

    def _resolve_point(self, name: str) -> GeoPoint:
        if name in self.points:
            return self.points[name]
        region = self.regions.get(name)
        if region is not None and region.center is not None:
            return region.center
        raise UninvertibleMintermError(f"emitter has no point named {name!r}")

    def emit(self, minterm: Minterm, partition_key: str, rng: np.random.Generator) -> dict:
        attr_axes: dict[tuple, list] = {}
        dist_axes: dict[tuple, list] = {}
        polygons: list[tuple[Region, bool]] = []
        headings: list[tuple[GeoPoint, bool]] = []
        for atom, sign in zip(minterm.atoms, minterm.signs):
            band = atom.band
            if band is not None and band.axis[0] == "attr":
                attr_axes.setdefault(band.axis, []).append((band, sign))
            elif band is not None and band.axis[0] == "dist":
                dist_axes.setdefault(band.axis, []).append((band, sign))
            elif atom.name == "InArea":
                region = self.regions.get(atom.args[0])
                if region is None:
                    raise UninvertibleMintermError(f"unknown region {atom.args[0]!r}")
                polygons.append((region, sign))
            elif atom.name == "HeadingTowards":
                headings.append((self._resolve_point(atom.args[0]), sign))
            elif atom.name == "IsFishingVessel":
                if (partition_key in self.fishing) != sign:
                    raise UninvertibleMintermError(
                        f"partition {partition_key!r} fishing membership "
                        f"contradicts the sampled minterm"
                    )
            elif atom.name == "True":
                if not sign:
                    raise UninvertibleMintermError("negated True is unsatisfiable")
            else:
                raise UninvertibleMintermError(f"cannot invert atom {atom}")

        attrs = dict(self.base)
        for axis, constraints in attr_axes.items():
            name = axis[1]
            domain = self.attr_domains.get(name, self.default_attr_domain)
            value = _pick(_solve_bands(constraints, domain), rng)
            if value is None:
                raise UninvertibleMintermError(
                    f"no value in {domain} satisfies the {name!r} bands"
                )
            attrs[name] = value

        if dist_axes or polygons:
            pos = self._place(dist_axes, polygons, rng)
            attrs["lon"], attrs["lat"] = pos.lon, pos.lat
        else:
            pos = None

        if headings:
            if pos is None:
                pos = GeoPoint(attrs.get("lon", 0.0), attrs.get("lat", 0.0))
            attrs["heading"] = self._pick_heading(pos, headings, rng)

        return attrs

    def _place(self, dist_axes, polygons, rng) -> GeoPoint:
        positive_polygons = [r for r, s in polygons if s]
        for _ in range(self.max_tries):
            if dist_axes:
                axis, constraints = next(iter(dist_axes.items()))
                anchor = GeoPoint(axis[1], axis[2])
                d = _pick(_solve_bands(constraints, self.distance_domain), rng)
                if d is None:
                    raise UninvertibleMintermError(
                        "distance bands have empty intersection"
                    )
                pos = destination_point(anchor, rng.random() * 360.0, d)
            elif positive_polygons:
                pos = self._sample_in_polygon(positive_polygons[0], rng)
            else:
                pos = GeoPoint(
                    self.base.get("lon", 0.0) + (rng.random() - 0.5) * 4.0,
                    self.base.get("lat", 0.0) + (rng.random() - 0.5) * 4.0,
                )
            if self._position_ok(pos, dist_axes, polygons):
                return pos
        raise UninvertibleMintermError("could not place a position satisfying all area constraints")

    def _sample_in_polygon(self, region: Region, rng) -> GeoPoint:
        if not region.polygon:
            r = region.radius_km * math.sqrt(rng.random())
            return destination_point(region.center, rng.random() * 360.0, r)
        lons = [p.lon for p in region.polygon]
        lats = [p.lat for p in region.polygon]
        for _ in range(self.max_tries):
            pos = GeoPoint(rng.uniform(min(lons), max(lons)), rng.uniform(min(lats), max(lats)))
            if region.contains(pos):
                return pos
        raise UninvertibleMintermError(f"could not sample inside region {region.name!r}")

    def _position_ok(self, pos, dist_axes, polygons) -> bool:
        for axis, constraints in dist_axes.items():
            d = distance_km(pos, GeoPoint(axis[1], axis[2]))
            for band, sign in constraints:
                if (band.lo <= d < band.hi) != sign:
                    return False
        return all(region.contains(pos) == sign for region, sign in polygons)

    def _pick_heading(self, pos, headings, rng) -> float:
        for _ in range(self.max_tries):
            point, sign = headings[0]
            if pos == point:
                if not sign:
                    continue
                heading = rng.random() * 360.0
            else:
                towards = bearing_deg(pos, point)
                if sign:
                    heading = (towards + rng.uniform(-self.tol, self.tol)) % 360.0
                else:
                    heading = (towards + rng.uniform(self.tol + 0.5, 359.5 - self.tol)) % 360.0
            ok = True
            for point2, sign2 in headings:
                if pos == point2:
                    satisfied = True
                else:
                    satisfied = angular_difference(heading, bearing_deg(pos, point2)) <= self.tol
                if satisfied != sign2:
                    ok = False
                    break
            if ok:
                return heading
        raise UninvertibleMintermError("could not pick a heading satisfying all cone constraints")


def generate_synthetic_stream(
    source,
    alphabet: Sequence[Minterm],
    emitter: AttributeEmitter,
    n: int,
    seed: int,
    *,
    partition_keys: Sequence[str] = ("p0",),
    partition_attribute: str = "partitionKey",
    validate: bool = True,
) -> list[Event]:
    """Sample ``n`` events; deterministic for a fixed seed.

    Each partition runs its own source instance state; partitions are
    interleaved uniformly at random.  Every emitted event is checked to
    satisfy exactly the sampled minterm (mutual exclusivity gives uniqueness),
    so an inconsistent emitter fails loudly.
    """
    rng = np.random.default_rng(seed)
    states = {key: source.start() for key in partition_keys}
    events: list[Event] = []
    n_parts = len(partition_keys)
    for t in range(1, n + 1):
        key = partition_keys[int(rng.integers(n_parts))] if n_parts > 1 else partition_keys[0]
        sym, states[key] = source.sample(states[key], rng)
        minterm = alphabet[sym]
        attrs = emitter.emit(minterm, key, rng)
        attrs[partition_attribute] = key
        event = Event(timestamp=float(t), attributes=attrs, partition_key=key)
        if validate and not minterm.evaluate(event):
            raise UninvertibleMintermError(
                f"emitter produced attributes violating {minterm} at t={t}"
            )
        events.append(event)
    return events
