"""Streaming runtime: one automaton run per partition key.

Keeps a live run for each partition (vessel), steps it on every event routed
to it, reports detections when a final state is entered, and in forecasting
mode emits the cached forecast of the state just reached.
"""

from __future__ import annotations

import time
import zlib
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .algebra import Event, MissingAttributeError, NoMatchingMintermError
from .pmc import Forecast
from .sfa import SymbolicDfa
from .synth import (  # noqa: F401  (engine module re-exports stream synthesis)
    AttributeEmitter,
    ChainWalkSource,
    IidSource,
    MarkovSource,
    UninvertibleMintermError,
    generate_synthetic_stream,
)

MODE_REC = "rec"
MODE_REC_FOR = "rec+for"


class MalformedEventError(ValueError):
    """Strict mode: an event could not be classified or regressed in time."""


class MismatchedLogsError(ValueError):
    """Forecast and detection logs do not come from the same replay."""


@dataclass(slots=True)
class Run:
    partition_key: str
    state: int
    index: int = 0  # per-partition count of consumed events
    last_timestamp: float = float("-inf")


@dataclass(frozen=True, slots=True)
class DetectionRecord:
    partition: str
    index: int
    timestamp: float


@dataclass(frozen=True, slots=True)
class EmittedForecast:
    partition: str
    index: int
    start: int  # events ahead, >= 1
    end: int
    probability: float


@dataclass
class EvaluationReport:
    precision: float
    spread_mean: float
    spread_per_forecast: list[int]
    detections: int
    forecasts_scored: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "spread_mean": self.spread_mean,
            "detections": self.detections,
            "forecasts_scored": self.forecasts_scored,
            "spread_per_forecast": self.spread_per_forecast,
        }


@dataclass
class ThroughputReport:
    mode: str
    events_processed: int
    wall_seconds: float
    events_per_second: float
    undefined: bool = False

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "events_processed": self.events_processed,
            "wall_seconds": self.wall_seconds,
            "events_per_second": self.events_per_second,
            "undefined": self.undefined,
        }


class StreamEngine:
    """Per-partition automaton runs over a compiled pattern.

    The compiled automaton and forecast table are read-only; all mutable
    state is the per-partition run map, so partitions can be sharded freely
    across engine instances.
    """

    def __init__(
        self,
        dfa: SymbolicDfa,
        forecast_table: dict[int, Forecast] | None = None,
        *,
        strict: bool = False,
        reset_on_detection: bool = True,
        emit_on_unchanged: bool = True,
        collect_logs: bool = True,
    ):
        self.dfa = dfa
        self._delta = dfa.delta
        self._finals = dfa.finals
        self._initial = dfa.initial
        self._classifier = dfa.classifier
        self._table: list[Forecast | None] | None = None
        if forecast_table is not None:
            self._table = [forecast_table.get(q) for q in range(dfa.n_states)]
        self.strict = strict
        self.reset_on_detection = reset_on_detection
        self.emit_on_unchanged = emit_on_unchanged
        self.collect_logs = collect_logs
        self.runs: dict[str, Run] = {}
        self.detections: list[DetectionRecord] = []
        self.forecasts: list[EmittedForecast] = []
        self.malformed = 0

    @property
    def forecasting(self) -> bool:
        return self._table is not None

    def _reject(self, event: Event, reason: str) -> None:
        if self.strict:
            raise MalformedEventError(f"{reason} (timestamp {event.timestamp})")
        self.malformed += 1

    def ingest(self, event: Event) -> tuple[bool, EmittedForecast | None]:
        """Route, step, and report: (detected, emitted forecast or None)."""
        key = event.partition_key
        run = self.runs.get(key)
        if run is None:
            run = Run(key, self._initial)
            self.runs[key] = run
        try:
            sym = self._classifier.symbol(event)
        except MissingAttributeError as exc:
            self._reject(event, f"unclassifiable event: {exc}")
            return False, None
        except NoMatchingMintermError:
            raise  # unsound oracle: abort, never skip
        if event.timestamp < run.last_timestamp:
            self._reject(event, "timestamp regression within partition")
            return False, None

        run.index += 1
        run.last_timestamp = event.timestamp
        prev = run.state
        nxt = self._delta[prev][sym]
        if nxt in self._finals:
            run.state = self._initial if self.reset_on_detection else nxt
            if self.collect_logs:
                self.detections.append(DetectionRecord(key, run.index, event.timestamp))
            return True, None
        run.state = nxt
        if self._table is not None and (self.emit_on_unchanged or nxt != prev):
            cached = self._table[nxt]
            if cached is not None:
                forecast = EmittedForecast(
                    key, run.index, cached.start, cached.end, cached.probability
                )
                if self.collect_logs:
                    self.forecasts.append(forecast)
                return False, forecast
        return False, None

    def replay(self, events: Iterable[Event]) -> None:
        for event in events:
            self.ingest(event)

    def partitions(self) -> set[str]:
        return set(self.runs)


def run_sharded(
    events: Iterable[Event],
    dfa: SymbolicDfa,
    forecast_table: dict[int, Forecast] | None,
    workers: int = 1,
    **engine_kwargs,
) -> tuple[list[DetectionRecord], list[EmittedForecast], int]:
    """Shard partition keys across ``workers`` engines.

    Partitions are independent, so the merged logs (kept in stream arrival
    order) are identical to a single-engine replay regardless of the worker
    count; execution here is sequential.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    engines = [
        StreamEngine(dfa, forecast_table, collect_logs=True, **engine_kwargs)
        for _ in range(workers)
    ]
    detections: list[DetectionRecord] = []
    forecasts: list[EmittedForecast] = []
    for event in events:
        shard = zlib.crc32(event.partition_key.encode()) % workers if workers > 1 else 0
        engine = engines[shard]
        detected, forecast = engine.ingest(event)
        if detected:
            detections.append(engine.detections[-1])
        if forecast is not None:
            forecasts.append(forecast)
    malformed = sum(e.malformed for e in engines)
    return detections, forecasts, malformed


def score_forecasts(
    forecasts: Sequence[EmittedForecast], detections: Sequence[DetectionRecord]
) -> list[bool]:
    """Correctness per forecast: the partition's next detection falls inside.

    A forecast emitted at per-partition index i with window [s, e] is correct
    iff the next detection in that partition happens at index d with
    i+s <= d <= i+e; with no later detection it is incorrect.
    """
    by_partition: dict[str, list[int]] = {}
    for det in detections:
        by_partition.setdefault(det.partition, []).append(det.index)
    for indices in by_partition.values():
        indices.sort()
    flags = []
    for fc in forecasts:
        indices = by_partition.get(fc.partition, ())
        pos = bisect_right(indices, fc.index)
        if pos >= len(indices):
            flags.append(False)
            continue
        d = indices[pos]
        flags.append(fc.index + fc.start <= d <= fc.index + fc.end)
    return flags


def evaluate_forecasts(
    forecasts: Sequence[EmittedForecast], detections: Sequence[DetectionRecord]
) -> EvaluationReport:
    """Precision and spread statistics over all scored forecasts.

    Sanity guard: detections in partitions the forecast log never mentions
    indicate logs from different replays (the converse is normal: a partition
    may never complete the pattern).
    """
    if forecasts:
        forecast_parts = {fc.partition for fc in forecasts}
        stray = {d.partition for d in detections} - forecast_parts
        if stray:
            raise MismatchedLogsError(
                f"detections reference partitions absent from the forecast log: "
                f"{sorted(stray)[:5]}"
            )
    flags = score_forecasts(forecasts, detections)
    spreads = [fc.end - fc.start for fc in forecasts]
    scored = len(forecasts)
    return EvaluationReport(
        precision=(sum(flags) / scored) if scored else 0.0,
        spread_mean=(sum(spreads) / scored) if scored else 0.0,
        spread_per_forecast=spreads,
        detections=len(detections),
        forecasts_scored=scored,
    )


def benchmark_throughput(
    events: Sequence[Event],
    dfa: SymbolicDfa,
    forecast_table: dict[int, Forecast] | None,
    mode: str,
    warmup_fraction: float = 0.05,
) -> ThroughputReport:
    """Wall-clock the ingest loop; the first 5% of events warm up untimed."""
    if mode not in (MODE_REC, MODE_REC_FOR):
        raise ValueError(f"mode must be {MODE_REC!r} or {MODE_REC_FOR!r}")
    table = forecast_table if mode == MODE_REC_FOR else None
    engine = StreamEngine(dfa, table, collect_logs=False)
    n = len(events)
    warm = int(n * warmup_fraction)
    for event in events[:warm]:
        engine.ingest(event)
    ingest = engine.ingest
    t0 = time.perf_counter()
    for event in events[warm:]:
        ingest(event)
    wall = time.perf_counter() - t0
    processed = n - warm
    if processed == 0:
        return ThroughputReport(mode, 0, wall, 0.0, undefined=True)
    return ThroughputReport(mode, processed, wall, processed / wall if wall > 0 else 0.0)
