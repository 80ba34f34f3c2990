"""Event and log file formats.

Input streams are CSV with a ``timestamp,partitionKey,lon,lat,speed,heading``
header (extra columns allowed) or newline-delimited JSON objects with the
same fields.  Output logs are ``detections.csv`` and ``forecasts.csv``;
evaluation reports are JSON.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .algebra import Event
from .engine import DetectionRecord, EmittedForecast

STANDARD_COLUMNS = ("timestamp", "partitionKey", "lon", "lat", "speed", "heading")


def _parse_value(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _format_number(value: float) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def read_events_csv(path: str | Path, partition_attribute: str = "partitionKey") -> Iterator[Event]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "timestamp" not in reader.fieldnames:
            raise ValueError(f"{path}: missing CSV header with a timestamp column")
        for row in reader:
            key = row.get("partitionKey", "")
            attributes = {
                name: _parse_value(value)
                for name, value in row.items()
                if name not in ("timestamp", "partitionKey") and value != ""
            }
            attributes["partitionKey"] = key
            attributes.setdefault(partition_attribute, key)
            yield Event(
                timestamp=float(row["timestamp"]), attributes=attributes, partition_key=key
            )


def read_events_ndjson(path: str | Path, partition_attribute: str = "partitionKey") -> Iterator[Event]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            key = str(doc.get("partitionKey", ""))
            attributes = {
                k: v for k, v in doc.items() if k not in ("timestamp", "partitionKey")
            }
            attributes["partitionKey"] = key
            attributes.setdefault(partition_attribute, key)
            yield Event(timestamp=float(doc["timestamp"]), attributes=attributes, partition_key=key)


def read_events(path: str | Path, partition_attribute: str = "partitionKey") -> Iterator[Event]:
    if str(path).endswith((".ndjson", ".jsonl")):
        return read_events_ndjson(path, partition_attribute)
    return read_events_csv(path, partition_attribute)


def write_events_csv(path: str | Path, events: Iterable[Event]) -> None:
    events = list(events)
    extra = sorted(
        {
            name
            for e in events
            for name in e.attributes
            if name not in STANDARD_COLUMNS and name != "partitionKey"
        }
    )
    columns = list(STANDARD_COLUMNS) + extra
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for e in events:
            row = [_format_number(e.timestamp), e.partition_key]
            for name in columns[2:]:
                value = e.attributes.get(name, "")
                row.append(_format_number(value) if value != "" else "")
            writer.writerow(row)


def write_detections_csv(path: str | Path, detections: Sequence[DetectionRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["partition", "index", "timestamp"])
        for d in detections:
            writer.writerow([d.partition, d.index, _format_number(d.timestamp)])


def read_detections_csv(path: str | Path) -> list[DetectionRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                DetectionRecord(row["partition"], int(row["index"]), float(row["timestamp"]))
            )
    return out


def write_forecasts_csv(
    path: str | Path,
    forecasts: Sequence[EmittedForecast],
    correct: Sequence[bool] | None = None,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["partition", "index", "start", "end", "probability", "correct"])
        for i, fc in enumerate(forecasts):
            flag = "" if correct is None else str(correct[i]).lower()
            writer.writerow(
                [fc.partition, fc.index, fc.start, fc.end, repr(fc.probability), flag]
            )


def read_forecasts_csv(path: str | Path) -> tuple[list[EmittedForecast], list[bool | None]]:
    forecasts, flags = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            forecasts.append(
                EmittedForecast(
                    row["partition"],
                    int(row["index"]),
                    int(row["start"]),
                    int(row["end"]),
                    float(row["probability"]),
                )
            )
            flags.append({"true": True, "false": False}.get(row.get("correct", ""), None))
    return forecasts, flags


def write_report_json(path: str | Path, report) -> None:
    doc = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
