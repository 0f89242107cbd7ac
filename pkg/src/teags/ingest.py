"""Event ingestion: alarm records, temporal facets, and NTA occurrence cubes.

An alarm event is one timestamped, text-annotated contagion observation at a
node. Events are bucketed along four calendar facets (hour, day, week, month);
per facet, occurrences are recorded in a sparse node x split x category cube
with the alarm texts attached per (node, split) cell.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

__all__ = [
    "AlarmEvent",
    "TemporalFacet",
    "FACETS",
    "FACET_BY_KIND",
    "IngestError",
    "NtaCube",
    "parse_events",
    "write_events",
    "facet_split",
    "build_nta_cube",
    "tokenize",
]


class IngestError(ValueError):
    """Raised for malformed or invariant-violating event input.

    ``line`` carries the 1-based record number when the failure is tied to a
    specific input record.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class AlarmEvent:
    """One contagion observation: id, node, category label, epoch time, text."""

    alarm_id: str
    node_id: str
    category: str
    timestamp: int
    text: str = ""

    def validate(self, line: int | None = None) -> None:
        if self.timestamp < 0:
            raise IngestError(f"negative timestamp {self.timestamp}", line)
        for name in ("alarm_id", "node_id", "category"):
            if not getattr(self, name):
                raise IngestError(f"empty {name}", line)


@dataclass(frozen=True)
class TemporalFacet:
    """A calendar dimension whose splits partition timestamps.

    ``parent`` names the next-coarser facet; the chain is
    hour -> day -> week -> month -> (none).
    """

    kind: str
    split_count: int
    parent: str | None


FACETS: tuple[TemporalFacet, ...] = (
    TemporalFacet("hour", 24, "day"),
    TemporalFacet("day", 7, "week"),
    TemporalFacet("week", 5, "month"),
    TemporalFacet("month", 12, None),
)

FACET_BY_KIND = {f.kind: f for f in FACETS}


def facet_split(facet: TemporalFacet | str, timestamp: int) -> int:
    """Map an epoch timestamp to its split index in one facet (UTC calendar).

    hour: clock hour 0-23; day: weekday, Monday=0; week: week of month via
    floor((day_of_month - 1) / 7), giving splits 0-4; month: 0-11.
    """
    kind = facet if isinstance(facet, str) else facet.kind
    dt = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    if kind == "hour":
        return dt.hour
    if kind == "day":
        return dt.weekday()
    if kind == "week":
        return (dt.day - 1) // 7
    if kind == "month":
        return dt.month - 1
    raise ValueError(f"unknown facet kind {kind!r}")


_EVENT_FIELDS = ("alarm_id", "node_id", "category", "timestamp", "text")
_TOKEN_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2."""
    return [t for t in _TOKEN_RE.split(text.lower()) if len(t) >= 2]


def _event_from_record(rec: dict, line: int) -> AlarmEvent:
    missing = [k for k in _EVENT_FIELDS if k not in rec or rec[k] is None]
    if missing:
        raise IngestError(f"missing field(s) {', '.join(missing)}", line)
    try:
        ts = int(rec["timestamp"])
    except (TypeError, ValueError):
        raise IngestError(f"non-integer timestamp {rec['timestamp']!r}", line) from None
    ev = AlarmEvent(
        alarm_id=str(rec["alarm_id"]),
        node_id=str(rec["node_id"]),
        category=str(rec["category"]),
        timestamp=ts,
        text=str(rec["text"]),
    )
    ev.validate(line)
    return ev


def parse_events(source, fmt: str = "csv") -> list[AlarmEvent]:
    """Parse a CSV (with header) or JSONL byte/text stream into events.

    Events come back in file order. Malformed records raise
    :class:`IngestError` carrying the record's line number; a repeated
    alarm_id raises an error naming the id.
    """
    if isinstance(source, (str, bytes)):
        source = io.StringIO(source.decode("utf-8") if isinstance(source, bytes) else source)
    elif isinstance(source, io.BufferedIOBase) or (
        hasattr(source, "read") and isinstance(source.read(0), bytes)
    ):
        source = io.TextIOWrapper(source, encoding="utf-8")

    events: list[AlarmEvent] = []
    seen: set[str] = set()
    if fmt == "csv":
        reader = csv.DictReader(source)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != _EVENT_FIELDS:
            raise IngestError(
                f"bad header {reader.fieldnames!r}, expected {','.join(_EVENT_FIELDS)}", 1
            )
        for i, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise IngestError("wrong field count", i)
            events.append(_event_from_record(row, i))
    elif fmt == "jsonl":
        for i, raw in enumerate(source, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise IngestError(f"invalid JSON: {exc.msg}", i) from None
            if not isinstance(rec, dict):
                raise IngestError("record is not an object", i)
            events.append(_event_from_record(rec, i))
    else:
        raise ValueError(f"unknown format {fmt!r}")

    for ev in events:
        if ev.alarm_id in seen:
            raise IngestError(f"duplicate alarm_id {ev.alarm_id!r}")
        seen.add(ev.alarm_id)
    return events


def write_events(events: list[AlarmEvent], stream, fmt: str = "csv") -> None:
    """Serialize events so that parse_events round-trips them."""
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(_EVENT_FIELDS)
        for ev in events:
            writer.writerow([ev.alarm_id, ev.node_id, ev.category, ev.timestamp, ev.text])
    elif fmt == "jsonl":
        for ev in events:
            stream.write(
                json.dumps(
                    {
                        "alarm_id": ev.alarm_id,
                        "node_id": ev.node_id,
                        "category": ev.category,
                        "timestamp": ev.timestamp,
                        "text": ev.text,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    else:
        raise ValueError(f"unknown format {fmt!r}")


@dataclass
class NtaCube:
    """Sparse node x split x category occurrence cube for one facet.

    ``cells`` maps (node_id, split, category) to an event count; ``texts``
    maps (node_id, split) to the node's alarm texts in that split,
    concatenated in timestamp order with single spaces. ``node_order``
    lists nodes by first appearance in the event stream.
    """

    facet: TemporalFacet
    cells: dict[tuple[str, int, str], int] = field(default_factory=dict)
    texts: dict[tuple[str, int], str] = field(default_factory=dict)
    node_order: tuple[str, ...] = ()

    def total_count(self) -> int:
        return sum(self.cells.values())

    def split_text(self, split: int) -> str:
        """All nodes' text in one split, aggregated in node_order."""
        parts = [
            self.texts[(n, split)]
            for n in self.node_order
            if (n, split) in self.texts and self.texts[(n, split)]
        ]
        return " ".join(parts)

    def node_categories_by_split(self) -> dict[str, dict[int, set[str]]]:
        """Per node: split -> set of categories raised there."""
        out: dict[str, dict[int, set[str]]] = {}
        for (node, split, cat) in self.cells:
            out.setdefault(node, {}).setdefault(split, set()).add(cat)
        return out


def build_nta_cube(events: list[AlarmEvent], facet: TemporalFacet) -> NtaCube:
    """Fold validated events into the facet's occurrence cube."""
    cube = NtaCube(facet=facet)
    order: dict[str, None] = {}
    text_parts: dict[tuple[str, int], list[str]] = {}
    for ev in sorted(events, key=lambda e: e.timestamp):
        split = facet_split(facet, ev.timestamp)
        key = (ev.node_id, split, ev.category)
        cube.cells[key] = cube.cells.get(key, 0) + 1
        order.setdefault(ev.node_id, None)
        if ev.text:
            text_parts.setdefault((ev.node_id, split), []).append(ev.text)
    cube.texts = {k: " ".join(v) for k, v in text_parts.items()}
    cube.node_order = tuple(order)
    return cube
