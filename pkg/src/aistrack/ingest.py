"""Parsing, validation and per-vessel grouping of raw AIS CSV logs.

The CSV schema is `OBJECT_ID,VID,SEQUENCE_DTTM,LAT,LON,SPEED,COURSE` with
timestamps in strict ISO-8601 Zulu form at one-second resolution. Columns are
matched case-insensitively by name and may appear in any order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import MalformedRow, OutOfRange

HEADER = ("OBJECT_ID", "VID", "SEQUENCE_DTTM", "LAT", "LON", "SPEED", "COURSE")

_TIME_FMT = "%Y-%m-%dT%H:%M:%SZ"


def parse_timestamp(text: str) -> int:
    """Strict ISO-8601 Zulu -> epoch seconds (UTC)."""
    dt = datetime.strptime(text, _TIME_FMT).replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime(_TIME_FMT)


@dataclass(frozen=True)
class AisMessage:
    """One decoded CSV row.

    speed is tenths of knots, course tenths of degrees in [0, 3600),
    t is epoch seconds (UTC, one-second resolution).
    """

    object_id: int
    vessel_id: str
    t: int
    lat: float
    lon: float
    speed: float
    course: float

    def validate(self, line_no: int | None = None) -> None:
        if self.object_id <= 0:
            raise OutOfRange("OBJECT_ID", self.object_id, line_no)
        if not -90.0 <= self.lat <= 90.0:
            raise OutOfRange("LAT", self.lat, line_no)
        if not -180.0 <= self.lon <= 180.0:
            raise OutOfRange("LON", self.lon, line_no)
        if self.speed < 0:
            raise OutOfRange("SPEED", self.speed, line_no)
        if not 0.0 <= self.course < 3600.0:
            raise OutOfRange("COURSE", self.course, line_no)


@dataclass
class RawTrack:
    """Chronological message sequence from one vessel (ties broken by object_id)."""

    vessel_id: str
    messages: list[AisMessage] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.messages)

    def is_ordered(self) -> bool:
        key = [(m.t, m.object_id) for m in self.messages]
        return all(a <= b for a, b in zip(key, key[1:])) and all(
            m.vessel_id == self.vessel_id for m in self.messages
        )


@dataclass
class ParseStats:
    rows: int = 0
    skipped: int = 0


def _resolve_header(fields: list[str]) -> dict[str, int]:
    upper = [f.strip().upper() for f in fields]
    index = {}
    for name in HEADER:
        if name not in upper:
            raise MalformedRow(1, f"missing column {name}")
        index[name] = upper.index(name)
    return index


def parse_csv(text: str, strict: bool = True, stats: ParseStats | None = None) -> list[AisMessage]:
    """Parse a Table-1 style CSV. Strict mode raises on the first bad row;
    lenient mode skips bad rows and counts them in `stats`."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty input, header required")
    cols = _resolve_header(header)
    out: list[AisMessage] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if stats is not None:
            stats.rows += 1
        try:
            if len(row) != len(header):
                raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(row)}")
            try:
                msg = AisMessage(
                    object_id=int(row[cols["OBJECT_ID"]]),
                    vessel_id=row[cols["VID"]].strip(),
                    t=parse_timestamp(row[cols["SEQUENCE_DTTM"]].strip()),
                    lat=float(row[cols["LAT"]]),
                    lon=float(row[cols["LON"]]),
                    speed=float(row[cols["SPEED"]]),
                    course=float(row[cols["COURSE"]]),
                )
            except (ValueError, OverflowError) as exc:
                raise MalformedRow(line_no, str(exc)) from exc
            msg.validate(line_no)
        except (MalformedRow, OutOfRange):
            if strict:
                raise
            if stats is not None:
                stats.skipped += 1
            continue
        out.append(msg)
    return out


def serialize_csv(messages: list[AisMessage]) -> str:
    """Inverse of parse_csv at full stored precision (repr round-trips floats)."""
    lines = [",".join(HEADER)]
    for m in messages:
        lines.append(
            f"{m.object_id},{m.vessel_id},{format_timestamp(m.t)},"
            f"{float(m.lat)!r},{float(m.lon)!r},{float(m.speed)!r},{float(m.course)!r}"
        )
    return "\n".join(lines) + "\n"


def group_tracks(messages: list[AisMessage]) -> list[RawTrack]:
    """One RawTrack per distinct vessel_id, each sorted by (t, object_id)."""
    by_vessel: dict[str, list[AisMessage]] = {}
    for m in messages:
        by_vessel.setdefault(m.vessel_id, []).append(m)
    tracks = []
    for vid in sorted(by_vessel):
        msgs = sorted(by_vessel[vid], key=lambda m: (m.t, m.object_id))
        tracks.append(RawTrack(vessel_id=vid, messages=msgs))
    return tracks


def filter_min_points(tracks: list[RawTrack], threshold: int) -> list[RawTrack]:
    """Keep tracks with at least `threshold` messages (order preserved)."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    return [t for t in tracks if len(t) >= threshold]
