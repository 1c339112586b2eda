"""Gateway-side ingestion: topic-keyed publish into an embedded
time-series store with range queries and a line-oriented export.

The store stands in for the broker -> intermediate program -> database
chain: publish is an in-process call, payloads stay opaque bytes, and the
export emits one line per point in the form

    <topic>,node=<addr_hex> value=<payload_hex> <time_microseconds>

sorted by time then node, trailing newline, UTF-8.
"""

from __future__ import annotations

from dataclasses import dataclass


class IngestError(ValueError):
    """Raised on malformed records or per-series timestamp regressions."""


@dataclass(frozen=True)
class MeasurementRecord:
    """One delivered sensor datum on its way to storage."""

    node: int
    sequence: int
    sim_time_s: float
    payload: bytes
    topic: str

    def __post_init__(self) -> None:
        if not self.topic:
            raise IngestError("topic must be non-empty")


class TimeSeriesStore:
    """Append-only series keyed by (topic, node), deduplicated by
    (node, sequence) so republishing a delivered measurement is a no-op."""

    def __init__(self) -> None:
        self._series: dict[tuple[str, int], list[tuple[float, bytes]]] = {}
        self._seen: set[tuple[int, int]] = set()

    def __len__(self) -> int:
        return sum(len(points) for points in self._series.values())

    def publish(self, record: MeasurementRecord) -> None:
        """Append *record* to its series; duplicates are silently ignored.

        Raises:
            IngestError: If the record's timestamp does not advance its
                series (timestamps are strictly increasing per series).
        """
        key = (record.node, record.sequence)
        if key in self._seen:
            return
        series = self._series.setdefault((record.topic, record.node), [])
        if series and record.sim_time_s <= series[-1][0]:
            raise IngestError(
                "timestamp regression in series ({}, {}): {} after {}".format(
                    record.topic, record.node, record.sim_time_s, series[-1][0]
                )
            )
        series.append((record.sim_time_s, record.payload))
        self._seen.add(key)

    def query(self, topic: str, node: int, t0: float, t1: float) -> list[tuple[float, bytes]]:
        """Points with t0 <= t < t1, time-ordered; unknown series yield []."""
        if t0 > t1:
            raise IngestError("query range is inverted: {} > {}".format(t0, t1))
        series = self._series.get((topic, node), [])
        return [(t, payload) for t, payload in series if t0 <= t < t1]

    def export_lines(self) -> str:
        """Render every point in the line-oriented export format."""
        rows = []
        for (topic, node), series in self._series.items():
            for t, payload in series:
                rows.append((t, node, topic, payload))
        rows.sort(key=lambda row: (row[0], row[1]))
        lines = [
            "{},node={:02x} value={} {}".format(topic, node, payload.hex(), round(t * 1_000_000))
            for t, node, topic, payload in rows
        ]
        if not lines:
            return ""
        return "\n".join(lines) + "\n"
