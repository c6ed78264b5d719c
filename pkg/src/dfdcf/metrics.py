"""Per-flow measurements, window summaries and CSV serialization."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping

import numpy as np

from .engine import MS, S

MAC_DROP_CAUSES = ("deadline", "retry", "queue")
DROP_CAUSES = MAC_DROP_CAUSES + ("wired",)

TIMESERIES_HEADER = ("time_s", "flow", "metric", "value")
METRICS = ("delay_ms", "jitter_ms", "rtt_ms", "throughput_kbps",
           "drop_deadline", "drop_retry", "drop_queue")


@dataclass
class FlowStats:
    """Append-only record of one flow's MAC-level history.

    ``sent`` counts frames offered to the MAC (queue drops included), so
    ``sent == delivered + sum(MAC drops) + frames still held by the MAC``.
    Wired-link drops happen after MAC delivery and are tracked apart.
    """

    flow_id: str
    sent: int = 0
    delivered: int = 0
    drops: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DROP_CAUSES, 0))
    sent_times: list[int] = field(default_factory=list)
    delay_series: list[tuple[int, int]] = field(default_factory=list)
    delivery_bits: list[int] = field(default_factory=list)
    jitter_series: list[tuple[int, int]] = field(default_factory=list)
    rtt_series: list[tuple[int, int]] = field(default_factory=list)
    drop_events: list[tuple[int, str]] = field(default_factory=list)
    throughput_buckets: list[int] = field(default_factory=list)

    def record_sent(self, now: int) -> None:
        self.sent += 1
        self.sent_times.append(now)

    def record_delivery(self, enqueue_time: int, ack_time: int, payload_bytes: int = 0) -> None:
        if ack_time < enqueue_time:
            raise ValueError(f"ack time {ack_time} precedes enqueue time {enqueue_time}")
        delay = ack_time - enqueue_time
        if self.delay_series:
            self.jitter_series.append((ack_time, abs(delay - self.delay_series[-1][1])))
        self.delay_series.append((ack_time, delay))
        bits = payload_bytes * 8
        self.delivery_bits.append(bits)
        self.delivered += 1
        bucket = ack_time // S
        if bucket >= len(self.throughput_buckets):
            self.throughput_buckets.extend([0] * (bucket + 1 - len(self.throughput_buckets)))
        self.throughput_buckets[bucket] += bits

    def record_drop(self, cause: str, now: int) -> None:
        if cause not in self.drops:
            raise ValueError(f"unknown drop cause {cause!r}; expected one of {DROP_CAUSES}")
        self.drops[cause] += 1
        self.drop_events.append((now, cause))

    def record_rtt(self, now: int, sample: int) -> None:
        self.rtt_series.append((now, sample))

    @property
    def mac_drops(self) -> int:
        return sum(self.drops[c] for c in MAC_DROP_CAUSES)

    def samples(self, start: int, end: int) -> dict[str, np.ndarray]:
        """Raw samples whose timestamps fall in ``[start, end)``."""
        def pick(series):
            return np.array([v for t, v in series if start <= t < end], dtype=np.int64)
        bits = np.array([b for (t, _), b in zip(self.delay_series, self.delivery_bits)
                         if start <= t < end], dtype=np.int64)
        return {
            "delay": pick(self.delay_series),
            "jitter": pick(self.jitter_series),
            "rtt": pick(self.rtt_series),
            "bits": bits,
        }

    def summarize(self, start: int, end: int) -> "FlowSummary":
        return summarize(self, (start, end))


@dataclass
class FlowSummary:
    """Window statistics. ``None`` marks a quantity with no samples."""

    flow: str
    window_start_s: float
    window_end_s: float
    sent: int
    delivered: int
    delay_mean_ms: float | None
    delay_median_ms: float | None
    delay_p95_ms: float | None
    jitter_mean_ms: float | None
    jitter_std_ms: float | None
    rtt_mean_ms: float | None
    goodput_kbps: float | None
    loss_deadline: float | None
    loss_retry: float | None
    loss_queue: float | None
    loss_wired: float | None

    @property
    def empty(self) -> bool:
        return self.delivered == 0 and self.sent == 0


def _ms(values: np.ndarray, fn) -> float | None:
    if values.size == 0:
        return None
    return float(fn(values)) / MS


def summarize(stats: FlowStats, window: tuple[int, int]) -> FlowSummary:
    start, end = window
    if end <= start:
        raise ValueError(f"empty or inverted window [{start}, {end})")
    smp = stats.samples(start, end)
    sent = sum(1 for t in stats.sent_times if start <= t < end)
    dropped = dict.fromkeys(DROP_CAUSES, 0)
    for t, cause in stats.drop_events:
        if start <= t < end:
            dropped[cause] += 1
    span_s = (end - start) / S
    delivered = int(smp["delay"].size)
    return FlowSummary(
        flow=stats.flow_id,
        window_start_s=start / S,
        window_end_s=end / S,
        sent=sent,
        delivered=delivered,
        delay_mean_ms=_ms(smp["delay"], np.mean),
        delay_median_ms=_ms(smp["delay"], np.median),
        delay_p95_ms=_ms(smp["delay"], lambda v: np.percentile(v, 95)),
        jitter_mean_ms=_ms(smp["jitter"], np.mean),
        jitter_std_ms=_ms(smp["jitter"], np.std),
        rtt_mean_ms=_ms(smp["rtt"], np.mean),
        goodput_kbps=float(smp["bits"].sum()) / span_s / 1000 if delivered else None,
        **{f"loss_{c}": (dropped[c] / sent if sent else None) for c in DROP_CAUSES},
    )


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def timeseries_rows(stats: Iterable[FlowStats]) -> list[tuple[int, str, str, float]]:
    rows: list[tuple[int, str, str, float]] = []
    for st in stats:
        f = st.flow_id
        rows.extend((t, f, "delay_ms", v / MS) for t, v in st.delay_series)
        rows.extend((t, f, "jitter_ms", v / MS) for t, v in st.jitter_series)
        rows.extend((t, f, "rtt_ms", v / MS) for t, v in st.rtt_series)
        rows.extend((i * S, f, "throughput_kbps", b / 1000)
                    for i, b in enumerate(st.throughput_buckets))
        rows.extend((t, f, f"drop_{c}", 1.0) for t, c in st.drop_events if c != "wired")
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def render_timeseries_csv(stats: Iterable[FlowStats]) -> str:
    buf = io.StringIO()
    buf.write(",".join(TIMESERIES_HEADER) + "\n")
    for t, flow, metric, value in timeseries_rows(stats):
        buf.write(f"{t / S:.6f},{flow},{metric},{value:.6f}\n")
    return buf.getvalue()


def _write_text(path: str | os.PathLike, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc


def write_timeseries_csv(stats: Iterable[FlowStats], path: str | os.PathLike) -> None:
    _write_text(path, render_timeseries_csv(stats))


SUMMARY_FIELDS = tuple(f.name for f in fields(FlowSummary))


def render_summary_csv(rows: Iterable[Mapping | FlowSummary],
                       extra: tuple[str, ...] = ("window",)) -> str:
    """Summary rows as CSV; ``extra`` names leading key columns (e.g. method, window)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(extra + SUMMARY_FIELDS)
    for row in rows:
        if isinstance(row, FlowSummary):
            row = {"summary": row}
        summary = row["summary"]
        writer.writerow([_fmt(row.get(k)) for k in extra]
                        + [_fmt(getattr(summary, name)) for name in SUMMARY_FIELDS])
    return buf.getvalue()


def write_summary_csv(rows, path: str | os.PathLike, extra: tuple[str, ...] = ("window",)) -> None:
    _write_text(path, render_summary_csv(rows, extra))


def read_timeseries_csv(path: str | os.PathLike) -> list[tuple[float, str, str, float]]:
    """Parse a time-series CSV, raising ``ValueError`` with row context on bad input."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file, expected header {','.join(TIMESERIES_HEADER)}")
        if tuple(header) != TIMESERIES_HEADER:
            raise ValueError(f"{path}: row 1: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"{path}: row {lineno}: expected 4 fields, got {len(row)}")
            try:
                t, v = float(row[0]), float(row[3])
            except ValueError:
                raise ValueError(f"{path}: row {lineno}: non-numeric time or value {row!r}") from None
            if row[2] not in METRICS:
                raise ValueError(f"{path}: row {lineno}: unknown metric {row[2]!r}")
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ValueError(f"{path}: row {lineno}: non-finite number")
            out.append((t, row[1], row[2], v))
    return out
