"""Traffic sources and end-to-end protocols: CBR/UDP, simplified Reno TCP, wired link."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .engine import MS, S

TCP_ACK_BYTES = 40


class ProtocolError(RuntimeError):
    pass


@dataclass
class CbrSource:
    """Constant-bit-rate source emitting at ``start, start + interval, ...`` while ``< stop``."""

    flow_id: str
    packet_bytes: int
    interval: int
    start: int
    stop: int
    emitted: int = 0

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError(f"{self.flow_id}: interval must be positive")
        if self.start >= self.stop:
            raise ValueError(f"{self.flow_id}: start must precede stop")
        if self.packet_bytes <= 0:
            raise ValueError(f"{self.flow_id}: packet_bytes must be positive")

    def expected_emissions(self) -> int:
        return -(-(self.stop - self.start) // self.interval)

    def tick(self, now: int) -> tuple[int | None, int | None]:
        """Emit one packet at ``now``; returns ``(seq, next_tick)``.

        ``(None, None)`` outside ``[start, stop)``; ``next_tick`` is ``None``
        once the following emission would fall on or after ``stop``.
        """
        if not self.start <= now < self.stop:
            return None, None
        seq = self.emitted
        self.emitted += 1
        nxt = now + self.interval
        return seq, (nxt if nxt < self.stop else None)


def cbr_tick(src: CbrSource, now: int):
    return src.tick(now)


@dataclass
class TcpConnection:
    """Reno sender with byte sequence numbers and an always-full send buffer.

    Fast recovery is simplified: on the third duplicate ACK the oldest
    segment is resent and ``cwnd`` drops straight to ``ssthresh`` with no
    window inflation. A retransmission timeout goes back to ``snd_una``.
    """

    flow_id: str
    mss: int = 1100
    rto_min: int = 1 * S
    rto_max: int = 64 * S
    rto_initial: int = 3 * S
    rwnd: int | None = None
    cwnd: float = 0.0
    ssthresh: float = float(1 << 30)
    next_seq: int = 0
    highest_acked: int = 0
    max_sent: int = 0
    dup_acks: int = 0
    srtt: int | None = None
    rttvar: int | None = None
    rto: int = 0
    rto_backoff: int = 1
    retransmitting: bool = False
    timer_deadline: int | None = None
    retransmitted: set[int] = field(default_factory=set)
    rtt_samples: list[tuple[int, int, int]] = field(default_factory=list)
    _timed_seq: int | None = None
    _timed_at: int = 0

    def __post_init__(self):
        if self.cwnd == 0.0:
            self.cwnd = float(self.mss)
        if self.rto == 0:
            self.rto = self.rto_initial

    @property
    def flight(self) -> int:
        return self.next_seq - self.highest_acked

    def _window(self) -> float:
        return self.cwnd if self.rwnd is None else min(self.cwnd, self.rwnd)

    def _emit(self, now: int) -> int:
        seq = self.next_seq
        if seq < self.max_sent:
            self.retransmitted.add(seq)
            if self._timed_seq is not None and self._timed_seq >= seq:
                self._timed_seq = None
        elif self._timed_seq is None:
            self._timed_seq = seq
            self._timed_at = now
        self.next_seq += self.mss
        self.max_sent = max(self.max_sent, self.next_seq)
        if self.timer_deadline is None:
            self.timer_deadline = now + self.rto
        return seq

    def try_send(self, now: int) -> list[int]:
        """Sequence numbers of the segments the window allows right now."""
        out = []
        while self.flight < self._window():
            out.append(self._emit(now))
        return out

    def _retransmit_oldest(self, now: int) -> int:
        seq = self.highest_acked
        self.retransmitted.add(seq)
        if self._timed_seq is not None and self._timed_seq >= seq:
            self._timed_seq = None
        self.retransmitting = True
        return seq

    def on_ack(self, ack_seq: int, now: int) -> list[int]:
        """Process a cumulative ACK; returns segments to (re)send immediately."""
        if ack_seq > self.max_sent:
            raise ProtocolError(f"{self.flow_id}: ACK {ack_seq} for data never sent (max {self.max_sent})")
        out: list[int] = []
        if ack_seq > self.highest_acked:
            if self._timed_seq is not None and ack_seq > self._timed_seq:
                sample = now - self._timed_at
                self.rtt_samples.append((now, sample, self._timed_seq))
                self.rtt_update(sample)
                self._timed_seq = None
            self.highest_acked = ack_seq
            if self.next_seq < ack_seq:
                self.next_seq = ack_seq
            self.dup_acks = 0
            self.retransmitting = False
            if self.cwnd < self.ssthresh:
                self.cwnd += self.mss
            else:
                self.cwnd += self.mss * self.mss / self.cwnd
            self.timer_deadline = now + self.rto if self.flight > 0 else None
        elif ack_seq == self.highest_acked and self.flight > 0:
            self.dup_acks += 1
            if self.dup_acks == 3:
                self.ssthresh = max(self.flight / 2, 2 * self.mss)
                self.cwnd = self.ssthresh
                out.append(self._retransmit_oldest(now))
                self.timer_deadline = now + self.rto
        return out

    def on_rto(self, now: int) -> list[int]:
        if self.flight <= 0:
            self.timer_deadline = None
            return []
        self.ssthresh = max(self.flight / 2, 2 * self.mss)
        self.cwnd = float(self.mss)
        self.dup_acks = 0
        self.rto = min(self.rto * 2, self.rto_max)
        self.rto_backoff *= 2
        self.retransmitting = True
        self.next_seq = self.highest_acked
        self._timed_seq = None
        self.timer_deadline = None
        return self.try_send(now)

    def rtt_update(self, sample: int) -> None:
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample // 2
        else:
            self.rttvar = (3 * self.rttvar + abs(self.srtt - sample)) // 4
            self.srtt = (7 * self.srtt + sample) // 8
        self.rto = min(max(self.srtt + 4 * self.rttvar, self.rto_min), self.rto_max)
        self.rto_backoff = 1


def tcp_try_send(conn: TcpConnection, now: int) -> list[int]:
    return conn.try_send(now)


def tcp_on_ack(conn: TcpConnection, ack_seq: int, now: int) -> list[int]:
    return conn.on_ack(ack_seq, now)


def tcp_on_rto(conn: TcpConnection, now: int) -> list[int]:
    return conn.on_rto(now)


def rtt_update(conn: TcpConnection, sample: int) -> None:
    conn.rtt_update(sample)


@dataclass
class TcpSink:
    """Cumulative-ACK receiver; ACKs every segment."""

    flow_id: str
    mss: int = 1100
    expected: int = 0
    delivered_bytes: int = 0
    out_of_order: set[int] = field(default_factory=set)

    def on_segment(self, seq: int) -> int:
        if seq == self.expected:
            self.expected += self.mss
            while self.expected in self.out_of_order:
                self.out_of_order.discard(self.expected)
                self.expected += self.mss
            self.delivered_bytes = self.expected
        elif seq > self.expected:
            self.out_of_order.add(seq)
        return self.expected


@dataclass
class WiredLink:
    """One direction of a point-to-point link: FIFO, serialization, propagation delay."""

    rate: int = 10_000_000
    delay: int = 2 * MS
    capacity: int = 50
    busy_until: int = 0
    dropped: int = 0
    _departures: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.rate <= 0 or self.delay < 0 or self.capacity < 1:
            raise ValueError("wired link needs rate > 0, delay >= 0, capacity >= 1")

    def serialization(self, nbytes: int) -> int:
        return (nbytes * 8 * 1_000_000_000 * 2 + self.rate) // (2 * self.rate)

    def deliver(self, nbytes: int, now: int) -> int | None:
        """Arrival time at the far end, or ``None`` if the queue is full."""
        deps = self._departures
        while deps and deps[0] <= now:
            deps.popleft()
        if len(deps) >= self.capacity:
            self.dropped += 1
            return None
        done = max(now, self.busy_until) + self.serialization(nbytes)
        self.busy_until = done
        deps.append(done)
        return done + self.delay


def wired_deliver(link: WiredLink, nbytes: int, now: int) -> int | None:
    return link.deliver(nbytes, now)
