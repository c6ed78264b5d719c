"""CSMA/CA stations sharing one ideal collision domain.

Backoff is not simulated slot by slot. A contending station schedules a
single access event at ``wait_start + difs + remaining * slot``; when the
medium turns busy first, the event is cancelled and the slots that fully
elapsed after the DIFS are subtracted from the counter.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

import numpy as np

from .engine import Engine, Event, EventKind
from .metrics import FlowStats
from .policy import (
    PhyParams,
    ServiceClass,
    fixed_difs,
    frame_service_level,
    instantaneous_difs,
    is_expired,
    priority_key,
)

STANDARD_DIFS_SLOTS = 2


class AccessPolicy(str, enum.Enum):
    DCF = "dcf"
    DIFS_DIFF = "difs"
    DF_DCF = "dfdcf"

    @classmethod
    def parse(cls, value: "str | AccessPolicy") -> "AccessPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            allowed = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown access method {value!r}; allowed: {allowed}") from None


class MacState(enum.Enum):
    IDLE = "idle"
    DIFS_WAIT = "difs-wait"
    BACKOFF = "backoff"
    TRANSMITTING = "transmitting"
    AWAIT_ACK = "await-ack"


class EnqueueResult(enum.Enum):
    ACCEPTED = "accepted"
    DROPPED_QUEUE_FULL = "dropped_queue_full"


class AckOutcome(enum.Enum):
    ACKED = "acked"
    TIMEOUT = "timeout"


@dataclass(eq=False)
class Frame:
    flow_id: str
    class_id: str
    payload_bytes: int
    seq: int = 0
    kind: str = "data"
    dest: str = "AP"
    data: Any = None
    arrival: int = -1
    order: int = 0
    tx_start: int | None = None
    attempts: int = 0

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError(f"payload_bytes must be positive, got {self.payload_bytes}")


@dataclass(frozen=True)
class MacConfig:
    cw_min: int = 31
    cw_max: int = 1023
    retry_limit: int = 7
    queue_capacity: int = 50
    access_policy: AccessPolicy = AccessPolicy.DF_DCF

    def __post_init__(self):
        object.__setattr__(self, "access_policy", AccessPolicy.parse(self.access_policy))
        if not 0 < self.cw_min <= self.cw_max:
            raise ValueError(f"need 0 < cw_min <= cw_max, got {self.cw_min}, {self.cw_max}")
        if self.retry_limit < 1:
            raise ValueError(f"retry_limit must be >= 1, got {self.retry_limit}")
        if self.queue_capacity < 1:
            raise ValueError(f"queue_capacity must be >= 1, got {self.queue_capacity}")


def _bits_time(nbytes: int, rate: int) -> int:
    # nearest nanosecond, halves up
    return (nbytes * 8 * 1_000_000_000 * 2 + rate) // (2 * rate)


def frame_airtime(payload_bytes: int, phy: PhyParams) -> int:
    if payload_bytes <= 0:
        raise ValueError(f"payload_bytes must be positive, got {payload_bytes}")
    return phy.plcp_overhead + _bits_time(phy.mac_header_bytes + payload_bytes, phy.data_rate)


def ack_airtime(phy: PhyParams) -> int:
    return phy.plcp_overhead + _bits_time(phy.ack_frame_bytes, phy.data_rate)


def ack_timeout(phy: PhyParams) -> int:
    return phy.sifs + ack_airtime(phy) + 2 * phy.slot_time


class FrameQueue:
    """Drop-tail queue kept as one FIFO per service class.

    Within a class, arrival order equals deadline order, so both the FIFO
    head and the minimum-service-level frame are always a class head.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._by_class: dict[str, deque[Frame]] = {}
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def __iter__(self) -> Iterator[Frame]:
        frames = [f for q in self._by_class.values() for f in q]
        frames.sort(key=lambda f: f.order)
        return iter(frames)

    @property
    def full(self) -> bool:
        return self._count >= self.capacity

    def push(self, frame: Frame) -> None:
        self._by_class.setdefault(frame.class_id, deque()).append(frame)
        self._count += 1

    def heads(self) -> list[Frame]:
        return [q[0] for q in self._by_class.values() if q]

    def fifo_head(self) -> Frame | None:
        heads = self.heads()
        return min(heads, key=lambda f: f.order) if heads else None

    def pop_head(self, frame: Frame) -> None:
        q = self._by_class[frame.class_id]
        if q[0] is not frame:
            raise ValueError("only class heads can be removed")
        q.popleft()
        self._count -= 1

    def purge_expired(self, classes: dict[str, ServiceClass], now: int) -> list[Frame]:
        dropped = []
        for cid, q in self._by_class.items():
            temax = classes[cid].temax
            while q and now >= q[0].arrival + temax:
                dropped.append(q.popleft())
        self._count -= len(dropped)
        return dropped


class Transmission:
    __slots__ = ("mac", "frame", "start", "end", "collided")

    def __init__(self, mac: "StationMac", frame: Frame, start: int, end: int):
        self.mac = mac
        self.frame = frame
        self.start = start
        self.end = end
        self.collided = False


class Channel:
    """Single collision domain with zero propagation delay.

    A clean data frame keeps the medium reserved for SIFS plus the MAC-ACK
    (other stations defer as if by NAV), so ACKs are never lost. Collided
    frames get no ACK and the medium frees when the last of them ends.
    """

    def __init__(self, engine: Engine, phy: PhyParams):
        self.engine = engine
        self.phy = phy
        self.stations: dict[str, StationMac] = {}
        self.active: list[Transmission] = []
        self.busy = False
        self.idle_since = 0
        self.audit: Auditor | None = None
        self._ack_air = ack_airtime(phy)

    def attach(self, mac: "StationMac") -> None:
        if mac.station_id in self.stations:
            raise ValueError(f"duplicate station id {mac.station_id!r}")
        self.stations[mac.station_id] = mac

    def transmit(self, mac: "StationMac", frame: Frame, airtime: int) -> Transmission:
        now = self.engine.now
        tx = Transmission(mac, frame, now, now + airtime)
        if self.active:
            tx.collided = True
            for other in self.active:
                other.collided = True
        self.active.append(tx)
        if self.audit is not None:
            self.audit.on_tx_start(self, mac, frame, now)
        self.engine.schedule(tx.end, self.on_transmission_end, tx, kind=EventKind.TX_END, target=mac.station_id)
        if not self.busy:
            self.busy = True
            for st in self.stations.values():
                if st is not mac:
                    st.on_medium_busy(now)
        return tx

    def on_transmission_end(self, tx: Transmission) -> str:
        self.active.remove(tx)
        tx.mac.on_tx_end(tx)
        if tx.collided:
            if not self.active:
                self._go_idle()
            return "collided"
        receiver = self.stations.get(tx.frame.dest)
        if receiver is not None:
            receiver.on_receive(tx.frame)
        self.engine.schedule_in(self.phy.sifs + self._ack_air, self._ack_end, tx, target=tx.mac.station_id)
        return "clean"

    def _ack_end(self, tx: Transmission) -> None:
        if not self.active:
            self.busy = False
            self.idle_since = self.engine.now
        tx.mac.on_ack_or_timeout(AckOutcome.ACKED)
        if not self.busy:
            self._notify_idle()

    def _go_idle(self) -> None:
        self.busy = False
        self.idle_since = self.engine.now
        self._notify_idle()

    def _notify_idle(self) -> None:
        now = self.engine.now
        for st in self.stations.values():
            if self.busy:
                break
            st.on_medium_idle(now)


class StationMac:
    """Per-station DCF state machine parameterised by an access policy."""

    def __init__(self, station_id: str, engine: Engine, channel: Channel, phy: PhyParams,
                 config: MacConfig, classes: dict[str, ServiceClass],
                 rng: np.random.Generator, stats: dict[str, FlowStats]):
        self.station_id = station_id
        self.engine = engine
        self.channel = channel
        self.phy = phy
        self.config = config
        self.policy = config.access_policy
        self.classes = classes
        self.rng = rng
        self.stats = stats
        self.queue = FrameQueue(config.queue_capacity)
        self.state = MacState.IDLE
        self.current: Frame | None = None
        self.cw = config.cw_min
        self.backoff_remaining = 0
        self.retries = 0
        self.on_deliver: Callable[[Frame], None] | None = None
        self._order = 0
        self._wait_start = 0
        self._difs = 0
        self._difs_ev: Event | None = None
        self._access_ev: Event | None = None
        self._timeout_ev: Event | None = None
        self._standard_difs = fixed_difs(STANDARD_DIFS_SLOTS, phy)
        self._ack_timeout = ack_timeout(phy)
        channel.attach(self)

    def __repr__(self) -> str:
        return f"StationMac({self.station_id!r}, {self.state.value}, queued={len(self.queue)})"

    @property
    def audit(self):
        return self.channel.audit

    def held_frames(self) -> list[Frame]:
        frames = list(self.queue)
        if self.current is not None:
            frames.append(self.current)
        return frames

    # -- upper-layer interface -------------------------------------------------

    def enqueue(self, frame: Frame) -> EnqueueResult:
        now = self.engine.now
        stats = self.stats[frame.flow_id]
        stats.record_sent(now)
        if self.queue.full:
            stats.record_drop("queue", now)
            return EnqueueResult.DROPPED_QUEUE_FULL
        frame.arrival = now
        frame.order = self._order
        self._order += 1
        self.queue.push(frame)
        if self.state is MacState.IDLE:
            self._start_cycle()
        return EnqueueResult.ACCEPTED

    def on_receive(self, frame: Frame) -> None:
        if self.on_deliver is not None:
            self.on_deliver(frame)

    # -- policy hooks ----------------------------------------------------------

    def _drop(self, frame: Frame, cause: str) -> None:
        self.stats[frame.flow_id].record_drop(cause, self.engine.now)

    def select_head(self, now: int) -> Frame | None:
        """Next frame to contend for. The frame stays queued."""
        if self.policy is AccessPolicy.DF_DCF:
            for f in self.queue.purge_expired(self.classes, now):
                self._drop(f, "deadline")
            best = None
            best_key = None
            for f in self.queue.heads():
                svc = self.classes[f.class_id]
                key = (frame_service_level(svc, f.arrival, now), f.arrival, priority_key(svc), f.seq, f.order)
                if best_key is None or key < best_key:
                    best, best_key = f, key
            return best
        return self.queue.fifo_head()

    def access_wait_duration(self, frame: Frame, now: int) -> int:
        if self.policy is AccessPolicy.DF_DCF:
            svc = self.classes[frame.class_id]
            return instantaneous_difs(svc, frame_service_level(svc, frame.arrival, now), self.phy)
        if self.policy is AccessPolicy.DIFS_DIFF:
            return self.classes[frame.class_id].difs
        return self._standard_difs

    def draw_backoff(self) -> int:
        return int(self.rng.integers(0, self.cw + 1))

    def _expired(self, frame: Frame, now: int) -> bool:
        return (self.policy is AccessPolicy.DF_DCF
                and is_expired(self.classes[frame.class_id], frame.arrival, now))

    # -- contention ------------------------------------------------------------

    def _start_cycle(self) -> None:
        frame = self.select_head(self.engine.now)
        if frame is None:
            self.current = None
            self.state = MacState.IDLE
            return
        self.queue.pop_head(frame)
        self.current = frame
        self.retries = 0
        self.backoff_remaining = self.draw_backoff()
        self.state = MacState.DIFS_WAIT
        self._begin_wait()

    def _abandon_current(self, cause: str) -> None:
        self._drop(self.current, cause)
        self.current = None
        self.cw = self.config.cw_min
        self.retries = 0
        self._start_cycle()

    def _begin_wait(self) -> None:
        self.state = MacState.DIFS_WAIT
        if self.channel.busy:
            return
        now = self.engine.now
        if self._expired(self.current, now):
            self._abandon_current("deadline")
            return
        difs = self.access_wait_duration(self.current, now)
        self._wait_start = now
        self._difs = difs
        if self.backoff_remaining:
            self._difs_ev = self.engine.schedule(now + difs, self._difs_elapsed, target=self.station_id)
        self._access_ev = self.engine.schedule(
            now + difs + self.backoff_remaining * self.phy.slot_time, self._access, target=self.station_id)

    def _difs_elapsed(self) -> None:
        self._difs_ev = None
        self.state = MacState.BACKOFF

    def on_medium_busy(self, now: int) -> None:
        ev = self._access_ev
        if ev is None or ev.fire_at == now:
            # not contending, or counter hits zero in this very slot: transmit and collide
            return
        self.engine.cancel(ev)
        self.engine.cancel(self._difs_ev)
        self._access_ev = self._difs_ev = None
        before = self.backoff_remaining
        idle = now - self._wait_start - self._difs
        if idle > 0:
            self.backoff_remaining -= min(idle // self.phy.slot_time, before)
        if self.audit is not None:
            self.audit.on_freeze(self, now, before)
        self.state = MacState.DIFS_WAIT

    def on_medium_idle(self, now: int) -> None:
        if self.state is MacState.DIFS_WAIT and self.current is not None and self._access_ev is None:
            self._begin_wait()

    def _access(self) -> None:
        self._access_ev = None
        self.engine.cancel(self._difs_ev)
        self._difs_ev = None
        now = self.engine.now
        if self._expired(self.current, now):
            self.backoff_remaining = 0
            self._abandon_current("deadline")
            return
        self.backoff_remaining = 0
        self.state = MacState.TRANSMITTING
        frame = self.current
        frame.tx_start = now
        frame.attempts += 1
        self.channel.transmit(self, frame, frame_airtime(frame.payload_bytes, self.phy))

    def on_tx_end(self, tx: Transmission) -> None:
        self.state = MacState.AWAIT_ACK
        self._timeout_ev = self.engine.schedule_in(
            self._ack_timeout, self.on_ack_or_timeout, AckOutcome.TIMEOUT,
            kind=EventKind.ACK_TIMEOUT, target=self.station_id)

    def on_ack_or_timeout(self, outcome: AckOutcome) -> None:
        if self.state is not MacState.AWAIT_ACK:
            raise RuntimeError(f"{self.station_id}: {outcome.value} while {self.state.value}")
        now = self.engine.now
        cfg = self.config
        frame = self.current
        if outcome is AckOutcome.ACKED:
            self.engine.cancel(self._timeout_ev)
            self._timeout_ev = None
            self.stats[frame.flow_id].record_delivery(frame.arrival, now, frame.payload_bytes)
            if self.audit is not None:
                self.audit.on_delivered(self, frame, now)
            self.current = None
            self.cw = cfg.cw_min
            self.retries = 0
            self._start_cycle()
            return
        self._timeout_ev = None
        self.retries += 1
        self.cw = min(2 * self.cw + 1, cfg.cw_max)
        if self.audit is not None:
            self.audit.on_failure(self)
        if self.retries > cfg.retry_limit:
            self._abandon_current("retry")
        elif self._expired(frame, now):
            self._abandon_current("deadline")
        else:
            self.backoff_remaining = self.draw_backoff()
            self._begin_wait()


@dataclass
class Auditor:
    """Checks MAC invariants as a simulation runs; violations are collected, not raised."""

    violations: list[str] = field(default_factory=list)
    transmissions: int = 0
    freezes: int = 0
    failures: int = 0
    deliveries: int = 0

    def _fail(self, msg: str) -> None:
        if len(self.violations) < 100:
            self.violations.append(msg)

    def on_tx_start(self, channel: Channel, mac: StationMac, frame: Frame, now: int) -> None:
        self.transmissions += 1
        clean = sum(1 for t in channel.active if not t.collided)
        if clean > 1:
            self._fail(f"t={now}: {clean} non-collided transmissions in flight")
        if mac.policy is AccessPolicy.DF_DCF:
            svc = mac.classes[frame.class_id]
            if now >= frame.arrival + svc.temax:
                self._fail(f"t={now}: {mac.station_id} put expired frame {frame.flow_id}#{frame.seq} on air")

    def on_freeze(self, mac: StationMac, now: int, before: int) -> None:
        self.freezes += 1
        after = mac.backoff_remaining
        if after < 0 or after > before:
            self._fail(f"t={now}: {mac.station_id} backoff {before} -> {after}")
        if before - after:
            # decrements are only legal for slots that elapsed while the medium was idle
            idle_from = max(mac._wait_start + mac._difs, mac.channel.idle_since)
            if mac.channel.idle_since > mac._wait_start or (before - after) * mac.phy.slot_time > now - idle_from:
                self._fail(f"t={now}: {mac.station_id} consumed {before - after} slots without idle time")

    def on_failure(self, mac: StationMac) -> None:
        self.failures += 1
        cfg = mac.config
        expected = min(cfg.cw_max, (cfg.cw_min + 1) * 2 ** mac.retries - 1)
        if mac.cw != expected:
            self._fail(f"{mac.station_id}: cw {mac.cw} after {mac.retries} failures, expected {expected}")

    def on_delivered(self, mac: StationMac, frame: Frame, now: int) -> None:
        self.deliveries += 1
        if mac.policy is AccessPolicy.DF_DCF:
            svc = mac.classes[frame.class_id]
            if not frame.tx_start - frame.arrival < svc.temax:
                self._fail(f"t={now}: {frame.flow_id}#{frame.seq} started {frame.tx_start - frame.arrival} ns "
                           f"after arrival, temax {svc.temax}")
