"""Topology wiring: stations and AP on one channel, a wired link to the sink."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Engine, EventKind, S
from .mac import AccessPolicy, Auditor, Channel, Frame, StationMac
from .metrics import MAC_DROP_CAUSES, FlowStats, summarize
from .scenario import AP_ID, FlowSpec, Scenario
from .transport import TCP_ACK_BYTES, CbrSource, TcpConnection, TcpSink, WiredLink


def ack_flow_id(flow_id: str) -> str:
    return f"{flow_id}:ack"


class _Ftp:
    __slots__ = ("spec", "conn", "sink", "timer", "frame_seq")

    def __init__(self, spec: FlowSpec):
        self.spec = spec
        self.conn = TcpConnection(spec.flow_id, mss=spec.packet_bytes, rwnd=spec.rwnd)
        self.sink = TcpSink(spec.flow_id, mss=spec.packet_bytes)
        self.timer = None
        self.frame_seq = 0


class Simulation:
    """One run of a scenario under one access method.

    ``method`` and ``seed`` default to the scenario's own values. With
    ``audit=True`` every MAC invariant is checked as the run proceeds.
    """

    def __init__(self, scenario: Scenario, method: str | AccessPolicy | None = None,
                 seed: int | None = None, audit: bool = False, trace: bool = False):
        if method is not None or seed is not None:
            scenario = scenario.with_overrides(method=method, seed=seed)
        self.scenario = scenario
        self.method = scenario.mac.access_policy
        self.seed = scenario.seed
        self.engine = Engine(trace=trace)
        self.channel = Channel(self.engine, scenario.phy)
        self.auditor = Auditor() if audit else None
        self.channel.audit = self.auditor
        self.classes = scenario.class_map
        self.stats: dict[str, FlowStats] = {}

        station_ids = [sid for sid, _ in scenario.stations]
        streams = np.random.SeedSequence(scenario.seed).spawn(len(station_ids) + 1)
        self.ap = self._mac(AP_ID, streams[0])
        self.stations = {sid: self._mac(sid, ss) for sid, ss in zip(station_ids, streams[1:])}
        self.ap.on_deliver = self._ap_received
        for mac in self.stations.values():
            mac.on_deliver = self._station_received
        self.uplink = WiredLink(scenario.wired.rate, scenario.wired.delay, scenario.wired.capacity)
        self.downlink = WiredLink(scenario.wired.rate, scenario.wired.delay, scenario.wired.capacity)

        self.cbr: dict[str, CbrSource] = {}
        self.ftp: dict[str, _Ftp] = {}
        self.udp_received: dict[str, int] = {}
        self._cbr_seq: dict[str, int] = {}
        for spec in scenario.flows:
            self.stats[spec.flow_id] = FlowStats(spec.flow_id)
            if spec.kind == "cbr":
                src = CbrSource(spec.flow_id, spec.packet_bytes, spec.interval, spec.start, spec.stop)
                self.cbr[spec.flow_id] = src
                self.udp_received[spec.flow_id] = 0
                self.engine.schedule(spec.start, self._cbr_tick, spec, src,
                                     kind=EventKind.SOURCE_TICK, target=spec.flow_id)
            else:
                self.stats[ack_flow_id(spec.flow_id)] = FlowStats(ack_flow_id(spec.flow_id))
                ftp = self.ftp[spec.flow_id] = _Ftp(spec)
                self.engine.schedule(spec.start, self._tcp_send, ftp,
                                     kind=EventKind.SOURCE_TICK, target=spec.flow_id)
        self._specs = {f.flow_id: f for f in scenario.flows}
        self._ran = False

    def _mac(self, sid: str, seed_seq: np.random.SeedSequence) -> StationMac:
        return StationMac(sid, self.engine, self.channel, self.scenario.phy, self.scenario.mac,
                          self.classes, np.random.default_rng(seed_seq), self.stats)

    # -- sources ---------------------------------------------------------------

    def _cbr_tick(self, spec: FlowSpec, src: CbrSource) -> None:
        now = self.engine.now
        seq, nxt = src.tick(now)
        if seq is None:
            return
        frame = Frame(spec.flow_id, spec.class_id, spec.packet_bytes, seq=seq, kind="data", dest=AP_ID)
        self.stations[spec.station_id].enqueue(frame)
        if nxt is not None:
            self.engine.schedule(nxt, self._cbr_tick, spec, src,
                                 kind=EventKind.SOURCE_TICK, target=spec.flow_id)

    def _tcp_send(self, ftp: _Ftp, segments: list[int] | None = None) -> None:
        now = self.engine.now
        spec = ftp.spec
        if segments is None:
            segments = []
        if now < spec.stop:
            segments = segments + ftp.conn.try_send(now)
        mac = self.stations[spec.station_id]
        for seq in segments:
            frame = Frame(spec.flow_id, spec.class_id, spec.packet_bytes, seq=ftp.frame_seq,
                          kind="data", dest=AP_ID, data=seq)
            ftp.frame_seq += 1
            mac.enqueue(frame)
        self._arm_rto(ftp)

    def _arm_rto(self, ftp: _Ftp) -> None:
        deadline = ftp.conn.timer_deadline
        if ftp.timer is not None and ftp.timer.pending:
            if deadline is not None and ftp.timer.fire_at == deadline:
                return
            self.engine.cancel(ftp.timer)
        ftp.timer = None
        if deadline is not None:
            ftp.timer = self.engine.schedule(max(deadline, self.engine.now), self._rto_fired, ftp,
                                             target=ftp.spec.flow_id)

    def _rto_fired(self, ftp: _Ftp) -> None:
        ftp.timer = None
        segments = ftp.conn.on_rto(self.engine.now)
        self._tcp_send(ftp, segments)

    # -- receive paths -----------------------------------------------------------

    def _ap_received(self, frame: Frame) -> None:
        now = self.engine.now
        arrival = self.uplink.deliver(frame.payload_bytes, now)
        if arrival is None:
            self.stats[frame.flow_id].record_drop("wired", now)
            return
        self.engine.schedule(arrival, self._sink_received, frame,
                             kind=EventKind.LINK_DELIVERY, target="sink")

    def _sink_received(self, frame: Frame) -> None:
        now = self.engine.now
        fid = frame.flow_id
        if fid in self.cbr:
            self.udp_received[fid] += 1
            return
        ftp = self.ftp[fid]
        ack = ftp.sink.on_segment(frame.data)
        arrival = self.downlink.deliver(TCP_ACK_BYTES, now)
        if arrival is None:
            self.stats[ack_flow_id(fid)].record_drop("wired", now)
            return
        self.engine.schedule(arrival, self._ap_enqueue_ack, ftp, ack,
                             kind=EventKind.LINK_DELIVERY, target=AP_ID)

    def _ap_enqueue_ack(self, ftp: _Ftp, ack: int) -> None:
        spec = ftp.spec
        frame = Frame(ack_flow_id(spec.flow_id), spec.class_id, TCP_ACK_BYTES, seq=ack // spec.packet_bytes,
                      kind="transport-ack", dest=spec.station_id, data=ack)
        self.ap.enqueue(frame)

    def _station_received(self, frame: Frame) -> None:
        now = self.engine.now
        fid = frame.flow_id.rsplit(":", 1)[0]
        ftp = self.ftp[fid]
        n = len(ftp.conn.rtt_samples)
        segments = ftp.conn.on_ack(frame.data, now)
        for t, sample, _ in ftp.conn.rtt_samples[n:]:
            self.stats[fid].record_rtt(t, sample)
        self._tcp_send(ftp, segments)

    # -- run ---------------------------------------------------------------------

    def run(self, until: int | None = None) -> "SimulationResult":
        if self._ran:
            raise RuntimeError("a Simulation can only run once")
        self._ran = True
        horizon = self.scenario.duration if until is None else until
        self.engine.run(horizon)
        return SimulationResult(self)

    def macs(self) -> list[StationMac]:
        return [self.ap, *self.stations.values()]


@dataclass
class SimulationResult:
    sim: Simulation

    @property
    def stats(self) -> dict[str, FlowStats]:
        return self.sim.stats

    @property
    def method(self) -> AccessPolicy:
        return self.sim.method

    @property
    def scenario(self) -> Scenario:
        return self.sim.scenario

    def in_mac(self) -> dict[str, int]:
        held = dict.fromkeys(self.stats, 0)
        for mac in self.sim.macs():
            for f in mac.held_frames():
                held[f.flow_id] += 1
        return held

    def conservation(self) -> dict[str, tuple[int, int]]:
        """Per flow: ``(sent, delivered + MAC drops + still held)``; the two must match."""
        held = self.in_mac()
        return {fid: (st.sent, st.delivered + sum(st.drops[c] for c in MAC_DROP_CAUSES) + held[fid])
                for fid, st in self.stats.items()}

    def summary(self, flow_id: str, start_s: float, end_s: float):
        return summarize(self.stats[flow_id], (round(start_s * S), round(end_s * S)))

    def windows(self) -> list[tuple[str, int, int]]:
        """Named summary windows: each traffic phase, steady state after the last start, full run."""
        dur = self.scenario.duration
        starts = [t for t in self.scenario.flow_starts() if t < dur]
        bounds = starts + [dur]
        out = [(f"phase{i + 1}", a, b) for i, (a, b) in enumerate(zip(bounds, bounds[1:])) if a < b]
        if starts and starts[-1] + 10 * S < dur:
            out.append(("steady", starts[-1] + 10 * S, dur))
        out.append(("full", 0, dur))
        return out

    def summary_rows(self) -> list[dict]:
        rows = []
        for label, a, b in self.windows():
            for fid in self.stats:
                rows.append({"window": label, "summary": summarize(self.stats[fid], (a, b))})
        return rows
