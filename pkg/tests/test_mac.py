from __future__ import annotations

import pytest

from dfdcf.engine import MS, US
from dfdcf.mac import (AccessPolicy, AckOutcome, EnqueueResult, Frame, MacState, ack_airtime,
                       ack_timeout, frame_airtime)

from conftest import PHY, Cell


def frame(flow="f1", cls="CBR1", size=2312, seq=0):
    return Frame(flow, cls, size, seq=seq)


def test_airtimes():
    assert frame_airtime(2312, PHY) == 18_912 * US
    assert ack_airtime(PHY) == 304 * US
    assert frame_airtime(1, PHY) == PHY.plcp_overhead + 232 * US
    assert ack_timeout(PHY) == PHY.sifs + 304 * US + 2 * PHY.slot_time
    with pytest.raises(ValueError):
        frame_airtime(0, PHY)


def test_policy_parse():
    assert AccessPolicy.parse("difs") is AccessPolicy.DIFS_DIFF
    with pytest.raises(ValueError, match="dcf, difs, dfdcf"):
        AccessPolicy.parse("edca")


def test_enqueue_on_idle_channel_starts_difs_wait():
    cell = Cell()
    sta = cell.station("STA1")
    assert sta.enqueue(frame()) is EnqueueResult.ACCEPTED
    assert sta.state is MacState.DIFS_WAIT
    assert sta.current is not None


def test_queue_full_drops_tail():
    cell = Cell(queue_capacity=50)
    sta = cell.station("STA1")
    results = [sta.enqueue(frame(seq=i)) for i in range(52)]
    # one frame is taken into service, fifty wait in the queue
    assert results.count(EnqueueResult.DROPPED_QUEUE_FULL) == 1
    assert len(sta.queue) == 50
    assert cell.stats["f1"].drops["queue"] == 1


def test_enqueue_during_await_ack_keeps_state():
    cell = Cell()
    cell.station("AP")
    sta = cell.station("STA1")
    sta.enqueue(frame())
    t_end = cell.engine.peek()
    while sta.state is not MacState.AWAIT_ACK:
        cell.engine.run(cell.engine.peek())
    sta.enqueue(frame(seq=1))
    assert sta.state is MacState.AWAIT_ACK and len(sta.queue) == 1
    assert t_end is not None


def test_select_head_drops_expired_and_picks_min_fsl():
    cell = Cell(classes=None)
    sta = cell.station("STA1")
    eng = cell.engine
    old, live = frame(cls="CBR1", seq=0), frame(cls="CBR3", seq=1)
    sta.queue.push(old)
    sta.queue.push(live)
    old.arrival = 0
    live.arrival = 100 * MS
    eng.run(160 * MS)
    assert sta.select_head(eng.now) is live
    assert cell.stats["f1"].drops["deadline"] == 1


def _two_frame_station(policy):
    from dfdcf.policy import ServiceClass
    classes = {"A": ServiceClass.from_difs(1, "A", 300 * MS, 50 * US, 130 * US, PHY),
               "B": ServiceClass.from_difs(2, "B", 150 * MS, 130 * US, 210 * US, PHY)}
    cell = Cell(policy=policy, classes=classes)
    sta = cell.station("STA1")
    fa, fb = frame(cls="A", seq=0), frame(cls="B", seq=1)
    fa.arrival, fa.order = 0, 0
    fb.arrival, fb.order = 100 * MS, 1
    sta.queue.push(fb)
    sta.queue.push(fa)
    cell.engine.run(150 * MS)
    return cell, sta, fa, fb


def test_select_head_before_crossing_prefers_lower_fsl():
    cell, sta, fa, fb = _two_frame_station(AccessPolicy.DF_DCF)
    assert sta.select_head(150 * MS) is fa


def test_select_head_fifo_under_difs():
    cell, sta, fa, fb = _two_frame_station(AccessPolicy.DIFS_DIFF)
    assert sta.select_head(150 * MS) is fa
    assert sum(cell.stats["f1"].drops.values()) == 0


def test_access_wait_duration(classes):
    f = frame()
    f.arrival = 0
    df = Cell(AccessPolicy.DF_DCF).station("S")
    assert df.access_wait_duration(f, 0) == 130 * US
    assert df.access_wait_duration(f, 75 * MS) == 90 * US
    assert Cell(AccessPolicy.DCF).station("S").access_wait_duration(f, 75 * MS) == 50 * US
    g = frame(cls="CBR2")
    g.arrival = 0
    assert Cell(AccessPolicy.DIFS_DIFF).station("S").access_wait_duration(g, 0) == 130 * US


def test_backoff_range_and_reproducibility():
    a = Cell().station("S", seed=5)
    b = Cell().station("S", seed=5)
    draws = [a.draw_backoff() for _ in range(500)]
    assert draws == [b.draw_backoff() for _ in range(500)]
    assert min(draws) >= 0 and max(draws) <= 31


def test_cw_doubles_to_cap():
    cell = Cell(AccessPolicy.DCF)
    sta = cell.station("S")
    sta.enqueue(frame())
    sta.engine.cancel(sta._access_ev)
    sta.engine.cancel(sta._difs_ev)
    seen = []
    for _ in range(5):
        sta.state = MacState.AWAIT_ACK
        sta.on_ack_or_timeout(AckOutcome.TIMEOUT)
        seen.append(sta.cw)
        sta.engine.cancel(sta._access_ev)
        sta.engine.cancel(sta._difs_ev)
        sta._access_ev = sta._difs_ev = None
    assert seen == [63, 127, 255, 511, 1023]
    sta.state = MacState.AWAIT_ACK
    sta.on_ack_or_timeout(AckOutcome.TIMEOUT)
    assert sta.cw == 1023


def _stuck_in_await(policy, retries):
    cell = Cell(policy)
    sta = cell.station("S")
    sta.enqueue(frame())
    sta.engine.cancel(sta._access_ev)
    sta.engine.cancel(sta._difs_ev)
    sta._access_ev = sta._difs_ev = None
    sta.state = MacState.AWAIT_ACK
    sta.retries = retries
    return cell, sta


def test_timeout_at_retry_limit_drops():
    cell, sta = _stuck_in_await(AccessPolicy.DCF, 7)
    sta.on_ack_or_timeout(AckOutcome.TIMEOUT)
    assert cell.stats["f1"].drops["retry"] == 1
    assert sta.cw == sta.config.cw_min and sta.current is None


def test_timeout_past_deadline_is_deadline_drop():
    cell, sta = _stuck_in_await(AccessPolicy.DF_DCF, 0)
    cell.engine.run(200 * MS)
    sta.on_ack_or_timeout(AckOutcome.TIMEOUT)
    assert cell.stats["f1"].drops == {"deadline": 1, "retry": 0, "queue": 0, "wired": 0}


def test_ack_resets_cw():
    cell = Cell(AccessPolicy.DCF)
    cell.station("AP")
    sta = cell.station("S")
    sta.cw = 255
    sta.enqueue(frame())
    cell.engine.run(100 * MS)
    assert cell.stats["f1"].delivered == 1
    assert sta.cw == 31 and sta.state is MacState.IDLE
    assert len(cell.received) == 1


def test_single_transmitter_clean_with_ack_after_sifs():
    cell = Cell(AccessPolicy.DCF)
    cell.station("AP")
    sta = cell.station("S")
    sta.draw_backoff = lambda: 0
    sta.enqueue(frame())
    cell.engine.run(100 * MS)
    end = 50 * US + frame_airtime(2312, PHY)
    assert cell.stats["f1"].delay_series == [(end + PHY.sifs + 304 * US, end + PHY.sifs + 304 * US)]


def test_same_slot_starts_collide():
    cell = Cell(AccessPolicy.DCF, flows=("f1", "f2"))
    cell.station("AP")
    a, b = cell.station("A", 1), cell.station("B", 2)
    a.draw_backoff = b.draw_backoff = lambda: 0
    a.enqueue(frame("f1"))
    b.enqueue(frame("f2"))
    cell.engine.run(30 * MS)
    assert cell.auditor.failures == 2
    assert a.cw == b.cw == 63


def test_overlapping_transmission_collides():
    cell = Cell(AccessPolicy.DCF, flows=("f1", "f2"))
    cell.station("AP")
    a = cell.station("A")
    a.enqueue(frame("f1"))
    cell.engine.run(a._access_ev.fire_at)
    # b transmits blind, fully inside a's airtime
    b = cell.station("B")
    tx = cell.channel.transmit(b, frame("f2", size=10), frame_airtime(10, PHY))
    assert tx.collided and cell.channel.active[0].collided


def test_persistent_collisions_end_in_retry_drop():
    cell = Cell(AccessPolicy.DCF, flows=("f1", "f2"))
    cell.station("AP")
    a, b = cell.station("A", 1), cell.station("B", 2)
    a.draw_backoff = b.draw_backoff = lambda: 0
    a.enqueue(frame("f1"))
    b.enqueue(frame("f2"))
    cell.engine.run(2000 * MS)
    assert cell.stats["f1"].drops["retry"] == cell.stats["f2"].drops["retry"] == 1
    assert not cell.auditor.violations
