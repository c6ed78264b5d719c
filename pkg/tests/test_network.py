from __future__ import annotations

from hypothesis import HealthCheck, given, settings, strategies as st

from dfdcf.engine import MS, S, US
from dfdcf.mac import AccessPolicy, MacConfig
from dfdcf.network import Simulation
from dfdcf.policy import PhyParams, ServiceClass, fixed_difs
from dfdcf.scenario import FlowSpec, Scenario, builtin

PHY = PhyParams()


@st.composite
def small_scenarios(draw):
    n_classes = draw(st.integers(1, 3))
    classes = []
    for i in range(n_classes):
        lo = draw(st.integers(0, 10))
        hi = lo + draw(st.integers(0, 6))
        temax = draw(st.integers(5, 400)) * MS
        classes.append(ServiceClass(i + 1, f"C{i + 1}", temax, fixed_difs(lo, PHY), fixed_difs(hi, PHY),
                                    lo, hi, fixed_difs(draw(st.integers(lo, hi)), PHY)))
    duration = draw(st.integers(300, 1500)) * MS
    flows = []
    for i in range(draw(st.integers(1, 4))):
        kind = draw(st.sampled_from(["cbr", "cbr", "ftp"]))
        start = draw(st.integers(0, duration // MS - 100)) * MS
        flows.append(FlowSpec(
            flow_id=f"F{i}", kind=kind, class_id=draw(st.sampled_from(classes)).name,
            station_id=f"STA{draw(st.integers(1, 3))}", start=start, stop=duration,
            packet_bytes=draw(st.integers(40, 2312)),
            interval=draw(st.integers(2, 60)) * MS if kind == "cbr" else None,
            rwnd=draw(st.sampled_from([None, 4 * 1100, 20 * 1100])) if kind == "ftp" else None))
    mac = MacConfig(cw_min=draw(st.sampled_from([7, 15, 31])), cw_max=draw(st.sampled_from([63, 255, 1023])),
                    retry_limit=draw(st.integers(1, 7)), queue_capacity=draw(st.integers(1, 50)),
                    access_policy=draw(st.sampled_from(list(AccessPolicy))))
    return Scenario("random", PHY, mac, tuple(classes), tuple(flows), duration,
                    seed=draw(st.integers(0, 2**32 - 1)))


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_scenarios())
def test_audited_random_runs(scenario):
    sim = Simulation(scenario, audit=True)
    res = sim.run()
    audit = sim.auditor
    assert audit.violations == []
    for fid, (sent, accounted) in res.conservation().items():
        assert sent == accounted, fid
    for st_ in res.stats.values():
        assert len(st_.jitter_series) == max(0, st_.delivered - 1)
        assert sum(st_.throughput_buckets) == sum(st_.delivery_bits)
    for ftp in sim.ftp.values():
        assert all(seq not in ftp.conn.retransmitted for _, _, seq in ftp.conn.rtt_samples)
        assert ftp.sink.delivered_bytes <= ftp.conn.max_sent
    if scenario.mac.access_policy is AccessPolicy.DF_DCF:
        assert audit.deliveries == sum(s.delivered for s in res.stats.values())


def test_same_seed_same_history():
    s = builtin("tcp3").with_overrides(duration=70 * S)
    a, b = Simulation(s).run(), Simulation(s).run()
    assert {k: v.delay_series for k, v in a.stats.items()} == {k: v.delay_series for k, v in b.stats.items()}
    c = Simulation(s, seed=2).run()
    assert a.stats["FTP1"].delay_series != c.stats["FTP1"].delay_series


def test_windows_cover_phases():
    res = Simulation(builtin("udp3").with_overrides(duration=170 * S)).run()
    names = [(n, a // S, b // S) for n, a, b in res.windows()]
    assert names == [("phase1", 50, 100), ("phase2", 100, 150), ("phase3", 150, 170),
                     ("steady", 160, 170), ("full", 0, 170)]


def test_simulation_runs_once():
    sim = Simulation(builtin("udp3").with_overrides(duration=1 * S))
    sim.run()
    try:
        sim.run()
    except RuntimeError:
        pass
    else:
        raise AssertionError("second run accepted")
