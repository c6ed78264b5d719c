from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dfdcf.engine import MS, S, US
from dfdcf.policy import (ConfigError, Crossing, PhyParams, ServiceClass, class_priority_order,
                          fixed_difs, frame_service_level, fsl_crossing_time, instantaneous_difs,
                          is_expired, nb_slots_from_difs, select_min_fsl)

PHY = PhyParams()


def svc(name, temax_ms, dmin=50, dmax=130, id=1):
    return ServiceClass.from_difs(id, name, temax_ms * MS, dmin * US, dmax * US, PHY)


class F:
    def __init__(self, class_id, arrival, seq=0):
        self.class_id, self.arrival, self.seq, self.order = class_id, arrival, seq, seq


def test_service_level_examples(classes):
    cbr1 = classes["CBR1"]
    assert frame_service_level(cbr1, 50 * S, 50 * S) == 1
    assert frame_service_level(cbr1, 50 * S, 50 * S + 150 * MS) == 0
    assert frame_service_level(cbr1, 50 * S, 50 * S + 75 * MS) == Fraction(1, 2)
    with pytest.raises(ValueError):
        frame_service_level(cbr1, 10, 9)


def test_expiry_boundary(classes):
    cbr1 = classes["CBR1"]
    assert is_expired(cbr1, 0, 150 * MS)
    assert not is_expired(cbr1, 0, 150 * MS - 1)
    assert is_expired(cbr1, 50 * S, 50 * S + 200 * MS)


def test_instantaneous_difs_examples(classes):
    cbr1 = classes["CBR1"]
    assert instantaneous_difs(cbr1, 0, PHY) == 50 * US
    assert instantaneous_difs(cbr1, 1, PHY) == 130 * US
    assert instantaneous_difs(cbr1, Fraction(1, 2), PHY) == 90 * US
    assert instantaneous_difs(cbr1, 0.5, PHY) == 90 * US
    with pytest.raises(ValueError):
        instantaneous_difs(cbr1, Fraction(-1, 10), PHY)


def test_fixed_difs_and_slot_count():
    assert fixed_difs(2, PHY) == 50 * US
    assert fixed_difs(6, PHY) == 130 * US
    assert fixed_difs(0, PHY) == PHY.sifs
    assert nb_slots_from_difs(290 * US, PHY) == 14
    assert nb_slots_from_difs(210 * US, PHY) == 10
    with pytest.raises(ConfigError, match="2.25"):
        nb_slots_from_difs(55 * US, PHY)


@pytest.mark.parametrize("dmin,dmax", [(50, 130), (130, 210), (210, 290), (90, 170), (170, 250)])
def test_table_triplets_are_integral(dmin, dmax):
    c = svc("x", 100, dmin, dmax)
    c.check(PHY)
    assert instantaneous_difs(c, 0, PHY) == c.difs_min
    assert instantaneous_difs(c, 1, PHY) == c.difs_max


def test_priority_orders(classes):
    assert [c.name for c in class_priority_order(classes.values())] == ["CBR1", "CBR2", "CBR3"]
    t3 = [svc("CBR3", 375, 210, 290, id=3), svc("FTP1", 375, 50, 130, id=1), svc("FTP2", 375, 130, 210, id=2)]
    assert [c.name for c in class_priority_order(t3)] == ["FTP1", "FTP2", "CBR3"]
    twins = [svc("b", 100, id=7), svc("a", 100, id=3)]
    assert [c.id for c in class_priority_order(twins)] == [3, 7]
    with pytest.raises(ConfigError):
        class_priority_order([svc("a", 100, id=1), svc("b", 200, id=1)])


def test_crossing_examples():
    a, b = svc("A", 300), svc("B", 150)
    t = fsl_crossing_time(a, 0, b, 100 * MS)
    assert t == 200 * MS
    assert frame_service_level(a, 0, 200 * MS) == Fraction(1, 3)
    assert frame_service_level(b, 100 * MS, 200 * MS) == Fraction(1, 3)
    assert fsl_crossing_time(a, 0, a, 0) is Crossing.ALWAYS_EQUAL
    assert fsl_crossing_time(b, 0, b, 50 * MS) is None


def test_min_fsl_flips_at_crossing():
    classes = {"A": svc("A", 300, id=1), "B": svc("B", 150, id=2)}
    fa, fb = F("A", 0, 0), F("B", 100 * MS, 1)
    tth = 200 * MS
    assert select_min_fsl([fa, fb], classes, 150 * MS) is fa
    assert select_min_fsl([fa, fb], classes, tth - 1) is fa
    assert select_min_fsl([fa, fb], classes, tth + 1) is fb
    # tie at the crossing goes to the earlier arrival
    assert select_min_fsl([fb, fa], classes, tth) is fa


temax_ms = st.integers(1, 2000)
slots = st.integers(0, 30)


@given(temax_ms, slots, slots, st.fractions(0, 1), st.fractions(0, 1))
def test_difs_bounded_and_monotone(t, n1, n2, f1, f2):
    lo, hi = sorted((n1, n2))
    c = ServiceClass(1, "c", t * MS, fixed_difs(lo, PHY), fixed_difs(hi, PHY), lo, hi, fixed_difs(lo, PHY))
    d1, d2 = instantaneous_difs(c, f1, PHY), instantaneous_difs(c, f2, PHY)
    assert c.difs_min <= d1 <= c.difs_max
    if f1 <= f2:
        assert d1 <= d2
    exact = PHY.sifs + (lo + (hi - lo) * f1) * PHY.slot_time
    assert abs(d1 - exact) <= Fraction(1, 2)


@given(slots)
def test_slot_round_trip(n):
    assert nb_slots_from_difs(fixed_difs(n, PHY), PHY) == n


@given(temax_ms, temax_ms, st.integers(0, 1000), st.integers(0, 1000))
def test_crossing_agrees_with_argmin(ta, tb, arr_a, arr_b):
    a, b = svc("A", ta, id=1), svc("B", tb, id=2)
    classes = {"A": a, "B": b}
    fa, fb = F("A", arr_a * MS, 0), F("B", arr_b * MS, 1)
    t = fsl_crossing_time(a, fa.arrival, b, fb.arrival)
    if t is Crossing.ALWAYS_EQUAL:
        assert ta == tb and arr_a == arr_b
        return
    lo = max(fa.arrival, fb.arrival)
    hi = min(fa.arrival + a.temax, fb.arrival + b.temax)
    if t is None:
        # no crossing inside the shared lifetime: the winner never changes
        if ta != tb and lo < hi - 1:
            assert select_min_fsl([fa, fb], classes, lo) is select_min_fsl([fa, fb], classes, hi - 1)
        return
    t0 = -(-t.numerator // t.denominator) - 1  # last tick strictly before t
    t1 = t.numerator // t.denominator + 1      # first tick strictly after t
    if t0 < lo or t1 >= hi:
        return
    assert select_min_fsl([fa, fb], classes, t0) is not select_min_fsl([fa, fb], classes, t1)
