"""Service classes, per-frame service level and the DIFS rules built on it.

Durations are integer nanoseconds throughout. Service levels are exact
:class:`fractions.Fraction` values; they only become ticks when an
instantaneous DIFS is produced.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .engine import US


class ConfigError(ValueError):
    """Invalid static configuration (classes, PHY constants, scenarios)."""


@dataclass(frozen=True)
class PhyParams:
    sifs: int = 10 * US
    slot_time: int = 20 * US
    data_rate: int = 1_000_000
    plcp_overhead: int = 192 * US
    mac_header_bytes: int = 28
    ack_frame_bytes: int = 14

    def __post_init__(self):
        if self.sifs <= 0 or self.slot_time <= 0 or self.data_rate <= 0:
            raise ConfigError("sifs, slot_time and data_rate must be positive")
        if self.plcp_overhead < 0 or self.mac_header_bytes < 0 or self.ack_frame_bytes <= 0:
            raise ConfigError("plcp_overhead and header sizes must be non-negative")


@dataclass(frozen=True)
class ServiceClass:
    """One QoS class: deadline ``temax`` and the DIFS range its frames use.

    ``difs`` is the single value used by static DIFS differentiation; it
    defaults to ``difs_min``.
    """

    id: int
    name: str
    temax: int
    difs_min: int
    difs_max: int
    nb_slot_min: int
    nb_slot_max: int
    difs: int

    def __post_init__(self):
        if self.temax <= 0:
            raise ConfigError(f"class {self.name}: temax must be positive, got {self.temax} ns")
        if not 0 <= self.nb_slot_min <= self.nb_slot_max:
            raise ConfigError(
                f"class {self.name}: need 0 <= nb_slot_min <= nb_slot_max, "
                f"got {self.nb_slot_min}, {self.nb_slot_max}")

    @classmethod
    def from_difs(cls, id: int, name: str, temax: int, difs_min: int, difs_max: int,
                  phy: PhyParams, difs: int | None = None) -> "ServiceClass":
        nmin = nb_slots_from_difs(difs_min, phy)
        nmax = nb_slots_from_difs(difs_max, phy)
        if difs is None:
            difs = difs_min
        else:
            nb_slots_from_difs(difs, phy)
        return cls(id, name, temax, difs_min, difs_max, nmin, nmax, difs)

    def check(self, phy: PhyParams) -> None:
        """Verify the DIFS endpoints agree with the slot counts under ``phy``."""
        if self.difs_min != fixed_difs(self.nb_slot_min, phy):
            raise ConfigError(f"class {self.name}: difs_min {self.difs_min} ns != SIFS + "
                              f"{self.nb_slot_min} slots")
        if self.difs_max != fixed_difs(self.nb_slot_max, phy):
            raise ConfigError(f"class {self.name}: difs_max {self.difs_max} ns != SIFS + "
                              f"{self.nb_slot_max} slots")
        nb_slots_from_difs(self.difs, phy)


def frame_service_level(svc: ServiceClass, arrival: int, now: int) -> Fraction:
    """Residual-lifetime fraction ``(temax + arrival - now) / temax``.

    1 for a fresh frame, 0 exactly at the deadline, negative once expired.
    """
    if now < arrival:
        raise ValueError(f"now ({now}) precedes frame arrival ({arrival})")
    return Fraction(svc.temax + arrival - now, svc.temax)


def is_expired(svc: ServiceClass, arrival: int, now: int) -> bool:
    if now < arrival:
        raise ValueError(f"now ({now}) precedes frame arrival ({arrival})")
    return now >= arrival + svc.temax


def fixed_difs(nb_slots: int, phy: PhyParams) -> int:
    if nb_slots < 0:
        raise ValueError(f"nb_slots must be non-negative, got {nb_slots}")
    return phy.sifs + nb_slots * phy.slot_time


def nb_slots_from_difs(difs: int, phy: PhyParams) -> int:
    if difs < phy.sifs:
        raise ConfigError(f"DIFS {difs} ns is shorter than SIFS {phy.sifs} ns")
    n, rem = divmod(difs - phy.sifs, phy.slot_time)
    if rem:
        slots = Fraction(difs - phy.sifs, phy.slot_time)
        raise ConfigError(
            f"DIFS {difs} ns is not SIFS + an integral number of slots "
            f"({float(slots):g} slots of {phy.slot_time} ns)")
    return n


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def instantaneous_difs(svc: ServiceClass, fsl: Fraction | float, phy: PhyParams) -> int:
    """Per-frame DIFS interpolated between the class endpoints by service level.

    ``SIFS + (nb_min + (nb_max - nb_min) * fsl) * slot``, rounded to the
    nearest nanosecond (halves round up). A nearly expired frame gets the
    class minimum, a fresh one the class maximum.
    """
    fsl = Fraction(fsl)
    if not 0 <= fsl <= 1:
        raise ValueError(f"service level {float(fsl):g} outside [0, 1]; expired frames must be dropped")
    slots = svc.nb_slot_min + (svc.nb_slot_max - svc.nb_slot_min) * fsl
    return _round_half_up(phy.sifs + slots * phy.slot_time)


def priority_key(svc: ServiceClass) -> tuple[int, int, int, int]:
    return (svc.temax, svc.difs_min, svc.difs_max, svc.id)


def class_priority_order(classes: Iterable[ServiceClass]) -> list[ServiceClass]:
    """Most to least prioritary: shortest deadline, then smallest DIFS_min, then DIFS_max."""
    classes = list(classes)
    ids = [c.id for c in classes]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate class ids: {sorted(ids)}")
    return sorted(classes, key=priority_key)


class Crossing(enum.Enum):
    ALWAYS_EQUAL = "always-equal"


def fsl_crossing_time(a: ServiceClass, arrival_a: int, b: ServiceClass,
                      arrival_b: int) -> Fraction | Crossing | None:
    """Instant where two frames' service levels are equal.

    Returns the exact crossing time (a Fraction of nanoseconds) when it
    lies inside both lifetimes, :attr:`Crossing.ALWAYS_EQUAL` for
    coincident lines, and ``None`` otherwise.
    """
    ta, tb = a.temax, b.temax
    if ta == tb:
        return Crossing.ALWAYS_EQUAL if arrival_a == arrival_b else None
    t = Fraction(arrival_b * ta - arrival_a * tb, ta - tb)
    lo = max(arrival_a, arrival_b)
    hi = min(arrival_a + ta, arrival_b + tb)
    if lo <= t <= hi:
        return t
    return None


def select_min_fsl(frames: Sequence, classes: dict[str, ServiceClass], now: int):
    """Reference EDF choice over an arbitrary frame collection.

    Each frame needs ``class_id``, ``arrival`` and ``seq`` attributes.
    Expired frames are ignored. Ties go to the earlier arrival, then the
    more prioritary class, then the lower sequence number.
    """
    best = None
    best_key = None
    for f in frames:
        svc = classes[f.class_id]
        if is_expired(svc, f.arrival, now):
            continue
        key = (frame_service_level(svc, f.arrival, now), f.arrival, priority_key(svc), f.seq)
        if best_key is None or key < best_key:
            best, best_key = f, key
    return best
