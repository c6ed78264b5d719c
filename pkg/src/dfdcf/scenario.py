"""Scenario definitions: the four built-in experiments and a plain-text config format.

Config files are INI-style with sections ``[run]``, ``[phy]``, ``[mac]``,
``[wired]``, ``[class.<name>]`` and ``[flow.<name>]``. Durations take a unit
suffix (``ns``, ``us``, ``ms``, ``s``), rates may use ``bps``/``kbps``/``Mbps``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal
from importlib import resources

from .engine import MS, NS, S, US
from .mac import AccessPolicy, MacConfig
from .policy import ConfigError, PhyParams, ServiceClass, class_priority_order

AP_ID = "AP"
FTP_RWND_SEGMENTS = 20

_UNITS = {"ns": NS, "us": US, "µs": US, "ms": MS, "s": S}
_RATE_UNITS = {"bps": 1, "kbps": 1_000, "mbps": 1_000_000, "gbps": 1_000_000_000}


def parse_duration(text: str) -> int:
    """``"20ms"`` -> 20_000_000. The value must be a whole number of nanoseconds."""
    m = re.fullmatch(r"\s*([0-9]+(?:\.[0-9]*)?)\s*(ns|us|µs|ms|s)\s*", str(text))
    if not m:
        raise ConfigError(f"bad duration {text!r}; expected a number with unit ns, us, ms or s")
    ticks = Decimal(m.group(1)) * _UNITS[m.group(2)]
    if ticks != ticks.to_integral_value():
        raise ConfigError(f"duration {text!r} is not a whole number of nanoseconds")
    return int(ticks)


def format_duration(ticks: int) -> str:
    for unit, scale in (("s", S), ("ms", MS), ("us", US)):
        if ticks % scale == 0:
            return f"{ticks // scale}{unit}"
    return f"{ticks}ns"


def parse_rate(text: str) -> int:
    m = re.fullmatch(r"\s*([0-9]+(?:\.[0-9]*)?)\s*([a-zA-Z/]*)\s*", str(text))
    unit = m.group(2).lower().replace("/s", "ps") if m else ""
    if not m or (unit and unit not in _RATE_UNITS):
        raise ConfigError(f"bad rate {text!r}; expected e.g. 1000000, 1Mbps, 10Mbps")
    value = Decimal(m.group(1)) * _RATE_UNITS.get(unit or "bps")
    if value != value.to_integral_value() or value <= 0:
        raise ConfigError(f"rate {text!r} must be a positive whole number of bits per second")
    return int(value)


def _parse_int(text: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


@dataclass(frozen=True)
class WiredParams:
    rate: int = 10_000_000
    delay: int = 2 * MS
    capacity: int = 50


@dataclass(frozen=True)
class FlowSpec:
    flow_id: str
    kind: str
    class_id: str
    station_id: str
    start: int
    stop: int
    packet_bytes: int
    interval: int | None = None
    rwnd: int | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    phy: PhyParams
    mac: MacConfig
    classes: tuple[ServiceClass, ...]
    flows: tuple[FlowSpec, ...]
    duration: int
    seed: int = 1
    wired: WiredParams = field(default_factory=WiredParams)

    @property
    def class_map(self) -> dict[str, ServiceClass]:
        return {c.name: c for c in self.classes}

    @property
    def stations(self) -> tuple[tuple[str, tuple[str, ...]], ...]:
        order: dict[str, list[str]] = {}
        for f in self.flows:
            order.setdefault(f.station_id, []).append(f.flow_id)
        return tuple((sid, tuple(fl)) for sid, fl in order.items())

    def flow_starts(self) -> list[int]:
        return sorted({f.start for f in self.flows})

    def with_overrides(self, *, method: str | AccessPolicy | None = None, seed: int | None = None,
                       duration: int | None = None) -> "Scenario":
        s = self
        if method is not None:
            s = replace(s, mac=replace(s.mac, access_policy=AccessPolicy.parse(method)))
        if seed is not None:
            s = replace(s, seed=seed)
        if duration is not None:
            flows = tuple(replace(f, stop=min(f.stop, duration)) for f in s.flows if f.start < duration)
            s = replace(s, duration=duration, flows=flows)
        validate(s)
        return s


def validate(s: Scenario) -> Scenario:
    if s.duration <= 0:
        raise ConfigError("run duration must be positive")
    names = [c.name for c in s.classes]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate class names: {names}")
    class_priority_order(s.classes)
    for c in s.classes:
        c.check(s.phy)
    classes = s.class_map
    seen = set()
    for f in s.flows:
        where = f"flow {f.flow_id}"
        if f.flow_id in seen:
            raise ConfigError(f"{where}: duplicate flow id")
        seen.add(f.flow_id)
        if f.kind not in ("cbr", "ftp"):
            raise ConfigError(f"{where}: kind must be cbr or ftp, got {f.kind!r}")
        if f.class_id not in classes:
            raise ConfigError(f"{where}: references unknown class {f.class_id!r} "
                              f"(defined: {', '.join(sorted(classes)) or 'none'})")
        if f.station_id == AP_ID:
            raise ConfigError(f"{where}: station id {AP_ID!r} is reserved for the access point")
        if not 0 <= f.start < f.stop <= s.duration:
            raise ConfigError(f"{where}: need 0 <= start < stop <= duration")
        if f.packet_bytes <= 0:
            raise ConfigError(f"{where}: packet_bytes must be positive")
        if f.kind == "cbr" and (f.interval is None or f.interval <= 0):
            raise ConfigError(f"{where}: cbr flows need a positive interval")
        if ":" in f.flow_id or "," in f.flow_id:
            raise ConfigError(f"{where}: flow ids may not contain ':' or ','")
    return s


# -- built-in scenarios -----------------------------------------------------

def _classes(rows, phy):
    return tuple(ServiceClass.from_difs(i, name, temax, dmin * US, dmax * US, phy, difs * US)
                 for i, (name, dmin, dmax, temax, difs) in enumerate(rows, start=1))


def _three_flows(kinds_classes, duration):
    starts = (50 * S, 100 * S, 150 * S)
    flows = []
    for i, ((fid, kind, cls), start) in enumerate(zip(kinds_classes, starts), start=1):
        if kind == "cbr":
            flows.append(FlowSpec(fid, "cbr", cls, f"STA{i}", start, duration, 2312, 20 * MS))
        else:
            flows.append(FlowSpec(fid, "ftp", cls, f"STA{i}", start, duration, 1100,
                                  rwnd=FTP_RWND_SEGMENTS * 1100))
    return tuple(flows)


def _builtin_table():
    phy = PhyParams()
    dur = 250 * S
    udp3 = Scenario(
        "udp3", phy, MacConfig(),
        _classes([("CBR1", 50, 130, 150 * MS, 50),
                  ("CBR2", 130, 210, 250 * MS, 130),
                  ("CBR3", 210, 290, 350 * MS, 210)], phy),
        _three_flows([("CBR1", "cbr", "CBR1"), ("CBR2", "cbr", "CBR2"), ("CBR3", "cbr", "CBR3")], dur),
        dur)
    naive = Scenario(
        "tcp3-naive", phy, MacConfig(),
        _classes([("FTP1", 50, 130, 300 * MS, 50),
                  ("FTP2", 130, 210, 500 * MS, 130),
                  ("FTP3", 210, 290, 700 * MS, 210)], phy),
        _three_flows([("FTP1", "ftp", "FTP1"), ("FTP2", "ftp", "FTP2"), ("FTP3", "ftp", "FTP3")], dur),
        dur)
    # row labels kept as printed; the third row carries the FTP3 flow
    tcp3 = Scenario(
        "tcp3", phy, MacConfig(),
        _classes([("FTP1", 50, 130, 375 * MS, 50),
                  ("FTP2", 130, 210, 375 * MS, 130),
                  ("CBR3", 210, 290, 375 * MS, 210)], phy),
        _three_flows([("FTP1", "ftp", "FTP1"), ("FTP2", "ftp", "FTP2"), ("FTP3", "ftp", "CBR3")], dur),
        dur)
    mixed = Scenario(
        "mixed", phy, MacConfig(),
        _classes([("CBR3", 50, 130, 150 * MS, 50),
                  ("CBR2", 130, 210, 250 * MS, 130),
                  ("FTP1", 210, 290, 1 * S, 210)], phy),
        _three_flows([("FTP1", "ftp", "FTP1"), ("CBR2", "cbr", "CBR2"), ("CBR3", "cbr", "CBR3")], dur),
        dur)
    return {s.name: s for s in (udp3, naive, tcp3, mixed)}


BUILTIN_NAMES = ("udp3", "tcp3-naive", "tcp3", "mixed")


def builtin(name: str) -> Scenario:
    table = _builtin_table()
    try:
        return validate(table[name])
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; built-in scenarios: {', '.join(BUILTIN_NAMES)}") from None


def reference_config(name: str) -> str:
    """Text of the shipped configuration file for a built-in scenario."""
    if name not in BUILTIN_NAMES:
        raise ConfigError(f"unknown scenario {name!r}; built-in scenarios: {', '.join(BUILTIN_NAMES)}")
    return resources.files("dfdcf").joinpath("scenarios", f"{name}.ini").read_text()


# -- text format ------------------------------------------------------------

_SECTION_KEYS = {
    "run": {"name", "duration", "seed"},
    "phy": {"sifs", "slot_time", "data_rate", "plcp_overhead", "mac_header_bytes", "ack_frame_bytes"},
    "mac": {"cw_min", "cw_max", "retry_limit", "queue_capacity", "access_policy"},
    "wired": {"rate", "delay", "capacity"},
    "class": {"id", "temax", "difs_min", "difs_max", "difs"},
    "flow": {"kind", "class", "station", "start", "stop", "packet_bytes", "interval", "rwnd"},
}
_REQUIRED = {
    "run": {"duration"},
    "class": {"temax", "difs_min", "difs_max"},
    "flow": {"kind", "class", "station", "start", "packet_bytes"},
}


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    index: dict[tuple[str, str | None], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
        elif section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index.setdefault((section, key), lineno)
    return index


def parse(config_text: str) -> Scenario:
    """Build a validated :class:`Scenario` from configuration text."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(config_text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    lines = _line_index(config_text)

    def where(section, key=None):
        line = lines.get((section, key)) or lines.get((section, None))
        loc = f"line {line}, " if line else ""
        return f"{loc}[{section}]" + (f" {key}" if key else "")

    def get(section, key, conv, default=None):
        raw = cp.get(section, key, fallback=None) if cp.has_section(section) else None
        if raw is None:
            return default
        try:
            return conv(raw)
        except ConfigError as exc:
            raise ConfigError(f"{where(section, key)}: {exc}") from None

    for section in cp.sections():
        kind = section.split(".", 1)[0]
        if kind not in _SECTION_KEYS or (kind in ("class", "flow")) != ("." in section):
            raise ConfigError(f"{where(section)}: unknown section; expected run, phy, mac, wired, "
                              f"class.<name> or flow.<name>")
        for key in cp.options(section):
            if key not in _SECTION_KEYS[kind]:
                raise ConfigError(f"{where(section, key)}: unknown key; allowed: "
                                  f"{', '.join(sorted(_SECTION_KEYS[kind]))}")
        for key in _REQUIRED.get(kind, ()):
            if not cp.has_option(section, key):
                raise ConfigError(f"{where(section)}: missing required key {key!r}")
    if not cp.has_section("run"):
        raise ConfigError("missing required section [run]")

    d = PhyParams()
    try:
        phy = PhyParams(
            sifs=get("phy", "sifs", parse_duration, d.sifs),
            slot_time=get("phy", "slot_time", parse_duration, d.slot_time),
            data_rate=get("phy", "data_rate", parse_rate, d.data_rate),
            plcp_overhead=get("phy", "plcp_overhead", parse_duration, d.plcp_overhead),
            mac_header_bytes=get("phy", "mac_header_bytes", _parse_int, d.mac_header_bytes),
            ack_frame_bytes=get("phy", "ack_frame_bytes", _parse_int, d.ack_frame_bytes),
        )
    except ConfigError as exc:
        raise ConfigError(f"{where('phy')}: {exc}") from None

    m = MacConfig()
    try:
        mac = MacConfig(
            cw_min=get("mac", "cw_min", _parse_int, m.cw_min),
            cw_max=get("mac", "cw_max", _parse_int, m.cw_max),
            retry_limit=get("mac", "retry_limit", _parse_int, m.retry_limit),
            queue_capacity=get("mac", "queue_capacity", _parse_int, m.queue_capacity),
            access_policy=get("mac", "access_policy", str.strip, m.access_policy),
        )
    except ValueError as exc:
        raise ConfigError(f"{where('mac')}: {exc}") from None

    w = WiredParams()
    wired = WiredParams(
        rate=get("wired", "rate", parse_rate, w.rate),
        delay=get("wired", "delay", parse_duration, w.delay),
        capacity=get("wired", "capacity", _parse_int, w.capacity),
    )

    classes = []
    for n, section in enumerate(s for s in cp.sections() if s.startswith("class.")):
        name = section.split(".", 1)[1]
        try:
            classes.append(ServiceClass.from_difs(
                get(section, "id", _parse_int, n + 1), name,
                get(section, "temax", parse_duration),
                get(section, "difs_min", parse_duration),
                get(section, "difs_max", parse_duration),
                phy,
                get(section, "difs", parse_duration)))
        except ConfigError as exc:
            if str(exc).startswith("line "):
                raise
            raise ConfigError(f"{where(section)}: {exc}") from None

    duration = get("run", "duration", parse_duration)
    class_names = {c.name for c in classes}
    flows = []
    for section in (s for s in cp.sections() if s.startswith("flow.")):
        fid = section.split(".", 1)[1]
        cls = cp.get(section, "class").strip()
        if cls not in class_names:
            raise ConfigError(f"{where(section, 'class')}: flow {fid} references unknown class {cls!r} "
                              f"(defined: {', '.join(sorted(class_names)) or 'none'})")
        flows.append(FlowSpec(
            flow_id=fid,
            kind=cp.get(section, "kind").strip().lower(),
            class_id=cls,
            station_id=cp.get(section, "station").strip(),
            start=get(section, "start", parse_duration),
            stop=get(section, "stop", parse_duration, duration),
            packet_bytes=get(section, "packet_bytes", _parse_int),
            interval=get(section, "interval", parse_duration),
            rwnd=get(section, "rwnd", _parse_int),
        ))

    scenario = Scenario(
        name=get("run", "name", str.strip, "custom"),
        phy=phy, mac=mac, classes=tuple(classes), flows=tuple(flows),
        duration=duration, seed=get("run", "seed", _parse_int, 1), wired=wired)
    return validate(scenario)


def serialize(s: Scenario) -> str:
    """Inverse of :func:`parse`: ``parse(serialize(s)) == s``."""
    out = [
        "[run]",
        f"name = {s.name}",
        f"duration = {format_duration(s.duration)}",
        f"seed = {s.seed}",
        "",
        "[phy]",
        f"sifs = {format_duration(s.phy.sifs)}",
        f"slot_time = {format_duration(s.phy.slot_time)}",
        f"data_rate = {s.phy.data_rate}",
        f"plcp_overhead = {format_duration(s.phy.plcp_overhead)}",
        f"mac_header_bytes = {s.phy.mac_header_bytes}",
        f"ack_frame_bytes = {s.phy.ack_frame_bytes}",
        "",
        "[mac]",
        f"cw_min = {s.mac.cw_min}",
        f"cw_max = {s.mac.cw_max}",
        f"retry_limit = {s.mac.retry_limit}",
        f"queue_capacity = {s.mac.queue_capacity}",
        f"access_policy = {s.mac.access_policy.value}",
        "",
        "[wired]",
        f"rate = {s.wired.rate}",
        f"delay = {format_duration(s.wired.delay)}",
        f"capacity = {s.wired.capacity}",
        "",
    ]
    for c in s.classes:
        out += [
            f"[class.{c.name}]",
            f"id = {c.id}",
            f"temax = {format_duration(c.temax)}",
            f"difs_min = {format_duration(c.difs_min)}",
            f"difs_max = {format_duration(c.difs_max)}",
            f"difs = {format_duration(c.difs)}",
            "",
        ]
    for f in s.flows:
        out += [
            f"[flow.{f.flow_id}]",
            f"kind = {f.kind}",
            f"class = {f.class_id}",
            f"station = {f.station_id}",
            f"start = {format_duration(f.start)}",
            f"stop = {format_duration(f.stop)}",
            f"packet_bytes = {f.packet_bytes}",
        ]
        if f.interval is not None:
            out.append(f"interval = {format_duration(f.interval)}")
        if f.rwnd is not None:
            out.append(f"rwnd = {f.rwnd}")
        out.append("")
    return "\n".join(out)


def load(name_or_path: str) -> Scenario:
    """A built-in scenario by name, otherwise a configuration file path."""
    if name_or_path in BUILTIN_NAMES:
        return builtin(name_or_path)
    try:
        with open(name_or_path) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"{name_or_path!r} is neither a built-in scenario "
                          f"({', '.join(BUILTIN_NAMES)}) nor an existing file") from None
    return parse(text)


def build(s: Scenario, **kwargs):
    """Wire a validated scenario into a runnable :class:`~dfdcf.network.Simulation`."""
    from .network import Simulation

    return Simulation(validate(s), **kwargs)
