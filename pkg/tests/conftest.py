from __future__ import annotations

import numpy as np
import pytest

from dfdcf.engine import MS, US, Engine
from dfdcf.mac import AccessPolicy, Auditor, Channel, Frame, MacConfig, StationMac
from dfdcf.metrics import FlowStats
from dfdcf.policy import PhyParams, ServiceClass

PHY = PhyParams()


def table1_classes() -> dict[str, ServiceClass]:
    rows = [("CBR1", 150, 50, 130), ("CBR2", 250, 130, 210), ("CBR3", 350, 210, 290)]
    return {name: ServiceClass.from_difs(i, name, temax * MS, dmin * US, dmax * US, PHY)
            for i, (name, temax, dmin, dmax) in enumerate(rows, start=1)}


class Cell:
    """A bare channel with hand-built stations, for driving the MAC directly."""

    def __init__(self, policy=AccessPolicy.DF_DCF, classes=None, flows=("f1", "f2"), audit=True, **cfg):
        self.engine = Engine()
        self.channel = Channel(self.engine, PHY)
        self.auditor = Auditor() if audit else None
        self.channel.audit = self.auditor
        self.classes = classes or table1_classes()
        self.config = MacConfig(access_policy=policy, **cfg)
        self.stats = {f: FlowStats(f) for f in flows}
        self.received: list[Frame] = []

    def station(self, sid: str, seed: int = 0) -> StationMac:
        mac = StationMac(sid, self.engine, self.channel, PHY, self.config, self.classes,
                         np.random.default_rng(seed), self.stats)
        mac.on_deliver = self.received.append
        return mac


@pytest.fixture
def classes():
    return table1_classes()


@pytest.fixture
def phy():
    return PHY


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[n])
