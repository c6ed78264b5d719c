"""
Three saturating CBR flows: DIFS vs DF-DCF
==========================================

Three stations each push 2312-byte packets every 20 ms, more than the
1 Mb/s channel can carry once all three are on. With static per-class DIFS
the low-priority flow queues for seconds. The deadline-driven scheme drops
stale frames instead and keeps every flow's delay near its deadline.

Writes SVG charts to ``demo_out/udp3`` next to this file.
"""

# %%
from pathlib import Path

from dfdcf import run
from dfdcf.cli import run_to_dir
from dfdcf.report import report
from dfdcf.scenario import builtin

window = (160, 250)
results = {m: run("udp3", method=m, seed=1) for m in ("dcf", "difs", "dfdcf")}

# %% Mean delay and jitter in steady state
print(f"{'method':6s} {'flow':5s} {'delay ms':>9s} {'jitter sd':>9s} {'kb/s':>7s} {'deadline drops':>15s}")
for m, res in results.items():
    for f in ("CBR1", "CBR2", "CBR3"):
        s = res.summary(f, *window)
        print(f"{m:6s} {f:5s} {s.delay_mean_ms:9.1f} {s.jitter_std_ms:9.1f} {s.goodput_kbps:7.1f} "
              f"{s.loss_deadline:15.1%}")

# %% Saturation throughput barely moves
for m, res in results.items():
    agg = sum(res.summary(f, *window).goodput_kbps for f in ("CBR1", "CBR2", "CBR3"))
    print(f"{m}: aggregate {agg:.0f} kb/s")

# %% Charts, DIFS on the left and DF-DCF on the right
out = Path(__file__).with_name("demo_out") / "udp3"
for m in ("difs", "dfdcf"):
    run_to_dir(builtin("udp3").with_overrides(method=m), out / m)
for p in report([str(out)], out / "svg"):
    if "compare" in p.name:
        print("wrote", p)
