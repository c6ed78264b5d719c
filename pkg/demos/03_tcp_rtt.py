"""
FTP over TCP: deadlines that differentiate RTT
==============================================

Three long-lived TCP transfers start 50 s apart. The access point relays
every transport ACK, so it contends on the channel like any station.

First the naive setup: per-flow deadlines of 300, 500 and 700 ms. Then a
common 375 ms deadline with the DIFS ranges alone setting the priority.
"""

# %%
from dfdcf import run

window = (160, 250)
flows = ("FTP1", "FTP2", "FTP3")


def table(name, method):
    res = run(name, method=method, seed=1)
    rows = [res.summary(f, *window) for f in flows]
    print(f"{name} / {method}")
    for s in rows:
        print(f"  {s.flow}: goodput {s.goodput_kbps:6.1f} kb/s  rtt {s.rtt_mean_ms:7.1f} ms  "
              f"mac delay {s.delay_mean_ms:6.1f} ms  deadline drops {s.loss_deadline:.1%}")
    return [s.rtt_mean_ms for s in rows]


# %% Different deadlines per flow
table("tcp3-naive", "dfdcf")

# %% Common deadline: RTT follows the class order under DF-DCF
rtt_difs = table("tcp3", "difs")
rtt_df = table("tcp3", "dfdcf")
print(f"max/min RTT ratio: difs {max(rtt_difs) / min(rtt_difs):.2f}, dfdcf {max(rtt_df) / min(rtt_df):.2f}")

# %% The same study from the command line:
#   python3 -m dfdcf compare --scenario tcp3 --methods difs,dfdcf --out runs/tcp3
#   python3 -m dfdcf report runs/tcp3 --out runs/tcp3/svg
