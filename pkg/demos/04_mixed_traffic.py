"""
One TCP transfer against two CBR flows
======================================

FTP1 starts first with a lenient 1 s deadline. CBR2 (250 ms) joins at
100 s and CBR3 (150 ms, the most urgent class here) at 150 s. Each arrival
pushes the TCP flow's MAC delay up while the CBR flows stay inside their
deadlines.
"""

# %%
from dfdcf import run

phases = {"FTP1 alone": (50, 100), "+CBR2": (100, 150), "+CBR3": (150, 250)}

for method in ("difs", "dfdcf"):
    res = run("mixed", method=method, seed=1)
    print(method)
    for label, (a, b) in phases.items():
        cells = []
        for f in ("FTP1", "CBR2", "CBR3"):
            s = res.summary(f, a, b)
            cells.append(f"{f} {s.delay_mean_ms:7.1f}" if s.delay_mean_ms is not None else f"{f}      --")
        print(f"  {label:11s} mean delay ms: " + "  ".join(cells))

# %% Deadline check on the DF-DCF run: no frame started transmitting after its deadline
res = run("mixed", method="dfdcf", seed=1, audit=True)
print("audit violations:", res.sim.auditor.violations or "none")
