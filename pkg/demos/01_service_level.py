"""
Frame service level and the instantaneous DIFS
==============================================

A frame's service level starts at 1 when it enters the MAC and falls
linearly to 0 at its class deadline. The DIFS it waits before contending
slides from the class maximum down to the class minimum along with it, so
old frames get pushier. This script walks through the numbers.
"""

# %%
from fractions import Fraction

import numpy as np

from dfdcf.engine import MS, US
from dfdcf.policy import (PhyParams, ServiceClass, class_priority_order, fsl_crossing_time,
                          frame_service_level, instantaneous_difs)

phy = PhyParams()  # SIFS 10 us, slot 20 us
cbr1 = ServiceClass.from_difs(1, "CBR1", 150 * MS, 50 * US, 130 * US, phy)
cbr2 = ServiceClass.from_difs(2, "CBR2", 250 * MS, 130 * US, 210 * US, phy)
cbr3 = ServiceClass.from_difs(3, "CBR3", 350 * MS, 210 * US, 290 * US, phy)
print("priority order:", [c.name for c in class_priority_order([cbr3, cbr1, cbr2])])

# %% A CBR1 frame ageing in the queue
for age_ms in (0, 25, 75, 120, 149):
    fsl = frame_service_level(cbr1, 0, age_ms * MS)
    print(f"age {age_ms:3d} ms  fsl {float(fsl):.3f}  difs {instantaneous_difs(cbr1, fsl, phy) / US:.0f} us")

# %% DIFS over a frame's whole life, for each class
for c in (cbr1, cbr2, cbr3):
    ages = np.linspace(0, c.temax, 6, dtype=np.int64)
    difs = [instantaneous_difs(c, frame_service_level(c, 0, int(a)), phy) // US for a in ages]
    print(f"{c.name}: {difs} us")

# %% When does a younger, tighter frame overtake an older, looser one?
# A 300 ms class frame arrived at 0, a 150 ms class frame at 100 ms.
a = ServiceClass.from_difs(1, "A", 300 * MS, 50 * US, 130 * US, phy)
b = ServiceClass.from_difs(2, "B", 150 * MS, 130 * US, 210 * US, phy)
t = fsl_crossing_time(a, 0, b, 100 * MS)
print(f"service levels cross at {float(t) / MS:g} ms, both at {frame_service_level(a, 0, int(t))}")
for now in (150 * MS, int(t) - 1, int(t) + 1):
    fa, fb = frame_service_level(a, 0, now), frame_service_level(b, 100 * MS, now)
    print(f"t={now / MS:9.6f} ms  A {float(fa):.6f}  B {float(fb):.6f}  -> serve {'A' if fa <= fb else 'B'}")
assert frame_service_level(a, 0, int(t)) == Fraction(1, 3)
