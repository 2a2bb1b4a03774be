"""Under the S-clock the midpoint is a drifted random walk."""
import math

import numpy as np

from ifacesim import engine, interface, stats
from ifacesim.kernel import RANGE_TWO

eps = 0.1
print(f"== SIMULATING 2e5 EVENTS AT eps={eps} ==================")
tr = engine.run(interface.heaviside(), RANGE_TWO, eps, math.inf, seed=1, max_events=200_000)
print("   model time reached:", round(tr.horizon, 1), " S-clock:", round(tr.s_clock_final, 1))

s, m = engine.midpoint_in_s_clock(tr)
holds = np.diff(s)
print("   mean S-clock holding:", holds.mean(), " expected:", 1 / (1 - eps / 2))
print("  ", stats.ks_test(holds, "exponential", 1 - eps / 2))
ups = int(np.sum(np.diff(m) > 0))
print("  ", stats.binomial_test(ups, len(holds), (1 - eps) / (2 - eps), name="up steps"))

drift = (m[-1] - m[0]) / 2 / s[-1]
print("   midpoint drift per unit S:", drift, " expected:", -eps / 2)
