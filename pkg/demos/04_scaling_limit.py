"""Diffusive rescaling: the midpoint approaches a drifted Brownian motion."""
import numpy as np

from ifacesim import engine, interface, scaling, stats
from ifacesim.kernel import RANGE_TWO

print("== 1. MARGINALS OF eps M AT t = 1 =====================")
ref = scaling.brownian_reference(RANGE_TWO.sigma2, 1.0)
print("   limit mean, variance:", ref.mean, ref.var)
for eps in (0.2, 0.1, 0.05):
    m = scaling.sample_marginals(RANGE_TWO, eps, [1.0], 600, master_seed=7)
    col = m.M[:, 0]
    ks = stats.ks_test(col, "normal", ref.mean, ref.var)
    print(f"   eps={eps}: mean {col.mean():.3f}  var {col.var(ddof=1):.3f}  KS p {ks.p_value:.3f}")

print("== 2. THE MEASURE OF 1's PAIRED WITH A HAT ============")
eps = 0.05
f = scaling.TestFunction("hat", -1.0, 1.0)
tr = engine.run(interface.heaviside(), RANGE_TWO, eps, 1 / eps ** 2, seed=3)
p = scaling.pairing_path(tr, eps, f)
for t in (0.0, 0.25, 0.5, 1.0):
    print(f"   <mu_{t}, f> = {p.at(t):.4f}")
draws = scaling.limit_pairing_sample(RANGE_TWO.sigma2, 1.0, f, np.random.default_rng(0), 20000)
print("   limit law mean at t=1:", draws.mean().round(4))

print("== 3. MODULUS OF CONTINUITY ===========================")
paths = [scaling.pairing_path(engine.run(interface.heaviside(), RANGE_TWO, eps, 400.0,
                                         seed=engine.derive_seed(5, r)), eps, f)
         for r in range(400)]
for delta in (0.2, 0.1, 0.05):
    st = scaling.modulus_statistics(paths, eps, delta, 0.5, f, 1.0)
    print(f"   delta={delta}: block sum {st.block_sum:.3f} (up {st.block_sum_up:.3f}, "
          f"down {st.block_sum_down:.3f})")
