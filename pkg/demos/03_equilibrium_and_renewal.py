"""The unbiased interface in equilibrium: time averages and excursions."""
from ifacesim import engine, interface, renewal
from ifacesim.kernel import RANGE_TWO, leave_rate

print("== 1. ONE LONG UNBIASED RUN ===========================")
tr = engine.run(interface.heaviside(), RANGE_TWO, 0.0, 2e5, seed=21)
print("   events:", tr.n_events)

print("== 2. TIME AVERAGE OF THE WEIGHTED BOUNDARY SUM =======")
ci = renewal.equilibrium_ci(tr, 1e4)
print(f"   {ci.mean:.4f} +- {ci.halfwidth:.4f}   (sigma2 = {RANGE_TWO.sigma2})")
print("   largest batch mean:", ci.batch_means.max().round(3),
      " (rare wide excursions dominate the error bar)")

print("== 3. EXCURSIONS BETWEEN HEAVISIDE VISITS =============")
ex = renewal.detect_excursions(tr, RANGE_TWO)
ratio, se = renewal.renewal_ratio(ex)
print(f"   {len(ex)} excursions, sum(eta)/sum(tau) = {ratio:.4f} +- {se:.4f}")
r0 = leave_rate(RANGE_TWO, 0.0)
print("   mean Heaviside hold:", ex.hold.mean().round(4), " 1/r0 =", 1 / r0)
occ = renewal.occupation_measure(tr, 0.0)
top = list(occ.items())[:5]
for key, frac in top:
    bits = "".join(str(b) for b in key) or "heaviside"
    print(f"   class {bits:>10}: {frac:.4f}")
print("   mean(tau) r0 pi(hv) =", round(ex.tau.mean() * r0 * occ[b''], 4))

print("== 4. A BIAS LOWERS THE AVERAGE =======================")
for eps in (0.1, 0.2):
    t = engine.run(interface.heaviside(), RANGE_TWO, eps, 1e5, seed=22)
    est, se = renewal.equilibrium_average(t, RANGE_TWO, 1e3)
    print(f"   eps={eps}: {est:.4f} (se {se:.4f})")
