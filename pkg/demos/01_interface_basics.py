"""A first look at interface states: midpoint, boundaries and boundary counts."""
from ifacesim import interface as I
from ifacesim.kernel import NEAREST_NEIGHBOR, RANGE_TWO

print("== 1. THE HEAVISIDE STATE =============================")
x = I.heaviside(0.5)
print("   state:", x)
print("   M, L, R:", x.M, x.L, x.R)
c = I.boundary_counts(x, RANGE_TWO)
print("   I_k:", c.I, " weighted sum:", c.weighted_sum)

print("== 2. A STATE WITH DEFECTS ============================")
y = I.from_bits(-2, "100")
print("   state:", y)
c = I.boundary_counts(y, NEAREST_NEIGHBOR)
print("   I_1 =", c.I[1], " I01_1 =", c.I01[1], " I10_1 =", c.I10[1])
print("   one more 01 pair than 10 pair:", c.I01[1] - c.I10[1] == 1)
print("   inversions h =", y.h)

print("== 3. FLIPS MOVE THE MIDPOINT BY ONE ==================")
for site, value in [(0, 1), (-2, 0), (1, 0)]:
    before = y.M
    I.apply_flip(y, site, value, RANGE_TWO)
    print(f"   flip {site} -> {value}: M {before} -> {y.M}   key {I.canonical_key(y)!r}")
