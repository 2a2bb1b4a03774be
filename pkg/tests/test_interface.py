import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifacesim import interface as I
from ifacesim.kernel import NEAREST_NEIGHBOR, RANGE_TWO


def test_heaviside_half():
    x = I.heaviside(0.5)
    assert (x.twoM, x.twoL, x.twoR) == (1, 1, 1)
    c = I.boundary_counts(x, RANGE_TWO)
    assert c.I[1] == 1 and c.I[2] == 2
    assert I.boundary_counts(x, NEAREST_NEIGHBOR).weighted_sum == 1.0


def test_heaviside_translated():
    x = I.heaviside(-3.5)
    assert x.twoM == -7
    assert I.inversions(x) == 0
    assert I.canonical_key(x) == I.HEAVISIDE_KEY
    with pytest.raises(ValueError):
        I.heaviside(1)


def test_from_bits_example():
    x = I.from_bits(-2, "100")
    assert (x.twoL, x.twoR, x.twoM) == (-5, 1, -1)
    assert (x.L, x.R, x.M) == (-2.5, 0.5, -0.5)
    c = I.boundary_counts(x, NEAREST_NEIGHBOR)
    assert c.I[1] == 3 and c.I10[1] == 1 and c.I01[1] == 2
    assert x.h == 2 == I.inversions(x)
    assert c.weighted_sum == 3.0
    assert I.total_flip_rate(x, NEAREST_NEIGHBOR, 0.0) == 3.0
    _, rates = I.site_rates(x, NEAREST_NEIGHBOR, 0.0)
    assert rates.sum() == 3.0


def test_from_bits_normalizes():
    for start in (-4, 0, 9):
        assert I.from_bits(start, "0").is_heaviside
        assert I.from_bits(start, "1").is_heaviside
    x = I.from_bits(0, "10")
    c = I.boundary_counts(x, NEAREST_NEIGHBOR)
    assert (c.I[1], c.I01[1], c.I10[1]) == (3, 2, 1)


def test_inversions_examples():
    assert I.inversions(I.from_bits(0, "1100")) == 4
    assert I.from_bits(0, "1100").h == 4


def test_heaviside_counts_any_kernel(skew):
    x = I.heaviside(0.5, skew.range)
    c = I.boundary_counts(x, skew)
    for k in c.I:
        assert c.I[k] == abs(k)
    assert c.weighted_sum == pytest.approx(skew.abs_first_moment)


def test_apply_flip_heaviside_right():
    # flipping site 1 of x_hv to 0 gives the Heaviside state at 1.5
    x = I.apply_flip(I.heaviside(0.5), 1, 0, RANGE_TWO)
    assert x.is_heaviside
    assert (x.twoM, x.twoL, x.twoR) == (3, 3, 3)
    assert I.boundary_counts(x, NEAREST_NEIGHBOR).I[1] == 1


def test_apply_flip_heaviside_left():
    x = I.apply_flip(I.heaviside(0.5), 0, 1, RANGE_TWO)
    assert x.twoM == -1
    assert x == I.heaviside(-0.5)


def test_apply_flip_errors():
    x = I.heaviside(0.5)
    with pytest.raises(I.NoopFlip):
        I.apply_flip(x, 5, 1, RANGE_TWO)
    with pytest.raises(I.OutOfReach):
        I.apply_flip(x, 10, 0, RANGE_TWO)


def test_canonical_key_examples():
    assert I.canonical_key(I.heaviside(0.5)) == I.canonical_key(I.heaviside(-7.5))
    assert I.canonical_key(I.from_bits(0, "10")) == I.canonical_key(I.from_bits(100, "10"))
    assert I.canonical_key(I.from_bits(0, "10")) != I.canonical_key(I.from_bits(0, "1100"))


def test_total_flip_rate_heaviside():
    for eps in (0.0, 0.1, 0.7):
        assert I.total_flip_rate(I.heaviside(), NEAREST_NEIGHBOR, eps) == pytest.approx(1 - eps / 2)


def test_parse_initial_and_serialize():
    assert I.parse_initial("heaviside@1/2") == I.heaviside(0.5)
    assert I.parse_initial("heaviside@-3.5") == I.heaviside(-3.5)
    x = I.parse_initial("bits@-2:100")
    assert x == I.from_bits(-2, "100")
    assert I.parse_config(x.serialize()) == x
    with pytest.raises(ValueError):
        I.parse_initial("step@3")


configs = st.builds(lambda start, bits: I.from_bits(start, bits, 3),
                    st.integers(-40, 40), st.lists(st.integers(0, 1), max_size=30))


def _brute_counts(x, k):
    lo, hi = x.window_start - k - 2, x.window_end + k + 2
    v = x.values(lo, hi + k)
    a, b = v[:len(v) - k], v[k:]
    return int(np.sum(a != b)), int(np.sum((a == 0) & (b == 1))), int(np.sum((a == 1) & (b == 0)))


@settings(max_examples=300, deadline=None)
@given(configs)
def test_counts_property(x):
    c = I.boundary_counts(x, RANGE_TWO)
    inc = x.counts(RANGE_TWO)
    for k in (1, 2):
        n, n01, n10 = _brute_counts(x, k)
        assert (c.I[k], c.I01[k], c.I10[k]) == (n, n01, n10)
        assert (inc.I[k], inc.I01[k], inc.I10[k]) == (n, n01, n10)
        assert c.I[-k] == c.I[k]
        assert 2 * c.I10[k] == c.I[k] - k
    assert x.twoL <= x.twoM <= x.twoR
    assert (x.twoL == x.twoM == x.twoR) == x.is_heaviside


@settings(max_examples=300, deadline=None)
@given(configs)
def test_midpoint_balance(x):
    m = x.M
    lo, hi = x.window_start - 1, x.window_end + 1
    sites = np.arange(lo, hi + 1)
    v = x.values(lo, hi)
    assert v[sites < m].sum() == (1 - v[sites > m]).sum()


@settings(max_examples=200, deadline=None)
@given(configs, st.data())
def test_flip_unflip_involution(x, data):
    sites, rates = I.site_rates(x, RANGE_TWO, 0.0)
    s = int(data.draw(st.sampled_from(sites[rates > 0].tolist())))
    before = x.copy()
    v = 1 - x.value(s)
    I.apply_flip(x, s, v, RANGE_TWO)
    assert x.h == I.inversions(x)
    assert x == I.from_bits(x.window_start, x.window_bits(), x.kmax)
    if x.window_start - 2 <= s <= x.window_end + 2:
        I.apply_flip(x, s, 1 - v, RANGE_TWO)
        assert x == before


@settings(max_examples=200, deadline=None)
@given(configs, st.integers(-1000, 1000))
def test_translation_invariance(x, d):
    y = x.translate(d)
    assert I.canonical_key(y) == I.canonical_key(x)
    assert y.twoM == x.twoM + 2 * d
    assert I.boundary_counts(y, RANGE_TWO).I == I.boundary_counts(x, RANGE_TWO).I


def test_site_rates_total_matches_formula(skew, rng):
    for _ in range(200):
        x = I.from_bits(int(rng.integers(-5, 5)), rng.integers(0, 2, 15).tolist(), skew.range)
        for eps in (0.0, 0.3):
            _, r = I.site_rates(x, skew, eps)
            assert r.sum() == pytest.approx(I.total_flip_rate(x, skew, eps), rel=1e-12)


def test_relayout_keeps_state():
    x = I.from_bits(3, "1001011")
    y = x.copy()
    y.relayout(5, size=256, base=-100)
    assert y == x and y.base == -100
