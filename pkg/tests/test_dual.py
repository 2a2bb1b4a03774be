import numpy as np
import pytest

from ifacesim import dual as D
from ifacesim.kernel import NEAREST_NEIGHBOR, RANGE_TWO


def test_torus_too_small():
    with pytest.raises(D.TorusTooSmall):
        D.sample_graphical(4, RANGE_TWO, 0.1, 1.0)
    D.sample_graphical(5, RANGE_TWO, 0.1, 1.0)


def test_no_branching_at_eps_zero():
    g = D.sample_graphical(16, RANGE_TWO, 0.0, 10.0, seed=1)
    assert len(g) > 0 and not g.kind.any()


def test_arrow_statistics():
    n, h = 16, 5.0
    counts = [len(D.sample_graphical(n, RANGE_TWO, 0.3, h, seed=s)) for s in range(400)]
    assert np.mean(counts) == pytest.approx(n * h, rel=4 / np.sqrt(400 * n * h))
    g = D.sample_graphical(n, RANGE_TWO, 0.3, 200.0, seed=2)
    assert np.all(np.diff(g.times) > 0)
    assert abs(g.kind.mean() - 0.3) < 4 * np.sqrt(0.21 / len(g))
    offs = (g.target - g.source) % n
    assert set(offs.tolist()) <= {1, 2, n - 1, n - 2}
    other = D.sample_graphical(n, RANGE_TWO, 0.3, 200.0, seed=3)
    assert not np.array_equal(g.times[:5], other.times[:5])


def test_forward_absorbing_states():
    g = D.sample_graphical(12, RANGE_TWO, 0.4, 5.0, seed=4)
    assert not D.forward_apply(np.zeros(12), g).any()
    assert D.forward_apply(np.ones(12), g).all()


def _single(n, src, tgt, kind):
    return D.GraphicalRep(n, 1.0, 0.5, np.array([0.5]), np.array([src]), np.array([tgt]),
                          np.array([kind], dtype=np.int8), 0)


def test_single_arrow_semantics():
    x = np.zeros(8, dtype=int)
    x[2] = 1
    y = D.forward_apply(x, _single(8, 2, 3, D.VOTER))
    assert set(np.flatnonzero(y)) == {2, 3}
    y = D.forward_apply(1 - x, _single(8, 3, 2, D.BRANCHING))
    assert y[2] == 1  # a branching arrow never transmits a 0
    assert D.dual_trace({3}, _single(8, 1, 3, D.BRANCHING)).walkers == {1, 3}
    assert D.dual_trace({3}, _single(8, 1, 3, D.VOTER)).walkers == {1}


def test_dual_without_arrows():
    g = D.GraphicalRep(8, 1.0, 0.0, np.zeros(0), np.zeros(0, int), np.zeros(0, int),
                       np.zeros(0, np.int8), 0)
    assert D.dual_trace({1, 5}, g).walkers == {1, 5}


def test_pure_coalescence_at_eps_zero():
    g = D.sample_graphical(16, RANGE_TWO, 0.0, 3.0, seed=5)
    sizes = D.dual_sizes(range(16), g)
    assert np.all(np.diff(sizes) <= 0)


def test_duality_trivial_states():
    g = D.sample_graphical(16, RANGE_TWO, 0.3, 2.0, seed=6)
    assert D.duality_check(np.zeros(16, int), [0, 3], g)
    assert D.duality_check(np.ones(16, int), [0, 3], g)


def test_duality_randomized_suite():
    rep = D.duality_suite(RANGE_TWO, 16, 0.3, 2.0, 2000, seed=7)
    assert rep.failures == 0 and rep.trials == 2000


def test_wrong_dual_is_caught():
    # forgetting the branch (moving the walker as if the arrow were a voter arrow)
    rng = np.random.default_rng(8)
    bad = 0
    for _ in range(300):
        g = D.sample_graphical(16, RANGE_TWO, 0.5, 2.0, rng=rng)
        fake = D.GraphicalRep(16, g.horizon, g.eps, g.times, g.source, g.target,
                              np.zeros_like(g.kind), 0)
        x0 = rng.integers(0, 2, 16)
        targets = [int(rng.integers(16))]
        lhs = D.forward_apply(x0, g)[targets[0]]
        rhs = max(x0[i] for i in D.dual_trace(targets, fake).walkers)
        bad += lhs != rhs
    assert bad > 0


@pytest.mark.parametrize("k", [RANGE_TWO, NEAREST_NEIGHBOR])
def test_forward_marginal_rates(k):
    x0 = np.array([0, 1, 1, 0, 1, 0, 0, 0])
    trials = 20_000
    counts = D.first_transitions(x0, k, 0.3, trials, seed=9)
    rates = D.torus_rates(x0, k, 0.3)
    p = rates / rates.sum()
    assert counts.sum() == trials
    sd = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - trials * p) <= 3 * sd + 1e-9)
    assert np.all(counts[p == 0] == 0)
