import math

import numpy as np
import pytest

from ifacesim import engine as E
from ifacesim import interface as I
from ifacesim import renewal as RN
from ifacesim.kernel import NEAREST_NEIGHBOR, RANGE_TWO, leave_rate
from ifacesim.stats import ks_test


@pytest.fixture(scope="module")
def long_run():
    return E.run(I.heaviside(), RANGE_TWO, 0.0, 1e5, seed=E.derive_seed(404, 0))


@pytest.fixture(scope="module")
def long_ex(long_run):
    return RN.detect_excursions(long_run, RANGE_TWO)


def test_heaviside_start_tau0_zero(long_ex):
    assert long_ex.tau0 == 0.0 and long_ex.eta0 == 0.0
    assert long_ex.complete


def test_boundaries_are_heaviside_transitions(long_run, long_ex):
    ev = long_run.events
    hv = ev.twoL == ev.twoR
    prev = np.concatenate(([True], hv[:-1]))
    entries = ev.t[hv & ~prev]
    starts = np.cumsum(long_ex.tau)
    n = min(len(entries), len(starts))
    assert np.allclose(entries[:n], starts[:n], rtol=1e-12, atol=1e-9)
    assert len(entries) == len(long_ex)


def test_covered_time_and_s_clock_additive(long_run, long_ex):
    covered = long_ex.tau.sum() + long_ex.tail.tau
    assert covered == pytest.approx(long_run.horizon, rel=1e-12)
    assert long_ex.eta.sum() + long_ex.tail.eta == pytest.approx(long_run.s_clock_final, rel=1e-12)
    assert not long_ex.tail.complete


def test_excursion_invariants(long_ex):
    assert np.all(long_ex.eta >= long_ex.tau * (1 - 1e-12))
    assert np.all(long_ex.eta >= long_ex.hold * RANGE_TWO.abs_first_moment * (1 - 1e-12))
    assert np.all(long_ex.hold > 0) and np.all(long_ex.hold < long_ex.tau)


def test_holding_times_exponential(long_ex):
    r0 = leave_rate(RANGE_TWO, 0.0)
    assert len(long_ex) >= 10_000
    assert ks_test(long_ex.hold[:10_000], "exponential", r0).passed
    assert long_ex.hold.mean() == pytest.approx(1 / r0, rel=0.03)


def test_renewal_ratio_and_equilibrium_agree(long_run, long_ex):
    ratio, se = RN.renewal_ratio(long_ex)
    assert abs(ratio - RANGE_TWO.sigma2) < 3 * se
    est, ese = RN.equilibrium_average(long_run, RANGE_TWO, 0.0)
    assert abs(ratio - est) < 3 * math.hypot(se, ese)


def test_invariant_law_identity(long_run, long_ex):
    occ = RN.heaviside_occupation(long_run)
    prod = long_ex.tau.mean() * leave_rate(RANGE_TWO, 0.0) * occ
    assert abs(prod - 1) < 0.05


def test_occupation_measure(long_run):
    occ = RN.occupation_measure(long_run, 0.0)
    assert sum(occ.values()) == pytest.approx(1.0, abs=1e-9)
    assert occ[I.HEAVISIDE_KEY] == pytest.approx(RN.heaviside_occupation(long_run), abs=1e-12)
    later = RN.occupation_measure(long_run, 5e4)
    assert sum(later.values()) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        RN.occupation_measure(long_run, long_run.horizon)


def test_occupation_measure_matches_replay():
    tr = E.run(I.heaviside(), RANGE_TWO, 0.1, 300.0, seed=2)
    occ = RN.occupation_measure(tr, 50.0)
    ref = {}
    x = tr.initial_config.copy()
    times = np.concatenate(([0.0], tr.events.t, [tr.horizon]))
    for n in range(len(times) - 1):
        if n:
            I.apply_flip(x, int(tr.events.site[n - 1]), int(tr.events.new_value[n - 1]), RANGE_TWO)
        d = max(0.0, times[n + 1] - max(times[n], 50.0))
        if d:
            key = I.canonical_key(x)
            ref[key] = ref.get(key, 0.0) + d / 250.0
    assert occ.keys() == ref.keys()
    for key in ref:
        assert occ[key] == pytest.approx(ref[key], abs=1e-12)


def test_nearest_neighbor_trapped():
    tr = E.run(I.heaviside(), NEAREST_NEIGHBOR, 0.0, 2000.0, seed=7)
    ex = RN.detect_excursions(tr, NEAREST_NEIGHBOR)
    ratio, se = RN.renewal_ratio(ex)
    assert ratio == pytest.approx(1.0, abs=1e-12)
    assert RN.occupation_measure(tr, 0.0) == {I.HEAVISIDE_KEY: pytest.approx(1.0)}
    est, _ = RN.equilibrium_average(tr, NEAREST_NEIGHBOR, 100.0)
    assert est == pytest.approx(1.0, abs=1e-12)


def test_no_return_flags_incomplete():
    x0 = I.from_bits(0, "1011010011")
    tr = E.run(x0, RANGE_TWO, 0.0, 0.05, seed=1)
    ex = RN.detect_excursions(tr)
    assert not ex.complete
    with pytest.raises(RN.InsufficientData):
        RN.renewal_ratio(ex)


def test_partial_sum_paths(long_ex):
    eps = 0.05
    phi, psi = RN.partial_sum_paths(long_ex, eps)
    assert phi(eps ** 2 / 2) == 0.0 and psi(0.0) == 0.0
    u = eps ** 2 * len(long_ex)
    assert psi(u) / phi(u) == pytest.approx(RN.renewal_ratio(long_ex)[0], rel=1e-12)
    assert phi(u) / u == pytest.approx(long_ex.tau.mean(), rel=1e-12)


def test_bias_inequality_eps():
    tr = E.run(I.heaviside(), RANGE_TWO, 0.2, 5e4, seed=11)
    est, se = RN.equilibrium_average(tr, RANGE_TWO, 1e3)
    assert est <= RANGE_TWO.sigma2 + 2 * se


def test_tracker_online_equals_offline():
    tracker = RN.ExcursionTracker()
    tr = E.run(I.heaviside(), RANGE_TWO, 0.1, 5e3, observers=[tracker], seed=3, record=True)
    a, b = tracker.result(), RN.detect_excursions(tr)
    assert np.array_equal(a.tau, b.tau) and np.array_equal(a.eta, b.eta)
