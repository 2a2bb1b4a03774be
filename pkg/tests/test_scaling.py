import math

import numpy as np
import pytest

from ifacesim import engine as E
from ifacesim import interface as I
from ifacesim import scaling as SC
from ifacesim.kernel import RANGE_TWO
from ifacesim.stats import ks_test


def test_rescaled_paths_at_zero():
    eps = 0.1
    tr = E.run(I.heaviside(0.5), RANGE_TWO, eps, 10 / eps ** 2, seed=1)
    M, L, R = SC.rescaled_paths(tr, eps, [0.0, 1.0, 5.0, 10.0])
    assert (M.values[0], L.values[0], R.values[0]) == (eps / 2, eps / 2, eps / 2)
    assert np.all(L.values <= M.values) and np.all(M.values <= R.values)
    w = R.values - L.values
    assert np.all(M.values - L.values <= w + 1e-12) and np.all(R.values - M.values <= w + 1e-12)
    with pytest.raises(SC.HorizonTooShort):
        SC.rescaled_paths(tr, eps, [11.0])


def test_rescaled_paths_right_continuous():
    eps = 0.2
    tr = E.run(I.heaviside(), RANGE_TWO, eps, 25.0, seed=2)
    t_ev = tr.events.t[3]
    M, _, _ = SC.rescaled_paths(tr, eps, [t_ev * eps ** 2])
    assert M.values[0] == eps * tr.events.twoM[3] / 2


def test_brownian_reference():
    assert tuple(SC.brownian_reference(2.2, 0.0)) == (0.0, 0.0)
    assert tuple(SC.brownian_reference(1.0, 4.0)) == (-2.0, 4.0)
    ref = SC.brownian_reference(2.2, 1.0)
    rng = np.random.default_rng(0)
    assert ks_test(ref.sample(rng, 5000), "normal", -1.1, 2.2).passed
    paths = ref.sample_path(rng, [0.5, 1.5], 20_000)
    inc = paths[:, 1] - paths[:, 0]
    assert ks_test(inc, "normal", -1.1, 2.2).passed
    assert abs(np.corrcoef(paths[:, 0], inc)[0, 1]) < 0.03
    with pytest.raises(ValueError):
        SC.brownian_reference(1.0, -1.0)


def test_test_functions():
    hat = SC.TestFunction("hat", -1, 1)
    assert hat(0.0) == 1.0 and hat(1.0) == 0.0 and hat(-2.0) == 0.0
    bump = SC.TestFunction("bump", 0, 2)
    assert bump(1.0) == pytest.approx(1.0) and bump(0.0) == 0.0
    poly = SC.TestFunction("polynomial", -1, 1, 4)
    assert poly(0.5) == pytest.approx(0.75 ** 4)
    assert SC.parse_test_function(poly.to_spec()) == poly
    with pytest.raises(ValueError):
        SC.TestFunction("polynomial", -1, 1, 2)
    with pytest.raises(ValueError):
        SC.TestFunction("hat", 1, 1)


def test_pair_integral_examples():
    eps = 0.01
    ms = SC.measure_snapshot(I.heaviside(0.5), eps)
    assert ms.tail_start == pytest.approx(eps)
    left = SC.TestFunction("hat", -3, -1)
    assert SC.pair_integral(ms, left) == 0.0
    f = SC.TestFunction("hat", 0.2, 1.2)
    # Riemann sum of f over eps Z in [0.2, 1.2], exact for a hat up to rounding
    assert SC.pair_integral(ms, f) == pytest.approx(0.5, abs=2 * eps)
    x = I.from_bits(-5, "1101000110")
    ms = SC.measure_snapshot(x, eps)
    g = SC.TestFunction("bump", -0.2, 0.3)
    sites = np.arange(-60, 61)
    brute = eps * sum(g(eps * s) * x.value(int(s)) for s in sites)
    assert SC.pair_integral(ms, g) == pytest.approx(float(brute), abs=1e-12)


def test_pair_integral_linear_and_monotone(k2):
    eps = 0.1
    f = SC.TestFunction("hat", -1, 1)
    g = SC.TestFunction("bump", -0.5, 1.5)
    for r in range(20):
        te, t0 = E.coupled_run(I.heaviside(), k2, 0.2, 100.0, seed=r)
        a = SC.measure_snapshot(te.final_config, eps)
        b = SC.measure_snapshot(t0.final_config, eps)
        assert SC.pair_integral(a, f) >= SC.pair_integral(b, f) - 1e-12
        lin = SC.pair_integral(a, f) + 2 * SC.pair_integral(a, g)
        atoms_sum = eps * float(np.sum(f(a.one_sites_scaled) + 2 * g(a.one_sites_scaled)))
        i0 = round(a.tail_start / eps)
        tail = eps * float(np.sum(f(eps * np.arange(i0, 30)) + 2 * g(eps * np.arange(i0, 30))))
        assert lin == pytest.approx(atoms_sum + tail, abs=1e-12)


def test_pairing_path_matches_snapshots(k2):
    eps = 0.1
    f = SC.TestFunction("hat", -1, 1)
    tr = E.run(I.heaviside(), k2, eps, 100.0, seed=5)
    p = SC.pairing_path(tr, eps, f)
    x = tr.initial_config.copy()
    for n in range(0, len(tr.events), 37):
        x = tr.initial_config.copy()
        for s, v in zip(tr.events.site[:n + 1], tr.events.new_value[:n + 1]):
            I.apply_flip(x, int(s), int(v), k2)
        direct = SC.pair_integral(SC.measure_snapshot(x, eps), f)
        assert p.values[n + 1] == pytest.approx(direct, abs=1e-9)


def test_modulus_statistics_bounds(k2):
    eps = 0.1
    f = SC.TestFunction("hat", -1, 1)
    paths = [SC.pairing_path(E.run(I.heaviside(), k2, eps, 100.0, seed=r), eps, f)
             for r in range(100)]
    # each jump moves the pairing by at most eps * sup f; a huge eta is never reached
    st = SC.modulus_statistics(paths, eps, 0.25, 10.0, f, 1.0)
    assert st.block_sum == 0.0 and len(st.p_two_sided) == 4
    small = SC.modulus_statistics(paths, eps, 0.25, 1e-9, f, 1.0)
    assert np.all(small.p_two_sided >= small.p_up) and np.all(small.p_two_sided >= small.p_down)
    whole = SC.modulus_statistics(paths, eps, 1.0, 0.3, f, 1.0)
    assert len(whole.p_two_sided) == 1 and whole.replicates == 100


def test_marginals_match_limit_mean_var(k2):
    m = SC.sample_marginals(k2, 0.1, [0.5, 1.0], 300, master_seed=3)
    assert m.M.shape == (300, 2)
    assert np.all(m.L <= m.M) and np.all(m.M <= m.R)
    # finite-eps drift is -E_pi[ws]/2, a bit above the limit -1.1
    assert -1.35 < m.M[:, 1].mean() < -0.75
    assert 1.4 < m.M[:, 1].var(ddof=1) < 3.0


def test_limit_pairing_sample_range():
    f = SC.TestFunction("hat", -1, 1)
    rng = np.random.default_rng(1)
    s = SC.limit_pairing_sample(2.2, 1.0, f, rng, 1000)
    assert np.all(s >= -1e-12) and np.all(s <= 1.0 + 1e-12)
