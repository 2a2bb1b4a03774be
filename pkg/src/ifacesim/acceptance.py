"""The acceptance suite: one function per criterion, each with a fixed seed.

Seeds are derived from ``MASTER_SEED`` and the criterion number, fixed before
any criterion was run, so a red line is a property of the build rather than
of seed selection.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual, engine, interface, renewal, scaling, stats
from .engine import derive_seed
from .kernel import RANGE_TWO, Kernel, leave_rate, make_kernel

MASTER_SEED = 20261014
SIGMA2 = RANGE_TWO.sigma2
ASYMMETRIC = make_kernel([(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)])


def seed_for(criterion: int, sub: int = 0) -> int:
    return derive_seed(derive_seed(MASTER_SEED, criterion), sub)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)
    info: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" | info: {self.info}" if self.info else ""
        return f"[{verdict}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s){extra}"


# -- criterion 1 ---------------------------------------------------------------

def random_config(rng: np.random.Generator, kmax: int, max_width: int = 24) -> interface.InterfaceConfig:
    width = int(rng.integers(0, max_width + 1))
    start = int(rng.integers(-50, 51))
    return interface.from_bits(start, rng.integers(0, 2, width).tolist(), kmax)


def identity_violations(x: interface.InterfaceConfig, k: Kernel) -> list[str]:
    """Integer identities that must hold exactly for ``x``; returns the failed ones."""
    bad = []
    ref = interface.boundary_counts(x, k)
    inc = x.counts(k)
    for kk in range(1, k.range + 1):
        if kk not in ref.I:
            continue
        if 2 * ref.I10[kk] != ref.I[kk] - kk or 2 * inc.I10[kk] != inc.I[kk] - kk:
            bad.append(f"I10 identity k={kk}")
    for kk in ref.I:
        if ref.I[kk] != inc.I[kk] or ref.I01[kk] != inc.I01[kk] or ref.I10[kk] != inc.I10[kk]:
            bad.append(f"I_k mismatch k={kk}")
    fresh = interface.from_bits(x.window_start, x.window_bits().tolist(), x.kmax)
    if (fresh.twoM, fresh.twoL, fresh.twoR) != (x.twoM, x.twoL, x.twoR):
        bad.append("M/L/R mismatch")
    if interface.inversions(x) != x.h:
        bad.append("h mismatch")
    w = x.window_bits()
    cut = (x.twoM + 1) // 2 - x.window_start
    if int(w[:cut].sum()) != int((1 - w[cut:]).sum()):
        bad.append("M balance")
    d = int(x.window_start) * 3 + 7
    if interface.canonical_key(x.translate(d)) != interface.canonical_key(x):
        bad.append("translation invariance")
    return bad


def criterion_1(configs: int = 1000, flips_per_config: int = 10) -> CriterionResult:
    rng = np.random.default_rng(seed_for(1))
    kernels = [RANGE_TWO, ASYMMETRIC, make_kernel([(-1, 0.5), (1, 0.5)])]
    failures: list[str] = []
    flips = involutions = 0
    t0 = time.perf_counter()
    for c in range(configs):
        k = kernels[c % len(kernels)]
        x = random_config(rng, k.range)
        failures += identity_violations(x, k)
        for _ in range(flips_per_config):
            sites, rates = interface.site_rates(x, k, 0.0)
            cand = sites[rates > 0]
            if not len(cand):
                break
            s = int(rng.choice(cand))
            before = x.copy()
            v = 1 - x.value(s)
            interface.apply_flip(x, s, v, k)
            flips += 1
            failures += identity_violations(x, k)
            # a flip that shrinks the window can leave its own reversal out of
            # the kernel's reach; only reachable reversals are process moves
            if x.window_start - k.range <= s <= x.window_end + k.range:
                back = interface.apply_flip(x.copy(), s, 1 - v, k)
                involutions += 1
                if back != before:
                    failures.append("flip/unflip involution")
    dt = time.perf_counter() - t0
    ok = not failures and dt < 10.0
    return CriterionResult(1, "exact identity suite", ok,
                           f"{configs} configs, {flips} flips, {involutions} involutions, "
                           f"{len(failures)} violations",
                           dt, {"violations": len(failures), "flips": flips})


# -- criterion 2 ---------------------------------------------------------------

def criterion_2(eps: float = 0.1, events: int = 200_000, level: float = 0.01) -> CriterionResult:
    t0 = time.perf_counter()
    tr = engine.run(interface.heaviside(), RANGE_TWO, eps, math.inf, seed=seed_for(2),
                    max_events=events)
    holds = np.diff(np.concatenate(([0.0], tr.s_clock)))
    ks = stats.ks_test(holds, "exponential", 1.0 - eps / 2.0, level=level, name="S-clock holds")
    ups = int(np.sum(tr.events.new_value == 0))
    bt = stats.binomial_test(ups, len(holds), (1.0 - eps) / (2.0 - eps), level=level,
                             name="up steps")
    dt = time.perf_counter() - t0
    ok = ks.passed and bt.passed and dt < 30.0 and tr.n_events >= 100_000
    return CriterionResult(2, "time-change law", ok,
                           f"n={tr.n_events} KS p={ks.p_value:.3f}, up-fraction "
                           f"{bt.statistic:.4f} p={bt.p_value:.3f}", dt,
                           {"ks_p": ks.p_value, "binom_p": bt.p_value})


# -- criteria 3 and 5 -----------------------------------------------------------

def criterion_3(horizon: float = 2e5, burn_in: float = 1e4) -> CriterionResult:
    t0 = time.perf_counter()
    tr = engine.run(interface.heaviside(), RANGE_TWO, 0.0, burn_in + horizon, seed=seed_for(3))
    ci = renewal.equilibrium_ci(tr, burn_in, 32)
    dt = time.perf_counter() - t0
    ok = ci.covers(SIGMA2) and ci.halfwidth < 0.05 and dt < 120.0
    return CriterionResult(3, "equilibrium equation", ok,
                           f"mean {ci.mean:.4f} +- {ci.halfwidth:.4f} (target 2.2, halfwidth < 0.05)",
                           dt, {"mean": ci.mean, "halfwidth": ci.halfwidth})


def criterion_5(horizon: float = 1e5, burn_in: float = 1e3) -> CriterionResult:
    t0 = time.perf_counter()
    parts = []
    ok = True
    metrics = {}
    for j, eps in enumerate((0.1, 0.2)):
        tr = engine.run(interface.heaviside(), RANGE_TWO, eps, horizon, seed=seed_for(5, j))
        est, se = renewal.equilibrium_average(tr, RANGE_TWO, burn_in)
        ok &= est <= SIGMA2 + 2 * se
        parts.append(f"eps={eps}: {est:.4f} (se {se:.4f})")
        metrics[eps] = (est, se)
    return CriterionResult(5, "bias inequality", ok, "; ".join(parts),
                           time.perf_counter() - t0, metrics)


# -- criterion 4 ---------------------------------------------------------------

def criterion_4(horizon: float = 1e5) -> CriterionResult:
    t0 = time.perf_counter()
    tr = engine.run(interface.heaviside(), RANGE_TWO, 0.0, horizon, seed=seed_for(4))
    ex = renewal.detect_excursions(tr, RANGE_TWO)
    ratio, se = renewal.renewal_ratio(ex)
    occ = renewal.heaviside_occupation(tr)
    invpi = float(ex.tau.mean()) * leave_rate(RANGE_TWO, 0.0) * occ
    dt = time.perf_counter() - t0
    ok = (len(ex) >= 10_000 and abs(ratio - SIGMA2) <= 3 * se
          and abs(invpi - 1.0) < 0.05 and dt < 120.0)
    return CriterionResult(4, "renewal identity", ok,
                           f"{len(ex)} excursions, ratio {ratio:.4f} (se {se:.4f}), "
                           f"mean(tau) r0 pi(hv) = {invpi:.4f}", dt,
                           {"ratio": ratio, "se": se, "invpi": invpi, "excursions": len(ex)})


# -- criterion 6 ---------------------------------------------------------------

def criterion_6(eps: float = 0.05, replicates: int = 1000, level: float = 0.01,
                workers: int | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    m = scaling.sample_marginals(RANGE_TWO, eps, [1.0], replicates, seed_for(6), workers=workers)
    M, L, R = m.M[:, 0], m.L[:, 0], m.R[:, 0]
    ref = scaling.brownian_reference(SIGMA2, 1.0)
    ks = stats.ks_test(M, "normal", ref.mean, ref.var, level=level, name="eps M vs N(-1.1, 2.2)")
    var = float(M.var(ddof=1))
    checks = {
        "mean M": abs(M.mean() - ref.mean) <= 0.15,
        "var M": abs(var / ref.var - 1.0) <= 0.15,
        "KS": ks.passed,
        "mean L": abs(L.mean() - ref.mean) <= 0.15,
        "mean R": abs(R.mean() - ref.mean) <= 0.15,
    }
    dt = time.perf_counter() - t0
    failed = [name for name, v in checks.items() if not v]
    detail = (f"mean M {M.mean():.4f}, var M {var:.4f}, KS p={ks.p_value:.3f}, "
              f"mean L {L.mean():.4f}, mean R {R.mean():.4f}")
    if failed:
        detail += f"; failed: {', '.join(failed)}"
    return CriterionResult(6, "drifted Brownian marginal", not failed and dt < 600.0, detail, dt,
                           {"mean_M": float(M.mean()), "var_M": var, "ks_p": ks.p_value,
                            "mean_L": float(L.mean()), "mean_R": float(R.mean())})


# -- criterion 7 ---------------------------------------------------------------

def criterion_7(runs: int = 100, eps: float = 0.2, horizon: float = 1e3) -> CriterionResult:
    t0 = time.perf_counter()
    violations = 0
    checks = 0
    for r in range(runs):
        try:
            tr_e, _ = engine.coupled_run(interface.heaviside(), RANGE_TWO, eps, horizon,
                                         seed=seed_for(7, r), record=False)
            checks += tr_e.domination_checks
        except engine.DominationViolation:
            violations += 1
    return CriterionResult(7, "monotone coupling", violations == 0 and checks > 0,
                           f"{runs} coupled runs, {checks} sitewise checks, {violations} violating runs",
                           time.perf_counter() - t0, {"checks": checks, "violations": violations})


# -- criterion 8 ---------------------------------------------------------------

def criterion_8(trials: int = 10_000) -> CriterionResult:
    t0 = time.perf_counter()
    rep = dual.duality_suite(RANGE_TWO, 16, 0.3, 2.0, trials, seed=seed_for(8))
    dt = time.perf_counter() - t0
    return CriterionResult(8, "pathwise duality", rep.passed and dt < 30.0,
                           f"n=16 eps=0.3 horizon=2, {rep.trials} trials, {rep.failures} failures",
                           dt, {"failures": rep.failures})


# -- criterion 9 ---------------------------------------------------------------

def _width_job(args):
    k, eps, times, seed = args
    tr = engine.run(interface.heaviside(), k, eps, max(times), seed=seed, record=False,
                    snapshot_times=times)
    return [(s.twoR - s.twoL) // 2 for s in tr.snapshots]


def criterion_9(eps: float = 0.1, replicates: int = 4000, workers: int | None = None) -> CriterionResult:
    from .parallel import farm

    t0 = time.perf_counter()
    times = (1e4, 2e4)
    jobs = [(RANGE_TWO, eps, times, seed_for(9, r)) for r in range(replicates)]
    w = np.array(farm(_width_job, jobs, workers))
    q1 = scaling.width_quantile(w[:, 0])
    q2 = scaling.width_quantile(w[:, 1])
    rel = abs(q2 - q1) / q1
    return CriterionResult(9, "width tightness proxy", rel < 0.2,
                           f"q95(W) at 1e4 = {q1:.2f}, at 2e4 = {q2:.2f}, relative diff {rel:.3f}",
                           time.perf_counter() - t0, {"q1": q1, "q2": q2})


# -- criterion 10 --------------------------------------------------------------

def _pairing_job(args):
    k, eps, seed, T, f = args
    tr = engine.run(interface.heaviside(), k, eps, T / (eps * eps), seed=seed)
    return scaling.pairing_path(tr, eps, f)


def criterion_10(eps: float = 0.05, replicates: int = 1000, eta: float = 0.5,
                 deltas=(0.2, 0.1, 0.05), workers: int | None = None) -> CriterionResult:
    from .parallel import farm

    t0 = time.perf_counter()
    f = scaling.TestFunction("hat", -1.0, 1.0)
    T = 1.0
    paths = farm(_pairing_job, [(RANGE_TWO, eps, seed_for(10, r), T, f)
                                for r in range(replicates)], workers)
    sums = [scaling.modulus_statistics(paths, eps, d, eta, f, T).block_sum for d in deltas]
    ok = all(a > b for a, b in zip(sums, sums[1:]))
    # informational: increment tail of the unbiased model against t
    info = _unbiased_exponent(eps, f, replicates, workers)
    detail = "block sums " + ", ".join(f"delta={d}: {s:.3f}" for d, s in zip(deltas, sums))
    return CriterionResult(10, "modulus/tightness diagnostic", ok, detail,
                           time.perf_counter() - t0, {"block_sums": sums}, info)


def _unbiased_job(args):
    k, scale, seed, T, f = args
    tr = engine.run(interface.heaviside(), k, 0.0, T / (scale * scale), seed=seed)
    return scaling.pairing_path(tr, scale, f)


def _unbiased_exponent(scale: float, f, replicates: int, workers) -> str:
    from .parallel import farm

    ts = np.array([0.0125, 0.025, 0.05, 0.1, 0.2])
    paths = farm(_unbiased_job, [(RANGE_TWO, scale, seed_for(10, 100_000 + r), float(ts[-1]), f)
                                 for r in range(replicates)], workers)
    tail, msq = scaling.increment_tail(paths, ts, 0.1)
    parts = []
    if np.all(tail > 0):
        fit = stats.slope_fit(np.column_stack((ts, tail)), "power")
        parts.append(f"tail exponent (eta=0.1) {fit.slope:.3f}")
    fit2 = stats.slope_fit(np.column_stack((ts, msq)), "power")
    parts.append(f"second-moment exponent {fit2.slope:.3f}")
    return ", ".join(parts)


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_all(selected=None, workers: int | None = None, echo: Callable[[str], None] | None = None
            ) -> list[CriterionResult]:
    out = []
    for num in sorted(selected or CRITERIA):
        fn = CRITERIA[num]
        kwargs = {"workers": workers} if num in (6, 9, 10) else {}
        res = fn(**kwargs)
        out.append(res)
        if echo:
            echo(res.line())
    return out
