"""Renewal decomposition at Heaviside visits (modulo translation).

An excursion starts when the process enters the Heaviside class, holds there
for an exponential time, wanders off and ends at the next return. Its duration
is ``tau``, its S-clock increment ``eta`` and its initial holding time
``heaviside_hold``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _core
from .engine import EventBlock, Trajectory
from .interface import HEAVISIDE_KEY, InterfaceConfig
from .kernel import Kernel, leave_rate
from .stats import BatchMeansCI, batch_means_ci, ratio_estimate


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ExcursionStat:
    tau: float
    eta: float
    heaviside_hold: float
    complete: bool = True


@dataclass
class Excursions:
    """Result of :func:`detect_excursions`.

    ``tau0`` is the first hitting time of the Heaviside class (None if never
    hit); ``tail`` is the excursion still running at the horizon.
    """

    tau0: float | None
    eta0: float | None
    tau: np.ndarray
    eta: np.ndarray
    hold: np.ndarray
    tail: ExcursionStat | None = None

    @property
    def complete(self) -> bool:
        return len(self.tau) > 0

    def __len__(self) -> int:
        return len(self.tau)

    def stats(self) -> list[ExcursionStat]:
        return [ExcursionStat(float(a), float(b), float(c))
                for a, b, c in zip(self.tau, self.eta, self.hold)]


class ExcursionTracker:
    """Online observer splitting a run at Heaviside entrances and exits.

    With ``trapped=True`` (zero leave rate, e.g. a nearest-neighbor kernel)
    the Heaviside class is absorbing; every translation of the step then
    counts as a renewal, so each holding interval becomes one excursion.
    """

    def __init__(self, trapped: bool = False):
        self.trapped = trapped

    def start(self, x0: InterfaceConfig, ws0: float) -> None:
        self.in_hv = x0.is_heaviside
        self.phase = "hold" if self.in_hv else "lead"
        self.tau0 = 0.0 if self.in_hv else None
        self.eta0 = 0.0 if self.in_hv else None
        self.t_start = 0.0
        self.s_start = 0.0
        self.t_exit = 0.0
        self._tau: list[float] = []
        self._eta: list[float] = []
        self._hold: list[float] = []
        self.tail: ExcursionStat | None = None

    def update(self, block: EventBlock) -> None:
        hv = block.twoL == block.twoR
        prev = np.empty_like(hv)
        prev[0] = self.in_hv
        prev[1:] = hv[:-1]
        marks = hv != prev
        if self.trapped:
            marks |= hv & prev
        for e in np.flatnonzero(marks):
            t = float(block.t[e])
            s = float(block.s_clock[e])
            if hv[e]:
                if self.phase == "hold":
                    self.t_exit = t
                if self.phase == "lead":
                    self.tau0, self.eta0 = t, s
                else:
                    self._tau.append(t - self.t_start)
                    self._eta.append(s - self.s_start)
                    self._hold.append(self.t_exit - self.t_start)
                self.t_start, self.s_start = t, s
                self.phase = "hold"
            elif self.phase == "hold":
                self.t_exit = t
                self.phase = "away"
        self.in_hv = bool(hv[-1])

    def finish(self, t_end: float, s_end: float, x_end: InterfaceConfig) -> None:
        if self.phase != "lead":
            exit_t = self.t_exit if self.phase == "away" else t_end
            self.tail = ExcursionStat(t_end - self.t_start, s_end - self.s_start,
                                      exit_t - self.t_start, complete=False)

    def result(self) -> Excursions:
        return Excursions(self.tau0, self.eta0, np.array(self._tau), np.array(self._eta),
                          np.array(self._hold), self.tail)


def detect_excursions(tr: Trajectory, k: Kernel | None = None) -> Excursions:
    """Excursion decomposition of a recorded trajectory."""
    if not tr.recorded:
        raise ValueError("trajectory events were not recorded; attach an ExcursionTracker")
    k = tr.kernel if k is None else k
    tracker = ExcursionTracker(trapped=leave_rate(k, tr.eps) == 0.0)
    tracker.start(tr.initial_config, tr.ws0)
    if len(tr.events):
        tracker.update(tr.events)
    tracker.finish(tr.horizon, tr.s_clock_final, tr.final_config)
    return tracker.result()


def _arrays(stats) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(stats, Excursions):
        return stats.tau, stats.eta
    tau = np.array([s.tau for s in stats], dtype=float)
    eta = np.array([s.eta for s in stats], dtype=float)
    return tau, eta


def renewal_ratio(stats) -> tuple[float, float]:
    """(sum eta) / (sum tau) with a delta-method standard error."""
    tau, eta = _arrays(stats)
    if len(tau) < 2:
        raise InsufficientData(f"need >= 2 excursions, got {len(tau)}")
    return ratio_estimate(eta, tau)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function, 0 before the first knot."""

    knots: np.ndarray
    values: np.ndarray

    def __call__(self, u):
        idx = np.searchsorted(self.knots, u, side="right")
        vals = np.concatenate(([0.0], self.values))
        return vals[idx]


def partial_sum_paths(stats, eps: float) -> tuple[StepFunction, StepFunction]:
    """Diffusively scaled partial sums of excursion durations and weights."""
    tau, eta = _arrays(stats)
    e2 = eps * eps
    knots = e2 * np.arange(1, len(tau) + 1)
    return (StepFunction(knots, e2 * np.cumsum(tau)),
            StepFunction(knots, e2 * np.cumsum(eta)))


def occupation_measure(tr: Trajectory, after: float = 0.0) -> dict[bytes, float]:
    """Fraction of ``[after, horizon]`` spent in each translation class."""
    if not after < tr.horizon:
        raise ValueError("need after < horizon")
    ev = tr.events
    times = np.concatenate(([0.0], ev.t, [tr.horizon]))
    dur = np.diff(np.clip(times, after, tr.horizon))
    x = tr.initial_config.copy()
    lo_site = min(x.window_start, int(ev.site.min()) if len(ev) else x.window_start)
    hi_site = max(x.window_end, int(ev.site.max()) if len(ev) else x.window_end)
    pad = x.kmax + 2
    size = 1 << max(6, (hi_site - lo_site + 2 * pad).bit_length())
    x.relayout(pad, size=size, base=lo_site - pad)
    hv = np.concatenate(([x.is_heaviside], ev.twoL == ev.twoR))
    lo = (np.concatenate(([x.twoL], ev.twoL)) + 1) // 2 - x.base
    hi = (np.concatenate(([x.twoR], ev.twoR)) - 1) // 2 - x.base
    occ: dict[bytes, float] = {}
    hv_time = float(dur[hv].sum())
    if hv_time:
        occ[HEAVISIDE_KEY] = hv_time
    bits, st, I = x.bits, x.st, x.I
    sites = ev.site
    for n in range(len(dur)):
        if n:
            _core.flip_inplace(bits, st, I, int(sites[n - 1]))
        if dur[n] > 0 and not hv[n]:
            key = bits[lo[n]:hi[n] + 1].tobytes()
            occ[key] = occ.get(key, 0.0) + float(dur[n])
    total = tr.horizon - after
    return {key: v / total for key, v in sorted(occ.items(), key=lambda kv: -kv[1])}


def heaviside_occupation(tr: Trajectory, after: float = 0.0) -> float:
    """Time fraction at Heaviside states in ``[after, horizon]`` (no replay needed)."""
    ev = tr.events
    times = np.concatenate(([0.0], ev.t, [tr.horizon]))
    dur = np.diff(np.clip(times, after, tr.horizon))
    hv = np.concatenate(([tr.initial_config.is_heaviside], ev.twoL == ev.twoR))
    return float(dur[hv].sum() / (tr.horizon - after))


def _ws_series(tr: Trajectory, burn_in: float) -> tuple[np.ndarray, np.ndarray]:
    times = np.concatenate(([0.0], tr.events.t, [tr.horizon]))
    ws = np.concatenate(([tr.ws0], tr.events.ws))
    dur = np.diff(np.clip(times, burn_in, tr.horizon))
    keep = dur > 0
    return ws[keep], dur[keep]


def equilibrium_ci(tr: Trajectory, burn_in: float, batches: int = 32) -> BatchMeansCI:
    """Batch-means CI for the time average of sum_k a(k) I_k after ``burn_in``."""
    if not burn_in < tr.horizon:
        raise ValueError("need burn_in < horizon")
    ws, dur = _ws_series(tr, burn_in)
    return batch_means_ci(ws, batches, durations=dur)


def equilibrium_average(tr: Trajectory, k: Kernel | None = None, burn_in: float = 0.0,
                        batches: int = 32) -> tuple[float, float]:
    """(time average, batch-means standard error) of the weighted boundary sum.

    The point estimate is the exact S-clock increment divided by elapsed time.
    """
    if k is not None and k != tr.kernel:
        raise ValueError("kernel does not match the trajectory")
    ci = equilibrium_ci(tr, burn_in, batches)
    ws, dur = _ws_series(tr, burn_in)
    return float(np.sum(ws * dur) / np.sum(dur)), ci.stderr
