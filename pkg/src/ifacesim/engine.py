"""Exact event-driven simulation of the biased voter model on interface states.

The main loop is the direct Gillespie method: an exponential clock at the total
flip rate and a rate-proportional choice of the flipping site through a
Fenwick (prefix-sum) tree. Alongside model time we integrate the S-clock
``S_t = int_0^t sum_k a(k) I_k(X_s) ds``, in which the midpoint becomes a
constant-rate drifted walk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import _core
from .interface import InterfaceConfig, apply_flip, inversions
from .kernel import Kernel

CHUNK = 1 << 16
RNG_BLOCK = 1 << 16
DEFAULT_EVENT_BUDGET = 10**8

_MASK64 = (1 << 64) - 1


class RateUnderflow(RuntimeError):
    pass


class EventBudgetExceeded(RuntimeError):
    pass


class DominationViolation(AssertionError):
    pass


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, replicate: int) -> int:
    """Seed of replicate ``r``: SplitMix64 applied to the master seed, then mixed with r."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ (replicate & _MASK64))


@dataclass
class EventBlock:
    """A contiguous run of events, as seen by observers.

    ``ws`` is the weighted boundary sum sum_k a(k) I_k *after* each event.
    ``new_value`` is 1 for a 0 -> 1 flip and 0 for a 1 -> 0 flip.
    """

    t: np.ndarray
    s_clock: np.ndarray
    ws: np.ndarray
    site: np.ndarray
    new_value: np.ndarray
    twoM: np.ndarray
    twoL: np.ndarray
    twoR: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_raw(cls, ev_f: np.ndarray, ev_i: np.ndarray, n: int, copy: bool) -> "EventBlock":
        f = ev_f[:n].copy() if copy else ev_f[:n]
        i = ev_i[:n].copy() if copy else ev_i[:n]
        return cls(f[:, 0], f[:, 1], f[:, 2], i[:, 0], i[:, 1], i[:, 2], i[:, 3], i[:, 4])

    @classmethod
    def concat(cls, blocks: Sequence["EventBlock"]) -> "EventBlock":
        names = ("t", "s_clock", "ws", "site", "new_value", "twoM", "twoL", "twoR")
        if not blocks:
            empty = [np.zeros(0)] * 3 + [np.zeros(0, dtype=np.int64)] * 5
            return cls(*empty)
        return cls(*(np.concatenate([getattr(b, nm) for b in blocks]) for nm in names))


class Observer(Protocol):
    def start(self, x0: InterfaceConfig, ws0: float) -> None: ...

    def update(self, block: EventBlock) -> None: ...

    def finish(self, t_end: float, s_end: float, x_end: InterfaceConfig) -> None: ...


@dataclass
class Snapshot:
    t: float
    twoM: int
    twoL: int
    twoR: int
    config: str


@dataclass
class Trajectory:
    """A sample path; event arrays are empty when the run was not recorded."""

    kernel: Kernel
    eps: float
    horizon: float
    rng_seed: int
    initial_config: InterfaceConfig
    final_config: InterfaceConfig
    events: EventBlock
    ws0: float
    s_clock_final: float
    n_events: int
    snapshots: list[Snapshot] = field(default_factory=list)
    domination_checks: int = 0

    @property
    def t(self) -> np.ndarray:
        return self.events.t

    @property
    def s_clock(self) -> np.ndarray:
        return self.events.s_clock

    @property
    def recorded(self) -> bool:
        return len(self.events) == self.n_events

    def ws_before(self) -> np.ndarray:
        """Weighted boundary sum in force during the interval ending at each event."""
        return np.concatenate(([self.ws0], self.events.ws[:-1]))

    def direction(self) -> np.ndarray:
        return np.where(self.events.new_value == 1, "01", "10")


class RateTable:
    """Per-site flip rates of ``x`` under a prefix-sum index.

    Holds a reference to ``x``; rebuilt automatically when the buffer of ``x``
    is re-centred or grown.
    """

    def __init__(self, x: InterfaceConfig, k: Kernel, eps: float):
        self.x = x
        self.kernel = k
        self.eps = float(eps)
        x.ensure_kmax(k.range)
        x.ensure_layout(k.range + 1)
        self.rebuild()

    def rebuild(self) -> None:
        x, k = self.x, self.kernel
        n = len(x.bits)
        self.rates = np.zeros(n)
        self.tree = np.zeros(n + 1)
        _core.fill_rates(x.bits, x.base, k.offsets, k.weights, self.eps, self.rates)
        _core.fw_build(self.rates, self.tree)
        self._layout = (x.base, n)

    @property
    def total(self) -> float:
        return float(self.tree[-1])

    def sample(self, target: float) -> int:
        """Site whose cumulative-rate interval contains ``target`` in [0, total)."""
        return self.x.base + int(_core.fw_find(self.tree, self.rates, target))

    def update(self, site: int) -> None:
        x = self.x
        if self._layout != (x.base, len(x.bits)):
            self.rebuild()
            return
        k = self.kernel
        _core.refresh_rates_near(x.bits, x.base, self.rates, self.tree,
                                 k.offsets, k.weights, self.eps, site)

    def rate(self, site: int) -> float:
        r = site - self.x.base
        return float(self.rates[r]) if 0 <= r < len(self.rates) else 0.0


@dataclass
class Event:
    site: int
    new_value: int
    twoM_after: int


def step(x: InterfaceConfig, rt: RateTable, k: Kernel, eps: float,
         rng: np.random.Generator) -> tuple[float, Event]:
    """Advance ``x`` by one flip; returns the holding time and the event."""
    total = rt.total
    if not total > 0.0:
        raise RateUnderflow(f"total rate {total}")
    dt = rng.standard_exponential() / total
    site = rt.sample(rng.random() * total)
    new = 1 - x.value(site)
    apply_flip(x, site, new, k)
    rt.update(site)
    return dt, Event(site, new, x.twoM)


class _Randoms:
    def __init__(self, seed: int, per_event: int):
        self.rng = np.random.default_rng(seed)
        self.per_event = per_event
        self.cur = np.zeros(2, dtype=np.int64)
        self.refill()

    def refill(self) -> None:
        self.exps = self.rng.standard_exponential(RNG_BLOCK)
        self.unis = self.rng.random(RNG_BLOCK * self.per_event)
        self.cur[0] = 0


def run(x0: InterfaceConfig, k: Kernel, eps: float, horizon: float,
        observers: Iterable[Observer] = (), seed: int = 0, *,
        record: bool = True, snapshot_times: Sequence[float] = (),
        max_events: int | None = None,
        event_budget: int = DEFAULT_EVENT_BUDGET) -> Trajectory:
    """Simulate from ``x0`` on ``[0, horizon)``.

    Events strictly before ``horizon`` are applied. With ``max_events`` the run
    ends at that event instead, and the trajectory horizon becomes its time.
    Snapshots are taken at ``snapshot_times`` (state just after the last
    event at or before each time).
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    observers = list(observers)
    x = x0.copy()
    rt = RateTable(x, k, eps)
    pad = k.range + 1
    rnd = _Randoms(seed, 1)
    clock = np.zeros(3)
    ev_f = np.empty((CHUNK, 3))
    ev_i = np.empty((CHUNK, 5), dtype=np.int64)
    ws0 = x.weighted_sum(k)
    start = x.copy()
    for obs in observers:
        obs.start(start, ws0)
    stops = sorted(t for t in snapshot_times if 0 <= t <= horizon)
    snaps: list[Snapshot] = []
    blocks: list[EventBlock] = []
    total_n = 0
    si = 0
    t_end = float(horizon)
    while True:
        t_stop = stops[si] if si < len(stops) else float(horizon)
        limit = CHUNK if max_events is None else min(CHUNK, max_events - total_n)
        if limit <= 0:
            t_end = float(clock[0])
            break
        n, status = _core.gillespie_chunk(
            x.bits, x.st, x.I, rt.rates, rt.tree, k.offsets, k.weights, float(eps),
            rnd.exps, rnd.unis, rnd.cur, clock, float(t_stop), limit, ev_f, ev_i)
        if n:
            block = EventBlock.from_raw(ev_f, ev_i, n, copy=record)
            if record:
                blocks.append(block)
            for obs in observers:
                obs.update(block)
            total_n += n
            if total_n > event_budget:
                raise EventBudgetExceeded(f"{total_n} events before t={clock[0]}")
        if status == _core.STOP:
            if si < len(stops):
                snaps.append(Snapshot(stops[si], x.twoM, x.twoL, x.twoR, x.serialize()))
                si += 1
                continue
            break
        if status == _core.RNG:
            rnd.refill()
        elif status == _core.RELAYOUT:
            x.relayout(pad)
            rt.rebuild()
        elif status == _core.UNDERFLOW:
            raise RateUnderflow(f"total rate {rt.total} at t={clock[2]}")
    while si < len(stops):
        snaps.append(Snapshot(stops[si], x.twoM, x.twoL, x.twoR, x.serialize()))
        si += 1
    x.h = inversions(x)
    ws_end = x.weighted_sum(k)
    s_end = float(clock[1] + (t_end - clock[0]) * ws_end)
    for obs in observers:
        obs.finish(t_end, s_end, x)
    return Trajectory(
        kernel=k, eps=float(eps), horizon=t_end, rng_seed=seed,
        initial_config=start, final_config=x,
        events=EventBlock.concat(blocks), ws0=ws0, s_clock_final=s_end,
        n_events=total_n, snapshots=snaps,
    )


def _joint_relayout(a: InterfaceConfig, b: InterfaceConfig, pad: int) -> None:
    lo = min(a.window_start, b.window_start)
    hi = max(a.window_end, b.window_end)
    need = (hi - lo + 1) + 2 * (pad + 32)
    size = 1 << max(6, (need - 1).bit_length())
    base = (lo + hi + 1) // 2 - size // 2
    a.relayout(pad, size, base)
    b.relayout(pad, size, base)


def coupled_run(x0: InterfaceConfig, k: Kernel, eps: float, horizon: float,
                seed: int = 0, *, record: bool = True,
                check: bool = True) -> tuple[Trajectory, Trajectory]:
    """Biased and unbiased processes driven by one arrow realization.

    Returns ``(X^eps, X^0)``. Domination ``X^eps >= X^0`` is checked sitewise
    after every arrow; with ``check`` a violation raises
    :class:`DominationViolation`.
    """
    xe = x0.copy()
    x0c = x0.copy()
    for x in (xe, x0c):
        x.ensure_kmax(k.range)
    pad = k.range + 1
    _joint_relayout(xe, x0c, pad)
    cumw = np.cumsum(k.weights)
    rnd = _Randoms(seed, 3)
    clock = np.zeros(5)
    counters = np.zeros(4, dtype=np.int64)
    bufs = [(np.empty((CHUNK, 3)), np.empty((CHUNK, 5), dtype=np.int64)) for _ in range(2)]
    ws0 = xe.weighted_sum(k)
    start = x0.copy()
    blocks = ([], [])
    totals = [0, 0]
    checks = 0
    while True:
        counters[:2] = 0
        status = _core.coupled_chunk(
            xe.bits, xe.st, xe.I, x0c.bits, x0c.st, x0c.I, k.offsets, cumw, k.weights,
            float(eps), rnd.exps, rnd.unis, rnd.cur, clock, float(horizon), CHUNK,
            bufs[0][0], bufs[0][1], bufs[1][0], bufs[1][1], counters)
        for c in range(2):
            n = int(counters[c])
            if n and record:
                blocks[c].append(EventBlock.from_raw(bufs[c][0], bufs[c][1], n, copy=True))
            totals[c] += n
        checks = int(counters[2])
        if check and counters[3]:
            raise DominationViolation(f"{counters[3]} violations by t={clock[0]}")
        if status == _core.STOP:
            break
        if status == _core.RNG:
            rnd.refill()
        elif status == _core.RELAYOUT:
            _joint_relayout(xe, x0c, pad)
    out = []
    for c, (x, tl, sl) in enumerate(((xe, clock[1], clock[2]), (x0c, clock[3], clock[4]))):
        x.h = inversions(x)
        s_end = float(sl + (horizon - tl) * x.weighted_sum(k))
        out.append(Trajectory(
            kernel=k, eps=float(eps) if c == 0 else 0.0, horizon=float(horizon),
            rng_seed=seed, initial_config=start, final_config=x,
            events=EventBlock.concat(blocks[c]), ws0=ws0, s_clock_final=s_end,
            n_events=totals[c], domination_checks=checks,
        ))
    return out[0], out[1]


def midpoint_in_s_clock(tr: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint path indexed by the S-clock, starting with the initial state."""
    s = np.concatenate(([0.0], tr.events.s_clock))
    m = np.concatenate(([tr.initial_config.twoM], tr.events.twoM))
    return s, m
