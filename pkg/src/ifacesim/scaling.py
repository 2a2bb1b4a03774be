"""Diffusive rescaling: midpoint and boundary paths, the empirical measure of 1's,
reference drifted Brownian motion and modulus-of-continuity statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import engine
from .engine import Trajectory
from .interface import InterfaceConfig, heaviside, parse_config
from .kernel import Kernel

DEFAULT_GRID = (0.25, 0.5, 1.0, 2.0)
DEFAULT_EPS_GRID = (0.2, 0.1, 0.05)


class HorizonTooShort(ValueError):
    pass


@dataclass(frozen=True)
class RescaledPath:
    eps: float
    times: np.ndarray
    values: np.ndarray
    name: str = ""


def _state_index(tr: Trajectory, micro_times: np.ndarray) -> np.ndarray:
    """Index into ``[initial, after event 0, ...]`` in force at each time (right-continuous)."""
    return np.searchsorted(tr.events.t, micro_times, side="right")


def rescaled_paths(tr: Trajectory, eps: float, grid: Sequence[float]
                   ) -> tuple[RescaledPath, RescaledPath, RescaledPath]:
    """(eps*M, eps*L, eps*R) read at microscopic times eps^-2 t for t in ``grid``."""
    if eps <= 0:
        raise ValueError("eps must be positive for rescaling")
    times = np.asarray(grid, dtype=float)
    micro = times / (eps * eps)
    if len(times) and micro.max() > tr.horizon * (1 + 1e-12):
        raise HorizonTooShort(f"horizon {tr.horizon} < {micro.max()}")
    x0 = tr.initial_config
    if tr.recorded:
        idx = _state_index(tr, micro)
        ev = tr.events
        cols = [np.concatenate(([getattr(x0, nm)], getattr(ev, nm)))[idx]
                for nm in ("twoM", "twoL", "twoR")]
    else:
        by_t = {s.t: s for s in tr.snapshots}
        try:
            snaps = [by_t[m] for m in micro]
        except KeyError as err:
            raise ValueError("unrecorded trajectory lacks snapshots on the grid") from err
        cols = [np.array([getattr(s, nm) for s in snaps]) for nm in ("twoM", "twoL", "twoR")]
    return tuple(RescaledPath(float(eps), times, eps * c / 2.0, nm)
                 for c, nm in zip(cols, ("M", "L", "R")))


@dataclass(frozen=True)
class MeasureSnapshot:
    """Rescaled empirical measure of 1's: atoms of mass eps plus a half-line tail."""

    eps: float
    t: float
    one_sites_scaled: np.ndarray
    tail_start: float


def measure_snapshot(x: InterfaceConfig, eps: float, t: float = 0.0) -> MeasureSnapshot:
    ones = x.window_start + np.flatnonzero(x.window_bits())
    return MeasureSnapshot(float(eps), float(t), eps * ones.astype(float),
                           eps * (x.window_end + 1))


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported test function from a small built-in family.

    ``hat``: piecewise linear tent, peak 1 at the midpoint.
    ``bump``: exp(1 - 1/(1 - u^2)) in the rescaled variable u in (-1, 1).
    ``polynomial``: (1 - u^2)^p with integer ``p >= 3`` (C^2 at the ends).
    """

    kind: str
    lo: float
    hi: float
    power: int = 3
    __test__ = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("support must satisfy lo < hi")
        if self.kind not in ("hat", "bump", "polynomial"):
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if self.kind == "polynomial" and self.power < 3:
            raise ValueError("polynomial power must be >= 3 for a C^2 function")

    @property
    def support(self) -> tuple[float, float]:
        return self.lo, self.hi

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mid = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        u = (x - mid) / half
        inside = np.abs(u) < 1.0
        out = np.zeros_like(u)
        ui = u[inside]
        if self.kind == "hat":
            out[inside] = 1.0 - np.abs(ui)
        elif self.kind == "bump":
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
        else:
            out[inside] = (1.0 - ui * ui) ** self.power
        return out

    @property
    def sup_norm(self) -> float:
        return 1.0

    def to_spec(self) -> str:
        tail = f":{self.power}" if self.kind == "polynomial" else ""
        return f"{self.kind}@{self.lo:g},{self.hi:g}{tail}"


def parse_test_function(text: str) -> TestFunction:
    """``hat@-1,1``, ``bump@-1,1`` or ``polynomial@-1,1:4``."""
    try:
        kind, rest = text.strip().split("@")
        power = 3
        if ":" in rest:
            rest, p = rest.split(":")
            power = int(p)
        lo, hi = (float(v) for v in rest.split(","))
    except ValueError as err:
        raise ValueError(f"bad test function spec {text!r}") from err
    return TestFunction(kind, lo, hi, power)


def pair_integral(ms: MeasureSnapshot, f: TestFunction) -> float:
    """Integral of ``f`` against the rescaled measure of 1's (a finite sum)."""
    eps = ms.eps
    atoms = ms.one_sites_scaled
    atoms = atoms[(atoms > f.lo) & (atoms < f.hi)]
    total = eps * float(np.sum(f(atoms)))
    i0 = round(ms.tail_start / eps)
    i_lo = max(i0, math.floor(f.lo / eps))
    i_hi = math.ceil(f.hi / eps)
    if i_hi >= i_lo:
        total += eps * float(np.sum(f(eps * np.arange(i_lo, i_hi + 1))))
    return total


@dataclass(frozen=True)
class BrownianReference:
    """B_t = W(sigma2 t) - sigma2 t / 2."""

    sigma2: float
    t: float

    @property
    def mean(self) -> float:
        return -0.5 * self.sigma2 * self.t

    @property
    def var(self) -> float:
        return self.sigma2 * self.t

    def __iter__(self):
        return iter((self.mean, self.var))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, math.sqrt(self.var), size=n)

    def sample_path(self, rng: np.random.Generator, times: Sequence[float], n: int) -> np.ndarray:
        """``n`` paths at the given increasing times (shape ``(n, len(times))``)."""
        ts = np.asarray(times, dtype=float)
        dt = np.diff(np.concatenate(([0.0], ts)))
        if np.any(dt < 0):
            raise ValueError("times must be nondecreasing and >= 0")
        inc = rng.normal(-0.5 * self.sigma2 * dt, np.sqrt(self.sigma2 * dt), size=(n, len(ts)))
        return np.cumsum(inc, axis=1)


def brownian_reference(sigma2: float, t: float) -> BrownianReference:
    if t < 0:
        raise ValueError("t must be >= 0")
    return BrownianReference(float(sigma2), float(t))


def limit_pairing_sample(sigma2: float, t: float, f: TestFunction, rng: np.random.Generator,
                         n: int, grid_points: int = 4001) -> np.ndarray:
    """Monte Carlo draws of the limit pairing, the integral of f over [B_t, infinity)."""
    xs = np.linspace(f.lo, f.hi, grid_points)
    fx = f(xs)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (fx[1:] + fx[:-1]) * np.diff(xs))))
    tail = cum[-1] - np.interp(brownian_reference(sigma2, t).sample(rng, n), xs, cum)
    return tail


# -- pairing paths and the modulus of continuity ---------------------------------

@dataclass(frozen=True)
class PairingPath:
    """Right-continuous path of <mu^eps_t, f> in macroscopic time."""

    times: np.ndarray
    values: np.ndarray

    def at(self, t) -> np.ndarray:
        return self.values[np.searchsorted(self.times, t, side="right") - 1]


def pairing_path(tr: Trajectory, eps: float, f: TestFunction) -> PairingPath:
    """Exact path: each flip at site i moves the pairing by +-eps f(eps i)."""
    if not tr.recorded:
        raise ValueError("pairing_path needs recorded events")
    ev = tr.events
    v0 = pair_integral(measure_snapshot(tr.initial_config, eps), f)
    jumps = eps * f(eps * ev.site.astype(float)) * np.where(ev.new_value == 1, 1.0, -1.0)
    vals = v0 + np.concatenate(([0.0], np.cumsum(jumps)))
    times = np.concatenate(([0.0], eps * eps * ev.t))
    return PairingPath(times, vals)


def _block_extremes(p: PairingPath, delta: float, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Per block [i delta, (i+1) delta) in [0, T): (max up, max down) increments."""
    nb = max(1, math.ceil(T / delta - 1e-12))
    starts = delta * np.arange(nb)
    ends = np.minimum(starts + delta, T)
    up = np.empty(nb)
    down = np.empty(nb)
    for i in range(nb):
        j0 = np.searchsorted(p.times, starts[i], side="right") - 1
        j1 = np.searchsorted(p.times, ends[i], side="left")
        seg = p.values[j0:max(j1, j0 + 1)]
        base = p.values[j0]
        up[i] = seg.max() - base
        down[i] = base - seg.min()
    return up, down


@dataclass(frozen=True)
class ModulusStats:
    delta: float
    eta: float
    T: float
    replicates: int
    p_two_sided: np.ndarray
    p_up: np.ndarray
    p_down: np.ndarray

    @property
    def block_sum(self) -> float:
        return float(self.p_two_sided.sum())

    @property
    def block_sum_up(self) -> float:
        return float(self.p_up.sum())

    @property
    def block_sum_down(self) -> float:
        return float(self.p_down.sum())


def modulus_statistics(paths, eps: float, delta: float, eta: float,
                       f: TestFunction | None = None, T: float = 1.0) -> ModulusStats:
    """Empirical probabilities that a block sup-increment of <mu^eps, f> reaches ``eta``."""
    if not 0 < delta <= T:
        raise ValueError("need 0 < delta <= T")
    if isinstance(paths, (Trajectory, PairingPath)):
        paths = [paths]
    pp = []
    for p in paths:
        if isinstance(p, Trajectory):
            if f is None:
                raise ValueError("a test function is needed to pair trajectories")
            p = pairing_path(p, eps, f)
        pp.append(p)
    ups, downs = zip(*(_block_extremes(p, delta, T) for p in pp))
    up = np.array(ups)
    down = np.array(downs)
    return ModulusStats(delta, eta, T, len(pp), np.mean(np.maximum(up, down) >= eta, axis=0),
                        np.mean(up >= eta, axis=0), np.mean(down >= eta, axis=0))


def increment_tail(paths: Sequence[PairingPath], ts: Sequence[float], eta: float
                   ) -> tuple[np.ndarray, np.ndarray]:
    """P[|xi_t - xi_0| >= eta] and E[(xi_t - xi_0)^2] at each ``t``."""
    inc = np.array([p.at(np.asarray(ts)) - p.values[0] for p in paths])
    return np.mean(np.abs(inc) >= eta, axis=0), np.mean(inc * inc, axis=0)


# -- replicate sampling -----------------------------------------------------------

@dataclass
class Marginals:
    """Rescaled (M, L, R) at each grid time for each replicate, shape (replicates, grid)."""

    eps: float
    grid: np.ndarray
    M: np.ndarray
    L: np.ndarray
    R: np.ndarray
    seeds: list[int] = field(default_factory=list)


def _marginal_job(args):
    k, eps, grid, seed, initial = args
    micro = [t / (eps * eps) for t in grid]
    tr = engine.run(parse_config(initial), k, eps, max(micro), seed=seed, record=False,
                    snapshot_times=micro)
    return tuple(p.values for p in rescaled_paths(tr, eps, grid))


def sample_marginals(k: Kernel, eps: float, grid: Sequence[float], replicates: int,
                     master_seed: int = 0, initial: InterfaceConfig | None = None,
                     workers: int | None = None) -> Marginals:
    from .parallel import farm

    x0 = initial if initial is not None else heaviside(0.5)
    grid = tuple(float(t) for t in grid)
    seeds = [engine.derive_seed(master_seed, r) for r in range(replicates)]
    jobs = [(k, float(eps), grid, s, x0.serialize()) for s in seeds]
    res = farm(_marginal_job, jobs, workers)
    M, L, R = (np.array([r[c] for r in res]) for c in range(3))
    return Marginals(float(eps), np.array(grid), M, L, R, seeds)


def width_quantile(widths, q: float = 0.95) -> float:
    return float(np.quantile(np.asarray(widths, dtype=float), q))
