"""Graphical representation on a torus and the branching-coalescing dual.

Arrows ``i -> j`` arrive at rate a(j - i) per ordered pair. A voter arrow
(probability 1 - eps) copies x(i) onto j; a branching arrow (probability eps)
only transmits a 1. Tracing ancestries backward, a walker at ``j`` jumps to
``i`` across a voter arrow and splits into ``{i, j}`` across a branching one.
The additive duality

    max_{j in A} x_t(j) = max_{i in dual(A)} x_0(i)

then holds pathwise on every realization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import Kernel

VOTER = 0
BRANCHING = 1


class TorusTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class GraphicalRep:
    torus_size: int
    horizon: float
    eps: float
    times: np.ndarray
    source: np.ndarray
    target: np.ndarray
    kind: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.times)

    @property
    def arrows(self) -> list[tuple[float, int, int, str]]:
        names = ("voter", "branching")
        return [(float(t), int(s), int(d), names[c])
                for t, s, d, c in zip(self.times, self.source, self.target, self.kind)]


@dataclass
class DualState:
    walkers: set[int]

    def __len__(self) -> int:
        return len(self.walkers)


def _check_torus(n: int, k: Kernel) -> None:
    if n <= 2 * k.range:
        raise TorusTooSmall(f"torus size {n} must exceed 2*range = {2 * k.range}")


def sample_graphical(n: int, k: Kernel, eps: float, horizon: float, seed: int = 0,
                     rng: np.random.Generator | None = None) -> GraphicalRep:
    """Poisson arrows of total rate ``n`` on ``[0, horizon)``.

    Equivalent to independent streams per ordered pair: targets are uniform,
    the offset j - i follows the kernel, and the kind is an independent coin.
    """
    _check_torus(n, k)
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    rng = rng if rng is not None else np.random.default_rng(seed)
    m = rng.poisson(n * horizon)
    times = np.sort(rng.uniform(0.0, horizon, m))
    target = rng.integers(0, n, m)
    offs = k.offsets[rng.choice(len(k.offsets), size=m, p=k.weights)]
    kind = (rng.random(m) < eps).astype(np.int8)
    return GraphicalRep(n, float(horizon), float(eps), times, (target - offs) % n,
                        target, kind, seed)


def forward_apply(x0, g: GraphicalRep) -> np.ndarray:
    x = np.array(x0, dtype=np.int8)
    if len(x) != g.torus_size:
        raise ValueError("configuration length must equal torus size")
    for s, t, c in zip(g.source.tolist(), g.target.tolist(), g.kind.tolist()):
        if c == VOTER:
            x[t] = x[s]
        elif x[s]:
            x[t] = 1
    return x


def dual_trace(targets, g: GraphicalRep) -> DualState:
    walkers = {int(j) % g.torus_size for j in targets}
    if not walkers:
        raise ValueError("targets must be nonempty")
    src = g.source.tolist()
    tgt = g.target.tolist()
    kind = g.kind.tolist()
    for a in range(len(src) - 1, -1, -1):
        j = tgt[a]
        if j in walkers:
            if kind[a] == VOTER:
                walkers.discard(j)
            walkers.add(src[a])
    return DualState(walkers)


def dual_sizes(targets, g: GraphicalRep) -> np.ndarray:
    """Number of dual walkers after each arrow, scanning backward from the horizon."""
    walkers = {int(j) % g.torus_size for j in targets}
    out = np.empty(len(g), dtype=np.int64)
    for a in range(len(g) - 1, -1, -1):
        j = int(g.target[a])
        if j in walkers:
            if g.kind[a] == VOTER:
                walkers.discard(j)
            walkers.add(int(g.source[a]))
        out[len(g) - 1 - a] = len(walkers)
    return out


def duality_check(x0, targets, g: GraphicalRep) -> bool:
    xt = forward_apply(x0, g)
    x0 = np.asarray(x0)
    lhs = max(int(xt[j % g.torus_size]) for j in targets)
    rhs = max(int(x0[i]) for i in dual_trace(targets, g).walkers)
    return lhs == rhs


@dataclass(frozen=True)
class DualityReport:
    n: int
    horizon: float
    eps: float
    trials: int
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def duality_suite(k: Kernel, n: int = 16, eps: float = 0.3, horizon: float = 2.0,
                  trials: int = 10_000, seed: int = 0) -> DualityReport:
    """Random initial states and target sets, one fresh realization per trial."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        g = sample_graphical(n, k, eps, horizon, rng=rng)
        x0 = rng.integers(0, 2, n)
        size = int(rng.integers(1, n + 1))
        targets = rng.choice(n, size=size, replace=False)
        failures += not duality_check(x0, targets, g)
    return DualityReport(n, float(horizon), float(eps), trials, failures)


# -- forward marginal check ------------------------------------------------------

def torus_rates(x, k: Kernel, eps: float) -> np.ndarray:
    """Biased voter flip rate of every torus site."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    ones = sum(w * x[(np.arange(n) - d) % n] for d, w in k.entries)
    return np.where(x == 1, (1.0 - eps) * (1.0 - ones), ones)


def first_transitions(x0, k: Kernel, eps: float, trials: int, seed: int = 0) -> np.ndarray:
    """Sites flipped by the first effective arrow, from ``trials`` fresh realizations."""
    x0 = np.asarray(x0, dtype=np.int8)
    n = len(x0)
    _check_torus(n, k)
    if not torus_rates(x0, k, eps).any():
        raise ValueError("configuration is absorbing")
    rng = np.random.default_rng(seed)
    counts = np.zeros(n, dtype=np.int64)
    batch = 64
    done = 0
    while done < trials:
        tgt = rng.integers(0, n, (trials - done, batch))
        offs = k.offsets[rng.choice(len(k.offsets), size=tgt.shape, p=k.weights)]
        branch = rng.random(tgt.shape) < eps
        src_val = x0[(tgt - offs) % n]
        tgt_val = x0[tgt]
        effective = (src_val != tgt_val) & ~(branch & (src_val == 0))
        hit = effective.any(axis=1)
        first = effective.argmax(axis=1)
        rows = np.flatnonzero(hit)
        np.add.at(counts, tgt[rows, first[rows]], 1)
        done += len(rows)
    return counts
