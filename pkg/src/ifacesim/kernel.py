"""Jump kernels a(.) for the biased voter model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

TOL = 1e-12


class KernelError(ValueError):
    """Base class for invalid kernel specifications."""


class ZeroOffset(KernelError):
    pass


class NotNormalized(KernelError):
    pass


class NonzeroMean(KernelError):
    pass


class NotIrreducible(KernelError):
    pass


class NonpositiveWeight(KernelError):
    pass


class DuplicateOffset(KernelError):
    pass


@dataclass(frozen=True)
class Kernel:
    """Finite-support, mean-zero, irreducible probability kernel on Z.

    ``entries`` is sorted by offset. Build instances with :func:`make_kernel`
    so that the invariants are checked.
    """

    entries: tuple[tuple[int, float], ...]
    range: int
    sigma2: float
    abs_first_moment: float
    offsets: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)

    @property
    def is_nearest_neighbor(self) -> bool:
        return self.range == 1

    def weight(self, k: int) -> float:
        for off, w in self.entries:
            if off == k:
                return w
        return 0.0

    def to_spec(self) -> str:
        return ",".join(f"{k}:{w!r}" for k, w in self.entries)

    def __str__(self) -> str:
        return self.to_spec()


def make_kernel(entries: Iterable[tuple[int, float]]) -> Kernel:
    """Validate ``(offset, weight)`` pairs and derive sigma2, first moment, range."""
    items = [(int(k), float(w)) for k, w in entries]
    if not items:
        raise KernelError("kernel needs at least one entry")
    items.sort()
    offs = [k for k, _ in items]
    if len(set(offs)) != len(offs):
        raise DuplicateOffset(f"repeated offsets in {offs}")
    for k, w in items:
        if k == 0:
            raise ZeroOffset("a(0) must be 0")
        if not w > 0:
            raise NonpositiveWeight(f"weight {w} at offset {k}")
    ws = [w for _, w in items]
    total = math.fsum(ws)
    if abs(total - 1.0) > TOL:
        raise NotNormalized(f"weights sum to {total!r}")
    mean = math.fsum(k * w for k, w in items)
    if abs(mean) > TOL:
        raise NonzeroMean(f"kernel mean is {mean!r}")
    g = 0
    for k in offs:
        g = math.gcd(g, abs(k))
    if g != 1:
        raise NotIrreducible(f"gcd of offsets is {g}")
    return Kernel(
        entries=tuple(items),
        range=max(abs(k) for k in offs),
        sigma2=math.fsum(w * k * k for k, w in items),
        abs_first_moment=math.fsum(w * abs(k) for k, w in items),
        offsets=np.array(offs, dtype=np.int64),
        weights=np.array(ws, dtype=np.float64),
    )


def parse_kernel(spec: str) -> Kernel:
    """Parse ``"-2:0.2,-1:0.3,1:0.3,2:0.2"``; weights may be written as fractions."""
    entries = []
    for part in spec.replace(" ", "").split(","):
        if not part:
            continue
        try:
            k, w = part.split(":")
            entries.append((int(k), float(Fraction(w))))
        except ValueError as exc:
            raise KernelError(f"bad kernel entry {part!r}") from exc
    return make_kernel(entries)


def symmetric_kernel(half: dict[int, float]) -> Kernel:
    """Kernel with ``a(k) = a(-k) = half[k]`` for positive ``k``."""
    return make_kernel([(s * k, w) for k, w in half.items() for s in (-1, 1)])


NEAREST_NEIGHBOR = make_kernel([(-1, 0.5), (1, 0.5)])
# Range-2 kernel used throughout the acceptance checks; sigma2 = 2.2.
RANGE_TWO = make_kernel([(-2, 0.2), (-1, 0.3), (1, 0.3), (2, 0.2)])


def leave_rate(k: Kernel, eps: float) -> float:
    """Rate at which the process modulo translations leaves the Heaviside class."""
    left = math.fsum((abs(off) - 1) * w for off, w in k.entries if off < -1)
    right = math.fsum((off - 1) * w for off, w in k.entries if off > 1)
    return left + (1.0 - eps) * right
