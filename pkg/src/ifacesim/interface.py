"""Interface configurations: 0's on the left half-line, 1's on the right.

Half-integer positions (midpoint M, boundaries L and R) are stored doubled so
all bookkeeping is exact integer arithmetic. ``L`` sits half a site left of the
leftmost 1 and ``R`` half a site right of the rightmost 0; the explicit window
is ``[L + 1/2, R - 1/2]`` and is empty exactly for Heaviside states.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _core
from .kernel import Kernel

DEFAULT_KMAX = 4
_SLACK = 32


class NoopFlip(ValueError):
    pass


class OutOfReach(ValueError):
    pass


def _pow2(n: int) -> int:
    return 1 << max(6, (int(n) - 1).bit_length())


@dataclass(frozen=True)
class BoundaryCounts:
    """k-boundary counts for every offset in a kernel's support and its negation."""

    I: dict[int, int]
    I01: dict[int, int]
    I10: dict[int, int]
    weighted_sum: float


class InterfaceConfig:
    """A state with finitely many defects between two constant half-lines.

    Mutable; owned by one trajectory at a time. Use :func:`heaviside`,
    :func:`from_bits` or :func:`parse_config` to build one.
    """

    __slots__ = ("bits", "st", "I", "h")

    def __init__(self, bits: np.ndarray, st: np.ndarray, I: np.ndarray, h: int):
        self.bits = bits
        self.st = st
        self.I = I
        self.h = h

    # -- scalar views -------------------------------------------------------
    @property
    def base(self) -> int:
        return int(self.st[0])

    @property
    def twoM(self) -> int:
        return int(self.st[1])

    @property
    def twoL(self) -> int:
        return int(self.st[2])

    @property
    def twoR(self) -> int:
        return int(self.st[3])

    @property
    def M(self) -> float:
        return self.twoM / 2

    @property
    def L(self) -> float:
        return self.twoL / 2

    @property
    def R(self) -> float:
        return self.twoR / 2

    @property
    def width(self) -> int:
        return (self.twoR - self.twoL) // 2

    @property
    def window_start(self) -> int:
        return (self.twoL + 1) // 2

    @property
    def window_end(self) -> int:
        return (self.twoR - 1) // 2

    @property
    def kmax(self) -> int:
        return len(self.I) - 1

    @property
    def is_heaviside(self) -> bool:
        return self.twoL == self.twoR

    def value(self, i: int) -> int:
        r = i - self.base
        if r < 0:
            return 0
        if r >= len(self.bits):
            return 1
        return int(self.bits[r])

    def window_bits(self) -> np.ndarray:
        lo = self.window_start - self.base
        return self.bits[lo:self.window_end - self.base + 1].copy()

    def values(self, lo: int, hi: int) -> np.ndarray:
        """Site values on ``[lo, hi]`` with the half-line conventions applied."""
        idx = np.arange(lo, hi + 1) - self.base
        out = np.where(idx < 0, 0, 1).astype(np.int8)
        inside = (idx >= 0) & (idx < len(self.bits))
        out[inside] = self.bits[idx[inside]]
        return out

    # -- layout ---------------------------------------------------------------
    def copy(self) -> "InterfaceConfig":
        return InterfaceConfig(self.bits.copy(), self.st.copy(), self.I.copy(), self.h)

    def relayout(self, pad: int, size: int | None = None, base: int | None = None) -> None:
        """Re-center the buffer so that every site within ``pad`` of the window is stored."""
        lo, hi = self.window_start, self.window_end
        need = (hi - lo + 1) + 2 * (pad + _SLACK)
        n = len(self.bits)
        if size is None:
            size = n if need <= n <= 8 * need else _pow2(need)
        if base is None:
            base = (lo + hi + 1) // 2 - size // 2
        self.bits = self.values(base, base + size - 1)
        self.st[0] = base

    def needs_relayout(self, pad: int) -> bool:
        return (self.window_start - pad < self.base
                or self.window_end + pad > self.base + len(self.bits) - 1)

    def ensure_layout(self, pad: int) -> bool:
        if self.needs_relayout(pad):
            self.relayout(pad)
            return True
        return False

    def ensure_kmax(self, kmax: int) -> None:
        if kmax > self.kmax:
            self.ensure_layout(kmax + 1)
            self.I = _core.count_boundaries(self.bits, self.base, self.window_start,
                                            self.window_end, kmax)

    # -- misc -----------------------------------------------------------------
    def translate(self, d: int) -> "InterfaceConfig":
        y = self.copy()
        y.st[:] = self.st + np.array([d, 2 * d, 2 * d, 2 * d])
        return y

    def serialize(self) -> str:
        return f"{self.window_start};" + "".join(map(str, self.window_bits().tolist()))

    def counts(self, k: Kernel) -> BoundaryCounts:
        """Incrementally maintained counts, viewed through kernel ``k``."""
        self.ensure_kmax(k.range)
        return _counts_from(k, {kk: int(self.I[kk]) for kk in range(1, k.range + 1)})

    def weighted_sum(self, k: Kernel) -> float:
        self.ensure_kmax(k.range)
        return _core.weighted_sum(self.I, k.offsets, k.weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InterfaceConfig):
            return NotImplemented
        m = min(self.kmax, other.kmax)
        return (self.twoM == other.twoM and self.twoL == other.twoL
                and self.twoR == other.twoR and self.h == other.h
                and np.array_equal(self.window_bits(), other.window_bits())
                and np.array_equal(self.I[:m + 1], other.I[:m + 1]))

    def __repr__(self) -> str:
        return (f"InterfaceConfig({self.serialize()!r}, M={self.M}, L={self.L}, "
                f"R={self.R}, h={self.h})")


def _counts_from(k: Kernel, absI: dict[int, int]) -> BoundaryCounts:
    I, I01, I10 = {}, {}, {}
    for off, _ in k.entries:
        for kk in (off, -off):
            n = absI[abs(kk)]
            I[kk] = n
            # for k > 0 there is one more 01 pair than 10 pair; k < 0 mirrors it
            I01[kk] = (n + kk) // 2
            I10[kk] = (n - kk) // 2
    ws = 0.0
    for off, w in k.entries:
        ws += w * absI[abs(off)]
    return BoundaryCounts(I=I, I01=I01, I10=I10, weighted_sum=ws)


def _build(lm: int, rm0: int, window: np.ndarray, kmax: int) -> InterfaceConfig:
    """Config with leftmost 1 at ``lm``, rightmost 0 at ``rm0`` and ``window`` on [lm, rm0]."""
    width = max(0, rm0 - lm + 1)
    size = _pow2(width + 2 * (kmax + 1 + _SLACK))
    base = (lm + rm0 + 1) // 2 - size // 2
    bits = np.zeros(size, dtype=np.int8)
    bits[rm0 + 1 - base:] = 1
    if width:
        bits[lm - base:rm0 + 1 - base] = window
    zeros = width - int(window.sum()) if width else 0
    twoL = 2 * lm - 1
    twoR = 2 * rm0 + 1
    st = np.array([base, twoL + 2 * zeros, twoL, twoR], dtype=np.int64)
    I = _core.count_boundaries(bits, base, lm, rm0, kmax)
    x = InterfaceConfig(bits, st, I, 0)
    x.h = inversions(x)
    return x


def heaviside(j: float | Fraction = 0.5, kmax: int = DEFAULT_KMAX) -> InterfaceConfig:
    """The state with 0's on sites < j and 1's on sites > j (j a half-integer)."""
    two = Fraction(j) * 2
    if two.denominator != 1 or two.numerator % 2 == 0:
        raise ValueError(f"{j} is not a half-integer")
    lm = (two.numerator + 1) // 2
    return _build(lm, lm - 1, np.zeros(0, dtype=np.int8), kmax)


def from_bits(window_start: int, bits: Sequence[int] | str,
              kmax: int = DEFAULT_KMAX) -> InterfaceConfig:
    """State equal to ``bits`` from ``window_start`` on, 0 to the left, 1 to the right."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits.replace(",", "").strip()]
    arr = np.asarray(bits, dtype=np.int8)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    ones = np.flatnonzero(arr == 1)
    zeros = np.flatnonzero(arr == 0)
    lm = window_start + (int(ones[0]) if ones.size else len(arr))
    rm0 = window_start + (int(zeros[-1]) if zeros.size else -1)
    if lm > rm0:
        return _build(lm, lm - 1, np.zeros(0, dtype=np.int8), kmax)
    return _build(lm, rm0, arr[lm - window_start:rm0 - window_start + 1], kmax)


def parse_config(text: str, kmax: int = DEFAULT_KMAX) -> InterfaceConfig:
    """Inverse of :meth:`InterfaceConfig.serialize` (``"window_start;bits"``)."""
    start, _, bits = text.strip().partition(";")
    return from_bits(int(start), bits, kmax)


def parse_initial(text: str, kmax: int = DEFAULT_KMAX) -> InterfaceConfig:
    """``heaviside@<half-integer>`` or ``bits@<start>:<01-string>``."""
    kind, _, arg = text.strip().partition("@")
    if kind == "heaviside":
        return heaviside(Fraction(arg or "1/2"), kmax)
    if kind == "bits":
        start, _, bits = arg.partition(":")
        return from_bits(int(start), bits, kmax)
    raise ValueError(f"unknown initial state {text!r}")


def boundary_counts(x: InterfaceConfig, k: Kernel) -> BoundaryCounts:
    """k-boundary counts by direct scan of the configuration."""
    lo = x.window_start - k.range
    hi = x.window_end + k.range
    vals = x.values(lo - k.range, hi + k.range)
    absI = {}
    for kk in range(1, k.range + 1):
        a = vals[:-kk] if kk else vals
        b = vals[kk:]
        absI[kk] = int(np.count_nonzero(a != b))
    return _counts_from(k, absI)


def inversions(x: InterfaceConfig) -> int:
    """Number of pairs i < j with x(i) = 1 and x(j) = 0."""
    w = x.window_bits().astype(np.int64)
    if w.size == 0:
        return 0
    zeros_right = np.cumsum((1 - w)[::-1])[::-1]
    return int(np.sum(w * zeros_right))


def apply_flip(x: InterfaceConfig, site: int, new_value: int, k: Kernel) -> InterfaceConfig:
    """Flip ``site`` to ``new_value`` in place and return ``x``.

    Counts, midpoint, boundaries and the inversion number are updated in
    O(range) (plus an O(width) count for the inversion number).
    """
    if x.value(site) == new_value:
        raise NoopFlip(f"site {site} already {new_value}")
    if not x.window_start - k.range <= site <= x.window_end + k.range:
        raise OutOfReach(f"site {site} cannot flip under a range-{k.range} kernel")
    x.ensure_kmax(k.range)
    pad = max(x.kmax, k.range) + 1
    x.ensure_layout(pad)
    b, base = x.bits, x.base
    lm, rm0 = x.window_start, x.window_end
    ones_left = int(b[lm - base:site - base].sum()) if site > lm else 0
    zeros_right = 0
    if site < rm0:
        seg = b[site + 1 - base:rm0 + 1 - base]
        zeros_right = len(seg) - int(seg.sum())
    if new_value == 1:
        x.h += zeros_right - ones_left
    else:
        x.h += ones_left - zeros_right
    _core.flip_inplace(x.bits, x.st, x.I, site)
    x.ensure_layout(pad)
    return x


def canonical_key(x: InterfaceConfig) -> bytes:
    """Translation-invariant key; Heaviside states map to ``b""``."""
    return x.window_bits().tobytes()


HEAVISIDE_KEY = b""


def total_flip_rate(x: InterfaceConfig, k: Kernel, eps: float) -> float:
    return (1.0 - eps / 2.0) * x.weighted_sum(k)


def site_rates(x: InterfaceConfig, k: Kernel, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-site flip rates on every site that can flip (generator bookkeeping)."""
    lo = x.window_start - k.range
    hi = x.window_end + k.range
    sites = np.arange(lo, hi + 1)
    vals = x.values(lo - k.range, hi + k.range)
    mid = vals[k.range:len(vals) - k.range]
    rates = np.zeros(len(sites))
    for off, w in k.entries:
        src = vals[k.range - off:len(vals) - k.range - off]
        rates += w * (src != mid)
    rates[mid == 1] *= 1.0 - eps
    return sites, rates
