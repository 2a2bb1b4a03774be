"""Numba kernels for the interface state and the event loops.

Layout shared by every routine here: ``bits`` is an int8 buffer holding sites
``base .. base + len(bits) - 1``; sites left of the buffer are 0 and sites
right of it are 1. ``st`` is ``int64[4] = (base, 2M, 2L, 2R)`` and ``I[k]``
is the number of k-boundaries for ``0 <= k < len(I)``.

Event output rows: ``ev_f[n] = (t, s_clock, weighted_sum_after)`` and
``ev_i[n] = (site, new_value, 2M, 2L, 2R)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STOP = 0
FULL = 1
RNG = 2
RELAYOUT = 3
UNDERFLOW = 4

SYNC_EVERY = 1 << 20


@njit(cache=True, inline="always")
def site(bits, base, j):
    r = j - base
    if r < 0:
        return 0
    if r >= bits.shape[0]:
        return 1
    return bits[r]


@njit(cache=True, inline="always")
def weighted_sum(I, offs, wts):
    acc = 0.0
    for q in range(offs.shape[0]):
        acc += wts[q] * I[abs(offs[q])]
    return acc


@njit(cache=True)
def count_boundaries(bits, base, lo, hi, kmax):
    """Brute-force I_k for k = 0..kmax; all boundaries lie in [lo - kmax, hi + kmax]."""
    out = np.zeros(kmax + 1, dtype=np.int64)
    for k in range(1, kmax + 1):
        c = 0
        for i in range(lo - k, hi + k + 1):
            if site(bits, base, i) != site(bits, base, i + k):
                c += 1
        out[k] = c
    return out


@njit(cache=True)
def flip_inplace(bits, st, I, s):
    """Flip site ``s`` (inside the buffer) and update 2M, 2L, 2R and I."""
    base = st[0]
    old = bits[s - base]
    for k in range(1, I.shape[0]):
        c = 0
        if site(bits, base, s - k) != old:
            c += 1
        if site(bits, base, s + k) != old:
            c += 1
        I[k] += 2 - 2 * c
    bits[s - base] = 1 - old
    lm = (st[2] + 1) // 2
    rm0 = (st[3] - 1) // 2
    if old == 0:
        st[1] -= 2
        if s < lm:
            st[2] = 2 * s - 1
        if s == rm0:
            j = s - 1
            while site(bits, base, j) == 1:
                j -= 1
            st[3] = 2 * j + 1
    else:
        st[1] += 2
        if s > rm0:
            st[3] = 2 * s + 1
        if s == lm:
            j = s + 1
            while site(bits, base, j) == 0:
                j += 1
            st[2] = 2 * j - 1
    return 1 - old


@njit(cache=True, inline="always")
def site_rate(bits, base, j, offs, wts, eps):
    xj = site(bits, base, j)
    acc = 0.0
    for q in range(offs.shape[0]):
        if site(bits, base, j - offs[q]) != xj:
            acc += wts[q]
    if xj == 1:
        acc *= 1.0 - eps
    return acc


@njit(cache=True)
def fill_rates(bits, base, offs, wts, eps, rates):
    for r in range(bits.shape[0]):
        rates[r] = site_rate(bits, base, base + r, offs, wts, eps)


@njit(cache=True)
def fw_build(rates, tree):
    n = rates.shape[0]
    tree[0] = 0.0
    for i in range(1, n + 1):
        tree[i] = rates[i - 1]
    for i in range(1, n + 1):
        p = i + (i & -i)
        if p <= n:
            tree[p] += tree[i]


@njit(cache=True, inline="always")
def fw_add(tree, idx, delta):
    n = tree.shape[0] - 1
    i = idx + 1
    while i <= n:
        tree[i] += delta
        i += i & -i


@njit(cache=True)
def fw_find(tree, rates, target):
    """Smallest index whose inclusive prefix sum exceeds ``target``.

    The tree length minus one must be a power of two; tree[n] is the total.
    """
    n = tree.shape[0] - 1
    pos = 0
    step = n
    rem = target
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        step >>= 1
    if pos >= n or rates[pos] <= 0.0:
        # float drift at the top end: fall back to the last positive rate
        pos = min(pos, n - 1)
        while pos >= 0 and rates[pos] <= 0.0:
            pos -= 1
    return pos


@njit(cache=True)
def refresh_rates_near(bits, base, rates, tree, offs, wts, eps, s):
    """Recompute rates of site s and every target that uses s as a source."""
    n = bits.shape[0]
    r = s - base
    if 0 <= r < n:
        new = site_rate(bits, base, s, offs, wts, eps)
        fw_add(tree, r, new - rates[r])
        rates[r] = new
    for q in range(offs.shape[0]):
        j = s + offs[q]
        r = j - base
        if 0 <= r < n:
            new = site_rate(bits, base, j, offs, wts, eps)
            fw_add(tree, r, new - rates[r])
            rates[r] = new


@njit(cache=True, inline="always")
def needs_relayout(st, n, pad):
    lm = (st[2] + 1) // 2
    rm0 = (st[3] - 1) // 2
    return lm - pad < st[0] or rm0 + pad > st[0] + n - 1


@njit(cache=True)
def gillespie_chunk(bits, st, I, rates, tree, offs, wts, eps,
                    exps, unis, cur, clock, t_stop, max_n, ev_f, ev_i):
    """Direct-method loop until t_stop, a full output buffer, or a relayout.

    ``cur = (rng cursor, events since last tree rebuild)``;
    ``clock = (t of last event, S-clock at last event, current time)``.
    A draw that overshoots ``t_stop`` is left unconsumed for the next call.
    """
    n = bits.shape[0]
    pad = 0
    for q in range(offs.shape[0]):
        pad = max(pad, abs(offs[q]))
    pad += 1
    t_last = clock[0]
    s_last = clock[1]
    t_now = clock[2]
    ws = weighted_sum(I, offs, wts)
    count = 0
    status = STOP
    while True:
        if count >= max_n:
            status = FULL
            break
        p = cur[0]
        if p >= exps.shape[0]:
            status = RNG
            break
        if cur[1] >= SYNC_EVERY:
            fw_build(rates, tree)
            cur[1] = 0
        total = tree[n]
        if not total > 0.0:
            status = UNDERFLOW
            break
        t_new = t_now + exps[p] / total
        if t_new >= t_stop:
            # leave the draw unconsumed: the pending event keeps its absolute
            # time, so stopping early never changes the sample path
            status = STOP
            break
        cur[0] = p + 1
        idx = fw_find(tree, rates, unis[p] * total)
        s = st[0] + idx
        s_last = s_last + (t_new - t_last) * ws
        t_last = t_new
        t_now = t_new
        new = flip_inplace(bits, st, I, s)
        refresh_rates_near(bits, st[0], rates, tree, offs, wts, eps, s)
        cur[1] += 1
        ws = weighted_sum(I, offs, wts)
        ev_f[count, 0] = t_new
        ev_f[count, 1] = s_last
        ev_f[count, 2] = ws
        ev_i[count, 0] = s
        ev_i[count, 1] = new
        ev_i[count, 2] = st[1]
        ev_i[count, 3] = st[2]
        ev_i[count, 4] = st[3]
        count += 1
        if needs_relayout(st, n, pad):
            status = RELAYOUT
            break
    clock[0] = t_last
    clock[1] = s_last
    clock[2] = t_now
    return count, status


@njit(cache=True)
def dominated(bits_e, st_e, bits_0, st_0):
    """True iff X^eps >= X^0 sitewise (shared base)."""
    base = st_e[0]
    lo = (st_0[2] + 1) // 2     # leftmost 1 of X^0
    hi = (st_e[3] - 1) // 2     # rightmost 0 of X^eps
    for i in range(lo, hi + 1):
        if site(bits_e, base, i) == 0 and site(bits_0, base, i) == 1:
            return False
    return True


@njit(cache=True, inline="always")
def _record(ev_f, ev_i, c, t, s, ws, site_, new, st):
    ev_f[c, 0] = t
    ev_f[c, 1] = s
    ev_f[c, 2] = ws
    ev_i[c, 0] = site_
    ev_i[c, 1] = new
    ev_i[c, 2] = st[1]
    ev_i[c, 3] = st[2]
    ev_i[c, 4] = st[3]


@njit(cache=True)
def coupled_chunk(bits_e, st_e, I_e, bits_0, st_0, I_0, offs, cumw, wts, eps,
                  exps, unis, cur, clock, t_stop, max_n,
                  ev_f_e, ev_i_e, ev_f_0, ev_i_0, counters):
    """Shared-arrow loop for the monotone coupling of X^eps and X^0.

    Arrows j-k -> j arrive at rate a(k) for every target j; only targets within
    ``range`` of either interface can change anything, so arrows are sampled
    on the union of those two windows. ``unis`` holds three uniforms per arrow
    (target, offset, suppression coin). ``clock = (t_now, t_last_e, s_e,
    t_last_0, s_0)``; ``counters = (events_e, events_0, checks, violations)``.
    """
    n = bits_e.shape[0]
    R = 0
    for q in range(offs.shape[0]):
        R = max(R, abs(offs[q]))
    pad = R + 1
    t_now = clock[0]
    tl_e = clock[1]
    s_e = clock[2]
    tl_0 = clock[3]
    s_0 = clock[4]
    ws_e = weighted_sum(I_e, offs, wts)
    ws_0 = weighted_sum(I_0, offs, wts)
    ce = 0
    c0 = 0
    status = STOP
    while True:
        if ce >= max_n or c0 >= max_n:
            status = FULL
            break
        p = cur[0]
        if p >= exps.shape[0]:
            status = RNG
            break
        a_lo = (st_e[2] + 1) // 2 - R
        a_hi = (st_e[3] - 1) // 2 + R
        b_lo = (st_0[2] + 1) // 2 - R
        b_hi = (st_0[3] - 1) // 2 + R
        if b_lo < a_lo:
            a_lo, b_lo = b_lo, a_lo
            a_hi, b_hi = b_hi, a_hi
        len_a = a_hi - a_lo + 1
        if b_lo <= a_hi:
            # overlapping windows merge into one interval
            len_b = max(0, b_hi - a_hi)
            b_lo = a_hi + 1
        else:
            len_b = b_hi - b_lo + 1
        total = len_a + len_b
        t_new = t_now + exps[p] / total
        if t_new >= t_stop:
            # leave the draw unconsumed: the pending event keeps its absolute
            # time, so stopping early never changes the sample path
            status = STOP
            break
        cur[0] = p + 1
        t_now = t_new
        pick = int(unis[3 * p] * total)
        if pick >= total:
            pick = total - 1
        if pick < len_a:
            j = a_lo + pick
        else:
            j = b_lo + pick - len_a
        u = unis[3 * p + 1]
        q = 0
        while q < cumw.shape[0] - 1 and u >= cumw[q]:
            q += 1
        src = j - offs[q]
        base = st_e[0]
        # unbiased copy: always
        if site(bits_0, base, src) != site(bits_0, base, j):
            s_0 = s_0 + (t_new - tl_0) * ws_0
            tl_0 = t_new
            new = flip_inplace(bits_0, st_0, I_0, j)
            ws_0 = weighted_sum(I_0, offs, wts)
            _record(ev_f_0, ev_i_0, c0, t_new, s_0, ws_0, j, new, st_0)
            c0 += 1
        # biased copy: 1 -> 0 suppressed with probability eps
        xs = site(bits_e, base, src)
        if xs != site(bits_e, base, j) and (xs == 1 or unis[3 * p + 2] >= eps):
            s_e = s_e + (t_new - tl_e) * ws_e
            tl_e = t_new
            new = flip_inplace(bits_e, st_e, I_e, j)
            ws_e = weighted_sum(I_e, offs, wts)
            _record(ev_f_e, ev_i_e, ce, t_new, s_e, ws_e, j, new, st_e)
            ce += 1
        counters[2] += 1
        if not dominated(bits_e, st_e, bits_0, st_0):
            counters[3] += 1
        if needs_relayout(st_e, n, pad) or needs_relayout(st_0, n, pad):
            status = RELAYOUT
            break
    clock[0] = t_now
    clock[1] = tl_e
    clock[2] = s_e
    clock[3] = tl_0
    clock[4] = s_0
    counters[0] = ce
    counters[1] = c0
    return status
