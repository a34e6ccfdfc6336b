"""Compiled inner loops on uint64 fixed-point words.

A coordinate word ``w`` stands for ``w / 2**64``; a radius ``2**-k`` becomes
the integer threshold ``2**(64 - k)``, so every ball test is exact.
"""
from __future__ import annotations

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)
UMAX = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(inline="always")
def _axis_dist(a, b, interval):
    if interval:
        return a - b if a >= b else b - a
    diff = a - b
    alt = U0 - diff
    return alt if alt < diff else diff


@njit(inline="always")
def _dist(words, i, y, interval):
    d = U0
    for c in range(words.shape[1]):
        e = _axis_dist(words[i, c], y[c], interval)
        if e > d:
            d = e
    return d


# ---------------------------------------------------------------- orbits

@njit(cache=True)
def rotation_words(hi, lo, ahi, alo, n):
    out = np.empty((n, 1), dtype=np.uint64)
    for i in range(n):
        out[i, 0] = hi
        nlo = lo + alo
        carry = U1 if nlo < lo else U0
        hi = hi + ahi + carry
        lo = nlo
    return out


@njit(cache=True)
def cat_words(xh, xl, yh, yl, burn_in, n):
    out = np.empty((n, 2), dtype=np.uint64)
    for i in range(burn_in + n):
        if i >= burn_in:
            out[i - burn_in, 0] = xh
            out[i - burn_in, 1] = yh
        # (x, y) -> (2x + y, x + y) on 128-bit words
        sl = xl + yl
        c1 = U1 if sl < xl else U0
        sh = xh + yh + c1
        nxl = sl + xl
        c2 = U1 if nxl < sl else U0
        nxh = sh + xh + c2
        xh, xl, yh, yl = nxh, nxl, sh, sl
    return out


@njit(cache=True)
def binary_words(bits, n, offset):
    """``out[i]`` packs ``bits[offset + i : offset + i + 64]``, zero padded."""
    out = np.empty(n, dtype=np.uint64)
    m = bits.shape[0]
    w = U0
    for j in range(64):
        pos = offset + j
        b = np.uint64(bits[pos]) if pos < m else U0
        w = (w << U1) | b
    for i in range(n):
        out[i] = w
        pos = offset + i + 64
        b = np.uint64(bits[pos]) if pos < m else U0
        w = (w << U1) | b
    return out


@njit(cache=True)
def tent_words(bits, n, offset):
    """Tent-map conjugate coordinate: window of ``bits`` flipped by the previous digit."""
    win = binary_words(bits, n, offset)
    m = bits.shape[0]
    for i in range(n):
        pos = offset + i - 1
        if pos >= 0 and pos < m and bits[pos] == 1:
            win[i] = ~win[i]
    return win


@njit(cache=True)
def ternary_words(digits, n, stride, depth):
    """``floor(2**64 * sum_j d_j 3**-j)`` over ``digits[i*stride : i*stride + depth]``."""
    out = np.empty(n, dtype=np.uint64)
    m = digits.shape[0]
    third = np.uint64(6148914691236517205)  # floor(2**64 / 3)
    for i in range(n):
        v = U0
        base = i * stride
        for j in range(depth - 1, -1, -1):
            pos = base + j
            d = np.uint64(digits[pos]) if pos < m else U0
            # v <- floor((d * 2**64 + v) / 3), exact in 64 bits
            q = d * third + v // np.uint64(3)
            r = (d * np.uint64(1) + v % np.uint64(3))  # 2**64 = 3 * third + 1
            q += r // np.uint64(3)
            v = q
        out[i] = v
    return out


# --------------------------------------------------------------- hitting

@njit(cache=True)
def first_entrance(words, y, thr, start, interval):
    """One pass; fills every scale whose threshold the current point beats."""
    k = thr.shape[0]
    tau = np.full(k, -1, dtype=np.int64)
    nxt = 0
    for i in range(start, words.shape[0]):
        d = _dist(words, i, y, interval)
        while nxt < k and d < thr[nxt]:
            tau[nxt] = i
            nxt += 1
        if nxt == k:
            break
    return tau


@njit(cache=True)
def min_distance_record(words, y, start, stop_below, interval):
    """Indices and values at which the running minimum distance strictly drops."""
    ns = []
    ms = []
    best = UMAX
    first = True
    for i in range(start, words.shape[0]):
        d = _dist(words, i, y, interval)
        if first or d < best:
            best = d
            first = False
            ns.append(i)
            ms.append(d)
            if best < stop_below:
                break
    out_n = np.empty(len(ns), dtype=np.int64)
    out_m = np.empty(len(ms), dtype=np.uint64)
    for j in range(len(ns)):
        out_n[j] = ns[j]
        out_m[j] = ms[j]
    return out_n, out_m


@njit(inline="always")
def _axis_cells(p, rad, shift, ncell, interval):
    """First cell and cell count of the open ball around ``p`` on one axis."""
    span = (rad - U1) * np.uint64(2)
    if interval:
        lo = p - (rad - U1) if p >= rad - U1 else U0
        hi = p + (rad - U1) if UMAX - p >= rad - U1 else UMAX
        c0 = lo >> shift
        return np.int64(c0), np.int64((hi >> shift) - c0) + 1
    lo = p - (rad - U1)
    cmask = (U1 << shift) - U1
    off = lo & cmask
    if span > UMAX - off:
        return np.int64(0), ncell
    cnt = np.int64((off + span) >> shift) + 1
    if cnt >= ncell:
        return np.int64(0), ncell
    return np.int64(lo >> shift), cnt


@njit(cache=True)
def batch_first_entrance(words, targets, thr, start, interval, tstarts, torder, g):
    """One orbit pass updating every target through a grid over the targets.

    ``tstarts``/``torder`` are the CSR cell lists of the targets at level
    ``g``. Only targets in cells that meet the largest open threshold are
    examined, which is exact because a target can only be hit at scale ``k``
    from within distance ``thr[k]``.
    """
    nt = targets.shape[0]
    dim = targets.shape[1]
    k = thr.shape[0]
    tau = np.full((nt, k), -1, dtype=np.int64)
    nxt = np.zeros(nt, dtype=np.int64)
    level = np.zeros(k + 1, dtype=np.int64)
    level[0] = nt
    lowest = 0
    shift = np.uint64(64 - g)
    ncell = np.int64(1) << g
    for i in range(start, words.shape[0]):
        if lowest >= k:
            break
        rad = thr[lowest]
        c0x, cnx = _axis_cells(words[i, 0], rad, shift, ncell, interval)
        c0y = np.int64(0)
        cny = np.int64(1)
        if dim == 2:
            c0y, cny = _axis_cells(words[i, 1], rad, shift, ncell, interval)
        for jy in range(cny):
            row = (c0y + jy) % ncell if dim == 2 else 0
            for jx in range(cnx):
                col = (c0x + jx) % ncell
                cell = row * ncell + col
                for s in range(tstarts[cell], tstarts[cell + 1]):
                    t = torder[s]
                    if nxt[t] >= k:
                        continue
                    d = U0
                    for c in range(dim):
                        e = _axis_dist(words[i, c], targets[t, c], interval)
                        if e > d:
                            d = e
                    while nxt[t] < k and d < thr[nxt[t]]:
                        tau[t, nxt[t]] = i
                        level[nxt[t]] -= 1
                        nxt[t] += 1
                        level[nxt[t]] += 1
        while lowest < k and level[lowest] == 0:
            lowest += 1
    return tau


# ------------------------------------------------------------ occupation

@njit(cache=True)
def counting_sort_cells(words, g):
    n = words.shape[0]
    dim = words.shape[1]
    shift = np.uint64(64 - g)
    ncell = np.int64(1) << g
    total = ncell ** dim
    ids = np.empty(n, dtype=np.int64)
    counts = np.zeros(total + 1, dtype=np.int64)
    for i in range(n):
        cid = np.int64(words[i, 0] >> shift)
        if dim == 2:
            cid += np.int64(words[i, 1] >> shift) * ncell
        ids[i] = cid
        counts[cid + 1] += 1
    for c in range(total):
        counts[c + 1] += counts[c]
    order = np.empty(n, dtype=np.int64)
    fill = counts[:-1].copy()
    for i in range(n):
        order[fill[ids[i]]] = i
        fill[ids[i]] += 1
    return order, counts


@njit(inline="always")
def _cell_full(cell, rad, shift, p, interval):
    """True when every word of the cell lies inside the open ball on this axis."""
    csize = U1 << shift
    s = np.uint64(cell) << shift
    last = s + (csize - U1)
    if interval:
        lo = p - (rad - U1) if p >= rad - U1 else U0
        hi = p + (rad - U1) if UMAX - p >= rad - U1 else UMAX
        return s >= lo and last <= hi
    lo = p - (rad - U1)
    span = (rad - U1) * np.uint64(2)
    off = s - lo
    return span >= csize - U1 and off <= span - (csize - U1)


@njit(cache=True)
def grid_count(words, order, starts, g, y, rad, interval):
    """``#{i : d(words[i], y) < rad}`` using full-cell totals plus boundary scans."""
    dim = words.shape[1]
    shift = np.uint64(64 - g)
    ncell = np.int64(1) << g
    c0x, cnx = _axis_cells(y[0], rad, shift, ncell, interval)
    c0y = np.int64(0)
    cny = np.int64(1)
    if dim == 2:
        c0y, cny = _axis_cells(y[1], rad, shift, ncell, interval)
    total = np.int64(0)
    for jy in range(cny):
        row = (c0y + jy) % ncell if dim == 2 else 0
        row_full = True
        if dim == 2:
            row_full = _cell_full(row, rad, shift, y[1], interval)
        for jx in range(cnx):
            col = (c0x + jx) % ncell
            cell = row * ncell + col
            a = starts[cell]
            b = starts[cell + 1]
            if a == b:
                continue
            if row_full and _cell_full(col, rad, shift, y[0], interval):
                total += b - a
                continue
            for s in range(a, b):
                if _dist(words, order[s], y, interval) < rad:
                    total += 1
    return total


@njit(cache=True)
def scan_count(words, y, rads, interval):
    out = np.zeros(rads.shape[0], dtype=np.int64)
    for i in range(words.shape[0]):
        d = _dist(words, i, y, interval)
        for j in range(rads.shape[0]):
            if d < rads[j]:
                out[j] += 1
    return out
