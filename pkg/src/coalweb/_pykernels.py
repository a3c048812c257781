"""Numpy implementations of the hot loops.

Used when the compiled extension is unavailable or ``COALWEB_PURE=1``.
Signatures match ``coalweb._kernels`` exactly.
"""

from __future__ import annotations

import numpy as np

from .rng import arrows_hashed

INF = np.inf


def _wrap(pos, i_min, period):
    if period > 0:
        return i_min + np.mod(pos - i_min, period)
    return pos


def arrows(seed, i, j):
    return arrows_hashed(np.uint64(seed), i, j)


def walk_finals(seeds, x0, j_from, j_to, sign, row_offset, i_min, period):
    """Positions at row ``j_to`` of walkers started at row ``j_from``.

    One hashed field per entry of ``seeds``; returns shape (R, n).
    """
    seeds = np.asarray(seeds, dtype=np.uint64)[:, None]
    pos = np.repeat(np.asarray(x0, dtype=np.int64)[None, :], seeds.shape[0], axis=0)
    step = 1 if j_to >= j_from else -1
    for j in range(j_from, j_to, step):
        pos += sign * arrows_hashed(seeds, _wrap(pos, i_min, period), j + row_offset)
    return pos


def walk_tracks(seed, x0, s0, j_lo, j_hi, sign, row_offset, i_min, period, backward):
    """Full tracks of walkers on one hashed field, shape (n, j_hi - j_lo + 1).

    Walkers hold their start value outside their lifetime.
    """
    x0 = np.asarray(x0, dtype=np.int64)
    s0 = np.asarray(s0, dtype=np.int64)
    n_rows = j_hi - j_lo + 1
    out = np.repeat(x0[:, None], n_rows, axis=1)
    pos = x0.copy()
    s = np.uint64(seed)
    if not backward:
        for j in range(j_lo, j_hi):
            act = s0 <= j
            d = arrows_hashed(s, _wrap(pos, i_min, period), j + row_offset)
            pos = np.where(act, pos + sign * d, pos)
            out[:, j + 1 - j_lo] = pos
    else:
        for j in range(j_hi, j_lo, -1):
            act = s0 >= j
            d = arrows_hashed(s, _wrap(pos, i_min, period), j + row_offset)
            pos = np.where(act, pos + sign * d, pos)
            out[:, j - 1 - j_lo] = pos
    return out


def meet_rows(seeds, xa, xb, j_from, j_to):
    """Rows (relative to ``j_from``) at which two walkers first coincide, -1 if never."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    R = seeds.shape[0]
    pa = np.full(R, xa, dtype=np.int64)
    pb = np.full(R, xb, dtype=np.int64)
    out = np.full(R, -1, dtype=np.int64)
    if xa == xb:
        out[:] = 0
        return out
    for k, j in enumerate(range(j_from, j_to)):
        pa = pa + arrows_hashed(seeds, pa, j)
        pb = pb + arrows_hashed(seeds, pb, j)
        hit = (pa == pb) & (out < 0)
        out[hit] = k + 1
    return out


def tightness_hits(seeds, X0, hw, J0, tau, hU):
    """Indicator of the tightness event per hashed field, in lattice units.

    Small rectangle ``|x - X0| <= hw``, ``J0 <= t <= J0 + tau``; the event is
    that a path touching it later reaches ``|x - X0| = hU`` by ``J0 + 2 tau``.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)[:, None]
    R = seeds.shape[0]
    lo_b = int(np.floor(X0 - hU)) - 1
    hi_b = int(np.ceil(X0 + hU)) + 1
    xs = np.arange(lo_b, hi_b + 1, dtype=np.int64)
    nb = xs.size
    touch = np.full((R, nb), INF)
    hits = np.zeros(R, dtype=bool)
    t_end = J0 + 2.0 * tau
    r_start = int(np.floor(J0))
    r_stop = int(np.ceil(t_end))
    rows_idx = np.arange(R)[:, None]
    for r in range(r_start, r_stop):
        m = ((xs + r) % 2) == 0
        xv = xs[m]
        tin = touch[:, m]
        D = arrows_hashed(seeds, xv[None, :], r)
        ilo, ihi = max(r, J0), min(r + 1.0, J0 + tau)
        if ilo <= ihi:
            near = (xv >= X0 - hw - 1) & (xv <= X0 + hw + 1)
            base = r + D * (X0 - xv[None, :])
            slo = np.maximum(ilo, base - hw)
            shi = np.minimum(ihi, base + hw)
            te = np.where(near[None, :] & (slo <= shi), slo, INF)
            tin = np.minimum(tin, te)
        target = np.where(D > 0, X0 + hU, X0 - hU)
        s = r + (target - xv[None, :]) * D
        hit = np.isfinite(tin) & (s >= r) & (s <= r + 1) & (s >= tin) & (s <= t_end)
        hits |= hit.any(axis=1)
        new = np.full((R, nb), INF)
        y = xv[None, :] + D - lo_b
        ok = (y >= 0) & (y < nb) & np.isfinite(tin)
        rr = np.broadcast_to(rows_idx, y.shape)
        np.minimum.at(new, (rr[ok], y[ok]), tin[ok])
        touch = new
    return hits


def first_meeting(w, frozen, fstart, start, u, dt):
    """First grid index where path ``w`` meets a frozen path, and that path.

    ``frozen`` has shape (k, n); ``fstart`` gives each frozen path's start
    index.  Meeting is a zero or sign change of the difference between
    consecutive grid points.  With ``u`` (uniforms, shape (n,)) a
    Brownian-bridge crossing against the nearest neighbours is also tried.
    Returns ``(-1, -1)`` if no meeting occurs.
    """
    k, n = frozen.shape
    if k == 0:
        return -1, -1
    idx = np.arange(n)
    m0 = np.maximum(start, fstart)
    diff = w[None, :] - frozen
    best_m, best_frac, best_k = n, 2.0, -1
    for q in range(k):
        a = m0[q]
        if a >= n:
            continue
        if diff[q, a] == 0.0:
            cand_m, frac = a, 0.0
        else:
            d0 = diff[q, a:-1]
            d1 = diff[q, a + 1:]
            ev = (d1 == 0.0) | (d0 * d1 < 0.0)
            if not ev.any():
                continue
            p = int(np.argmax(ev))
            cand_m = a + 1 + p
            frac = d0[p] / (d0[p] - d1[p])
        if (cand_m, frac) < (best_m, best_frac):
            best_m, best_frac, best_k = cand_m, frac, q
    if u is not None:
        alive = fstart[:, None] <= idx[None, :]
        alive &= idx[None, :] >= start
        prev = diff[:, :-1]
        cur = diff[:, 1:]
        al = alive[:, :-1] & alive[:, 1:]
        below = np.where(al & (prev > 0), prev, INF)  # frozen below w
        above = np.where(al & (prev < 0), -prev, INF)  # frozen above w
        kb = np.argmin(below, axis=0)
        ka = np.argmin(above, axis=0)
        cols = np.arange(n - 1)
        db0 = below[kb, cols]
        da0 = above[ka, cols]
        db1 = cur[kb, cols]
        da1 = -cur[ka, cols]
        with np.errstate(over="ignore", invalid="ignore"):
            pb = np.where(np.isfinite(db0) & (db1 > 0), np.exp(-db0 * db1 / dt), 0.0)
            pa = np.where(np.isfinite(da0) & (da1 > 0), np.exp(-da0 * da1 / dt), 0.0)
        uu = u[1:]
        ev_b = uu < pb
        ev_a = (~ev_b) & (uu < pb + pa)
        ev = (ev_b | ev_a) & (cols + 1 < best_m)
        if ev.any():
            c = int(np.argmax(ev))
            return c + 1, int(kb[c] if ev_b[c] else ka[c])
    if best_k < 0:
        return -1, -1
    return best_m, best_k


def pairwise_sup(pa, pb, ca, cb, ma, mb, d2):
    """Sup of |phi_a - phi_b| over the grid and its refinement error bound."""
    P, Q = pa.shape[0], pb.shape[0]
    sup = np.empty((P, Q))
    err = np.zeros((P, Q))
    for p in range(P):
        sup[p] = np.abs(pa[p][None, :] - pb).max(axis=1)
        if d2.size:
            mov = ma[p][None, :] | mb
            e = np.where(mov, (ca[p][None, :] + cb) * d2[None, :], 0.0)
            err[p] = e.max(axis=1)
    return sup, err


def modulus(values, start, times, xi):
    """Per-path sup over grid pairs of |f(t') - f(t)| / |t' - t|**xi."""
    P, G = values.shape
    out = np.zeros(P)
    for lag in range(1, G):
        dv = np.abs(values[:, lag:] - values[:, :-lag])
        dt = (times[lag:] - times[:-lag]) ** xi
        ratio = dv / dt[None, :]
        valid = np.arange(G - lag)[None, :] >= start[:, None]
        ratio = np.where(valid, ratio, 0.0)
        out = np.maximum(out, ratio.max(axis=1))
    return out
