# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Mirrors ``coalweb._pykernels`` signature for signature."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, floor, ceil, INFINITY, isfinite
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t M32 = 0xFFFFFFFF
cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15


cdef inline uint64_t mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline int64_t arrow(uint64_t base, int64_t i, int64_t j) noexcept nogil:
    cdef uint64_t key = ((<uint64_t>i & M32) << 32) | (<uint64_t>j & M32)
    cdef uint64_t h = mix(base + key * GOLDEN)
    return 1 if (h >> 63) else -1


cdef inline int64_t wrap(int64_t x, int64_t i_min, int64_t period) noexcept nogil:
    cdef int64_t r
    if period > 0:
        r = (x - i_min) % period
        if r < 0:
            r += period
        return i_min + r
    return x


def arrows(uint64_t seed, i, j):
    cdef cnp.ndarray[int64_t, ndim=1] ii = np.ascontiguousarray(np.ravel(np.broadcast_arrays(i, j)[0]), dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] jj = np.ascontiguousarray(np.ravel(np.broadcast_arrays(i, j)[1]), dtype=np.int64)
    shape = np.broadcast(i, j).shape
    cdef Py_ssize_t n = ii.shape[0], k
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef uint64_t base = mix(seed)
    for k in range(n):
        out[k] = arrow(base, ii[k], jj[k])
    return out.reshape(shape)


def walk_finals(seeds, x0, int64_t j_from, int64_t j_to, int64_t sign,
                int64_t row_offset, int64_t i_min, int64_t period):
    cdef uint64_t[:] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef int64_t[:] xs = np.ascontiguousarray(x0, dtype=np.int64)
    cdef Py_ssize_t R = sd.shape[0], n = xs.shape[0], r, q
    out_arr = np.empty((R, n), dtype=np.int64)
    cdef int64_t[:, :] out = out_arr
    cdef int64_t j, x, step = 1 if j_to >= j_from else -1
    cdef uint64_t base
    with nogil:
        for r in range(R):
            base = mix(sd[r])
            for q in range(n):
                x = xs[q]
                j = j_from
                while j != j_to:
                    x = x + sign * arrow(base, wrap(x, i_min, period), j + row_offset)
                    j = j + step
                out[r, q] = x
    return out_arr


def walk_tracks(uint64_t seed, x0, s0, int64_t j_lo, int64_t j_hi, int64_t sign,
                int64_t row_offset, int64_t i_min, int64_t period, bint backward):
    cdef int64_t[:] xs = np.ascontiguousarray(x0, dtype=np.int64)
    cdef int64_t[:] ss = np.ascontiguousarray(s0, dtype=np.int64)
    cdef Py_ssize_t n = xs.shape[0], q
    cdef int64_t n_rows = j_hi - j_lo + 1, j, x
    out_arr = np.empty((n, n_rows), dtype=np.int64)
    cdef int64_t[:, :] out = out_arr
    cdef uint64_t base = mix(seed)
    with nogil:
        for q in range(n):
            x = xs[q]
            if not backward:
                out[q, 0] = x
                for j in range(j_lo, j_hi):
                    if ss[q] <= j:
                        x = x + sign * arrow(base, wrap(x, i_min, period), j + row_offset)
                    out[q, j + 1 - j_lo] = x
            else:
                out[q, n_rows - 1] = x
                j = j_hi
                while j > j_lo:
                    if ss[q] >= j:
                        x = x + sign * arrow(base, wrap(x, i_min, period), j + row_offset)
                    out[q, j - 1 - j_lo] = x
                    j -= 1
    return out_arr


def meet_rows(seeds, int64_t xa, int64_t xb, int64_t j_from, int64_t j_to):
    cdef uint64_t[:] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t R = sd.shape[0], r
    out_arr = np.full(R, -1, dtype=np.int64)
    cdef int64_t[:] out = out_arr
    cdef int64_t pa, pb, j
    cdef uint64_t base
    if xa == xb:
        out_arr[:] = 0
        return out_arr
    with nogil:
        for r in range(R):
            base = mix(sd[r])
            pa = xa
            pb = xb
            for j in range(j_from, j_to):
                pa = pa + arrow(base, pa, j)
                pb = pb + arrow(base, pb, j)
                if pa == pb:
                    out[r] = j + 1 - j_from
                    break
    return out_arr


def tightness_hits(seeds, double X0, double hw, double J0, double tau, double hU):
    cdef uint64_t[:] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t R = sd.shape[0], rep
    cdef int64_t lo_b = <int64_t>floor(X0 - hU) - 1
    cdef int64_t hi_b = <int64_t>ceil(X0 + hU) + 1
    cdef Py_ssize_t nb = hi_b - lo_b + 1, k
    hits_arr = np.zeros(R, dtype=np.uint8)
    cdef unsigned char[:] hits = hits_arr
    cdef double[:] touch = np.empty(nb)
    cdef double[:] new = np.empty(nb)
    cdef double t_end = J0 + 2.0 * tau
    cdef int64_t r_start = <int64_t>floor(J0), r_stop = <int64_t>ceil(t_end), r, x, D, y
    cdef double ilo, ihi, tin, base_t, slo, shi, target, s
    cdef uint64_t base
    cdef bint hit
    with nogil:
        for rep in range(R):
            base = mix(sd[rep])
            for k in range(nb):
                touch[k] = INFINITY
            hit = False
            r = r_start
            while r < r_stop and not hit:
                for k in range(nb):
                    new[k] = INFINITY
                ilo = r if r > J0 else J0
                ihi = r + 1.0 if r + 1.0 < J0 + tau else J0 + tau
                for k in range(nb):
                    x = lo_b + k
                    if (x + r) % 2 != 0:
                        continue
                    D = arrow(base, x, r)
                    tin = touch[k]
                    if ilo <= ihi and x >= X0 - hw - 1 and x <= X0 + hw + 1:
                        base_t = r + D * (X0 - x)
                        slo = base_t - hw
                        if ilo > slo:
                            slo = ilo
                        shi = base_t + hw
                        if ihi < shi:
                            shi = ihi
                        if slo <= shi and slo < tin:
                            tin = slo
                    if not isfinite(tin):
                        continue
                    target = X0 + hU if D > 0 else X0 - hU
                    s = r + (target - x) * D
                    if s >= r and s <= r + 1 and s >= tin and s <= t_end:
                        hit = True
                        break
                    y = x + D - lo_b
                    if 0 <= y < nb and tin < new[y]:
                        new[y] = tin
                for k in range(nb):
                    touch[k] = new[k]
                r += 1
            hits[rep] = hit
    return hits_arr.astype(bool)


def first_meeting(w, frozen, fstart, Py_ssize_t start, u, double dt):
    cdef double[:] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :] fr = np.ascontiguousarray(frozen, dtype=np.float64)
    cdef int64_t[:] fs = np.ascontiguousarray(fstart, dtype=np.int64)
    cdef Py_ssize_t k = fr.shape[0], n = fr.shape[1], q, a, m, c
    cdef Py_ssize_t best_m = n, best_k = -1, kb, ka
    cdef double best_frac = 2.0, d0, d1, frac, db0, da0, db1, da1, v, pb, pa, uu
    cdef bint use_u = u is not None
    cdef double[:] uv
    if k == 0:
        return -1, -1
    if use_u:
        uv = np.ascontiguousarray(u, dtype=np.float64)
    with nogil:
        for q in range(k):
            a = start if start > fs[q] else fs[q]
            if a >= n:
                continue
            if ww[a] - fr[q, a] == 0.0:
                m = a
                frac = 0.0
            else:
                m = -1
                for c in range(a, n - 1):
                    d0 = ww[c] - fr[q, c]
                    d1 = ww[c + 1] - fr[q, c + 1]
                    if d1 == 0.0 or d0 * d1 < 0.0:
                        m = c + 1
                        frac = d0 / (d0 - d1)
                        break
                if m < 0:
                    continue
            if m < best_m or (m == best_m and frac < best_frac):
                best_m = m
                best_frac = frac
                best_k = q
        if use_u:
            for c in range(0, n - 1):
                if c + 1 >= best_m:
                    break
                if c < start:
                    continue
                kb = -1
                ka = -1
                db0 = INFINITY
                da0 = INFINITY
                for q in range(k):
                    if fs[q] > c:
                        continue
                    v = ww[c] - fr[q, c]
                    if v > 0 and v < db0:
                        db0 = v
                        kb = q
                    elif v < 0 and -v < da0:
                        da0 = -v
                        ka = q
                pb = 0.0
                pa = 0.0
                if kb >= 0:
                    db1 = ww[c + 1] - fr[kb, c + 1]
                    if db1 > 0:
                        pb = exp(-db0 * db1 / dt)
                if ka >= 0:
                    da1 = -(ww[c + 1] - fr[ka, c + 1])
                    if da1 > 0:
                        pa = exp(-da0 * da1 / dt)
                uu = uv[c + 1]
                if uu < pb:
                    best_m = c + 1
                    best_k = kb
                    break
                if uu < pb + pa:
                    best_m = c + 1
                    best_k = ka
                    break
    if best_k < 0:
        return -1, -1
    return best_m, best_k


def pairwise_sup(pa, pb, ca, cb, ma, mb, d2):
    cdef double[:, :] A = np.ascontiguousarray(pa, dtype=np.float64)
    cdef double[:, :] B = np.ascontiguousarray(pb, dtype=np.float64)
    cdef double[:, :] CA = np.ascontiguousarray(ca, dtype=np.float64)
    cdef double[:, :] CB = np.ascontiguousarray(cb, dtype=np.float64)
    cdef unsigned char[:, :] MA = np.ascontiguousarray(ma, dtype=np.uint8)
    cdef unsigned char[:, :] MB = np.ascontiguousarray(mb, dtype=np.uint8)
    cdef double[:] D2 = np.ascontiguousarray(d2, dtype=np.float64)
    cdef Py_ssize_t P = A.shape[0], Q = B.shape[0], G = A.shape[1], NI = D2.shape[0], p, q, g
    sup_arr = np.zeros((P, Q))
    err_arr = np.zeros((P, Q))
    cdef double[:, :] sup = sup_arr
    cdef double[:, :] err = err_arr
    cdef double best, e, v
    with nogil:
        for p in range(P):
            for q in range(Q):
                best = 0.0
                for g in range(G):
                    v = A[p, g] - B[q, g]
                    if v < 0:
                        v = -v
                    if v > best:
                        best = v
                sup[p, q] = best
                e = 0.0
                for g in range(NI):
                    if MA[p, g] or MB[q, g]:
                        v = (CA[p, g] + CB[q, g]) * D2[g]
                        if v > e:
                            e = v
                err[p, q] = e
    return sup_arr, err_arr


def modulus(values, start, times, double xi):
    cdef double[:, :] V = np.ascontiguousarray(values, dtype=np.float64)
    cdef int64_t[:] S = np.ascontiguousarray(start, dtype=np.int64)
    cdef double[:] T = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t P = V.shape[0], G = V.shape[1], p, a, lag
    out_arr = np.zeros(P)
    cdef double[:] out = out_arr
    cdef double best, dv, r, den
    cdef bint uniform = False
    cdef double[:] lagden = np.zeros(max(G, 1))
    if G > 2:
        steps = np.diff(np.asarray(T))
        uniform = bool(np.all(np.abs(steps - steps[0]) <= 1e-12 * abs(steps[0])))
        if uniform:
            lagden = (np.arange(G) * steps[0]) ** xi
    with nogil:
        for p in range(P):
            best = 0.0
            for lag in range(1, G):
                if uniform:
                    den = lagden[lag]
                for a in range(S[p], G - lag):
                    dv = V[p, a + lag] - V[p, a]
                    if dv < 0:
                        dv = -dv
                    if uniform:
                        r = dv / den
                    else:
                        r = dv / ((T[a + lag] - T[a]) ** xi)
                    if r > best:
                        best = r
            out[p] = best
    return out_arr
