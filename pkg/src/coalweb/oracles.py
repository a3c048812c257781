"""Brute-force references and invariant checkers.

Everything here is written independently of the simulators: arrows are
plain dicts, walkers are stepped one at a time, and dual moves are chosen
by a geometric segment-intersection test rather than by a formula.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator

import numpy as np


def enumerate_fields(points: list[tuple[int, int]]) -> Iterator[dict]:
    """Every +-1 assignment to ``points``."""
    for signs in itertools.product((1, -1), repeat=len(points)):
        yield dict(zip(points, signs))


def forward_walk(arrows: dict, y: int, s: int, j_end: int) -> list[int]:
    xs = [y]
    for j in range(s, j_end):
        xs.append(xs[-1] + arrows[(xs[-1], j)])
    return xs


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _cross(a, b, c, d) -> bool:
    """Proper intersection of segments ``ab`` and ``cd``."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


def dual_move(arrows: dict, i: int, j: int) -> int:
    """Backward step from odd point ``(i, j)`` that crosses no forward segment."""
    ok = []
    for s in (-1, 1):
        seg = ((i, j), (i + s, j - 1))
        hit = False
        for k in (i - 2, i, i + 2):
            if (k, j - 1) in arrows:
                fseg = ((k, j - 1), (k + arrows[(k, j - 1)], j))
                hit |= _cross(seg[0], seg[1], fseg[0], fseg[1])
        if not hit:
            ok.append(s)
    if len(ok) != 1:
        raise RuntimeError(f"no unique non-crossing dual move at ({i}, {j})")
    return ok[0]


def dual_walk(arrows: dict, y: int, s: int, j_end: int) -> list[int]:
    xs = [y]
    for j in range(s, j_end, -1):
        xs.append(xs[-1] + dual_move(arrows, xs[-1], j))
    return xs


def brute_eta(arrows: dict, J0: int, J1: int, a: int, b: int) -> int:
    ends = {forward_walk(arrows, y, J0, J1)[-1] for y in range(a, b + 1) if (y + J0) % 2 == 0}
    return len(ends)


def brute_eta_dual(arrows: dict, J0: int, J1: int, a: int, b: int) -> int:
    span = J1 - J0
    hits = set()
    for y in range(a - span + 1, b + span):
        if (y + J1) % 2 == 1:
            x = dual_walk(arrows, y, J1, J0)[-1]
            if a <= x <= b:
                hits.add(x)
    return len(hits)


# --- invariant checkers on track arrays ------------------------------------


def pair_violations(
    tracks: np.ndarray, start_rows: np.ndarray, j_lo: int, backward: bool = False, period: int = 0
) -> dict:
    """Coalescence, crossing and slope violations over all pairs of tracks.

    ``tracks[k, r]`` is the unwrapped position of walker ``k`` at row
    ``j_lo + r``; walker ``k`` lives from ``start_rows[k]`` onward
    (backward: down to ``j_lo``).  With ``period`` the walkers live on a
    circle: they meet when their difference is a multiple of the period and
    cross when it passes one without landing on it.
    """
    tr = np.asarray(tracks, dtype=np.int64)
    n, R = tr.shape
    rows = j_lo + np.arange(R)
    st = np.asarray(start_rows)
    alive = rows[None, :] >= st[:, None] if not backward else rows[None, :] <= st[:, None]
    slope = int((np.abs(np.diff(tr, axis=1)) > 1).sum())
    coal = cross = 0
    for p in range(n - 1):
        both = alive[p][None, :] & alive[p + 1 :]
        d = tr[p][None, :] - tr[p + 1 :]
        if backward:
            d, both = d[:, ::-1], both[:, ::-1]
        z = ((d % period == 0) if period else (d == 0)) & both
        # once met, met at every later common row
        first = np.where(z.any(axis=1), np.argmax(z, axis=1), R)
        later = np.arange(R)[None, :] >= first[:, None]
        coal += int((later & both & ~z).any(axis=1).sum())
        pair_both = both[:, 1:] & both[:, :-1]
        if period:
            jump = (d[:, 1:] // period != d[:, :-1] // period) & ~z[:, 1:] & ~z[:, :-1]
        else:
            jump = d[:, 1:] * d[:, :-1] < 0
        cross += int((jump & pair_both).any(axis=1).sum())
    return {"pairs": n * (n - 1) // 2, "coalescence": coal, "crossing": cross, "slope": slope}


def forward_dual_crossings(
    fwd: np.ndarray, f_start: np.ndarray, f_lo: int, dual: np.ndarray, d_start: np.ndarray, d_lo: int
) -> tuple[int, int]:
    """Pairs of forward and dual tracks whose difference changes sign, and pairs checked.

    Forward and dual walkers sit on opposite parities, so their difference
    is odd at every common row and any crossing shows up as a sign change.
    ``f_lo`` and ``d_lo`` are the rows of the first track columns.
    """
    lo = max(f_lo, d_lo)
    hi = min(f_lo + fwd.shape[1], d_lo + dual.shape[1]) - 1
    if hi < lo:
        return 0, fwd.shape[0] * dual.shape[0]
    fwd = fwd[:, lo - f_lo : hi - f_lo + 1]
    dual = dual[:, lo - d_lo : hi - d_lo + 1]
    rows = np.arange(lo, hi + 1)
    fa = rows[None, :] >= np.asarray(f_start)[:, None]
    da = rows[None, :] <= np.asarray(d_start)[:, None]
    bad = 0
    for p in range(fwd.shape[0]):
        both = fa[p][None, :] & da
        sgn = np.where(both, np.sign(fwd[p][None, :] - dual), 0)
        bad += int(((sgn > 0).any(axis=1) & (sgn < 0).any(axis=1)).sum())
    return bad, fwd.shape[0] * dual.shape[0]


def tracks_from_paths(paths: Iterable, j_lo: int, j_hi: int) -> np.ndarray:
    """Integer positions at rows ``j_lo..j_hi`` of lattice-unit paths (held outside)."""
    rows = np.arange(j_lo, j_hi + 1, dtype=float)
    return np.array([np.rint(p(rows)) for p in paths], dtype=np.int64)
