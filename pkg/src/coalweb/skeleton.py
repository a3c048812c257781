"""Coalescing Brownian skeletons on a finite set of seeds.

Seeds are processed one at a time.  Each new path is a Brownian motion on
a uniform time grid, run until it first meets one of the paths already
built, after which it follows that path exactly.  Meeting is detected
between grid points by a sign change or zero of the difference; with
``bridge_correction`` the path may also meet its nearest neighbours above
and below through an unobserved Brownian-bridge crossing.

Increments of the path started at seed ``k`` come from its own stream, so
the free path does not depend on the processing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .pathspace import Path, PathSet
from .rng import generator


@dataclass(frozen=True, eq=False)
class SeedSet:
    """Ordered finite set of space-time seeds ``(x, t)``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if not np.isfinite(pts).all():
            raise ValueError("seeds must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, pts: Sequence[tuple[float, float]]) -> "SeedSet":
        return cls(np.asarray(pts, dtype=float))

    @classmethod
    def grid(cls, x_lo, x_hi, nx, t_lo, t_hi, nt) -> "SeedSet":
        """``nx * nt`` seeds on a product grid, time-major."""
        xs = np.linspace(x_lo, x_hi, nx)
        ts = np.linspace(t_lo, t_hi, nt)
        tt, xx = np.meshgrid(ts, xs, indexing="ij")
        return cls(np.column_stack([xx.ravel(), tt.ravel()]))

    @classmethod
    def uniform(cls, n, x_lo, x_hi, t_lo, t_hi, seed) -> "SeedSet":
        g = generator(seed, 1 << 40)
        return cls(np.column_stack([g.uniform(x_lo, x_hi, n), g.uniform(t_lo, t_hi, n)]))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > self.t_start:
            raise ValueError("time grid needs dt > 0 and t_end > t_start")

    @property
    def n(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt)) + 1

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    def snap(self, t) -> np.ndarray:
        """Index of the nearest grid time (seeds are started there)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t_start - 0.5 * self.dt) or np.any(t > self.t_end + 0.5 * self.dt):
            raise ValueError("seed time outside the time grid")
        return np.clip(np.rint((t - self.t_start) / self.dt), 0, self.n - 1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class SkeletonPath(Path):
    """A skeleton path with its seed, merge partner and merge time."""

    seed_index: int = -1
    partner: int | None = None
    meet_time: float | None = None

    def __repr__(self) -> str:
        return (
            f"SkeletonPath(seed={self.seed_index}, t0={self.t0!r}, partner={self.partner}, "
            f"meet_time={self.meet_time!r})"
        )


@dataclass(frozen=True)
class SkeletonArrays:
    """Raw skeleton: values on the grid, held at the start value before it."""

    times: np.ndarray
    values: np.ndarray  # (n_seeds, n_grid)
    start: np.ndarray
    partner: np.ndarray  # -1 if the path never merged
    meet_index: np.ndarray  # -1 if the path never merged
    snap_distance: float = 0.0


def skeleton_arrays(
    seeds: SeedSet,
    grid: TimeGrid,
    rng_seed: int,
    *,
    bridge_correction: bool = False,
    order: Sequence[int] | None = None,
) -> SkeletonArrays:
    times = grid.times
    n = times.size
    ns = len(seeds)
    order = np.arange(ns) if order is None else np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(ns)):
        raise ValueError("order must be a permutation of the seed indices")
    start = grid.snap(seeds.points[:, 1]) if ns else np.zeros(0, dtype=np.int64)
    values = np.empty((ns, n))
    partner = np.full(ns, -1, dtype=np.int64)
    meet = np.full(ns, -1, dtype=np.int64)
    sd = math.sqrt(grid.dt)
    done: list[int] = []
    for k in order:
        g = generator(rng_seed, int(k))
        inc = g.normal(0.0, sd, n - 1)
        u = g.random(n)
        s = int(start[k])
        w = np.full(n, seeds.points[k, 0])
        w[s + 1 :] = seeds.points[k, 0] + np.cumsum(inc[s:])
        if done:
            idx = np.array(done, dtype=np.int64)
            m, q = kernels.first_meeting(
                w, np.ascontiguousarray(values[idx]), np.ascontiguousarray(start[idx]), s,
                u if bridge_correction else None, grid.dt,
            )
            if m >= 0:
                other = int(idx[q])
                w[m:] = values[other, m:]
                partner[k], meet[k] = other, m
        values[k] = w
        done.append(int(k))
    snap = float(np.abs(times[start] - seeds.points[:, 1]).max()) if ns else 0.0
    return SkeletonArrays(times, values, start, partner, meet, snap)


def sample_skeleton(
    seeds: SeedSet,
    grid: TimeGrid,
    rng_seed: int,
    *,
    bridge_correction: bool = False,
    order: Sequence[int] | None = None,
) -> PathSet:
    """Skeleton paths, one per seed, in seed order.

    ``meet_time`` is the first grid time from which a path coincides with
    its partner.
    """
    arr = skeleton_arrays(seeds, grid, rng_seed, bridge_correction=bridge_correction, order=order)
    paths = []
    for k in range(len(seeds)):
        s = int(arr.start[k])
        m = int(arr.meet_index[k])
        paths.append(
            SkeletonPath(
                float(arr.times[s]), arr.times[s:], arr.values[k, s:],
                seed_index=k,
                partner=None if m < 0 else int(arr.partner[k]),
                meet_time=None if m < 0 else float(arr.times[m]),
            )
        )
    return PathSet(tuple(paths), "skeleton")


def pair_meeting_time(arr: SkeletonArrays, i: int, j: int) -> float:
    """First grid time from which paths ``i`` and ``j`` coincide; inf if never."""
    s = max(int(arr.start[i]), int(arr.start[j]))
    same = arr.values[i, s:] == arr.values[j, s:]
    if not same.any():
        return math.inf
    return float(arr.times[s + int(np.argmax(same))])


def skeleton_eta(arr: SkeletonArrays, members: Sequence[int]) -> int:
    """Number of distinct end values among the given paths."""
    return int(np.unique(arr.values[list(members), -1]).size)


@dataclass(frozen=True)
class OrderingReport:
    ks_meeting: float
    ks_marginal: float
    ks_eta: float
    threshold: float

    @property
    def passed(self) -> bool:
        return max(self.ks_meeting, self.ks_marginal, self.ks_eta) < self.threshold


def _ks(a: np.ndarray, b: np.ndarray) -> float:
    from scipy.stats import ks_2samp

    if a.size == 0 or b.size == 0:
        return 0.0
    return float(ks_2samp(a, b).statistic)


def ordering_invariance_check(
    seeds: SeedSet,
    grid: TimeGrid,
    n_replicas: int,
    seed: int,
    *,
    order: Sequence[int] | None = None,
    bridge_correction: bool = False,
    threshold: float = 0.06,
) -> OrderingReport:
    """Compare skeleton statistics under the natural order and ``order``.

    ``order`` defaults to the reversed order.  Each replica runs both
    orders on independent streams.  Statistics: meeting time of seeds 0 and
    1 (never-met mapped past the grid end), final position of seed 0, and
    the number of distinct end values over all seeds.
    """
    from .rng import derive_seed

    if len(seeds) < 2:
        raise ValueError("ordering check needs at least two seeds")
    if order is None:
        order = list(range(len(seeds)))[::-1]
    never = grid.t_end + grid.dt
    stats = np.empty((2, 3, n_replicas))
    for r in range(n_replicas):
        for side, ordr in enumerate((None, order)):
            arr = skeleton_arrays(
                seeds, grid, derive_seed(seed, 2 * r + side),
                bridge_correction=bridge_correction, order=ordr,
            )
            mt = pair_meeting_time(arr, 0, 1)
            stats[side, 0, r] = mt if math.isfinite(mt) else never
            stats[side, 1, r] = arr.values[0, -1]
            stats[side, 2, r] = skeleton_eta(arr, range(len(seeds)))
    ks = [_ks(stats[0, q], stats[1, q]) for q in range(3)]
    return OrderingReport(ks[0], ks[1], ks[2], threshold)


def holder_statistic(arr: SkeletonArrays, xi: float) -> np.ndarray:
    """Per-path sup over grid pairs of ``|f(t') - f(t)| / |t' - t|**xi``."""
    return kernels.modulus(np.ascontiguousarray(arr.values), arr.start, arr.times, float(xi))


def holder_refinement_ratio(
    seeds: SeedSet, t_end: float, dt: float, factor: int, xi: float, rng_seed: int,
    *, bridge_correction: bool = False,
) -> tuple[float, float, float]:
    """Mean Hölder statistic on grids ``dt`` and ``dt / factor`` and their ratio.

    The two skeletons use independent randomness.
    """
    t_lo = float(seeds.points[:, 1].min())
    vals = []
    for k, step in enumerate((dt, dt / factor)):
        arr = skeleton_arrays(seeds, TimeGrid(t_lo, t_end, step), rng_seed + k, bridge_correction=bridge_correction)
        vals.append(float(holder_statistic(arr, xi).mean()))
    return vals[0], vals[1], vals[1] / vals[0]
