"""Counting statistics of coalescing webs and their Monte Carlo estimators.

``eta`` is the number of distinct positions at time ``t0 + t`` of paths
that touch ``[a, b]`` at time ``t0``.  Ensembles use one independent web
per replica, built from the replica seed ``derive_seed(seed, r)``, and are
aggregated in replica order, so results do not depend on the thread count.

Discrete ensembles run in lattice units on lazily hashed arrow fields: with
walkers from every lattice point, the paths touching ``[a, b] x {t0}`` are
exactly the walkers started from the lattice sites in the interval.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .lattice_webs import (
    ArrowField,
    ClockField,
    ParityError,
    TruncationError,
    Window,
    _tracks,
    dual_field,
)
from .pathspace import Path, PathSet, eval_path
from .rng import derive_seed, derive_seeds, generator

ALIGN_TOL = 1e-6
PRE_ROLL = 40.0  # clock history before t0; a diagonal outlasting it has probability e^-40


class HorizonError(ValueError):
    """A path set does not cover the queried time span."""


class AlignmentError(ValueError):
    """A query does not sit on the lattice as required."""


# --- types ------------------------------------------------------------------


@dataclass(frozen=True)
class EtaQuery:
    t0: float
    t: float
    a: float
    b: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("eta query needs t > 0")
        if not self.a <= self.b:
            raise ValueError("eta query needs a <= b")


@dataclass(frozen=True)
class EtaSample:
    query: EtaQuery
    count: int
    dual_count: int | None = None


@dataclass(frozen=True)
class StatSummary:
    n: int
    mean: float
    std_error: float
    histogram: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples) -> "StatSummary":
        x = np.asarray(samples)
        n = int(x.size)
        if n == 0:
            return cls(0, math.nan, math.nan, {})
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        hist = {}
        if np.issubdtype(x.dtype, np.integer):
            vals, cnt = np.unique(x, return_counts=True)
            hist = {int(v): int(c) for v, c in zip(vals, cnt)}
        return cls(n, float(x.mean()), se, hist)

    def tail(self, k: int) -> float:
        """Empirical ``P(X >= k)``."""
        if self.n == 0:
            return math.nan
        return sum(c for v, c in self.histogram.items() if v >= k) / self.n

    def tail_se(self, k: int) -> float:
        p = self.tail(k)
        return math.sqrt(p * (1 - p) / self.n) if self.n else math.nan

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": None if math.isnan(self.mean) else self.mean,
            "std_error": None if math.isnan(self.std_error) else self.std_error,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


@dataclass(frozen=True)
class TightnessQuery:
    t: float
    u: float
    placements: tuple = ((0.0, 0.0),)
    delta: float = 1.0

    def __post_init__(self):
        if not (self.t > 0 and self.u > math.sqrt(self.t)):
            raise ValueError("tightness query needs t > 0 and u > sqrt(t)")


@dataclass(frozen=True)
class CensusCounts:
    """Number of lattice points per ``(m_in, m_out)`` class."""

    counts: dict

    def total(self) -> int:
        return sum(self.counts.values())

    def fraction(self, m_in: int, m_out: int | None = None) -> float:
        tot = self.total()
        if tot == 0:
            return 0.0
        hit = sum(c for (i, o), c in self.counts.items() if i == m_in and (m_out is None or o == m_out))
        return hit / tot


@dataclass(frozen=True)
class WebConfig:
    """Simulator settings for ensembles."""

    time_mode: str = "discrete"
    delta: float = 1.0
    two_paths: bool = False

    def __post_init__(self):
        if self.time_mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown time mode {self.time_mode!r}")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")


# --- helpers ----------------------------------------------------------------


def _parallel(fn: Callable, chunks: Sequence, threads: int) -> list:
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, chunks))


def _chunks(seeds: np.ndarray, threads: int, size: int = 256) -> list[np.ndarray]:
    n = seeds.size
    if n == 0:
        return []
    size = max(1, min(size, -(-n // max(threads, 1))))
    return [seeds[k : k + size] for k in range(0, n, size)]


def _lattice_time(t: float, delta: float, what: str) -> int:
    v = t / (delta * delta)
    r = round(v)
    if abs(v - r) > ALIGN_TOL * max(1.0, abs(v)):
        raise AlignmentError(f"{what} = {t} is not on the time lattice of spacing {delta * delta}")
    return int(r)


def _sites(lo: float, hi: float, parity: int) -> np.ndarray:
    """Integers of the given parity in ``[lo, hi]`` (endpoints up to rounding)."""
    first = math.ceil(lo - 1e-9)
    last = math.floor(hi + 1e-9)
    if first % 2 != parity % 2:
        first += 1
    if first > last:
        return np.zeros(0, dtype=np.int64)
    return np.arange(first, last + 1, 2, dtype=np.int64)


def _distinct_per_row(x: np.ndarray) -> np.ndarray:
    if x.shape[1] == 0:
        return np.zeros(x.shape[0], dtype=np.int64)
    s = np.sort(x, axis=1)
    return 1 + (np.diff(s, axis=1) != 0).sum(axis=1)


def _touch_tol(a: float, b: float) -> float:
    return 1e-9 * max(1.0, abs(a), abs(b))


def _starts_by(p: Path, t: float) -> bool:
    # rescaled start times may land a few ulps past the query time
    return p.t0 <= t + 1e-12 * max(1.0, abs(t))


# --- eta --------------------------------------------------------------------


def count_eta(K: PathSet, q: EtaQuery) -> int:
    """Distinct values at ``t0 + t`` of the paths touching ``[a, b] x {t0}``."""
    tol = _touch_tol(q.a, q.b)
    t1 = q.t0 + q.t
    finals = set()
    for p in K:
        if not _starts_by(p, q.t0):
            continue
        y = eval_path(p, q.t0)
        if not (q.a - tol <= y <= q.b + tol):
            continue
        if p.horizon < t1 - 1e-12 * max(1.0, abs(t1)):
            raise HorizonError(f"path with horizon {p.horizon} does not reach t0 + t = {t1}")
        finals.add(eval_path(p, t1))
    return len(finals)


def _discrete_eta(seeds: np.ndarray, sites: np.ndarray, J0: int, T: int) -> np.ndarray:
    if sites.size == 0:
        return np.zeros(seeds.size, dtype=np.int64)
    fin = kernels.walk_finals(seeds, sites, J0, J0 + T, 1, 0, 0, 0)
    return _distinct_per_row(fin)


def _continuous_eta(seed: int, lo: float, hi: float, J0: float, T: float) -> int:
    """Eta in lattice units for one continuous-time web.

    Paths touching ``[lo, hi]`` at ``J0`` either wait at a site of the
    interval or are in flight on a diagonal whose position at ``J0`` lies
    in it; both kinds are started and merged where they share a vertex.
    """
    buf = int(T + 10 * math.sqrt(T) + 10)
    w = Window(math.floor(lo) - buf, math.ceil(hi) + buf, J0 - PRE_ROLL, J0 + T)
    c = ClockField(w, int(seed))
    eps = 1e-9
    starts = []
    for i in range(math.ceil(lo - eps), math.floor(hi + eps) + 1):
        starts.append((i,) + c.next_event(i, J0))
    for src in range(math.ceil(lo - eps) - 1, math.floor(hi + eps) + 2):
        # every event at src launches a diagonal; it is still in flight at J0
        # until the target site fires, so scan back until both neighbours have
        ts, ss = c.events(src)
        for k in range(int(np.searchsorted(ts, J0, side="left")) - 1, -1, -1):
            t_k = float(ts[k])
            if c.next_event(src - 1, t_k)[0] <= J0 and c.next_event(src + 1, t_k)[0] <= J0:
                break
            sgn = int(ss[k])
            t_arr, _ = c.next_event(src + sgn, t_k)
            if t_arr <= J0:
                continue
            x = src + sgn * (J0 - t_k) / (t_arr - t_k)
            if lo - eps <= x <= hi + eps:
                starts.append((src, t_k, sgn))
    return _coalescing_finals(c, starts, J0 + T)


def _coalescing_finals(c: ClockField, starts, horizon: float) -> int:
    """Distinct end positions of continuous walkers, merging at shared vertices.

    Each start is ``(site, T, sign)``: the walker sits at ``site`` until the
    event at time ``T`` whose mark is ``sign``.
    """
    seen: dict[tuple[int, float], float] = {}
    finals = set()
    for cur, T, sig in starts:
        trail = []
        while True:
            if T > horizon:
                end = float(cur)
                break
            key = (cur, T)
            if key in seen:
                end = seen[key]
                break
            trail.append(key)
            T2, sig2 = c.next_event(cur + sig, T)
            if T2 > horizon:
                end = cur + sig * (horizon - T) / (T2 - T)
                break
            cur, T, sig = cur + sig, T2, sig2
        for key in trail:
            seen[key] = end
        finals.add(end)
    return len(finals)


def eta_ensemble(
    config: WebConfig, q: EtaQuery, n_replicas: int, seed: int, *, threads: int = 1
) -> StatSummary:
    """Summary of eta over independent rescaled webs."""
    return StatSummary.from_samples(eta_samples(config, q, n_replicas, seed, threads=threads))


def eta_samples(config: WebConfig, q: EtaQuery, n_replicas: int, seed: int, *, threads: int = 1) -> np.ndarray:
    d = config.delta
    seeds = derive_seeds(seed, n_replicas)
    if config.time_mode == "discrete":
        J0 = _lattice_time(q.t0, d, "t0")
        T = _lattice_time(q.t, d, "t")
        sites = _sites(q.a / d, q.b / d, J0)
        parts = _parallel(lambda ch: _discrete_eta(ch, sites, J0, T), _chunks(seeds, threads), threads)
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    J0, T = q.t0 / (d * d), q.t / (d * d)
    lo, hi = q.a / d, q.b / d
    out = _parallel(
        lambda ch: np.array([_continuous_eta(int(s), lo, hi, J0, T) for s in ch], dtype=np.int64),
        _chunks(seeds, threads, 16), threads,
    )
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def eta_mean_target(q: EtaQuery) -> float:
    """Continuum mean ``1 + (b - a) / sqrt(pi t)``."""
    return 1.0 + (q.b - q.a) / math.sqrt(math.pi * q.t)


# --- meeting probability ----------------------------------------------------


def theta_closed(dist: float, t: float) -> float:
    """Probability that Brownian motions ``dist`` apart meet by time ``t``.

    Their difference is a Brownian motion of variance ``2 t``, so by the
    reflection principle the answer is ``erfc(dist / (2 sqrt t))``.
    """
    if not t > 0:
        raise ValueError("theta needs t > 0")
    return math.erfc(abs(dist) / (2.0 * math.sqrt(t)))


def theta_mc(dist: float, t: float, n_pairs: int, seed: int, *, n_steps: int = 256) -> float:
    """Meeting frequency of simulated pairs of independent Brownian motions.

    Each step draws both increments, then checks for a sign change of the
    difference or, failing that, an unobserved crossing with the bridge
    probability ``exp(-D0 D1 / dt)`` of the variance-2 difference.
    """
    if not t > 0:
        raise ValueError("theta needs t > 0")
    if n_pairs <= 0:
        return math.nan
    if dist == 0:
        return 1.0
    dt = t / n_steps
    sd = math.sqrt(dt)
    met = 0
    g = generator(seed, 0)
    chunk = 20000
    for start in range(0, n_pairs, chunk):
        m = min(chunk, n_pairs - start)
        d = np.full(m, abs(float(dist)))
        hit = np.zeros(m, dtype=bool)
        for _ in range(n_steps):
            d1 = d + sd * g.standard_normal(m) - sd * g.standard_normal(m)
            u = g.random(m)
            cross = d1 <= 0
            with np.errstate(over="ignore"):
                p = np.where(cross, 1.0, np.exp(-np.maximum(d, 0) * np.maximum(d1, 0) / dt))
            hit |= u < p
            d = d1
        met += int(hit.sum())
    return met / n_pairs


# --- tail bound -------------------------------------------------------------


@dataclass(frozen=True)
class TailCheck:
    k: int
    observed: float
    bound: float
    std_error: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class EtaBoundReport:
    checks: tuple
    k_max: int
    p2: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def check_etabound(summary: StatSummary, k_max: int = 3, *, n_se: float = 3.0) -> EtaBoundReport:
    """Check ``P(eta >= k) <= P(eta >= 2)**(k - 1)`` for ``k = 3..k_max``.

    The slack is ``n_se`` combined standard errors (delta method on the
    bound).  Orders ``k`` whose bound predicts fewer than one exceedance in
    the sample cannot be resolved; ``k_max`` is lowered with a warning.
    """
    if summary.n == 0:
        return EtaBoundReport((), k_max, math.nan)
    p2, s2 = summary.tail(2), summary.tail_se(2)
    usable = 2
    for k in range(3, k_max + 1):
        if summary.n * p2 ** (k - 1) >= 1.0:
            usable = k
        else:
            break
    if usable < k_max and p2 > 0:
        # with p2 = 0 every tail beyond 2 is also 0 and the bound holds exactly
        warnings.warn(f"sample too small to resolve orders above {usable} (k_max={k_max})", stacklevel=2)
        k_max = max(usable, 3)
    checks = []
    for k in range(3, k_max + 1):
        pk, sk = summary.tail(k), summary.tail_se(k)
        bound = p2 ** (k - 1)
        se = math.hypot(sk, (k - 1) * p2 ** (k - 2) * s2)
        margin = bound + n_se * se - pk
        checks.append(TailCheck(k, pk, bound, se, margin, margin >= 0))
    return EtaBoundReport(tuple(checks), k_max, p2)


def tail_scaling(epsilons: Sequence[float], summaries: Sequence[StatSummary], t: float, k: int = 2):
    """Least-squares fit of ``log P(eta >= k)`` against ``log(eps / sqrt t)``.

    Returns ``(slope, C_k)``; the predicted slope is ``k - 1``.
    """
    x, y = [], []
    for e, s in zip(epsilons, summaries):
        p = s.tail(k)
        if p > 0:
            x.append(math.log(e / math.sqrt(t)))
            y.append(math.log(p))
    if len(x) < 2:
        return math.nan, math.nan
    slope, icpt = np.polyfit(x, y, 1)
    return float(slope), float(math.exp(icpt))


# --- tightness --------------------------------------------------------------


def _first_entry(p: Path, lo_t: float, hi_t: float, xl: float, xr: float) -> float:
    """Earliest time in ``[lo_t, hi_t]`` at which the path lies in ``[xl, xr]``."""
    lo_t = max(lo_t, p.t0)
    if lo_t > hi_t:
        if not _starts_by(p, hi_t):
            return math.inf
        lo_t = hi_t
    inner = p.times[(p.times > lo_t) & (p.times < hi_t)]
    ts = np.concatenate([[lo_t], inner, [hi_t]])
    xs = eval_path(p, ts)
    for k in range(ts.size):
        if xl <= xs[k] <= xr:
            if k == 0:
                return float(ts[0])
            # entry lies on the previous segment
            x0, x1, t0, t1 = xs[k - 1], xs[k], ts[k - 1], ts[k]
            edge = xl if x0 < xl else xr
            return float(t0 + (edge - x0) / (x1 - x0) * (t1 - t0))
    return math.inf


def _reaches(p: Path, after: float, end: float, x0: float, half: float) -> bool:
    inner = p.times[(p.times > after) & (p.times < end)]
    ts = np.concatenate([[after], inner, [end]])
    return bool(np.max(np.abs(eval_path(p, ts) - x0)) >= half)


def indicator_A(K: PathSet, x0: float, t0: float, t: float, u: float) -> bool:
    """Whether a path touches the small rectangle and later the big one's sides.

    Small rectangle: ``|x - x0| <= sqrt(t)/2`` for ``t0 <= s <= t0 + t``.
    Sides: ``x = x0 +- u/2`` for ``t0 <= s <= t0 + 2t``.
    """
    if not (t > 0 and u > math.sqrt(t)):
        raise ValueError("indicator_A needs t > 0 and u > sqrt(t)")
    h = math.sqrt(t) / 2
    end = t0 + 2 * t
    for p in K:
        if not _starts_by(p, t0 + t):
            continue
        if p.horizon < end - 1e-12 * max(1.0, abs(end)):
            raise HorizonError(f"path with horizon {p.horizon} does not reach {end}")
        te = _first_entry(p, t0, t0 + t, x0 - h, x0 + h)
        if te < math.inf and _reaches(p, te, end, x0, u / 2):
            return True
    return False


@dataclass(frozen=True)
class GEstimate:
    t: float
    u: float
    delta: float
    placements: tuple
    per_placement: tuple  # mean of the indicator per placement
    summary: StatSummary  # indicator samples at the maximising placement

    @property
    def g(self) -> float:
        return self.summary.mean if self.summary.n else 0.0

    @property
    def std_error(self) -> float:
        return self.summary.std_error if self.summary.n > 1 else 0.0

    @property
    def normalised(self) -> float:
        """``t**(-3/2) g``."""
        return self.g * self.t**-1.5

    @property
    def bound_ratio(self) -> float:
        """``g u**4 / t**2``."""
        return self.g * self.u**4 / self.t**2


def cell_placements(n_space: int = 4, n_time: int = 2) -> tuple:
    """Anchors (lattice units) on a sub-grid of the lattice cell ``[0, 2) x [0, 1)``."""
    return tuple((2.0 * i / n_space, j / n_time) for j in range(n_time) for i in range(n_space))


def estimate_g(
    delta: float,
    t: float,
    u: float,
    n_replicas: int,
    seed: int,
    *,
    placements: Sequence[tuple[float, float]] | None = None,
    window_halfwidth: float | None = None,
    threads: int = 1,
) -> GEstimate:
    """Monte Carlo ``g_delta(t, u)``: max over placements of ``P(A)``.

    Placements are anchors in lattice units; by translation invariance only
    their position within one lattice cell matters.  Each placement gets
    its own replica seeds.  If ``u / 2`` exceeds ``window_halfwidth`` the
    event is impossible and the estimate is 0.
    """
    if not (t > 0 and u > math.sqrt(t)):
        raise ValueError("estimate_g needs t > 0 and u > sqrt(t)")
    placements = tuple(cell_placements() if placements is None else placements)
    if window_halfwidth is not None and u / 2 > window_halfwidth:
        zero = StatSummary.from_samples(np.zeros(n_replicas))
        return GEstimate(t, u, delta, placements, tuple(0.0 for _ in placements), zero)
    hw = math.sqrt(t) / (2 * delta)
    tau = t / delta**2
    hU = u / (2 * delta)
    best, means = None, []
    for k, (X0, J0) in enumerate(placements):
        seeds = derive_seeds(derive_seed(seed, (1 << 32) + k), n_replicas)
        parts = _parallel(
            lambda ch: kernels.tightness_hits(ch, float(X0), hw, float(J0), tau, hU),
            _chunks(seeds, threads), threads,
        )
        hits = np.concatenate(parts).astype(float) if parts else np.zeros(0)
        s = StatSummary.from_samples(hits)
        means.append(s.mean if s.n else 0.0)
        if best is None or (s.n and s.mean > best.mean):
            best = s
    return GEstimate(t, u, delta, placements, tuple(means), best)


# --- B1 / B2 ----------------------------------------------------------------


def interval_representatives(epsilon: float, delta: float) -> list[float]:
    """Left ends ``a`` (lattice units, in ``[0, 2)``) covering every site pattern.

    The set of even sites in ``[a, a + L]`` changes only where ``a`` or
    ``a + L`` crosses an even integer; breakpoints and midpoints between
    them give one representative per pattern.
    """
    L = round(epsilon / delta, 9)
    bps = sorted({0.0, round((-L) % 2.0, 9) % 2.0})
    reps = list(bps)
    ext = bps + [2.0]
    reps += [(ext[k] + ext[k + 1]) / 2 for k in range(len(bps))]
    return sorted(set(reps))


@dataclass(frozen=True)
class BStat:
    delta: float
    epsilon: float
    b1: float
    b1_se: float
    b2: float
    b2_se: float
    placements: tuple
    n: int


def b_statistics(
    delta_sequence: Sequence[float],
    t0: float,
    t: float,
    epsilon_sequence: Sequence[float],
    n_replicas: int,
    seed: int,
    *,
    threads: int = 1,
) -> list[BStat]:
    """Sup over ``a`` of ``P(eta >= 2)`` and ``P(eta >= 3) / eps`` per ``(delta, eps)``."""
    out = []
    q_index = 0
    for d in delta_sequence:
        J0 = _lattice_time(t0, d, "t0")
        T = _lattice_time(t, d, "t")
        for e in epsilon_sequence:
            L = e / d
            b1s, b2s = [(0.0, 0.0)], [(0.0, 0.0)]
            reps = interval_representatives(e, d)
            for alpha in reps:
                lo = alpha + (J0 % 2)
                sites = _sites(lo, lo + L, J0)
                seeds = derive_seeds(derive_seed(seed, (2 << 32) + q_index), n_replicas)
                q_index += 1
                parts = _parallel(lambda ch: _discrete_eta(ch, sites, J0, T), _chunks(seeds, threads), threads)
                s = StatSummary.from_samples(np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64))
                if s.n == 0:
                    continue
                b1s.append((s.tail(2), s.tail_se(2)))
                b2s.append((s.tail(3) / e, s.tail_se(3) / e))
            (b1, b1_se), (b2, b2_se) = max(b1s), max(b2s)
            out.append(BStat(d, e, b1, b1_se, b2, b2_se, tuple(reps), n_replicas))
    return out


# --- invariance checks ------------------------------------------------------


def donsker_marginal_check(delta: float, t_eval: float, n_replicas: int, seed: int) -> float:
    """KS distance of the rescaled single-walker position at ``t_eval`` to N(0, t_eval)."""
    from scipy.stats import kstest

    if not t_eval > 0:
        raise ValueError("t_eval must be positive")
    if n_replicas <= 0:
        return 0.0
    T = _lattice_time(t_eval, delta, "t_eval")
    fin = kernels.walk_finals(derive_seeds(seed, n_replicas), np.zeros(1, dtype=np.int64), 0, T, 1, 0, 0, 0)
    x = fin[:, 0] * delta
    return float(kstest(x, "norm", args=(0.0, math.sqrt(t_eval))).statistic)


def meeting_times(delta: float, dist: float, t_max: float, n_replicas: int, seed: int, *, threads: int = 1):
    """Rescaled first meeting times of two walkers ``dist`` apart (inf if none by ``t_max``)."""
    m = round(dist / delta)
    if abs(m - dist / delta) > ALIGN_TOL or m % 2:
        raise AlignmentError("walkers must start an even number of sites apart")
    T = _lattice_time(t_max, delta, "t_max")
    seeds = derive_seeds(seed, n_replicas)
    parts = _parallel(lambda ch: kernels.meet_rows(ch, 0, int(m), 0, T), _chunks(seeds, threads), threads)
    rows = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    return np.where(rows >= 0, rows * delta * delta, math.inf)


def meeting_cdf_distance(delta: float, dist: float, t_max: float, n_replicas: int, seed: int, *, threads: int = 1) -> float:
    """Sup over ``t <= t_max`` of |empirical meeting CDF - theta_closed(dist, t)|."""
    mt = meeting_times(delta, dist, t_max, n_replicas, seed, threads=threads)
    if mt.size == 0:
        return 0.0
    finite = np.sort(mt[np.isfinite(mt)])
    grid = np.unique(np.concatenate([finite, [t_max]]))
    grid = grid[grid > 0]
    emp_hi = np.searchsorted(finite, grid, side="right") / mt.size
    emp_lo = np.searchsorted(finite, grid, side="left") / mt.size
    th = np.array([theta_closed(dist, s) for s in grid])
    return float(max(np.abs(emp_hi - th).max(), np.abs(emp_lo - th).max()))


# --- duality and census -----------------------------------------------------


def _check_dual_query(q: EtaQuery) -> tuple[int, int, int, int]:
    vals = (q.t0, q.t0 + q.t, q.a, q.b)
    if any(abs(v - round(v)) > 1e-12 for v in vals):
        raise AlignmentError("dual query needs integer times and endpoints")
    J0, J1, a, b = (int(round(v)) for v in vals)
    if (a - J0) % 2 or (b - J0) % 2:
        raise AlignmentError("dual query endpoints must be lattice sites at time t0")
    return J0, J1, a, b


def count_eta_dual(forward: ArrowField, q: EtaQuery) -> tuple[int, int]:
    """``(eta, eta_dual)`` for a lattice-aligned query in lattice units."""
    if forward.backward:
        raise ValueError("count_eta_dual expects a forward field")
    J0, J1, a, b = _check_dual_query(q)
    w = forward.window
    fx = np.arange(a, b + 1, 2, dtype=np.int64)
    tr, _, _ = _tracks(forward, fx, np.full(fx.size, J0), j_end=J1)
    eta = int(np.unique(tr[:, -1]).size)
    d = dual_field(forward)
    span = J1 - J0
    # only dual walkers from these sites can reach [a, b] at time t0
    dx = np.array([i for i in range(a - span + 1, b + span) if d.is_point(i, J1)], dtype=np.int64)
    if dx.size == 0:
        return eta, 0
    if not w.periodic and (dx.min() - span < w.i_min or dx.max() + span > w.i_max):
        raise TruncationError("window too narrow for the dual query")
    dtr, _, _ = _tracks(d, dx, np.full(dx.size, J1), j_end=J0)
    at0 = dtr[:, 0]
    eta_dual = int(np.unique(at0[(at0 >= a) & (at0 <= b)]).size)
    return eta, eta_dual


def eta_dual_sample(forward: ArrowField, q: EtaQuery) -> EtaSample:
    eta, dual = count_eta_dual(forward, q)
    return EtaSample(q, eta, dual)


def _census_rows(f: ArrowField, region: Window) -> dict:
    counts: dict = {}
    rows = region.rows
    sites = region.sites
    src_rows = rows[:-1] if not f.backward else rows[1:][::-1]
    for j in src_rows:
        nxt = j - 1 if f.backward else j + 1
        src = sites[f.is_point(sites, j)]
        if src.size == 0:
            continue
        dst = src + f.arrow(src, j)
        if region.periodic:
            dst = region.wrap(dst)
        pts = sites[f.is_point(sites, nxt)]
        m_in = {int(i): 0 for i in pts}
        for v in dst.tolist():
            if v in m_in:
                m_in[v] += 1
        for i in pts:
            key = (m_in[int(i)], 1)
            counts[key] = counts.get(key, 0) + 1
    return counts


def point_census(f: ArrowField, region: Window | None = None) -> tuple[CensusCounts, CensusCounts]:
    """In/out degree census of the all-site web and of its dual.

    With walkers from every point, every outgoing segment carries a path, so
    ``m_out = 1`` and ``m_in`` counts arrows pointing at the point.  Points
    of the first row of the region (last row for the dual) are skipped since
    their incoming segments lie outside it.
    """
    region = f.window if region is None else region
    fwd = f if not f.backward else dual_field(f)
    return CensusCounts(_census_rows(fwd, region)), CensusCounts(_census_rows(dual_field(fwd), region))


def distinct_by_row(f: ArrowField, j_start: int, j_end: int) -> np.ndarray:
    """Distinct positions per row of walkers started at every site of row ``j_start``."""
    w = f.window
    sites = w.sites[f.is_point(w.sites, j_start)]
    tr, _, _ = _tracks(f, sites, np.full(sites.size, j_start), j_end=j_end)
    tr = w.wrap(tr) if w.periodic else tr
    return np.array([np.unique(tr[:, k]).size for k in range(tr.shape[1])])


__all__ = [
    "AlignmentError", "BStat", "CensusCounts", "EtaBoundReport", "EtaQuery", "EtaSample", "GEstimate",
    "HorizonError", "ParityError", "StatSummary", "TailCheck", "TightnessQuery", "WebConfig",
    "b_statistics", "cell_placements", "check_etabound", "count_eta", "count_eta_dual",
    "donsker_marginal_check", "estimate_g", "eta_dual_sample", "eta_ensemble", "eta_mean_target",
    "eta_samples", "indicator_A", "interval_representatives", "meeting_cdf_distance", "meeting_times",
    "point_census", "tail_scaling", "theta_closed", "theta_mc", "distinct_by_row",
]
