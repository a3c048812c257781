"""Acceptance suites with their registered settings.

Each suite returns :class:`Line` records (criterion, target, observed,
tolerance, pass); a suite passes when all of its lines pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import lattice_webs as lw
from . import oracles
from .pathspace import Path, PathSet, hausdorff_dist_with_error, path_dist_with_error
from .rng import derive_seed, generator
from .skeleton import SeedSet, TimeGrid, holder_refinement_ratio, ordering_invariance_check
from .spacetime import SpaceTimePoint, rho
from .webstats import (
    EtaQuery,
    WebConfig,
    b_statistics,
    cell_placements,
    check_etabound,
    count_eta_dual,
    donsker_marginal_check,
    estimate_g,
    eta_ensemble,
    eta_mean_target,
    meeting_cdf_distance,
    theta_closed,
    theta_mc,
)


@dataclass(frozen=True)
class Line:
    criterion: str
    target: str
    observed: str
    tolerance: str
    passed: bool


@dataclass(frozen=True)
class SuiteResult:
    name: str
    number: int
    lines: tuple
    seconds: float

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines)


def _f(x: float, nd: int = 4) -> str:
    return f"{x:.{nd}f}"


# --- 1, 2: eta mean and tail bound -----------------------------------------


def suite_eta_mean(seed: int = 101, threads: int = 1) -> list[Line]:
    q = EtaQuery(0.0, 1.0, 0.0, 1.0)
    target = eta_mean_target(q)
    fine = eta_ensemble(WebConfig("discrete", 0.02), q, 2000, seed, threads=threads)
    coarse = eta_ensemble(WebConfig("discrete", 0.04), q, 2000, derive_seed(seed, 1 << 40), threads=threads)
    tol = 0.05 * target + 3 * fine.std_error
    bias_f, bias_c = abs(fine.mean - target), abs(coarse.mean - target)
    return [
        Line("1 eta mean, delta=0.02", _f(target), _f(fine.mean), f"+-{_f(tol)}", bias_f <= tol),
        Line(
            "1 bias shrinks 0.04 -> 0.02",
            f"|bias(0.02)| <= |bias(0.04)| + 2SE",
            f"{_f(bias_f)} vs {_f(bias_c)}",
            f"2SE={_f(2 * fine.std_error)}",
            bias_f <= bias_c + 2 * fine.std_error,
        ),
    ]


def suite_tail_bound(seed: int = 101, threads: int = 1) -> list[Line]:
    out = []
    for eps in (0.25, 0.5, 1.0):
        s = eta_ensemble(WebConfig("discrete", 0.02), EtaQuery(0.0, 1.0, 0.0, eps), 2000, seed, threads=threads)
        rep = check_etabound(s, 3)
        c = rep.checks[0]
        out.append(
            Line(f"2 P(eta>=3) <= P(eta>=2)^2, eps={eps}", f"<= {_f(c.bound)}", _f(c.observed),
                 f"3SE={_f(3 * c.std_error)}", c.passed)
        )
    return out


# --- 3: theta ---------------------------------------------------------------


def suite_theta(seed: int = 103, threads: int = 1) -> list[Line]:
    diffs = []
    for k, r in enumerate((0.5, 1.0, 2.0)):
        diffs.append(abs(theta_closed(r, 1.0) - theta_mc(r, 1.0, 100_000, derive_seed(seed, k))))
    worst = max(diffs)
    return [Line("3 max |theta_closed - theta_mc|", "0", _f(worst), "< 0.01", worst < 0.01)]


# --- 4: Donsker -------------------------------------------------------------


def suite_donsker(seed: int = 104, threads: int = 1) -> list[Line]:
    ks = donsker_marginal_check(0.01, 1.0, 10_000, seed)
    sup = meeting_cdf_distance(0.01, 1.0, 1.0, 10_000, derive_seed(seed, 1), threads=threads)
    return [
        Line("4 KS single walker vs N(0,1), delta=0.01", "0", _f(ks), "< 0.02", ks < 0.02),
        Line("4 meeting-time CDF vs theta, d=1", "0", _f(sup), "< 0.02", sup < 0.02),
    ]


# --- 5: tightness -----------------------------------------------------------

TIGHT_T = (0.16, 0.08, 0.04, 0.02, 0.01)


def tightness_lines(ests, fit_t_min: float = 0.04, n_se: float = 3.0) -> list[Line]:
    """Trend and single-constant checks on a halving sequence of estimates."""
    out = []
    for prev, cur in zip(ests, ests[1:]):
        sp = prev.std_error * prev.t**-1.5
        sc = cur.std_error * cur.t**-1.5
        slack = n_se * math.hypot(sp, sc)
        out.append(
            Line(
                f"5 g/t^1.5 nonincreasing, t {prev.t} -> {cur.t}",
                f"<= {_f(prev.normalised, 2)}",
                _f(cur.normalised, 2),
                f"3SE={_f(slack, 2)}",
                cur.normalised <= prev.normalised + slack,
            )
        )
    fit = [e for e in ests if e.t >= fit_t_min]
    held = [e for e in ests if e.t < fit_t_min]
    C = max(e.bound_ratio for e in fit) if fit else 0.0
    for e in held:
        se = n_se * e.std_error * e.u**4 / e.t**2
        out.append(
            Line(f"5 g u^4/t^2 <= C (fit on t>={fit_t_min}), t={e.t}", f"<= {_f(C, 2)}",
                 _f(e.bound_ratio, 2), f"3SE={_f(se, 2)}", e.bound_ratio <= C + se)
        )
    return out


def suite_tightness(seed: int = 105, threads: int = 1) -> list[Line]:
    ests = [
        estimate_g(0.02, t, 1.0, 2000, derive_seed(seed, k), placements=cell_placements(4, 2), threads=threads)
        for k, t in enumerate(TIGHT_T)
    ]
    return tightness_lines(ests)


# --- 6: duality -------------------------------------------------------------


def exhaustive_dual(a: int = 0, b: int = 6, t: int = 2) -> tuple[int, int]:
    """Fields checked and mismatches for the all-fields dual comparison.

    Every forward point within ``[a - t, b + t]`` below row ``t`` is
    enumerated; this covers all arrows read by forward walkers from
    ``[a, b]`` and by dual walkers that reach it.  The remaining arrows are
    filled with a constant, and both constants are tried.
    """
    w = lw.Window(a - 3 * t, b + 3 * t, 0, t)
    pts = [(i, j) for j in range(t) for i in range(a - t, b + t + 1) if (i + j) % 2 == 0]
    n = bad = 0
    for fill in (1, -1):
        base = {(i, j): fill for j in range(t + 1) for i in range(w.i_min, w.i_max + 1) if (i + j) % 2 == 0}
        for arr in oracles.enumerate_fields(pts):
            full = dict(base)
            full.update(arr)
            f = lw.ArrowField.from_dict(w, full)
            eta, dual = count_eta_dual(f, EtaQuery(0, t, a, b))
            be = oracles.brute_eta(full, 0, t, a, b)
            bd = oracles.brute_eta_dual(full, 0, t, a, b)
            n += 1
            bad += int(eta != be or dual != bd or eta != 1 + dual)
    return n, bad


def random_dual(n: int, seed: int) -> tuple[int, int]:
    g = generator(seed, 6)
    bad = 0
    for r in range(n):
        t0 = int(g.integers(0, 20))
        t = int(g.integers(1, 40))
        a = 2 * int(g.integers(-10, 10)) + (t0 % 2)
        b = a + 2 * int(g.integers(0, 20))
        w = lw.Window(a - 2 * t - 4, b + 2 * t + 4, t0, t0 + t)
        f = lw.sample_arrow_field(w, derive_seed(seed, r))
        eta, dual = count_eta_dual(f, EtaQuery(t0, t, a, b))
        bad += int(eta != 1 + dual)
    return n, bad


def suite_dual(seed: int = 106, threads: int = 1) -> list[Line]:
    n1, b1 = random_dual(500, seed)
    n2, b2 = exhaustive_dual()
    return [
        Line("6 eta = 1 + eta_dual, random realizations", "0 mismatches", f"{b1} of {n1}", "exact", b1 == 0),
        Line("6 eta = 1 + eta_dual, all fields (brute force)", "0 mismatches", f"{b2} of {n2}", "exact", b2 == 0),
    ]


# --- 7: metrics -------------------------------------------------------------


def _rand_point(g) -> SpaceTimePoint:
    u = g.random()
    t = math.inf if u < 0.05 else -math.inf if u < 0.1 else float(g.normal(0, 3))
    x = float(g.normal(0, 3)) if g.random() > 0.05 else math.inf
    return SpaceTimePoint(x, t)


def _rand_path(g) -> Path:
    t0 = float(g.uniform(-3, 3))
    k = int(g.integers(1, 6))
    times = t0 + np.concatenate([[0.0], np.cumsum(g.uniform(0.05, 1.5, k - 1))])
    xs = float(g.normal(0, 2)) + np.concatenate([[0.0], np.cumsum(g.normal(0, 1, k - 1))])
    return Path(t0, times, xs)


def metric_violations(n: int, seed: int) -> dict:
    g = generator(seed, 7)
    out = {"points": 0, "paths": 0, "sets": 0}
    for _ in range(n):
        p = [_rand_point(g) for _ in range(3)]
        d = lambda i, j: rho(p[i], p[j])
        ok = (d(0, 0) == 0 and d(0, 1) == d(1, 0) and d(0, 1) <= d(0, 2) + d(2, 1) + 1e-9)
        out["points"] += int(not ok)
        q = [_rand_path(g) for _ in range(3)]
        D = {(i, j): path_dist_with_error(q[i], q[j]) for i in range(3) for j in range(3) if i != j}
        ok = path_dist_with_error(q[0], q[0]).value == 0
        ok &= D[0, 1].value == D[1, 0].value and D[0, 1].value > 0
        ok &= D[0, 1].value <= D[0, 2].value + D[2, 1].value + 1e-9 + D[0, 2].refinement_error + D[2, 1].refinement_error
        out["paths"] += int(not ok)
        K = [PathSet(tuple(_rand_path(g) for _ in range(int(g.integers(1, 4))))) for _ in range(3)]
        H = {(i, j): hausdorff_dist_with_error(K[i], K[j]) for i in range(3) for j in range(3) if i != j}
        ok = hausdorff_dist_with_error(K[0], K[0])[0] == 0
        ok &= H[0, 1][0] == H[1, 0][0]
        ok &= H[0, 1][0] <= H[0, 2][0] + H[2, 1][0] + 1e-9 + H[0, 2][1] + H[2, 1][1]
        out["sets"] += int(not ok)
    return out


def infinity_identification(seed: int, n: int = 1000) -> int:
    g = generator(seed, 8)
    bad = 0
    for _ in range(n):
        x1, x2 = g.normal(0, 10, 2)
        for t in (math.inf, -math.inf):
            bad += int(rho(SpaceTimePoint(float(x1), t), SpaceTimePoint(float(x2), t)) != 0.0)
    return bad


def suite_metrics(seed: int = 107, threads: int = 1) -> list[Line]:
    v = metric_violations(1000, seed)
    inf_bad = infinity_identification(seed)
    lines = [
        Line(f"7 metric axioms, {k}", "0 violations", f"{v[k]} of 1000", "1e-9 + refinement", v[k] == 0)
        for k in ("points", "paths", "sets")
    ]
    lines.append(Line("7 rho((x,+-inf),(x',+-inf)) = 0", "0", f"{inf_bad} nonzero", "exact", inf_bad == 0))
    return lines


# --- 8: coalescence and non-crossing ---------------------------------------

EXHAUSTIVE_WINDOWS = (
    lw.Window(0, 4, 0, 3, "periodic"),
    lw.Window(0, 8, 0, 1, "periodic"),
    lw.Window(-2, 2, 0, 2, "open"),
)


def _window_points(w: lw.Window) -> list[tuple[int, int]]:
    return [(int(i), int(j)) for j in w.rows for i in w.sites if (i + j) % 2 == 0]


def exhaustive_coalescence() -> tuple[int, int]:
    fields = bad = 0
    for w in EXHAUSTIVE_WINDOWS:
        pts = _window_points(w)
        for arr in oracles.enumerate_fields(pts):
            f = lw.ArrowField.from_dict(w, arr)
            starts = lw.all_starts(f)
            x0 = np.array([s[0] for s in starts])
            s0 = np.array([s[1] for s in starts])
            tr, j_lo, _ = lw._tracks(f, x0, s0)
            v = oracles.pair_violations(tr, s0, j_lo, period=w.period)
            fields += 1
            bad += v["coalescence"] + v["slope"] + v["crossing"]
            if not w.periodic:
                d = lw.dual_field(f)
                ds = lw.all_starts(d)
                dx = np.array([s[0] for s in ds])
                dt = np.array([s[1] for s in ds])
                dtr, d_lo, _ = lw._tracks(d, dx, dt)
                dv = oracles.pair_violations(dtr, dt, d_lo, backward=True)
                bad += dv["coalescence"] + dv["crossing"]
                bad += oracles.forward_dual_crossings(tr, s0, j_lo, dtr, dt, d_lo)[0]
    return fields, bad


def random_coalescence(seed: int, n_realizations: int = 2, half: int = 30, rows: int = 40) -> dict:
    tot = {"pairs": 0, "coalescence": 0, "crossing": 0, "slope": 0, "dual_pairs": 0, "dual_crossing": 0}
    for r in range(n_realizations):
        w = lw.Window(-half - rows - 2, half + rows + 2, 0, rows)
        f = lw.sample_arrow_field(w, derive_seed(seed, r))
        starts = [(i, j) for j in range(rows) for i in range(-half, half + 1) if (i + j) % 2 == 0]
        x0 = np.array([s[0] for s in starts])
        s0 = np.array([s[1] for s in starts])
        tr, j_lo, _ = lw._tracks(f, x0, s0)
        v = oracles.pair_violations(tr, s0, j_lo)
        for k in ("pairs", "coalescence", "crossing", "slope"):
            tot[k] += v[k]
        d = lw.dual_field(f)
        dstarts = [(i, j) for j in range(1, rows + 1) for i in range(-half, half + 1) if d.is_point(i, j)]
        dx = np.array([s[0] for s in dstarts])
        dt = np.array([s[1] for s in dstarts])
        dtr, d_lo, _ = lw._tracks(d, dx, dt)
        bad, n = oracles.forward_dual_crossings(tr, s0, j_lo, dtr, dt, d_lo)
        tot["dual_pairs"] += n
        tot["dual_crossing"] += bad
    return tot


def suite_coalescence(seed: int = 108, threads: int = 1) -> list[Line]:
    nf, bad = exhaustive_coalescence()
    v = random_coalescence(seed)
    rbad = v["coalescence"] + v["crossing"] + v["slope"]
    return [
        Line("8 exhaustive fields (<= 8 even points)", "0 violations", f"{bad} in {nf} fields", "exact", bad == 0),
        Line("8 random forward pairs", "0 violations", f"{rbad} in {v['pairs']} pairs", "exact",
             rbad == 0 and v["pairs"] >= 10**6),
        Line("8 random forward/dual pairs", "0 crossings", f"{v['dual_crossing']} in {v['dual_pairs']} pairs",
             "exact", v["dual_crossing"] == 0),
    ]


# --- 9, 10: skeleton --------------------------------------------------------

HOLDER_SEEDS = dict(n=200, x_lo=-1.0, x_hi=1.0, t_lo=0.0, t_hi=0.5, t_end=1.5, dt=0.01)


def suite_holder(seed: int = 109, threads: int = 1) -> list[Line]:
    h = HOLDER_SEEDS
    S = SeedSet.uniform(h["n"], h["x_lo"], h["x_hi"], h["t_lo"], h["t_hi"], seed)
    _, _, r45 = holder_refinement_ratio(S, h["t_end"], h["dt"], 4, 0.45, derive_seed(seed, 1))
    _, _, r55 = holder_refinement_ratio(S, h["t_end"], h["dt"], 16, 0.55, derive_seed(seed, 2))
    return [
        Line("9 Holder xi=0.45, 4x refinement ratio", "[0.8, 1.6]", _f(r45, 3), "interval", 0.8 <= r45 <= 1.6),
        Line("9 Holder xi=0.55, 16x refinement ratio", ">= 2", _f(r55, 3), "one-sided", r55 >= 2.0),
    ]


def suite_ordering(seed: int = 110, threads: int = 1) -> list[Line]:
    grid = TimeGrid(0.0, 1.0, 0.001)
    two = ordering_invariance_check(SeedSet.from_points([(0.0, 0.0), (0.5, 0.0)]), grid, 2000, seed)
    three = ordering_invariance_check(
        SeedSet.from_points([(0.0, 0.0), (0.25, 0.0), (0.5, 0.0)]), grid, 2000, derive_seed(seed, 1), order=[1, 2, 0]
    )
    return [
        Line("10 KS meeting times, 2 seeds reversed", "0", _f(two.ks_meeting), "< 0.06", two.ks_meeting < 0.06),
        Line("10 KS eta, 3 seeds cyclic", "0", _f(three.ks_eta), "< 0.06", three.ks_eta < 0.06),
    ]


# --- 11: B1 / B2 ------------------------------------------------------------


def bstat_lines(stats, n_se: float = 3.0) -> list[Line]:
    out = []
    for prev, cur in zip(stats, stats[1:]):
        slack = n_se * math.hypot(prev.b1_se, cur.b1_se)
        out.append(
            Line(f"11 B1 decreasing, eps {prev.epsilon} -> {cur.epsilon}", f"<= {_f(prev.b1)}", _f(cur.b1),
                 f"3SE={_f(slack)}", cur.b1 <= prev.b1 + slack)
        )
    first, last = stats[0], stats[-1]
    out.append(
        Line(f"11 B2 at eps={last.epsilon} below eps={first.epsilon}", f"< {_f(first.b2)}", _f(last.b2),
             "strict", last.b2 < first.b2)
    )
    return out


def suite_bstats(seed: int = 111, threads: int = 1) -> list[Line]:
    stats = b_statistics([0.02], 0.0, 1.0, [0.4, 0.2, 0.1, 0.05], 2000, seed, threads=threads)
    return bstat_lines(stats)


# --- registry ---------------------------------------------------------------

SUITES: dict[str, tuple[int, Callable]] = {
    "eta-mean": (1, suite_eta_mean),
    "tail-bound": (2, suite_tail_bound),
    "theta": (3, suite_theta),
    "donsker": (4, suite_donsker),
    "tightness": (5, suite_tightness),
    "dual": (6, suite_dual),
    "metrics": (7, suite_metrics),
    "coalescence": (8, suite_coalescence),
    "holder": (9, suite_holder),
    "ordering": (10, suite_ordering),
    "bstats": (11, suite_bstats),
}


def run_suite(name: str, threads: int = 1) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    number, fn = SUITES[name]
    t = time.perf_counter()
    lines = fn(threads=threads)
    return SuiteResult(name, number, tuple(lines), time.perf_counter() - t)


def format_table(results) -> str:
    rows = [("criterion", "target", "observed", "tolerance", "result")]
    for r in results:
        for line in r.lines:
            rows.append((line.criterion, line.target, line.observed, line.tolerance, "PASS" if line.passed else "FAIL"))
    widths = [max(len(row[k]) for row in rows) for k in range(5)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)
