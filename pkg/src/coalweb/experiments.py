"""Experiment runner: dispatch a config, collect rows and checks, write outputs."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from . import lattice_webs as lw
from .acceptance import Line, bstat_lines, metric_violations, tightness_lines
from .config import ConfigError, ExperimentConfig
from .pathspace import PathSet, dump_pathset, rescale_pathset
from .rng import derive_seed, derive_seeds
from .skeleton import SeedSet, TimeGrid, ordering_invariance_check, pair_meeting_time, skeleton_arrays, sample_skeleton
from .webstats import (
    EtaQuery,
    WebConfig,
    b_statistics,
    cell_placements,
    check_etabound,
    count_eta_dual,
    distinct_by_row,
    donsker_marginal_check,
    estimate_g,
    eta_ensemble,
    eta_mean_target,
    meeting_cdf_distance,
    point_census,
    theta_closed,
)

CSV_COLUMNS = ("stat", "delta", "t0", "t", "a", "b", "u", "epsilon", "n", "estimate", "std_error", "extra")
MAX_START_POINTS = 5_000_000


@dataclass
class RunReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def row(self, stat: str, **kw) -> None:
        self.rows.append({"stat": stat, **kw})

    def check(self, name: str, target, observed, tolerance, passed: bool) -> None:
        self.checks.append(Line(name, str(target), str(observed), str(tolerance), bool(passed)))

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={self.config.config_hash} root_seed={self.config.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def json_obj(self) -> dict:
        return {
            "config": self.config.echo(),
            "config_hash": self.config.config_hash,
            "root_seed": self.config.seed,
            "n_replicas": self.config.n_replicas,
            "rows": [{c: _json_val(r.get(c)) for c in CSV_COLUMNS} for r in self.rows],
            "checks": [c.__dict__ for c in self.checks],
            "passed": self.passed,
            "wall_clock_s": round(self.wall_clock, 3),
        }


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, dict):
        return ";".join(f"{k}={_cell(x)}" for k, x in v.items())
    return str(v)


def _json_val(v):
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return None
    return v


def _f(x: float) -> str:
    return f"{x:.4f}"


# --- experiment kinds -------------------------------------------------------


def _run_eta(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    q = EtaQuery(cfg["query.t0"], cfg["query.t"], cfg["query.a"], cfg["query.b"])
    n, seed = cfg.n_replicas, cfg.seed
    target = eta_mean_target(q)
    rel, n_se = cfg["check.rel_tol"], cfg["check.n_se"]
    means = []
    for k, d in enumerate(cfg["delta"]):
        wc = WebConfig(cfg["time_mode"], d)
        s = eta_ensemble(wc, q, n, derive_seed(seed, k), threads=threads)
        base = dict(delta=d, t0=q.t0, t=q.t, a=q.a, b=q.b, n=s.n)
        rep.row("eta_mean", **base, estimate=s.mean, std_error=s.std_error, extra={"target": target})
        rep.row("eta_tail2", **base, estimate=s.tail(2), std_error=s.tail_se(2))
        rep.row("eta_tail3", **base, estimate=s.tail(3), std_error=s.tail_se(3))
        if s.n:
            tol = rel * target + n_se * s.std_error
            rep.check(f"eta mean delta={d}", _f(target), _f(s.mean), f"+-{_f(tol)}", abs(s.mean - target) <= tol)
            for c in check_etabound(s, cfg["check.k_max"], n_se=n_se).checks:
                rep.check(f"tail bound k={c.k} delta={d}", f"<= {_f(c.bound)}", _f(c.observed),
                          f"{n_se}SE={_f(n_se * c.std_error)}", c.passed)
            means.append((d, s))
        for m, eps in enumerate(cfg["query.epsilon"]):
            qe = EtaQuery(q.t0, q.t, q.a, q.a + eps)
            se = eta_ensemble(wc, qe, n, derive_seed(seed, (k + 1) << 20 | m), threads=threads)
            be = dict(delta=d, t0=q.t0, t=q.t, a=qe.a, b=qe.b, epsilon=eps, n=se.n)
            rep.row("eta_tail2", **be, estimate=se.tail(2), std_error=se.tail_se(2))
            rep.row("eta_tail3", **be, estimate=se.tail(3), std_error=se.tail_se(3))
            if se.n:
                for c in check_etabound(se, cfg["check.k_max"], n_se=n_se).checks:
                    rep.check(f"tail bound k={c.k} delta={d} eps={eps}", f"<= {_f(c.bound)}", _f(c.observed),
                              f"{n_se}SE={_f(n_se * c.std_error)}", c.passed)
    means.sort(key=lambda p: -p[0])
    for (d1, s1), (d2, s2) in zip(means, means[1:]):
        b1, b2 = abs(s1.mean - target), abs(s2.mean - target)
        rep.check(f"bias shrinks {d1} -> {d2}", f"<= {_f(b1)} + 2SE", _f(b2), f"2SE={_f(2 * s2.std_error)}",
                  b2 <= b1 + 2 * s2.std_error)


def _run_tightness(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    d = cfg["delta"][0]
    u = cfg["tightness.u"]
    plc = cell_placements(cfg["tightness.n_space"], cfg["tightness.n_time"])
    ests = []
    for k, t in enumerate(cfg["tightness.t"]):
        g = estimate_g(d, t, u, cfg.n_replicas, derive_seed(cfg.seed, k), placements=plc, threads=threads)
        n = g.summary.n
        rep.row("g", delta=d, t=t, u=u, n=n, estimate=g.g, std_error=g.std_error,
                extra={"placements": len(plc)})
        rep.row("g_normalised", delta=d, t=t, u=u, n=n, estimate=g.normalised, std_error=g.std_error * t**-1.5)
        rep.row("g_bound_ratio", delta=d, t=t, u=u, n=n, estimate=g.bound_ratio,
                std_error=g.std_error * u**4 / t**2)
        ests.append(g)
    if cfg.n_replicas:
        rep.checks.extend(tightness_lines(ests, cfg["tightness.fit_t_min"], cfg["check.n_se"]))


def _run_bstats(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    stats = b_statistics(cfg["delta"], cfg["bstats.t0"], cfg["bstats.t"], cfg["bstats.epsilon"],
                         cfg.n_replicas, cfg.seed, threads=threads)
    for s in stats:
        base = dict(delta=s.delta, t0=cfg["bstats.t0"], t=cfg["bstats.t"], epsilon=s.epsilon, n=s.n)
        rep.row("B1", **base, estimate=s.b1, std_error=s.b1_se, extra={"placements": len(s.placements)})
        rep.row("B2", **base, estimate=s.b2, std_error=s.b2_se)
    if cfg.n_replicas:
        for d in cfg["delta"]:
            rep.checks.extend(bstat_lines([s for s in stats if s.delta == d], cfg["check.n_se"]))


def _run_donsker(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    t_eval, dist, lim = cfg["donsker.t_eval"], cfg["donsker.dist"], cfg["check.ks_max"]
    for k, d in enumerate(cfg["delta"]):
        n = cfg.n_replicas
        ks = donsker_marginal_check(d, t_eval, n, derive_seed(cfg.seed, 2 * k))
        sup = meeting_cdf_distance(d, dist, t_eval, n, derive_seed(cfg.seed, 2 * k + 1), threads=threads)
        rep.row("ks_marginal", delta=d, t=t_eval, n=n, estimate=ks)
        rep.row("meeting_cdf_sup", delta=d, t=t_eval, n=n, estimate=sup, extra={"dist": dist})
        if n:
            rep.check(f"KS marginal delta={d}", 0, _f(ks), f"< {lim}", ks < lim)
            rep.check(f"meeting CDF delta={d}", 0, _f(sup), f"< {lim}", sup < lim)


def _run_dual(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    q = EtaQuery(cfg["query.t0"], cfg["query.t"], cfg["query.a"], cfg["query.b"])
    span = int(round(q.t))
    w = lw.Window(int(q.a) - 2 * span - 4, int(q.b) + 2 * span + 4, q.t0, q.t0 + q.t)
    etas, duals = [], []
    for s in derive_seeds(cfg.seed, cfg.n_replicas):
        e, dd = count_eta_dual(lw.sample_arrow_field(w, int(s)), q)
        etas.append(e)
        duals.append(dd)
    n = len(etas)
    bad = sum(int(e != 1 + dd) for e, dd in zip(etas, duals))
    base = dict(t0=q.t0, t=q.t, a=q.a, b=q.b, n=n)
    rep.row("eta", **base, estimate=float(np.mean(etas)) if n else None)
    rep.row("eta_dual", **base, estimate=float(np.mean(duals)) if n else None)
    rep.row("dual_mismatches", **base, estimate=bad)
    rep.check("eta = 1 + eta_dual", "0 mismatches", f"{bad} of {n}", "exact", bad == 0)


def _window(cfg: ExperimentConfig) -> lw.Window:
    missing = [k for k in ("window.i_min", "window.i_max", "window.t_min", "window.t_max") if cfg.get(k) is None]
    if missing:
        raise ConfigError("required for this experiment", None, missing[0])
    return lw.Window(cfg["window.i_min"], cfg["window.i_max"], cfg["window.t_min"], cfg["window.t_max"],
                     cfg["boundary"])


def _run_census(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    w = _window(cfg)
    fwd_tot: dict = {}
    dual_tot: dict = {}
    conservation_bad = 0
    for s in derive_seeds(cfg.seed, cfg.n_replicas):
        f = lw.sample_arrow_field(w, int(s))
        fc, dc = point_census(f)
        for tot, c in ((fwd_tot, fc), (dual_tot, dc)):
            for k, v in c.counts.items():
                tot[k] = tot.get(k, 0) + v
        if w.periodic:
            # distinct walkers lose one per two-to-one merge at every row
            for j in w.rows[:-1]:
                j = int(j)
                dist = distinct_by_row(f, j, j + 1)
                src = w.sites[f.is_point(w.sites, j)]
                hits = np.bincount(w.wrap(src + f.arrow(src, j)) - w.i_min, minlength=w.period)
                conservation_bad += int(dist[1] != dist[0] - int((hits == 2).sum()))
    for name, tot in (("census_forward", fwd_tot), ("census_dual", dual_tot)):
        total = sum(tot.values())
        for (mi, mo), v in sorted(tot.items()):
            rep.row(name, n=cfg.n_replicas, estimate=v / total if total else None,
                    extra={"m_in": mi, "m_out": mo, "count": v})
    bad_out = sum(v for (mi, mo), v in fwd_tot.items() if mo != 1 or mi not in (0, 1, 2))
    rep.check("forward census m_out = 1, m_in in {0,1,2}", "0", bad_out, "exact", bad_out == 0)
    if w.periodic:
        rep.check("periodic conservation", "0 violations", conservation_bad, "exact", conservation_bad == 0)


def _skeleton_setup(cfg: ExperimentConfig) -> tuple[SeedSet, TimeGrid]:
    seeds = SeedSet.from_points(cfg["skeleton.seeds"])
    if len(seeds) == 0:
        raise ConfigError("needs at least one seed", None, "skeleton.seeds")
    t_lo = float(seeds.points[:, 1].min())
    return seeds, TimeGrid(t_lo, cfg["skeleton.t_end"], cfg["skeleton.dt"])


def _run_skeleton(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    seeds, grid = _skeleton_setup(cfg)
    bridge = cfg["skeleton.bridge_correction"]
    n = cfg.n_replicas
    ends, met = [], []
    for s in derive_seeds(cfg.seed, n):
        arr = skeleton_arrays(seeds, grid, int(s), bridge_correction=bridge)
        ends.append(arr.values[0, -1])
        if len(seeds) > 1:
            met.append(math.isfinite(pair_meeting_time(arr, 0, 1)))
    ends = np.asarray(ends)
    x0, t0 = seeds.points[0]
    span = grid.t_end - grid.times[grid.snap(t0)]
    rep.row("marginal_mean", t0=t0, t=span, n=n, estimate=float(ends.mean()) if n else None,
            std_error=float(ends.std(ddof=1) / math.sqrt(n)) if n > 1 else None)
    rep.row("marginal_var", t0=t0, t=span, n=n, estimate=float(ends.var(ddof=1)) if n > 1 else None)
    if n > 1:
        se_mean = ends.std(ddof=1) / math.sqrt(n)
        rep.check("marginal mean", _f(x0), _f(ends.mean()), f"3SE={_f(3 * se_mean)}", abs(ends.mean() - x0) <= 3 * se_mean)
    if len(seeds) > 1 and n:
        (xa, ta), (xb, tb) = seeds.points[0], seeds.points[1]
        p = float(np.mean(met))
        se = math.sqrt(p * (1 - p) / n)
        rep.row("meeting_prob", t0=ta, t=span, a=xa, b=xb, n=n, estimate=p, std_error=se)
        if ta == tb:
            th = theta_closed(xb - xa, span)
            # discrete monitoring delays meetings; the shifted start distance
            # 0.5826 * sqrt(2 dt) is the standard first-order overshoot
            bias = 0.0 if bridge else th - theta_closed(abs(xb - xa) + 0.5826 * math.sqrt(2 * grid.dt), span)
            tol = 3 * se + bias
            rep.check("meeting probability vs theta", _f(th), _f(p), f"+-{_f(tol)}", abs(p - th) <= tol)
        order = cfg["skeleton.order"] or tuple(range(len(seeds)))[::-1]
        r = ordering_invariance_check(seeds, grid, n, derive_seed(cfg.seed, 1 << 40), order=order,
                                      bridge_correction=bridge)
        rep.row("ordering_ks", n=n, estimate=max(r.ks_meeting, r.ks_marginal, r.ks_eta),
                extra={"meeting": r.ks_meeting, "marginal": r.ks_marginal, "eta": r.ks_eta})
        rep.check("ordering invariance KS", 0, _f(max(r.ks_meeting, r.ks_marginal, r.ks_eta)),
                  f"< {r.threshold}", r.passed)


def _run_metrics(cfg: ExperimentConfig, rep: RunReport, threads: int) -> None:
    v = metric_violations(cfg.n_replicas, cfg.seed)
    for k in ("points", "paths", "sets"):
        rep.row(f"metric_violations_{k}", n=cfg.n_replicas, estimate=v[k])
        rep.check(f"metric axioms {k}", 0, v[k], "1e-9 + refinement", v[k] == 0)


RUNNERS = {
    "eta": _run_eta,
    "tightness": _run_tightness,
    "bstats": _run_bstats,
    "donsker": _run_donsker,
    "dual": _run_dual,
    "census": _run_census,
    "skeleton": _run_skeleton,
    "metrics": _run_metrics,
}


def run(cfg: ExperimentConfig, *, threads: int = 1, out_dir: str | None = None) -> RunReport:
    rep = RunReport(cfg)
    t = time.perf_counter()
    RUNNERS[cfg.kind](cfg, rep, threads)
    rep.wall_clock = time.perf_counter() - t
    if out_dir is not None:
        write_outputs(rep, out_dir)
    return rep


def write_outputs(rep: RunReport, out_dir: str) -> None:
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(rep.csv_text())
    (out / "report.json").write_text(json.dumps(rep.json_obj(), indent=2, sort_keys=True) + "\n")


# --- path export ------------------------------------------------------------


def export_paths(cfg: ExperimentConfig, out_dir: str) -> PathSet:
    """One realisation of the configured web, written to ``paths.txt``."""
    seed = derive_seed(cfg.seed, 0)
    if cfg.kind == "skeleton":
        seeds, grid = _skeleton_setup(cfg)
        K = sample_skeleton(seeds, grid, seed, bridge_correction=cfg["skeleton.bridge_correction"])
    else:
        w = _window(cfg)
        d = cfg["delta"][0]
        if w.cells > MAX_START_POINTS:
            raise lw.ResourceError(
                f"window {w.i_max - w.i_min} x {w.j_max - w.j_min} ({w.cells} cells) exceeds the "
                f"export budget of {MAX_START_POINTS} start points"
            )
        if cfg["time_mode"] == "continuous":
            c = lw.sample_poisson_clocks(w, seed)
            paths = []
            for i in w.sites:
                try:
                    paths.extend(lw.continuous_path(c, int(i), w.j_min))
                except lw.TruncationError:
                    pass  # left an open window; no honest path to export
            K = PathSet(tuple(paths), "continuous-web")
        else:
            f = lw.sample_arrow_field(w, seed)
            K = lw.build_dual_web(f) if cfg.kind == "dual" else lw.build_discrete_web(f)
        K = rescale_pathset(K, d)
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    dump_pathset(K, buf)
    text = buf.getvalue()
    head, _, body = text.partition("\n")
    text = f"{head} config_hash={cfg.config_hash} root_seed={cfg.seed}\n{body}"
    (out / "paths.txt").write_text(text)
    return K
