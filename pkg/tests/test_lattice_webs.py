import io
import itertools
import math

import numpy as np
import pytest
from scipy import stats

from coalweb import lattice_webs as lw
from coalweb import oracles
from coalweb.pathspace import PathSet, eval_path
from coalweb.rng import derive_seed


def W(i0, i1, j0, j1, boundary="open"):
    return lw.Window(i0, i1, j0, j1, boundary)


def full_dict(w, fill=1, overrides=None, backward=False):
    """Arrows at every lattice point of ``w``."""
    off = 1 if backward else 0
    d = {(int(i), int(j)): fill for j in w.rows for i in w.sites if (i + j + off) % 2 == 0}
    d.update(overrides or {})
    return d


# --- windows and fields -----------------------------------------------------


def test_window_validation():
    with pytest.raises(ValueError):
        W(3, 3, 0, 1)
    with pytest.raises(ValueError):
        W(0, 3, 0, 1, "periodic")
    with pytest.raises(ValueError):
        W(0, 4, 0, 1, "sideways")
    w = W(0, 4, 0, 3, "periodic")
    assert list(w.sites) == [0, 1, 2, 3] and w.period == 4 and w.cells == 16
    assert w.wrap(5) == 1 and w.wrap(-1) == 3
    assert W(0, 4, 0, 3).cells == 20
    assert lw.Window.with_buffer(0, 10, 0, 5) == W(-5, 15, 0, 5)


def test_field_determinism_and_balance():
    w = W(0, 199, 0, 199)
    f1 = lw.sample_arrow_field(w, 77)
    t1 = f1.to_table()
    assert np.array_equal(t1, lw.sample_arrow_field(w, 77).to_table())
    on = t1[t1 != 0]
    assert on.size == 20000
    # binomial tail: |mean| > 0.03 has probability ~2e-5 at 2e4 coins
    assert abs(on.mean()) < 0.03


def test_disjoint_windows_uncorrelated():
    a = lw.sample_arrow_field(W(0, 399, 0, 199), derive_seed(3, 0)).to_table()
    b = lw.sample_arrow_field(W(1000, 1399, 0, 199), derive_seed(3, 1)).to_table()
    x, y = a[a != 0].astype(float), b[b != 0].astype(float)
    assert x.size >= 4e4 and abs(np.corrcoef(x, y)[0, 1]) < 0.03


def test_dense_field_matches_lazy_and_budget():
    w = W(-10, 10, 0, 12)
    lazy = lw.sample_arrow_field(w, 5)
    dense = lw.sample_arrow_field(w, 5, dense=True)
    assert np.array_equal(lazy.to_table(), dense.to_table())
    with pytest.raises(lw.ResourceError):
        lw.sample_arrow_field(W(0, 1000, 0, 1000), 1, dense=True, max_cells=1000)
    with pytest.raises(lw.ResourceError):
        lw.sample_arrow_field(W(0, 1 << 33, 0, 10), 1)


def test_parity_errors():
    f = lw.sample_arrow_field(W(-5, 5, 0, 5), 1)
    with pytest.raises(lw.ParityError):
        f.arrow(1, 0)
    with pytest.raises(lw.ParityError):
        lw.discrete_path(f, 1, 0)
    with pytest.raises(lw.ParityError):
        lw.ArrowField.from_dict(W(0, 4, 0, 2), {(1, 0): 1})


def test_open_window_truncation():
    w = W(0, 4, 0, 6)
    f = lw.ArrowField.from_dict(w, full_dict(w, 1))
    with pytest.raises(lw.TruncationError):
        lw.discrete_path(f, 2, 0)


# --- discrete paths and webs ------------------------------------------------


def test_single_step_right():
    w = W(-4, 4, 0, 2)
    f = lw.ArrowField.from_dict(w, full_dict(w, -1, {(0, 0): 1}))
    p = lw.discrete_path(f, 0, 0)
    assert eval_path(p, 1.0) == 1.0


def test_two_walkers_meet_and_stay_together():
    w = W(-6, 8, 0, 6)
    g = np.random.default_rng(0)
    for _ in range(20):
        d = {k: int(g.choice([-1, 1])) for k in full_dict(w)}
        d[(0, 0)], d[(2, 0)] = 1, -1
        f = lw.ArrowField.from_dict(w, d)
        K = lw.build_discrete_web(f, [(0, 0), (2, 0)])
        a, b = K
        assert eval_path(a, 1.0) == eval_path(b, 1.0) == 1.0
        assert np.array_equal(a.xs[1:], b.xs[1:])


def test_all_plus_arrows_reach_diagonal():
    w = W(-1, 12, 0, 10)
    f = lw.ArrowField.from_dict(w, full_dict(w, 1))
    p = lw.discrete_path(f, 0, 0)
    assert all(eval_path(p, float(k)) == k for k in range(11))


def test_hashed_walker_matches_dict_walker():
    w = W(-40, 40, 0, 30)
    f = lw.sample_arrow_field(w, 2024)
    arrows = {k: f.arrow(*k) for k in full_dict(w)}
    for y in range(-10, 11, 2):
        p = lw.discrete_path(f, y, 0)
        ref = oracles.forward_walk(arrows, y, 0, 30)
        assert list(p.xs) == ref


@pytest.mark.parametrize("start_row", [0, 1])
def test_first_step_distinct_counts_brute_force(start_row):
    sites = [s for s in range(4) if (s + start_row) % 2 == 0] + [s for s in range(4, 8) if (s + start_row) % 2 == 0]
    n = len(sites) // 2
    w = W(-2, 10, start_row, start_row + 1)
    for fld in oracles.enumerate_fields([(s, start_row) for s in sites]):
        f = lw.ArrowField.from_dict(w, fld)
        K = lw.build_discrete_web(f, [(s, start_row) for s in sites])
        d = len({eval_path(p, start_row + 1.0) for p in K})
        assert n <= d <= 2 * n


def test_singleton_and_divergent_webs():
    w = W(-10, 10, 0, 5)
    f = lw.sample_arrow_field(w, 9)
    assert len(lw.build_discrete_web(f, [(0, 0)])) == 1
    assert len(lw.build_discrete_web(f, [])) == 0
    d = full_dict(w, 1)
    d.update({(i, j): -1 for (i, j) in d if i <= -j})
    f = lw.ArrowField.from_dict(w, d)
    a, b = lw.build_discrete_web(f, [(0, 0), (2, 0)])
    assert not set(a.breakpoints()[1:]) & set(b.breakpoints()[1:])


def test_all_starts_respect_light_cone():
    f = lw.sample_arrow_field(W(-6, 6, 0, 4), 1)
    starts = lw.all_starts(f)
    assert starts and all(-6 + (4 - j) <= i <= 6 - (4 - j) for i, j in starts)
    K = lw.build_discrete_web(f)
    assert len(K) == len(starts) and K.provenance == "discrete-web"
    fp = lw.sample_arrow_field(W(0, 8, 0, 4, "periodic"), 1)
    assert len(lw.all_starts(fp)) == 16


def test_slope_and_coalescence_on_random_web():
    f = lw.sample_arrow_field(W(-30, 30, 0, 30), 11)
    starts = lw.all_starts(f)
    tr = oracles.tracks_from_paths(lw.build_discrete_web(f), 0, 30)
    v = oracles.pair_violations(tr, np.array([s[1] for s in starts]), 0)
    assert v["coalescence"] == v["crossing"] == v["slope"] == 0


def test_rescale_web():
    f = lw.sample_arrow_field(W(-10, 10, 0, 5), 2)
    K = lw.build_discrete_web(f, [(0, 0)])
    assert lw.rescale_web(K, 1.0) is K
    p = lw.rescale_web(K, 0.5)[0]
    assert abs(np.diff(p.xs) / np.diff(p.times)).tolist() == [2.0] * 5


def test_rescaled_marginal_variance():
    # delta = 0.02 -> 2500 steps to time 1; N = 1e4 walkers on independent fields
    from coalweb import kernels

    n, T = 10_000, 2500
    seeds = np.array([derive_seed(99, k) for k in range(n)], dtype=np.uint64)
    fin = kernels.walk_finals(seeds, np.zeros(1, dtype=np.int64), 0, T, 1, 0, 0, 0)[:, 0] * 0.02
    var = fin.var(ddof=1)
    se = math.sqrt(2.0 / (n - 1))  # of the sample variance of a unit normal
    assert abs(var - 1.0) <= 3 * se


# --- dual field -------------------------------------------------------------


def _forward_move(dual_arrows, k, j):
    """Unique forward step from (k, j) that crosses no dual segment (oracle)."""
    ok = []
    for s in (-1, 1):
        hit = False
        for m in (k - 2, k, k + 2):
            if (m, j + 1) in dual_arrows:
                hit |= oracles._cross((k, j), (k + s, j + 1), (m, j + 1), (m + dual_arrows[(m, j + 1)], j))
        if not hit:
            ok.append(s)
    assert len(ok) == 1
    return ok[0]


def test_dual_of_all_plus_is_all_minus():
    w = W(0, 3, 0, 3)
    f = lw.ArrowField.from_dict(w, full_dict(w, 1))
    d = lw.dual_field(f)
    assert d.backward
    pts = [(i, j) for j in (1, 2, 3) for i in range(4) if (i + j) % 2]
    assert [d.arrow(i, j) for i, j in pts] == [-1] * len(pts)
    fwd = full_dict(w, 1)
    assert [oracles.dual_move(fwd, i, j) for i, j in pts] == [-1] * len(pts)


def test_dual_involution_exhaustive():
    pts = [(0, 0), (2, 0), (1, 1), (3, 1)]
    w = W(0, 4, 0, 2)
    for fld in oracles.enumerate_fields(pts):
        f = lw.ArrowField.from_dict(w, fld)
        d = lw.dual_field(f)
        dd = lw.dual_field(d)
        dual_pts = [(0, 1), (2, 1), (1, 2), (3, 2)]
        da = {p: d.arrow(*p) for p in dual_pts}
        for p in dual_pts:
            assert da[p] == oracles.dual_move(fld, *p)
        for k, j in pts:
            assert dd.arrow(k, j) == fld[(k, j)]
        # the forward arrows are recovered geometrically from the dual ones
        for k, j in pts:
            assert _forward_move(da, k, j) == fld[(k, j)]


def test_forward_and_dual_webs_never_cross():
    f = lw.sample_arrow_field(W(-20, 20, 0, 16), 31)
    fs = lw.all_starts(f)
    ftr, f_lo, _ = lw._tracks(f, [s[0] for s in fs], [s[1] for s in fs])
    d = lw.dual_field(f)
    ds = lw.all_starts(d)
    dtr, d_lo, _ = lw._tracks(d, [s[0] for s in ds], [s[1] for s in ds])
    bad, pairs = oracles.forward_dual_crossings(ftr, [s[1] for s in fs], f_lo, dtr, [s[1] for s in ds], d_lo)
    assert pairs > 1000 and bad == 0


def test_dual_web_time_reversal_oracle():
    w = W(-12, 12, 0, 8)
    f = lw.sample_arrow_field(w, 8)
    arrows = {k: f.arrow(*k) for k in full_dict(w)}
    starts = lw.dual_row_starts(f, 8, -3, 3)
    assert [i for i, _ in starts] == [-3, -1, 1, 3]
    K = lw.build_dual_web(f, starts)
    assert K.provenance == "dual-web"
    for (y, s), p in zip(starts, K):
        ref = oracles.dual_walk(arrows, y, s, 0)
        # stored in reversed time: t' = -t
        assert p.t0 == -8.0 and list(p.xs) == ref
        assert eval_path(p, -0.0) == ref[-1]
    assert len(lw.build_dual_web(f, starts[:1])) == 1
    with pytest.raises(ValueError):
        lw.build_dual_web(lw.dual_field(f))


def test_dual_full_row_brute_force():
    w = W(-8, 8, 0, 4)
    f = lw.sample_arrow_field(w, 4)
    arrows = {k: f.arrow(*k) for k in full_dict(w)}
    starts = lw.dual_row_starts(f, 4, -4, 4)
    K = lw.build_dual_web(f, starts)
    finals = {eval_path(p, 0.0) for p in K}
    assert finals == {oracles.dual_walk(arrows, y, 4, 0)[-1] for y, _ in starts}


# --- serialisation -----------------------------------------------------------


def test_arrow_field_text_roundtrip():
    f = lw.sample_arrow_field(W(-5, 5, 0, 6, "open"), 123)
    g = lw.loads_arrow_field(lw.dumps_arrow_field(f))
    assert np.array_equal(f.to_table(), g.to_table()) and g.seed == 123
    d = lw.dual_field(f)
    assert np.array_equal(lw.loads_arrow_field(lw.dumps_arrow_field(d)).to_table(), d.to_table())


def test_clock_field_text_roundtrip():
    c = lw.sample_poisson_clocks(W(0, 6, 0.0, 5.0, "periodic"), 7)
    buf = io.StringIO()
    lw.dump_clock_field(c, buf)
    buf.seek(0)
    c2 = lw.load_clock_field(buf)
    for i in range(6):
        assert np.array_equal(c.events(i)[0], c2.events(i)[0])
        assert np.array_equal(c.events(i)[1], c2.events(i)[1])
        assert c.overflow(i) == c2.overflow(i)


# --- Poisson clocks and continuous paths -----------------------------------


def test_clock_counts():
    T = 10.0
    c = lw.sample_poisson_clocks(W(0, 10_000, 0.0, T), 5)
    counts = np.array([c.events(i)[0].size for i in range(10_000)])
    assert abs(counts.mean() - T) <= 3 * math.sqrt(T / counts.size)
    c2 = lw.sample_poisson_clocks(W(0, 10_000, 0.0, T), 5)
    assert np.array_equal(c.events(17)[0], c2.events(17)[0])


def test_clock_gaps_are_exponential():
    # the first ten gaps from the window start are iid Exp(1); with T = 40
    # fewer than ten events has probability ~1e-10
    T, k = 40.0, 10
    c = lw.sample_poisson_clocks(W(0, 10_000, 0.0, T), 6)
    gaps = np.concatenate([np.diff(np.concatenate([[0.0], c.events(i)[0][:k]])) for i in range(10_000)])
    assert gaps.size == 100_000
    assert stats.kstest(gaps, "expon").statistic < 0.02


def test_adjacent_sites_never_share_event_times():
    c = lw.sample_poisson_clocks(W(0, 400, 0.0, 50.0), 3)
    for i in range(399):
        assert not np.intersect1d(c.events(i)[0], c.events(i + 1)[0]).size


def _clocks(events, w=None):
    w = w or W(-5, 5, 0.0, 10.0)
    return lw.ClockField.from_events(w, events)


def test_continuous_constant_first_segment():
    c = _clocks({0: ([2.0, 5.0], [1, -1], (12.0, 1)), 1: ([3.0], [-1], (11.0, 1)), -1: ([], [], (20.0, 1))})
    (p,) = lw.continuous_path(c, 0, 1.0)
    assert p.breakpoints()[:2] == [(1.0, 0.0), (2.0, 0.0)]
    # jumps right at 2, arrives at 3 (next event at site 1), jumps left, arrives at 5
    assert p.breakpoints()[2:4] == [(3.0, 1.0), (5.0, 0.0)]


def test_continuous_two_paths_at_event_start():
    c = _clocks({0: ([2.0, 5.0], [1, -1], (12.0, 1)), 1: ([3.0], [-1], (11.0, 1)), -1: ([], [], (20.0, 1))})
    two = lw.continuous_path(c, 0, 2.0, two_paths=True)
    assert len(two) == 2
    jump, wait = two
    assert jump.breakpoints()[1] == (3.0, 1.0)
    assert wait.breakpoints()[1] == (5.0, 0.0)
    assert len(lw.continuous_path(c, 0, 2.0)) == 1


def test_continuous_no_events_is_constant():
    c = _clocks({0: ([], [], (30.0, 1))})
    (p,) = lw.continuous_path(c, 0, 1.0)
    assert p.breakpoints() == [(1.0, 0.0), (10.0, 0.0)]


def test_continuous_walkers_meet_and_coincide():
    # site 0 jumps right at 1 and site 2 jumps left at 1.5; both arrive at
    # site 1 at its event at 4, after which they are the same walker
    ev = {
        0: ([1.0], [1], (20.0, 1)),
        2: ([1.5], [-1], (20.0, 1)),
        1: ([4.0, 6.0], [1, 1], (20.0, 1)),
        3: ([], [], (20.0, 1)),
    }
    c = _clocks(ev)
    K = lw.build_continuous_web(c, [(0, 0.0), (2, 0.0)])
    a, b = K
    after = lambda p: [bp for bp in p.breakpoints() if bp[0] >= 4.0]
    assert after(a) == after(b) and len(after(a)) >= 2
    assert eval_path(a, 7.0) == eval_path(b, 7.0)
    assert len(lw.build_continuous_web(c, [])) == 0


def test_continuous_single_column_starts_coalesce():
    c = lw.sample_poisson_clocks(W(-60, 60, 0.0, 20.0), 12)
    ts = c.events(0)[0]
    starts = [(0, float(s)) for s in np.linspace(0.0, 0.99 * ts[0], 5)] if ts.size else [(0, 0.0)]
    K = lw.build_continuous_web(c, starts)
    ends = [p.breakpoints()[1:] for p in K]
    assert all(e == ends[0] for e in ends)


def test_continuous_truncation():
    c = _clocks({5: ([1.0], [1], (20.0, 1))})
    with pytest.raises(lw.TruncationError):
        lw.continuous_path(c, 5, 0.0)
