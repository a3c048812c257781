"""The compiled kernels and their numpy fallback agree on random inputs."""

import numpy as np
import pytest

from coalweb import kernels
from coalweb.rng import derive_seeds

py = kernels.backend("python")
try:
    cy = kernels.backend("compiled")
except ImportError:  # pragma: no cover - only without a compiler
    cy = None

needs_compiled = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def test_backend_selection_names():
    assert kernels.BACKEND in ("compiled", "python")
    with pytest.raises(ValueError):
        kernels.backend("fortran")


def test_pure_env_var_forces_python(monkeypatch):
    import importlib

    monkeypatch.setenv("COALWEB_PURE", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("COALWEB_PURE")
        importlib.reload(kernels)


@needs_compiled
def test_arrows_parity():
    g = np.random.default_rng(1)
    i = g.integers(-(1 << 40), 1 << 40, 5000)
    j = g.integers(-(1 << 40), 1 << 40, 5000)
    for seed in (0, 1, (1 << 64) - 1):
        assert np.array_equal(py.arrows(seed, i, j), cy.arrows(seed, i, j))


@needs_compiled
@pytest.mark.parametrize("periodic", [False, True])
@pytest.mark.parametrize("backward", [False, True])
def test_walk_finals_parity(periodic, backward):
    seeds = derive_seeds(3, 40)
    x0 = np.arange(-10, 11, 2, dtype=np.int64)
    period = 24 if periodic else 0
    j_from, j_to = (0, 30) if not backward else (31, 1)
    off = 0 if not backward else -1
    sign = 1 if not backward else -1
    a = py.walk_finals(seeds, x0, j_from, j_to, sign, off, -12, period)
    b = cy.walk_finals(seeds, x0, j_from, j_to, sign, off, -12, period)
    assert np.array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("backward", [False, True])
def test_walk_tracks_parity(backward):
    g = np.random.default_rng(2)
    x0 = g.integers(-20, 20, 30) * 2
    s0 = g.integers(0, 10, 30) * 2
    if backward:
        # dual points: i + j - 1 even, walking down from rows up to 38
        args = (12345, x0 + 1, s0 + 20, 0, 40, -1, -1, -50, 0, True)
    else:
        args = (12345, x0, s0, 0, 40, 1, 0, -50, 0, False)
    assert np.array_equal(py.walk_tracks(*args), cy.walk_tracks(*args))


@needs_compiled
def test_meet_rows_parity():
    seeds = derive_seeds(4, 200)
    for xb in (0, 2, 6):
        assert np.array_equal(py.meet_rows(seeds, 0, xb, 0, 100), cy.meet_rows(seeds, 0, xb, 0, 100))


@needs_compiled
@pytest.mark.parametrize("X0,hw,J0,tau,hU", [(0.5, 2.0, 16.0, 16.0, 6.0), (1.25, 0.3, 25.0, 5.0, 7.0), (0.0, 0.0, 9.0, 4.5, 3.0)])
def test_tightness_parity(X0, hw, J0, tau, hU):
    seeds = derive_seeds(5, 300)
    assert np.array_equal(py.tightness_hits(seeds, X0, hw, J0, tau, hU), cy.tightness_hits(seeds, X0, hw, J0, tau, hU))


@needs_compiled
@pytest.mark.parametrize("bridge", [False, True])
def test_first_meeting_parity(bridge):
    g = np.random.default_rng(6)
    n, dt = 400, 1e-3
    for _ in range(50):
        k = int(g.integers(1, 5))
        frozen = np.cumsum(g.normal(0, dt**0.5, (k, n)), axis=1) + g.uniform(-0.3, 0.3, (k, 1))
        fstart = g.integers(0, 50, k)
        w = np.cumsum(g.normal(0, dt**0.5, n))
        u = g.random(n) if bridge else None
        s = int(g.integers(0, 50))
        assert tuple(py.first_meeting(w, frozen, fstart, s, u, dt)) == tuple(cy.first_meeting(w, frozen, fstart, s, u, dt))


@needs_compiled
def test_pairwise_sup_parity():
    g = np.random.default_rng(7)
    P, Q, G = 4, 5, 60
    pa, pb = g.uniform(-1, 1, (P, G)), g.uniform(-1, 1, (Q, G))
    ca, cb = g.uniform(0, 2, (P, G - 1)), g.uniform(0, 2, (Q, G - 1))
    ma, mb = g.random((P, G - 1)) < 0.5, g.random((Q, G - 1)) < 0.5
    d2 = g.uniform(0, 1e-3, G - 1)
    s1, e1 = py.pairwise_sup(pa, pb, ca, cb, ma, mb, d2)
    s2, e2 = cy.pairwise_sup(pa, pb, ca, cb, ma, mb, d2)
    assert np.allclose(s1, s2, rtol=0, atol=1e-15) and np.allclose(e1, e2, rtol=1e-14, atol=0)


@needs_compiled
def test_modulus_parity():
    g = np.random.default_rng(8)
    times = np.linspace(0, 1, 80)
    vals = np.cumsum(g.normal(0, 0.1, (6, 80)), axis=1)
    start = g.integers(0, 40, 6)
    assert np.allclose(py.modulus(vals, start, times, 0.45), cy.modulus(vals, start, times, 0.45), rtol=1e-13)


def test_modulus_brute_force():
    g = np.random.default_rng(9)
    times = np.linspace(0, 1, 25)
    vals = np.cumsum(g.normal(0, 0.1, (3, 25)), axis=1)
    start = np.array([0, 5, 20])
    got = kernels.modulus(vals, start, times, 0.5)
    for p in range(3):
        ref = max(
            abs(vals[p, b] - vals[p, a]) / (times[b] - times[a]) ** 0.5
            for a in range(start[p], 25) for b in range(a + 1, 25)
        )
        assert got[p] == pytest.approx(ref, rel=1e-12)
