import math

import pytest
from hypothesis import given, strategies as st

from coalweb.spacetime import CompactCoords, SpaceTimePoint, compactify, phi, psi, rho

INF = math.inf
coord = st.floats(-50, 50, allow_nan=False)
time = st.one_of(st.floats(-50, 50, allow_nan=False), st.sampled_from([INF, -INF]))
points = st.builds(SpaceTimePoint, coord, time)


def test_compactify_examples():
    assert compactify(SpaceTimePoint(0, 0)) == CompactCoords(0.0, 0.0)
    assert compactify(SpaceTimePoint(3, INF)) == CompactCoords(0.0, 1.0)
    assert compactify(SpaceTimePoint(-5, INF)) == CompactCoords(0.0, 1.0)
    c = compactify(SpaceTimePoint(1, 0))
    assert c.phi == pytest.approx(0.761594, abs=1e-6) and c.psi == 0.0


def test_rho_examples():
    assert rho(SpaceTimePoint(0, 0), SpaceTimePoint(0, 0)) == 0
    assert rho(SpaceTimePoint(0, 0), SpaceTimePoint(1, 0)) == pytest.approx(0.761594, abs=1e-6)
    assert rho(SpaceTimePoint(3, INF), SpaceTimePoint(-5, INF)) == 0
    assert SpaceTimePoint(3, -INF) == SpaceTimePoint(-7, -INF)
    assert SpaceTimePoint(3, INF) != SpaceTimePoint(3, -INF)


def test_infinite_space_coordinates():
    assert phi(INF, 0) == 1.0 and phi(-INF, 1) == -0.5
    assert psi(INF) == 1.0 and psi(-INF) == -1.0
    assert rho(SpaceTimePoint(INF, 0), SpaceTimePoint(-INF, 0)) == 2.0


def test_compact_coords_reject_out_of_range():
    with pytest.raises(ValueError):
        CompactCoords(1.5, 0.0)


@given(coord, time)
def test_coordinates_in_range(x, t):
    c = compactify(SpaceTimePoint(x, t))
    assert -1 <= c.phi <= 1 and -1 <= c.psi <= 1


@given(points, points, points)
def test_metric_axioms(p, q, r):
    assert rho(p, p) == 0
    assert rho(p, q) == rho(q, p)
    assert rho(p, q) <= rho(p, r) + rho(r, q) + 1e-12


@given(points, points)
def test_equality_is_zero_distance_and_hash_consistent(p, q):
    if p == q:
        assert hash(p) == hash(q)
