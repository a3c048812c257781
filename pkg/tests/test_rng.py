import numpy as np
import pytest
from hypothesis import given, strategies as st

from coalweb.rng import GOLDEN, MASK64, arrows_hashed, derive_seed, derive_seeds, generator, mix64, mix64_array


def test_mix64_matches_splitmix64_reference_stream():
    # published SplitMix64 outputs for state 0
    state, out = 0, []
    for _ in range(3):
        state = (state + GOLDEN) & MASK64
        out.append(mix64(state))
    assert out == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_derive_seed_is_the_documented_formula():
    assert derive_seed(0, 0) == 0xE220A8397B1DCDAF
    assert derive_seed(12345, 7) == mix64((12345 + 8 * GOLDEN) & MASK64)
    assert list(derive_seeds(9, 4)) == [derive_seed(9, k) for k in range(4)]


@given(st.lists(st.integers(0, MASK64), min_size=1, max_size=20))
def test_mix64_array_agrees_with_scalar(zs):
    assert mix64_array(np.array(zs, dtype=np.uint64)).tolist() == [mix64(z) for z in zs]


def test_arrows_are_deterministic_and_fair():
    i, j = np.meshgrid(np.arange(-100, 100), np.arange(0, 200))
    a = arrows_hashed(42, i, j)
    assert np.array_equal(a, arrows_hashed(42, i, j))
    assert set(np.unique(a)) == {-1, 1}
    # 4e4 fair coins: sd of the mean is 0.005
    assert abs(a.mean()) < 0.03


def test_arrows_from_distinct_seeds_are_uncorrelated():
    i, j = np.meshgrid(np.arange(200), np.arange(200))
    a = arrows_hashed(derive_seed(1, 0), i, j).ravel()
    b = arrows_hashed(derive_seed(1, 1), i, j).ravel()
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.03
    # neighbouring points of one field are uncorrelated too
    assert abs(np.corrcoef(a[:-1], a[1:])[0, 1]) < 0.03


def test_generator_streams():
    a = generator(5, 0).random(4)
    assert np.array_equal(a, generator(5, 0).random(4))
    assert not np.array_equal(a, generator(5, 1).random(4))
    assert not np.array_equal(a, generator(6, 0).random(4))
    # negative stream indices wrap instead of failing
    generator(5, -3).random()


@pytest.mark.parametrize("root", [0, 1, MASK64])
def test_derived_seeds_are_distinct(root):
    s = derive_seeds(root, 10000)
    assert np.unique(s).size == s.size
