import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icn_saea.errors import ContractError
from icn_saea.sampling import lhs


def stratified(points):
    n = points.shape[0]
    k = np.arange(n)
    for col in points.T:
        counts = [np.sum((col >= j / n) & (col < (j + 1) / n)) for j in k]
        if counts != [1] * n:
            return False
    return True


def test_four_strata():
    pts = lhs(4, 1, seed=3).points[:, 0]
    assert sorted(np.floor(pts * 4).astype(int).tolist()) == [0, 1, 2, 3]
    assert stratified(lhs(4, 1, seed=3).points)


def test_single_point():
    s = lhs(1, 6, seed=0)
    assert s.points.shape == (1, 6)
    assert np.all((s.points >= 0) & (s.points < 1))


def test_deterministic():
    np.testing.assert_array_equal(lhs(20, 5, 7).points, lhs(20, 5, 7).points)


def test_seeds_differ():
    assert not np.array_equal(lhs(20, 5, 7).points, lhs(20, 5, 8).points)


@pytest.mark.parametrize("n,d", [(0, 3), (3, 0)])
def test_empty_rejected(n, d):
    with pytest.raises(ContractError):
        lhs(n, d, 0)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 120), d=st.integers(1, 20), seed=st.integers(0, 2**32 - 1))
def test_stratification_property(n, d, seed):
    s = lhs(n, d, seed)
    assert np.all((s.points >= 0) & (s.points < 1))
    assert stratified(s.points)
