import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from xyzot.stats import ks_critical, ks_statistic_uniform, ks_uniform_test


@settings(max_examples=50)
@given(st.integers(1, 2000), st.integers(0, 2 ** 32 - 1))
def test_ks_matches_scipy(n, seed):
    x = np.random.default_rng(seed).random(n) ** 1.3
    assert ks_statistic_uniform(x) == pytest.approx(stats.kstest(x, "uniform").statistic,
                                                    abs=1e-15)


def test_ks_critical():
    assert ks_critical(10 ** 6) == pytest.approx(1.63e-3)


def test_ks_test_verdicts():
    rng = np.random.default_rng(0)
    assert ks_uniform_test(rng.random(10_000))[2]
    assert not ks_uniform_test(rng.random(10_000) ** 2)[2]
    with pytest.raises(ValueError):
        ks_statistic_uniform([])
