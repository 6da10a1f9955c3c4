import math

import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from onebit_dmt.special import gammainc_lower, gammainc_upper


@settings(max_examples=300, deadline=None)
@given(a=st.integers(1, 12), logx=st.floats(-30, 4))
def test_matches_scipy(a, logx):
    x = math.exp(logx)
    ref = scipy.special.gammainc(a, x)
    assert gammainc_lower(a, x) == pytest.approx(ref, rel=1e-10, abs=1e-300)
    refq = scipy.special.gammaincc(a, x)
    assert gammainc_upper(a, x) == pytest.approx(refq, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
@pytest.mark.parametrize("x", [0.3, 1.0, 2.5, 7.0, 20.0])
def test_integer_shape_closed_form(m, x):
    # Erlang CDF: 1 - exp(-x) sum_{k<m} x^k / k!
    ref = 1 - math.exp(-x) * sum(x**k / math.factorial(k) for k in range(m))
    assert gammainc_lower(m, x) == pytest.approx(ref, rel=1e-12)


def test_small_argument_keeps_relative_precision():
    # leading term x^m / m! where 1 - (...) would cancel to zero
    x = 1e-7
    assert gammainc_lower(3, x) == pytest.approx(x**3 / 6 * (1 - 3 * x / 4), rel=1e-10)


def test_edges():
    assert gammainc_lower(2, 0.0) == 0.0
    assert gammainc_lower(2, math.inf) == 1.0
    with pytest.raises(ValueError):
        gammainc_lower(0, 1.0)
    with pytest.raises(ValueError):
        gammainc_lower(1, -1.0)
