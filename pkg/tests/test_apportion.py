import math

import pytest
from hypothesis import given, strategies as st

from micropop.apportion import largest_remainder, round_half_up


class TestLargestRemainder:
    def test_exact_example(self):
        assert largest_remainder([0.5, 0.3, 0.2], 10) == [5, 3, 2]

    def test_remainder_goes_to_largest_fraction(self):
        # Quotas 4.67, 4.67, 4.67 -> two of the three get the extra unit.
        assert sum(largest_remainder([1, 1, 1], 14)) == 14
        assert largest_remainder([0.55, 0.45], 10) == [6, 4]

    def test_ties_break_to_lower_index(self):
        assert largest_remainder([1, 1], 1) == [1, 0]

    def test_zero_weights_spread_evenly(self):
        assert largest_remainder([0, 0, 0], 4) == [2, 1, 1]

    def test_empty_and_errors(self):
        assert largest_remainder([], 0) == []
        with pytest.raises(ValueError):
            largest_remainder([], 3)
        with pytest.raises(ValueError):
            largest_remainder([1.0], -1)
        with pytest.raises(ValueError):
            largest_remainder([-0.1, 1.1], 5)

    @given(
        st.lists(st.floats(0, 1000, allow_nan=False), min_size=1, max_size=20)
        .filter(lambda ws: sum(ws) > 0),
        st.integers(0, 10_000),
    )
    def test_sum_exact_and_quota_bounds(self, weights, total):
        result = largest_remainder(weights, total)
        assert sum(result) == total
        s = sum(weights)
        for w, r in zip(weights, result):
            quota = w * total / s
            assert math.floor(quota) <= r <= math.ceil(quota)


class TestRoundHalfUp:
    def test_half_rounds_up(self):
        assert round_half_up(2.5) == 3
        assert round_half_up(3.5) == 4

    def test_plain_rounding(self):
        assert round_half_up(2.49) == 2
        assert round_half_up(2.51) == 3
        assert round_half_up(0.0) == 0
