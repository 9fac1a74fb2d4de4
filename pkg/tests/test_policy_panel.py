import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spillover.errors import SchemaError, UncoveredMonthError
from spillover.policy_panel import (
    BlockRecord,
    PolicySchedule,
    aggregate_zip_mw,
    binding_mw_for_block,
    estimate_mw_worker_share,
    housing_expenditure_shares,
    winsorize,
)

FED = PolicySchedule("fed", "federal", "", (("2009-07", 7.25),))


def block(zip_="60601", state="IL", county="Cook", place="Chicago", units=100, bid="b1"):
    return BlockRecord(bid, zip_, state, county, place, units)


class TestBindingMw:
    def test_max_of_levels(self):
        schedules = [
            FED,
            PolicySchedule("il", "state", "IL", (("2010-01", 8.00),)),
            PolicySchedule("chi", "place", "Chicago", (("2019-07", 13.00),)),
        ]
        assert binding_mw_for_block(block(), "2019-08", schedules) == 13.00

    def test_federal_floor_only(self):
        assert binding_mw_for_block(block(), "2015-01", [FED]) == 7.25

    def test_step_function_lookup(self):
        # oracle: linear scan of dated steps
        county = PolicySchedule("cook", "county", "Cook", (("2019-07", 12.00),))
        assert binding_mw_for_block(block(), "2019-06", [FED, county]) == 7.25
        assert binding_mw_for_block(block(), "2019-07", [FED, county]) == 12.00

    def test_uncovered_month(self):
        with pytest.raises(UncoveredMonthError, match="uncovered month"):
            binding_mw_for_block(block(), "2009-06", [FED])

    def test_region_match_is_exact(self):
        other = PolicySchedule("ca", "state", "CA", (("2010-01", 10.00),))
        assert binding_mw_for_block(block(state="IL"), "2015-01", [FED, other]) == 7.25

    def test_empty_place_matches_nothing(self):
        place = PolicySchedule("p", "place", "", (("2010-01", 99.0),))
        # a schedule with an empty region code must not bind every block
        assert binding_mw_for_block(block(place=""), "2015-01", [FED, place]) == 7.25

    def test_exactly_one_federal(self):
        with pytest.raises(SchemaError, match="federal"):
            binding_mw_for_block(block(), "2015-01", [FED, FED])

    def test_schedule_validation(self):
        with pytest.raises(SchemaError, match="strictly increasing"):
            PolicySchedule("x", "state", "IL", (("2012-01", 8.0), ("2011-01", 9.0)))
        with pytest.raises(SchemaError, match="> 0"):
            PolicySchedule("x", "state", "IL", (("2012-01", -1.0),))


class TestAggregateZipMw:
    def test_weighted_mean(self):
        schedules = [FED, PolicySchedule("p", "place", "P", (("2010-01", 13.0),))]
        blocks = [
            block(units=100, place="", bid="a"),
            block(units=300, place="P", bid="b"),
        ]
        pol = aggregate_zip_mw(blocks, "2015-01", schedules)
        assert pol.statutory_mw == pytest.approx(11.5625, abs=1e-12)
        assert pol.mw_res == pytest.approx(math.log(11.5625), abs=1e-15)

    def test_single_block_identity(self):
        pol = aggregate_zip_mw([block(units=10)], "2015-01", [FED])
        assert pol.statutory_mw == 7.25

    def test_zero_units_simple_average(self):
        schedules = [FED, PolicySchedule("p", "place", "P", (("2010-01", 13.0),))]
        blocks = [block(units=0, place="", bid="a"), block(units=0, place="P", bid="b")]
        pol = aggregate_zip_mw(blocks, "2015-01", schedules)
        assert pol.statutory_mw == pytest.approx(10.125, abs=1e-12)

    def test_requires_blocks(self):
        with pytest.raises(SchemaError):
            aggregate_zip_mw([], "2015-01", [FED])

    @given(
        units=st.lists(st.integers(min_value=0, max_value=5000), min_size=1, max_size=8),
        months_after=st.booleans(),
    )
    @settings(max_examples=50, deadline=None)
    def test_bounds_and_floor(self, units, months_after):
        # weighted average stays within the block min/max and above the floor
        schedules = [FED, PolicySchedule("p", "place", "P", (("2016-01", 12.0),))]
        blocks = [
            block(units=u, place="P" if i % 2 else "", bid=f"b{i}")
            for i, u in enumerate(units)
        ]
        month = "2017-06" if months_after else "2015-06"
        mws = [binding_mw_for_block(b, month, schedules) for b in blocks]
        pol = aggregate_zip_mw(blocks, month, schedules)
        assert min(mws) - 1e-12 <= pol.statutory_mw <= max(mws) + 1e-12
        assert pol.statutory_mw >= 7.25 - 1e-12

    def test_monotone_in_schedule_step(self):
        low = [FED, PolicySchedule("p", "place", "P", (("2016-01", 9.0),))]
        high = [FED, PolicySchedule("p", "place", "P", (("2016-01", 12.0),))]
        blocks = [block(units=5, place="P", bid="a"), block(units=5, place="", bid="b")]
        assert (
            aggregate_zip_mw(blocks, "2016-02", high).statutory_mw
            >= aggregate_zip_mw(blocks, "2016-02", low).statutory_mw
        )


class TestMwWorkerShare:
    BINS = [(0.0, 10_000.0, 20.0), (10_000.0, 15_000.0, 50.0), (15_000.0, math.inf, 30.0)]

    def test_interpolation(self):
        # oracle: (20 + 50 * (11310 - 10000) / 5000) / 100
        assert estimate_mw_worker_share(self.BINS, 7.25) == pytest.approx(0.331, abs=1e-12)

    def test_full_time_wage_default(self):
        # 7.25/hour at 130 hours for 12 months = 11310/year
        assert 7.25 * 130 * 12 == 11310

    def test_exact_lower_edge(self):
        share = estimate_mw_worker_share(self.BINS, 10_000.0 / (130 * 12))
        assert share == pytest.approx(0.20, abs=1e-12)  # fraction term is zero

    def test_midpoint_single_bin(self):
        bins = [(0.0, 20_000.0, 80.0)]
        share = estimate_mw_worker_share(bins, 10_000.0 / (130 * 12))
        assert share == pytest.approx(0.5, abs=1e-12)

    def test_empty_workforce(self):
        with pytest.raises(SchemaError, match="empty workforce"):
            estimate_mw_worker_share([(0.0, 10.0, 0.0)], 7.25)

    def test_above_top_bin_warns(self):
        bins = [(0.0, 10.0, 5.0), (10.0, 20.0, 5.0)]
        with pytest.warns(UserWarning):
            assert estimate_mw_worker_share(bins, 7.25) == 1.0

    def test_below_bottom_is_zero(self):
        bins = [(20_000.0, 30_000.0, 5.0)]
        assert estimate_mw_worker_share(bins, 7.25) == 0.0

    @given(mw=st.floats(min_value=0.5, max_value=30.0))
    @settings(max_examples=60, deadline=None)
    def test_weakly_increasing_in_mw(self, mw):
        lo = estimate_mw_worker_share(self.BINS, mw)
        hi = estimate_mw_worker_share(self.BINS, mw * 1.05)
        assert hi >= lo - 1e-12

    def test_non_contiguous_bins_rejected(self):
        with pytest.raises(SchemaError, match="contiguous"):
            estimate_mw_worker_share([(0.0, 10.0, 1.0), (11.0, 20.0, 1.0)], 0.01)


class TestHousingShares:
    def test_direct_ratio(self):
        res = housing_expenditure_shares([("z", 1000.0, 48_000.0)])
        assert res.shares == (("z", 0.25),)

    def test_outlier_clamped(self):
        # winsorization oracle: sort and clamp at nearest-rank percentiles
        n = 300
        raw = [(f"z{i}", 1000.0, 48_000.0) for i in range(n - 1)]
        raw.append(("big", 10_000.0, 48_000.0))
        res = housing_expenditure_shares(raw)
        values = dict(res.shares)
        ordered = sorted([0.25] * (n - 1) + [2.5])
        hi_rank_value = ordered[math.ceil(99.5 / 100 * n) - 1]
        assert hi_rank_value == 0.25
        assert values["big"] == pytest.approx(hi_rank_value)
        assert values["big"] < 2.5

    def test_all_equal_unchanged(self):
        raw = [(f"z{i}", 900.0, 36_000.0) for i in range(10)]
        res = housing_expenditure_shares(raw)
        assert all(s == pytest.approx(0.3) for _, s in res.shares)

    def test_missing_wage_excluded(self):
        res = housing_expenditure_shares([("a", 1000.0, 48_000.0), ("b", 1000.0, None)])
        assert res.excluded == ("b",)
        assert [z for z, _ in res.shares] == ["a"]

    @given(st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=1, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_winsorize_idempotent(self, values):
        once = winsorize(values)
        twice = winsorize(once)
        assert twice == once
