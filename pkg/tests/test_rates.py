import dataclasses
import filecmp
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from micropop.core import MAX_AGE, EducationLevel, Sex, age_group_range
from micropop.rates import (
    ECON_AGE_BANDS,
    ECON_STATUSES,
    GROSS_POST_2032,
    MORTALITY_BASE_YEAR,
    MortalityTable,
    RatesError,
    ScenarioConfig,
    age_improvement_scaling,
    gen_synthetic_geography,
    gen_synthetic_rates,
    general_improvement,
    load_rates,
    migration_targets,
    mortality_rate,
    net_migration,
    tfr_factor,
    write_rates,
)


@pytest.fixture(scope="module")
def synth():
    geo = gen_synthetic_geography(5, total_population=8000)
    return gen_synthetic_rates(5, geo)


class TestMortalitySchedule:
    def test_age_95_gets_half_the_general_improvement(self):
        # 95 sits halfway between 90 and 100, so a 2.5% improvement becomes 1.25%.
        assert age_improvement_scaling(95) == 0.5
        assert general_improvement(2017) == 0.025
        table = MortalityTable(np.full((2, MAX_AGE + 1), 0.5))
        factor_95 = table.factor_vector(2017)[95]
        assert factor_95 == pytest.approx(1 - 0.0125, abs=1e-15)

    def test_no_improvement_from_age_100(self):
        table = MortalityTable(np.full((2, MAX_AGE + 1), 0.4))
        for age in (100, 101, MAX_AGE):
            assert mortality_rate(table, age, Sex.F, 2050) == 0.4

    def test_general_rate_constant_after_2047(self):
        assert general_improvement(2047) == pytest.approx(0.015)
        assert general_improvement(2048) == 0.015
        assert general_improvement(2100) == 0.015

    def test_brute_force_product_oracle_age_50_year_2030(self, synth):
        # Independent year-by-year loop over the schedule.
        expected_factor = 1.0
        for y in range(2017, 2031):
            if y <= 2022:
                g = 0.025
            elif y >= 2047:
                g = 0.015
            else:
                g = 0.025 - 0.010 * (y - 2022) / 25
            expected_factor *= 1 - g  # age 50: full scaling
        table = synth.mortality
        expected = table.q[0, 50] * expected_factor
        assert mortality_rate(table, 50, Sex.F, 2030) == pytest.approx(expected, rel=1e-12)

    def test_base_year_returns_base_rate(self, synth):
        table = synth.mortality
        assert mortality_rate(table, 30, Sex.M, MORTALITY_BASE_YEAR) == table.q[1, 30]

    def test_domain_errors(self, synth):
        with pytest.raises(ValueError):
            mortality_rate(synth.mortality, MAX_AGE + 1, Sex.F, 2030)
        with pytest.raises(ValueError):
            mortality_rate(synth.mortality, 30, Sex.F, 2015)


_TABLE_CACHE = {}


def _shared_table():
    if "t" not in _TABLE_CACHE:
        geo = gen_synthetic_geography(5, total_population=2000)
        _TABLE_CACHE["t"] = gen_synthetic_rates(5, geo).mortality
    return _TABLE_CACHE["t"]


class TestTfrFactor:
    def test_base_year_is_one(self):
        assert tfr_factor(ScenarioConfig(), 2022) == 1.0

    def test_floor_year_and_after(self):
        expected = 1.3 / 1.55  # floor TFR over the starting TFR
        assert tfr_factor(ScenarioConfig(), 2038) == pytest.approx(expected, abs=1e-12)
        assert tfr_factor(ScenarioConfig(), 2057) == pytest.approx(expected, abs=1e-12)

    def test_linear_midpoint_2030(self):
        # Linear oracle: 2030 is halfway through 2022..2038.
        tfr_2030 = 1.55 + (1.3 - 1.55) * (2030 - 2022) / (2038 - 2022)
        assert tfr_2030 == pytest.approx(1.425)
        assert tfr_factor(ScenarioConfig(), 2030) == pytest.approx(tfr_2030 / 1.55, abs=1e-12)

    def test_constant_after_floor_year(self):
        values = {tfr_factor(ScenarioConfig(), y) for y in range(2038, 2060)}
        assert len(values) == 1

    def test_year_before_start_rejected(self):
        with pytest.raises(ValueError):
            tfr_factor(ScenarioConfig(), 2021)


class TestMigrationTargets:
    def cfg(self, scenario):
        return ScenarioConfig(intl_scenario=scenario)

    def test_schedule_anchors(self):
        assert migration_targets(self.cfg("M1"), 2022).net == 75_000
        assert migration_targets(self.cfg("M1"), 2027).net == 45_000
        assert migration_targets(self.cfg("M1"), 2035).net == 45_000
        assert migration_targets(self.cfg("M2"), 2032).net == 30_000
        assert migration_targets(self.cfg("M2"), 2045).net == 30_000
        assert migration_targets(self.cfg("M3"), 2027).net == 25_000
        assert migration_targets(self.cfg("M3"), 2032).net == 10_000
        assert migration_targets(self.cfg("M3"), 2050).net == 10_000

    def test_m3_2030_linear_between_anchors(self):
        # Linear oracle between (2027, 25k) and (2032, 10k).
        expected = 25_000 + (10_000 - 25_000) * (2030 - 2027) / (2032 - 2027)
        assert expected == 16_000
        assert migration_targets(self.cfg("M3"), 2030).net == pytest.approx(16_000)

    def test_gross_constants_after_2032(self):
        t = migration_targets(self.cfg("M1"), 2035)
        assert (t.immigrants, t.emigrants, t.net) == (95_000, 50_000, 45_000)
        for scenario, (imm, emi) in GROSS_POST_2032.items():
            for year in (2033, 2040, 2055):
                t = migration_targets(self.cfg(scenario), year)
                assert (t.immigrants, t.emigrants) == (imm, emi)

    def test_m2_gross_net_mismatch_kept_verbatim(self):
        # 85,000 - 50,000 = 35,000 even though the schedule says +30,000;
        # the gross constants win and the gap is surfaced downstream.
        t = migration_targets(self.cfg("M2"), 2040)
        assert t.immigrants - t.emigrants == 35_000
        assert t.net == 30_000

    def test_pre_2033_grosses_follow_net(self):
        cfg = self.cfg("M1")
        for year in range(2022, 2033):
            t = migration_targets(cfg, year)
            assert t.immigrants == pytest.approx(t.emigrants + t.net)
            assert 50_000 <= t.emigrants <= 60_000

    def test_net_non_increasing(self):
        for scenario in ("M1", "M2", "M3"):
            values = [net_migration(scenario, y) for y in range(2022, 2045)]
            assert all(a >= b for a, b in zip(values, values[1:]))

    def test_unknown_scenario(self):
        with pytest.raises(RatesError):
            net_migration("M4", 2030)
        cfg = ScenarioConfig()
        object.__setattr__(cfg, "intl_scenario", "M9")
        with pytest.raises(RatesError):
            migration_targets(cfg, 2030)


class TestScenarioConfig:
    def test_bad_values_rejected(self):
        with pytest.raises(RatesError):
            ScenarioConfig(intl_scenario="M4")
        with pytest.raises(RatesError):
            ScenarioConfig(horizon_years=0)
        with pytest.raises(RatesError):
            ScenarioConfig(tfr_floor_year=2020)
        with pytest.raises(RatesError):
            ScenarioConfig(dropout_priority="sideways")


class TestLoadRoundTrip:
    def test_write_load_write_is_identical(self, synth, tmp_path):
        first = tmp_path / "first"
        second = tmp_path / "second"
        write_rates(synth, first)
        loaded = load_rates(first)
        write_rates(loaded, second)
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            assert filecmp.cmp(first / name, second / name, shallow=False), name

    def test_missing_mandatory_file_named(self, synth, tmp_path):
        write_rates(synth, tmp_path)
        (tmp_path / "mortality.csv").unlink()
        with pytest.raises(RatesError, match="mortality.csv"):
            load_rates(tmp_path)

    def test_negative_fertility_rate_is_parse_error_with_row(self, synth, tmp_path):
        write_rates(synth, tmp_path)
        path = tmp_path / "fertility.csv"
        lines = path.read_text().splitlines()
        parts = lines[3].split(",")
        parts[-1] = "-0.2"
        lines[3] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(RatesError, match="fertility.csv:4"):
            load_rates(tmp_path)

    def test_econ_row_summing_to_098_rejected(self, synth, tmp_path):
        write_rates(synth, tmp_path)
        path = tmp_path / "econ_transitions.csv"
        lines = path.read_text().splitlines()
        # Scale the first row's six probabilities so they sum to 0.98.
        header, first_key = lines[0], lines[1].split(",")[:3]
        out = [header]
        scaled = 0
        for line in lines[1:]:
            parts = line.split(",")
            if parts[:3] == first_key:
                parts[-1] = repr(float(parts[-1]) * 0.98)
                scaled += 1
            out.append(",".join(parts))
        assert scaled == len(ECON_STATUSES)
        path.write_text("\n".join(out) + "\n")
        with pytest.raises(RatesError, match="sums to"):
            load_rates(tmp_path)

    def test_internal_flows_for_both_scenario_years(self, synth, tmp_path):
        write_rates(synth, tmp_path)
        tables = load_rates(tmp_path)
        assert set(tables.internal_flows) == {2016, 2022}
        tables.scenario = dataclasses.replace(tables.scenario, internal_flow_year=2016)
        assert tables.internal_flow_table().year == 2016


class TestSyntheticRates:
    def test_same_seed_is_byte_identical(self, tmp_path):
        geo = gen_synthetic_geography(9, total_population=3000)
        a = gen_synthetic_rates(9, geo)
        b = gen_synthetic_rates(9, geo)
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        write_rates(a, dir_a)
        write_rates(b, dir_b)
        for path in sorted(dir_a.iterdir()):
            assert filecmp.cmp(path, dir_b / path.name, shallow=False), path.name

    def test_mortality_monotone_above_30(self, synth):
        # Scan oracle over the generated table.
        q = synth.mortality.q
        for row in q:
            diffs = np.diff(row[30:])
            assert (diffs >= 0).all()

    def test_mortality_in_unit_interval(self, synth):
        assert (synth.mortality.q >= 0).all() and (synth.mortality.q <= 1).all()

    def test_econ_rows_sum_to_one(self, synth):
        sums = synth.econ.probs.sum(axis=-1)
        assert np.abs(sums - 1).max() < 1e-9

    def test_distributions_sum_to_one(self, synth):
        for ctx in ("intra", "inter", "intl_out", "intl_in"):
            total = sum(p for _, p in synth.migration_dists.brackets(ctx))
            assert total == pytest.approx(1.0, abs=1e-9)
        assert sum(synth.region_emigrant_shares.values()) == pytest.approx(1.0, abs=1e-9)
        assert sum(synth.education.adult_learner_age_sex_dist.values()) == \
            pytest.approx(1.0, abs=1e-9)

    def test_geography_weights_sum_to_one(self, synth):
        total = sum(r.intl_immigrant_weight for r in synth.geography.eds.values())
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_some_eds_take_no_international_immigrants(self, synth):
        zeros = [r for r in synth.geography.eds.values() if r.intl_immigrant_weight == 0]
        assert zeros

    def test_course_durations_at_least_one_year(self, synth):
        assert all(d >= 1 for d in synth.education.course_duration.values())

    def test_secondary_dropout_schedule(self, synth):
        edu = synth.education
        assert edu.dropout_rate(EducationLevel.P, 2030, 2022) == 0.0
        assert edu.dropout_rate(EducationLevel.US, 2022, 2022) == 0.025
        later = edu.dropout_rate(EducationLevel.US, 2040, 2022)
        assert edu.secondary_dropout_floor <= later < 0.025
        assert edu.dropout_rate(EducationLevel.US, 2200, 2022) == edu.secondary_dropout_floor

    def test_scenario_scale_matches_reference_population(self, synth):
        total = sum(r.base_population for r in synth.geography.eds.values())
        assert synth.scenario.intl_scale == pytest.approx(total / 5_100_000)
