import numpy as np
from scipy import stats

from micropop.streams import (
    YearStreams,
    module_stream,
    person_uniforms,
    rng_stream,
)


class TestRngStream:
    def test_identical_keys_identical_draws(self):
        a = rng_stream(7, 123, 2030, "mortality").random(100)
        b = rng_stream(7, 123, 2030, "mortality").random(100)
        assert np.array_equal(a, b)

    def test_year_separates_streams(self):
        a = rng_stream(7, 123, 2030, "mortality").random(100)
        b = rng_stream(7, 123, 2031, "mortality").random(100)
        assert not np.array_equal(a, b)

    def test_person_and_tag_separate_streams(self):
        base = rng_stream(7, 123, 2030, "mortality").random(100)
        other_person = rng_stream(7, 124, 2030, "mortality").random(100)
        other_tag = rng_stream(7, 123, 2030, "fertility").random(100)
        assert not np.array_equal(base, other_person)
        assert not np.array_equal(base, other_tag)

    def test_chi_square_uniformity(self):
        draws = rng_stream(3, 42, 2022, "quality").random(1_000_000)
        counts, _ = np.histogram(draws, bins=100, range=(0, 1))
        assert stats.chisquare(counts).pvalue > 0.001


class TestPersonUniforms:
    def test_values_are_per_id_not_per_position(self):
        ids = np.arange(1000, dtype=np.uint64)
        base = person_uniforms(9, 2030, "employment", ids)
        shuffled = ids[::-1].copy()
        again = person_uniforms(9, 2030, "employment", shuffled)
        assert np.array_equal(base[::-1], again)

    def test_worker_count_does_not_change_results(self):
        ids = np.arange(50_000, dtype=np.uint64)
        one = person_uniforms(9, 2030, "employment", ids, workers=1)
        four = person_uniforms(9, 2030, "employment", ids, workers=4)
        assert np.array_equal(one, four)

    def test_chi_square_uniformity(self):
        u = person_uniforms(5, 2040, "mortality", np.arange(1_000_000, dtype=np.uint64))
        counts, _ = np.histogram(u, bins=100, range=(0, 1))
        assert stats.chisquare(counts).pvalue > 0.001
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_keys_matter(self):
        ids = np.arange(100, dtype=np.uint64)
        assert not np.array_equal(
            person_uniforms(5, 2030, "mortality", ids),
            person_uniforms(5, 2031, "mortality", ids))
        assert not np.array_equal(
            person_uniforms(5, 2030, "mortality", ids),
            person_uniforms(5, 2030, "employment", ids))
        assert not np.array_equal(
            person_uniforms(5, 2030, "mortality", ids),
            person_uniforms(6, 2030, "mortality", ids))


class TestYearStreams:
    def test_factory_matches_free_functions(self):
        ys = YearStreams(master_seed=7, year=2030)
        assert np.array_equal(ys.module("fertility").random(10),
                              module_stream(7, 2030, "fertility").random(10))
        assert np.array_equal(ys.person(42, "x").random(10),
                              rng_stream(7, 42, 2030, "x").random(10))
        ids = np.arange(100, dtype=np.uint64)
        assert np.array_equal(ys.uniforms("m", ids),
                              person_uniforms(7, 2030, "m", ids))

    def test_module_and_person_streams_differ(self):
        ys = YearStreams(master_seed=7, year=2030)
        assert not np.array_equal(ys.module("x").random(10),
                                  ys.person(0, "x").random(10))
