import pytest
from hypothesis import given, strategies as st

from micropop.core import (
    AGE_GROUPS,
    ECON_AGE_BANDS,
    MAX_AGE,
    ORDERED_LEVELS,
    OUTSIDER,
    EconStatus,
    EducationLevel,
    Individual,
    MaritalStatus,
    Population,
    Sex,
    age_group,
    age_group_range,
    econ_age_band,
    education_ordinal,
    fertility_age_group,
    validate,
)


def person(pid, age=30, sex=Sex.F, marital=MaritalStatus.SGL,
           edu=EducationLevel.US, econ=EconStatus.W, ed="E0001", **kw):
    return Individual(id=pid, age=age, sex=sex, marital_status=marital,
                      education_attained=edu, econ_status=econ, ed_id=ed, **kw)


class TestEducationOrdinal:
    def test_bottom_of_order(self):
        assert education_ordinal(EducationLevel.NF) == 0

    def test_top_of_order(self):
        assert education_ordinal(EducationLevel.D) == 8

    def test_degree_position_matches_listing(self):
        # Oracle: position in the characteristic listing, counting NF as 0.
        listing = ["NF", "P", "LS", "US", "PLC", "HC", "DEG", "PD", "D"]
        assert education_ordinal(EducationLevel.DEG) == listing.index("DEG") == 6

    def test_na_has_no_rank(self):
        with pytest.raises(ValueError):
            education_ordinal(EducationLevel.NA)

    @given(st.integers(0, len(ORDERED_LEVELS) - 2))
    def test_strictly_monotone_in_listing_order(self, i):
        assert education_ordinal(ORDERED_LEVELS[i]) < education_ordinal(ORDERED_LEVELS[i + 1])


class TestAgeBrackets:
    @given(st.integers(0, MAX_AGE))
    def test_age_group_covers_every_age(self, age):
        group = age_group(age)
        lo, hi = age_group_range(group)
        assert lo <= age <= hi

    def test_age_group_labels(self):
        assert age_group(0) == "0-4"
        assert age_group(84) == "80-84"
        assert age_group(85) == "85+"
        assert age_group(MAX_AGE) == "85+"

    def test_econ_band_edges(self):
        assert econ_age_band(15) == "15-19"
        assert econ_age_band(89) == "85-89"
        assert econ_age_band(90) == "90+"
        assert econ_age_band(MAX_AGE) == "90+"
        with pytest.raises(ValueError):
            econ_age_band(14)

    def test_fertility_groups(self):
        assert fertility_age_group(14) is None
        assert fertility_age_group(15) == "15-19"
        assert fertility_age_group(49) == "45-49"
        assert fertility_age_group(50) is None

    def test_band_counts(self):
        assert len(AGE_GROUPS) == 18
        assert len(ECON_AGE_BANDS) == 16


class TestPopulationRegistry:
    def test_add_remove_move_keeps_index(self):
        pop = Population([person(0), person(1, ed="E0002")])
        assert pop.ed_index["E0001"] == {0}
        pop.move(0, "E0002")
        assert pop.ed_index["E0001"] == set()
        assert pop.ed_index["E0002"] == {0, 1}
        pop.remove(1)
        assert pop.ed_index["E0002"] == {0}
        assert validate(pop) == []

    def test_ids_never_reused(self):
        pop = Population([person(0), person(1)])
        pop.remove(1)
        assert pop.new_id() == 2

    def test_snapshot_roundtrip(self):
        a = person(0, marital=MaritalStatus.MAR, spouse=1)
        b = person(1, sex=Sex.M, marital=MaritalStatus.MAR, spouse=0)
        child = person(2, age=3, edu=EducationLevel.NA, econ=EconStatus.NA,
                       mother_id=0)
        a.children.add(2)
        pop = Population([a, b, child])
        snap = pop.snapshot_state()
        pop.get(0).age = 99
        pop.remove(2)
        pop.restore_state(snap)
        assert pop.get(0).age == 30
        assert 2 in pop.individuals
        assert pop.get(0).children == {2}
        assert validate(pop) == []


class TestValidate:
    def test_clean_population(self):
        assert validate(Population([person(0)])) == []

    def test_dangling_spouse(self):
        a = person(0, marital=MaritalStatus.MAR, spouse=7)
        violations = validate(Population([a]))
        assert any("dangling spouse" in v for v in violations)

    def test_index_mismatch(self):
        pop = Population([person(0)])
        pop.ed_index["E0001"].discard(0)
        violations = validate(pop)
        assert any("index mismatch" in v for v in violations)

    def test_asymmetric_link(self):
        a = person(0, marital=MaritalStatus.MAR, spouse=1)
        b = person(1, sex=Sex.M, marital=MaritalStatus.MAR, spouse=OUTSIDER)
        violations = validate(Population([a, b]))
        assert any("not symmetric" in v for v in violations)

    def test_married_without_spouse(self):
        violations = validate(Population([person(0, marital=MaritalStatus.MAR)]))
        assert any("no spouse" in v for v in violations)

    def test_spouse_without_marriage(self):
        a = person(0, spouse=OUTSIDER)
        violations = validate(Population([a]))
        assert any("spouse set but marital" in v for v in violations)

    def test_econ_na_above_threshold(self):
        violations = validate(Population([person(0, age=16, econ=EconStatus.NA)]))
        assert any("econ NA" in v for v in violations)

    def test_education_na_for_adult(self):
        violations = validate(Population([person(0, age=6, edu=EducationLevel.NA,
                                                 econ=EconStatus.NA)]))
        assert any("education NA" in v for v in violations)

    def test_student_pipeline_consistency(self):
        bad = person(0, econ=EconStatus.S)  # student without pipeline
        violations = validate(Population([bad]))
        assert any("pipeline disagree" in v for v in violations)

    def test_prospective_not_above_attained(self):
        bad = person(0, econ=EconStatus.S, edu=EducationLevel.DEG,
                     prospective_education=EducationLevel.US, graduation_year=2025)
        violations = validate(Population([bad]))
        assert any("not above attained" in v for v in violations)

    def test_kinship_closure(self):
        parent = person(0)
        child = person(1, age=2, edu=EducationLevel.NA, econ=EconStatus.NA,
                       mother_id=0)
        violations = validate(Population([parent, child]))
        assert any("missing from mother" in v for v in violations)
        parent.children.add(1)
        assert validate(Population([parent, child])) == []

    def test_age_cap(self):
        violations = validate(Population([person(0, age=MAX_AGE + 1)]))
        assert any("outside 0..105" in v for v in violations)
