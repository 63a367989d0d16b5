"""Exogenous rate tables, scenario schedules and their file formats.

All tables are immutable after load. Time variation enters only through the
closed-form schedules here: the mortality-improvement product, the total
fertility decay, and the international migration anchors.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .apportion import largest_remainder
from .core import (
    AGE_GROUPS,
    ECON_AGE_BANDS,
    FERTILITY_AGE_GROUPS,
    FERTILITY_MARITAL_SPLIT_AGE,
    MARITAL_BAND_ALL,
    MARITAL_BAND_MAR,
    MARITAL_BAND_NOT_MAR,
    MAX_AGE,
    EDRecord,
    EconStatus,
    EducationLevel,
    Geography,
    ORDERED_LEVELS,
    Sex,
    age_group_range,
    education_ordinal,
)


class RatesError(ValueError):
    """Raised for missing files, malformed rows or violated table invariants."""


SEX_ROW = {Sex.F: 0, Sex.M: 1}
SEX_CODES = ("F", "M")

PROB_TOL = 1e-9

# --------------------------------------------------------------------------
# Mortality and its improvement schedule
# --------------------------------------------------------------------------

MORTALITY_BASE_YEAR = 2016
_IMPROVE_EARLY = 0.025        # annual improvement through 2022
_IMPROVE_LATE = 0.015         # constant annual improvement from 2047 on
_TAPER_START_YEAR = 2022
_TAPER_END_YEAR = 2047
_IMPROVE_FULL_AGE = 90        # full improvement up to here
_IMPROVE_ZERO_AGE = 100       # no improvement from here up


def general_improvement(year: int) -> float:
    """Economy-wide annual mortality improvement for one calendar year."""
    if year <= _TAPER_START_YEAR:
        return _IMPROVE_EARLY
    if year >= _TAPER_END_YEAR:
        return _IMPROVE_LATE
    span = _TAPER_END_YEAR - _TAPER_START_YEAR
    return _IMPROVE_EARLY - (_IMPROVE_EARLY - _IMPROVE_LATE) * (year - _TAPER_START_YEAR) / span


def age_improvement_scaling(age: int) -> float:
    """Improvement share applied at one age: 1 to 90, fading to 0 at 100."""
    if age <= _IMPROVE_FULL_AGE:
        return 1.0
    if age >= _IMPROVE_ZERO_AGE:
        return 0.0
    return (_IMPROVE_ZERO_AGE - age) / (_IMPROVE_ZERO_AGE - _IMPROVE_FULL_AGE)


class MortalityTable:
    """Base-year death probabilities q[sex][age], ages 0..105."""

    def __init__(self, q: np.ndarray, base_year: int = MORTALITY_BASE_YEAR):
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (2, MAX_AGE + 1):
            raise RatesError(f"mortality table must be 2x{MAX_AGE + 1}, got {q.shape}")
        if (q < 0).any() or (q > 1).any():
            raise RatesError("mortality probabilities must lie in [0, 1]")
        self.q = q
        self.base_year = base_year
        self._scaling = np.array([age_improvement_scaling(a) for a in range(MAX_AGE + 1)])
        self._factors: dict[int, np.ndarray] = {base_year: np.ones(MAX_AGE + 1)}

    def factor_vector(self, year: int) -> np.ndarray:
        """Cumulative improvement factor per age for ``year``."""
        if year < self.base_year:
            raise ValueError(f"year {year} precedes base year {self.base_year}")
        known = max(y for y in self._factors if y <= year)
        fac = self._factors[known]
        for y in range(known + 1, year + 1):
            fac = fac * (1.0 - general_improvement(y) * self._scaling)
            self._factors[y] = fac
        return self._factors[year]

    def rate(self, age: int, sex: Sex, year: int) -> float:
        if not 0 <= age <= MAX_AGE:
            raise ValueError(f"age {age} outside 0..{MAX_AGE}")
        return float(self.q[SEX_ROW[sex], age] * self.factor_vector(year)[age])

    def rate_matrix(self, year: int) -> np.ndarray:
        """Effective q[sex][age] for one year."""
        return self.q * self.factor_vector(year)[None, :]


def mortality_rate(table: MortalityTable, age: int, sex: Sex, year: int) -> float:
    """Improved death probability for one (age, sex) in one year."""
    return table.rate(age, sex, year)


# --------------------------------------------------------------------------
# Fertility
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FertilityTable:
    """Births per woman per year by (region, five-year age group, marital band)."""

    rates: dict[tuple[str, str, str], float]
    base_tfr: float = 1.55

    def __post_init__(self):
        for (region, group, band), rate in self.rates.items():
            if rate < 0:
                raise RatesError(f"negative fertility rate for {(region, group, band)}")
            if group not in FERTILITY_AGE_GROUPS:
                raise RatesError(f"unknown fertility age group {group}")
            lo, _ = age_group_range(group)
            split = lo >= FERTILITY_MARITAL_SPLIT_AGE
            if split and band not in (MARITAL_BAND_MAR, MARITAL_BAND_NOT_MAR):
                raise RatesError(f"group {group} must use MAR/NOT_MAR bands, got {band}")
            if not split and band != MARITAL_BAND_ALL:
                raise RatesError(f"group {group} must use the ALL band, got {band}")

    @property
    def regions(self) -> tuple[str, ...]:
        return tuple(sorted({r for (r, _, _) in self.rates}))

    def rate(self, region: str, group: str, band: str) -> float:
        return self.rates.get((region, group, band), 0.0)


def fertility_bands_for(group: str) -> tuple[str, ...]:
    lo, _ = age_group_range(group)
    if lo >= FERTILITY_MARITAL_SPLIT_AGE:
        return (MARITAL_BAND_MAR, MARITAL_BAND_NOT_MAR)
    return (MARITAL_BAND_ALL,)


# --------------------------------------------------------------------------
# Internal migration flows and the age/sex mix of movers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InternalFlowTable:
    """County-to-county movers per year; the diagonal holds within-county moves."""

    year: int
    inter: dict[tuple[str, str], int]
    intra: dict[str, int]

    def __post_init__(self):
        for key, n in self.inter.items():
            if n < 0:
                raise RatesError(f"negative flow {key}: {n}")
        for county, n in self.intra.items():
            if n < 0:
                raise RatesError(f"negative intra-county flow {county}: {n}")

    def outflows_from(self, county: str) -> dict[str, int]:
        return {d: n for (o, d), n in self.inter.items() if o == county and n > 0}


MIGRATION_CONTEXTS = ("intra", "inter", "intl_out", "intl_in")


class MigrationAgeSexDists:
    """Per-context probability over (sex, five-year age group) brackets."""

    def __init__(self, dists: dict[str, dict[tuple[str, str], float]]):
        for ctx in MIGRATION_CONTEXTS:
            if ctx not in dists:
                raise RatesError(f"missing migration age/sex distribution for {ctx!r}")
        for ctx, dist in dists.items():
            if ctx not in MIGRATION_CONTEXTS:
                raise RatesError(f"unknown migration context {ctx!r}")
            total = 0.0
            for (sex, group), share in dist.items():
                if sex not in SEX_CODES or group not in AGE_GROUPS:
                    raise RatesError(f"unknown bracket {(sex, group)} in {ctx}")
                if share < 0:
                    raise RatesError(f"negative share for {(sex, group)} in {ctx}")
                total += share
            if abs(total - 1.0) > PROB_TOL:
                raise RatesError(f"{ctx} age/sex shares sum to {total!r}, expected 1")
        self._dists = dists

    def weight(self, context: str, sex: Sex, group: str) -> float:
        return self._dists[context].get((sex.value, group), 0.0)

    def brackets(self, context: str) -> list[tuple[tuple[str, str], float]]:
        """Bracket shares in a fixed (sex, age-group) order."""
        dist = self._dists[context]
        order = {g: i for i, g in enumerate(AGE_GROUPS)}
        return sorted(dist.items(), key=lambda kv: (kv[0][0], order[kv[0][1]]))


# --------------------------------------------------------------------------
# International migration schedule
# --------------------------------------------------------------------------

SCENARIOS = ("M1", "M2", "M3")

# Net-migration anchor points; linear in between, flat after the last.
NET_ANCHORS: dict[str, tuple[tuple[int, float], ...]] = {
    "M1": ((2022, 75_000.0), (2027, 45_000.0)),
    "M2": ((2022, 75_000.0), (2032, 30_000.0)),
    "M3": ((2022, 75_000.0), (2027, 25_000.0), (2032, 10_000.0)),
}

# Gross flows fixed for years after 2032: (immigrants, emigrants). Note the
# M2 pair implies net +35,000 against the +30,000 anchor; the gross constants
# are honoured verbatim and the gap is surfaced by the validation report.
GROSS_POST_2032: dict[str, tuple[float, float]] = {
    "M1": (95_000.0, 50_000.0),
    "M2": (85_000.0, 50_000.0),
    "M3": (70_000.0, 60_000.0),
}
GROSS_FLOWS_FROM_YEAR = 2033


@dataclass(frozen=True)
class MigrationTargets:
    net: float
    immigrants: float
    emigrants: float


def net_migration(scenario: str, year: int) -> float:
    if scenario not in NET_ANCHORS:
        raise RatesError(f"unknown international migration scenario {scenario!r}")
    anchors = NET_ANCHORS[scenario]
    if year <= anchors[0][0]:
        return anchors[0][1]
    for (y0, v0), (y1, v1) in zip(anchors, anchors[1:]):
        if year <= y1:
            return v0 + (v1 - v0) * (year - y0) / (y1 - y0)
    return anchors[-1][1]


def migration_targets(config: "ScenarioConfig", year: int) -> MigrationTargets:
    """National net/gross international flows for one year (unscaled)."""
    scenario = config.intl_scenario
    if scenario not in SCENARIOS:
        raise RatesError(f"unknown international migration scenario {scenario!r}")
    net = net_migration(scenario, year)
    gross_imm, gross_emi = GROSS_POST_2032[scenario]
    if year >= GROSS_FLOWS_FROM_YEAR:
        return MigrationTargets(net=net, immigrants=gross_imm, emigrants=gross_emi)
    # Before the fixed-gross era the emigrant level is only implied: run it
    # linearly from the configured 2022 level into the post-2032 constant.
    frac = (year - 2022) / (GROSS_FLOWS_FROM_YEAR - 2022)
    frac = min(max(frac, 0.0), 1.0)
    emigrants = config.emigrants_2022 + (gross_emi - config.emigrants_2022) * frac
    return MigrationTargets(net=net, immigrants=emigrants + net, emigrants=emigrants)


# --------------------------------------------------------------------------
# Education rates
# --------------------------------------------------------------------------

BROAD_BAND_LOWER = "LowerSecondaryAndBelow"
BROAD_BAND_LC_PLC = "LC_PLC"
BROAD_BAND_THIRD = "ThirdLevel"
BROAD_BANDS = (BROAD_BAND_LOWER, BROAD_BAND_LC_PLC, BROAD_BAND_THIRD)

OUTCOME_REENROL = "REENROL"
OUTCOME_CONTINUE = "CONTINUE"

_SECONDARY_COURSES = (EducationLevel.LS, EducationLevel.US)


def _check_dist(name: str, dist: dict, *, allow_empty: bool = False) -> None:
    if not dist:
        if allow_empty:
            return
        raise RatesError(f"{name}: empty distribution")
    total = 0.0
    for key, p in dist.items():
        if p < 0:
            raise RatesError(f"{name}: negative probability for {key}")
        total += p
    if abs(total - 1.0) > PROB_TOL:
        raise RatesError(f"{name}: probabilities sum to {total!r}, expected 1")


@dataclass(frozen=True)
class EducationRates:
    parent_to_broad: dict[str, dict[str, float]]
    dropout: dict[EducationLevel, float]
    dropout_outcomes: dict[EducationLevel, dict[str, float]]
    graduate_outcomes: dict[EducationLevel, dict[str, float]]
    course_duration: dict[EducationLevel, int]
    enrolment_by_attained: dict[EducationLevel, dict[EducationLevel, float]]
    young_student_course_shares: dict[EducationLevel, float]
    deg_entry_mix: dict[EducationLevel, float]
    adult_student_rate_25_69: dict[str, float]
    adult_learner_age_sex_dist: dict[tuple[str, str], float]
    adult_student_share_18_24: float = 0.61
    secondary_dropout_base: float = 0.025
    secondary_dropout_improvement: float = 0.03
    secondary_dropout_floor: float = 0.005
    # Where the Higher Certificate sits when banding levels broadly.
    hc_in_third_level: bool = True

    def __post_init__(self):
        for band, row in self.parent_to_broad.items():
            if band not in BROAD_BANDS:
                raise RatesError(f"unknown broad band {band!r}")
            _check_dist(f"parent_to_broad[{band}]", row)
        for band in BROAD_BANDS:
            if band not in self.parent_to_broad:
                raise RatesError(f"parent_to_broad missing row for {band}")
        for level, rate in self.dropout.items():
            if not 0 <= rate <= 1:
                raise RatesError(f"dropout rate for {level.value} outside [0, 1]")
        for level, row in self.dropout_outcomes.items():
            _check_dist(f"dropout_outcomes[{level.value}]", row)
        for level, row in self.graduate_outcomes.items():
            _check_dist(f"graduate_outcomes[{level.value}]", row)
        for level, dur in self.course_duration.items():
            if dur < 1:
                raise RatesError(f"course duration for {level.value} must be >= 1")
        for attained, row in self.enrolment_by_attained.items():
            _check_dist(f"enrolment_by_attained[{attained.value}]", row)
            for course in row:
                if education_ordinal(course) <= education_ordinal(attained):
                    raise RatesError(
                        f"enrolment_by_attained[{attained.value}] offers {course.value}, "
                        "not above the attained level"
                    )
        _check_dist("young_student_course_shares", self.young_student_course_shares)
        _check_dist("deg_entry_mix", self.deg_entry_mix)
        _check_dist("adult_learner_age_sex_dist", self.adult_learner_age_sex_dist)
        if not 0 <= self.adult_student_share_18_24 <= 1:
            raise RatesError("adult_student_share_18_24 outside [0, 1]")
        for region, rate in self.adult_student_rate_25_69.items():
            if not 0 <= rate <= 1:
                raise RatesError(f"adult student rate for {region} outside [0, 1]")

    def secondary_dropout_rate(self, year: int, start_year: int) -> float:
        """Secondary-school dropout rate; declines from the base each year."""
        decayed = self.secondary_dropout_base * (1.0 - self.secondary_dropout_improvement) ** max(
            0, year - start_year
        )
        return max(self.secondary_dropout_floor, decayed)

    def dropout_rate(self, course: EducationLevel, year: int, start_year: int) -> float:
        if course == EducationLevel.P:
            return 0.0
        if course in _SECONDARY_COURSES:
            return self.secondary_dropout_rate(year, start_year)
        return self.dropout.get(course, 0.0)

    def duration(self, course: EducationLevel) -> int:
        return self.course_duration[course]


# --------------------------------------------------------------------------
# Economic status transitions
# --------------------------------------------------------------------------

# Column order of the transition rows; students and children are handled by
# the education module and never drawn here.
ECON_STATUSES = (
    EconStatus.W,
    EconStatus.LAHF,
    EconStatus.R,
    EconStatus.UTWSD,
    EconStatus.OTH,
    EconStatus.UNE,
)
_ECON_COL = {s: i for i, s in enumerate(ECON_STATUSES)}


class EconTransitionTable:
    """Next-status probabilities by (age band, sex, education), memoryless."""

    def __init__(self, probs: np.ndarray, present: Optional[np.ndarray] = None):
        probs = np.asarray(probs, dtype=np.float64)
        expected = (len(ECON_AGE_BANDS), 2, len(ORDERED_LEVELS), len(ECON_STATUSES))
        if probs.shape != expected:
            raise RatesError(f"econ table must have shape {expected}, got {probs.shape}")
        if present is None:
            present = np.ones(expected[:3], dtype=bool)
        self.present = present
        sums = probs.sum(axis=-1)
        bad = present & (np.abs(sums - 1.0) > PROB_TOL)
        if bad.any():
            b, s, e = np.argwhere(bad)[0]
            raise RatesError(
                f"econ transition row ({ECON_AGE_BANDS[b]}, {SEX_CODES[s]}, "
                f"{ORDERED_LEVELS[e].value}) sums to {sums[b, s, e]!r}, expected 1"
            )
        if (probs < 0).any():
            raise RatesError("econ transition probabilities must be nonnegative")
        self.fallbacks: list[tuple[str, str, str, str]] = []
        self.probs = self._resolve(probs, present)
        self.cum = np.cumsum(self.probs, axis=-1)

    def _resolve(self, probs: np.ndarray, present: np.ndarray) -> np.ndarray:
        """Fill missing rows from the nearest age band with the same sex/education."""
        resolved = probs.copy()
        n_bands = len(ECON_AGE_BANDS)
        for s in range(2):
            for e in range(len(ORDERED_LEVELS)):
                if present[:, s, e].all():
                    continue
                have = [b for b in range(n_bands) if present[b, s, e]]
                if not have:
                    raise RatesError(
                        f"econ table has no row at all for sex {SEX_CODES[s]}, "
                        f"education {ORDERED_LEVELS[e].value}"
                    )
                for b in range(n_bands):
                    if not present[b, s, e]:
                        nearest = min(have, key=lambda h: (abs(h - b), h))
                        resolved[b, s, e] = probs[nearest, s, e]
                        self.fallbacks.append(
                            (ECON_AGE_BANDS[b], SEX_CODES[s], ORDERED_LEVELS[e].value,
                             ECON_AGE_BANDS[nearest])
                        )
        return resolved

    def row(self, band_idx: int, sex: Sex, level: EducationLevel) -> np.ndarray:
        return self.probs[band_idx, SEX_ROW[sex], education_ordinal(level)]


# --------------------------------------------------------------------------
# Nuptiality
# --------------------------------------------------------------------------

MARRIAGE_TYPES = ("opposite", "same_sex_male", "same_sex_female")


@dataclass(frozen=True)
class NuptialityConfig:
    separation_rate: float
    candidate_age_sex_dists: dict[str, dict[tuple[str, str], float]]
    marriage_rate: float = 0.004
    # "couples": the rate counts marriage events per person, the crude-rate
    # convention, so target couples = rate * population. "persons" reads it
    # as persons marrying per person: target couples = rate * population / 2.
    marriage_rate_basis: str = "couples"
    same_sex_share: float = 0.03

    def __post_init__(self):
        if self.marriage_rate < 0 or self.separation_rate < 0:
            raise RatesError("nuptiality rates must be nonnegative")
        if not 0 <= self.same_sex_share <= 1:
            raise RatesError("same_sex_share outside [0, 1]")
        if self.marriage_rate_basis not in ("persons", "couples"):
            raise RatesError(f"unknown marriage_rate_basis {self.marriage_rate_basis!r}")
        for mtype in MARRIAGE_TYPES:
            if mtype not in self.candidate_age_sex_dists:
                raise RatesError(f"missing candidate distribution for {mtype!r}")
            _check_dist(f"candidate_age_sex_dists[{mtype}]",
                        self.candidate_age_sex_dists[mtype])

    def target_couples(self, population_size: int) -> int:
        raw = self.marriage_rate * population_size
        if self.marriage_rate_basis == "persons":
            raw /= 2.0
        return int(math.floor(raw + 0.5))

    def couples_per_thousand(self, population_size: int) -> float:
        """Configured marriage events per 1,000 persons under either basis."""
        if population_size == 0:
            return 0.0
        return 1000.0 * self.target_couples(population_size) / population_size

    def candidate_weight(self, mtype: str, sex: Sex, group: str) -> float:
        return self.candidate_age_sex_dists[mtype].get((sex.value, group), 0.0)


# --------------------------------------------------------------------------
# Scenario
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    intl_scenario: str = "M1"
    internal_flow_year: int = 2022
    start_year: int = 2022
    horizon_years: int = 35
    master_seed: int = 0
    tfr_start: float = 1.55
    tfr_floor: float = 1.3
    tfr_floor_year: int = 2038
    # Ratio of the simulated base population to the national population the
    # migration constants describe; applied to all international flows.
    intl_scale: float = 1.0
    emigrants_2022: float = 60_000.0
    dropout_priority: str = "above"

    def __post_init__(self):
        if self.intl_scenario not in SCENARIOS:
            raise RatesError(f"unknown international migration scenario {self.intl_scenario!r}")
        if self.horizon_years < 1:
            raise RatesError("horizon_years must be at least 1")
        if self.tfr_floor_year <= self.start_year:
            raise RatesError("tfr_floor_year must come after start_year")
        if self.intl_scale <= 0:
            raise RatesError("intl_scale must be positive")
        if self.dropout_priority not in ("above", "below"):
            raise RatesError(f"dropout_priority must be 'above' or 'below'")


def tfr_factor(config: ScenarioConfig, year: int) -> float:
    """Multiplier applied to every fertility rate in one year.

    The total fertility rate runs linearly from its start value to the floor
    by the floor year and stays constant after; the factor is TFR(year)
    relative to the start value.
    """
    if year < config.start_year:
        raise ValueError(f"year {year} precedes start year {config.start_year}")
    frac = min(1.0, (year - config.start_year) / (config.tfr_floor_year - config.start_year))
    tfr = config.tfr_start + (config.tfr_floor - config.tfr_start) * frac
    return tfr / config.tfr_start


# --------------------------------------------------------------------------
# Bundle
# --------------------------------------------------------------------------

@dataclass
class RateTables:
    geography: Geography
    mortality: MortalityTable
    fertility: FertilityTable
    internal_flows: dict[int, InternalFlowTable]
    migration_dists: MigrationAgeSexDists
    region_emigrant_shares: dict[str, float]
    education: EducationRates
    econ: EconTransitionTable
    nuptiality: NuptialityConfig
    scenario: ScenarioConfig

    def __post_init__(self):
        total = sum(self.region_emigrant_shares.values())
        if abs(total - 1.0) > PROB_TOL:
            raise RatesError(f"region emigrant shares sum to {total!r}, expected 1")
        for region in self.region_emigrant_shares:
            if region not in self.geography.regions:
                raise RatesError(f"emigrant share for unknown region {region!r}")
        for region in self.geography.regions:
            if region not in self.region_emigrant_shares:
                raise RatesError(f"missing emigrant share for region {region!r}")
            if region not in self.education.adult_student_rate_25_69:
                raise RatesError(f"missing adult student rate for region {region!r}")

    def internal_flow_table(self) -> InternalFlowTable:
        year = self.scenario.internal_flow_year
        if year not in self.internal_flows:
            raise RatesError(
                f"no internal flow table for scenario year {year}; "
                f"available: {sorted(self.internal_flows)}"
            )
        return self.internal_flows[year]


# --------------------------------------------------------------------------
# File formats
# --------------------------------------------------------------------------

GEOGRAPHY_FILE = "geography.csv"
MORTALITY_FILE = "mortality.csv"
FERTILITY_FILE = "fertility.csv"
MIGRATION_AGE_SEX_FILE = "migration_age_sex.csv"
REGION_EMIGRANT_SHARES_FILE = "region_emigrant_shares.csv"
EDUCATION_RATES_FILE = "education_rates.json"
ECON_TRANSITIONS_FILE = "econ_transitions.csv"
NUPTIALITY_FILE = "nuptiality.json"
SCENARIO_FILE = "scenario.json"


def _read_rows(path: Path, required: tuple[str, ...]) -> list[tuple[int, dict[str, str]]]:
    if not path.is_file():
        raise RatesError(f"missing mandatory rates file {path.name}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise RatesError(f"{path.name}: missing column {col!r}")
        return [(i, row) for i, row in enumerate(reader, start=2)]


def _parse_float(path: Path, rowno: int, value: str, col: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise RatesError(f"{path.name}:{rowno}: bad {col} value {value!r}") from None


def _parse_level(path: Path, rowno: int, value: str) -> EducationLevel:
    try:
        return EducationLevel(value)
    except ValueError:
        raise RatesError(f"{path.name}:{rowno}: unknown education level {value!r}") from None


def load_geography(path: Path) -> Geography:
    rows = _read_rows(path, ("ed_id", "county_id", "region_id", "base_population",
                             "intra_county_immigrant_capacity",
                             "inter_county_immigrant_capacity", "intl_immigrant_weight"))
    eds = []
    for rowno, row in rows:
        try:
            eds.append(EDRecord(
                ed_id=row["ed_id"],
                county_id=row["county_id"],
                region_id=row["region_id"],
                base_population=int(row["base_population"]),
                intra_county_immigrant_capacity=int(row["intra_county_immigrant_capacity"]),
                inter_county_immigrant_capacity=int(row["inter_county_immigrant_capacity"]),
                intl_immigrant_weight=float(row["intl_immigrant_weight"]),
            ))
        except ValueError as exc:
            raise RatesError(f"{path.name}:{rowno}: {exc}") from None
    try:
        return Geography(eds)
    except Exception as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def _load_mortality(path: Path) -> MortalityTable:
    rows = _read_rows(path, ("sex", "age", "q"))
    q = np.full((2, MAX_AGE + 1), np.nan)
    for rowno, row in rows:
        sex = row["sex"]
        if sex not in SEX_CODES:
            raise RatesError(f"{path.name}:{rowno}: unknown sex {sex!r}")
        age = int(row["age"])
        if not 0 <= age <= MAX_AGE:
            raise RatesError(f"{path.name}:{rowno}: age {age} outside 0..{MAX_AGE}")
        value = _parse_float(path, rowno, row["q"], "q")
        if not 0 <= value <= 1:
            raise RatesError(f"{path.name}:{rowno}: q {value} outside [0, 1]")
        q[SEX_CODES.index(sex), age] = value
    if np.isnan(q).any():
        sex_idx, age = np.argwhere(np.isnan(q))[0]
        raise RatesError(f"{path.name}: missing q for sex {SEX_CODES[sex_idx]}, age {age}")
    return MortalityTable(q)


def _load_fertility(path: Path) -> FertilityTable:
    rows = _read_rows(path, ("region", "age_group", "marital_band", "rate"))
    rates: dict[tuple[str, str, str], float] = {}
    for rowno, row in rows:
        rate = _parse_float(path, rowno, row["rate"], "rate")
        if rate < 0:
            raise RatesError(f"{path.name}:{rowno}: negative fertility rate {rate}")
        key = (row["region"], row["age_group"], row["marital_band"])
        if key in rates:
            raise RatesError(f"{path.name}:{rowno}: duplicate fertility row {key}")
        rates[key] = rate
    try:
        return FertilityTable(rates)
    except RatesError as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def _load_internal_flows(path: Path, year: int) -> InternalFlowTable:
    rows = _read_rows(path, ("origin_county", "dest_county", "count"))
    inter: dict[tuple[str, str], int] = {}
    intra: dict[str, int] = {}
    for rowno, row in rows:
        count = int(_parse_float(path, rowno, row["count"], "count"))
        if count < 0:
            raise RatesError(f"{path.name}:{rowno}: negative flow count {count}")
        origin, dest = row["origin_county"], row["dest_county"]
        if origin == dest:
            intra[origin] = intra.get(origin, 0) + count
        else:
            inter[(origin, dest)] = inter.get((origin, dest), 0) + count
    return InternalFlowTable(year=year, inter=inter, intra=intra)


def _load_migration_dists(path: Path) -> MigrationAgeSexDists:
    rows = _read_rows(path, ("context", "sex", "age_group", "share"))
    dists: dict[str, dict[tuple[str, str], float]] = {}
    for rowno, row in rows:
        share = _parse_float(path, rowno, row["share"], "share")
        if share < 0:
            raise RatesError(f"{path.name}:{rowno}: negative share {share}")
        dists.setdefault(row["context"], {})[(row["sex"], row["age_group"])] = share
    try:
        return MigrationAgeSexDists(dists)
    except RatesError as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def _load_region_shares(path: Path) -> dict[str, float]:
    rows = _read_rows(path, ("region", "share"))
    shares: dict[str, float] = {}
    for rowno, row in rows:
        share = _parse_float(path, rowno, row["share"], "share")
        if share < 0:
            raise RatesError(f"{path.name}:{rowno}: negative share {share}")
        shares[row["region"]] = share
    return shares


def _level_dict(path: Path, obj: dict, field_name: str) -> dict[EducationLevel, float]:
    out = {}
    for code, value in obj.items():
        out[_parse_level(path, 0, code)] = float(value)
    return out


def _load_education(path: Path) -> EducationRates:
    if not path.is_file():
        raise RatesError(f"missing mandatory rates file {path.name}")
    with path.open() as fh:
        data = json.load(fh)
    try:
        secondary = data.get("secondary_dropout", {})
        return EducationRates(
            parent_to_broad={b: dict(row) for b, row in data["parent_to_broad"].items()},
            dropout=_level_dict(path, data["dropout"], "dropout"),
            dropout_outcomes={
                _parse_level(path, 0, lvl): dict(row)
                for lvl, row in data["dropout_outcomes"].items()
            },
            graduate_outcomes={
                _parse_level(path, 0, lvl): dict(row)
                for lvl, row in data["graduate_outcomes"].items()
            },
            course_duration={
                _parse_level(path, 0, lvl): int(d)
                for lvl, d in data["course_duration"].items()
            },
            enrolment_by_attained={
                _parse_level(path, 0, lvl): {
                    _parse_level(path, 0, course): float(p) for course, p in row.items()
                }
                for lvl, row in data["enrolment_by_attained"].items()
            },
            young_student_course_shares=_level_dict(
                path, data["young_student_course_shares"], "young_student_course_shares"),
            deg_entry_mix=_level_dict(path, data["deg_entry_mix"], "deg_entry_mix"),
            adult_student_share_18_24=float(data.get("adult_student_share_18_24", 0.61)),
            adult_student_rate_25_69={
                r: float(v) for r, v in data["adult_student_rate_25_69"].items()
            },
            adult_learner_age_sex_dist={
                tuple(key.split("|", 1)): float(v)
                for key, v in data["adult_learner_age_sex_dist"].items()
            },
            secondary_dropout_base=float(secondary.get("base", 0.025)),
            secondary_dropout_improvement=float(secondary.get("annual_improvement", 0.03)),
            secondary_dropout_floor=float(secondary.get("floor", 0.005)),
            hc_in_third_level=bool(data.get("hc_in_third_level", True)),
        )
    except KeyError as exc:
        raise RatesError(f"{path.name}: missing field {exc}") from None
    except RatesError as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def _load_econ(path: Path) -> EconTransitionTable:
    rows = _read_rows(path, ("age_band", "sex", "education", "status", "probability"))
    shape = (len(ECON_AGE_BANDS), 2, len(ORDERED_LEVELS), len(ECON_STATUSES))
    probs = np.zeros(shape)
    present = np.zeros(shape[:3], dtype=bool)
    band_idx = {b: i for i, b in enumerate(ECON_AGE_BANDS)}
    for rowno, row in rows:
        if row["age_band"] not in band_idx:
            raise RatesError(f"{path.name}:{rowno}: unknown age band {row['age_band']!r}")
        if row["sex"] not in SEX_CODES:
            raise RatesError(f"{path.name}:{rowno}: unknown sex {row['sex']!r}")
        level = _parse_level(path, rowno, row["education"])
        if level == EducationLevel.NA:
            raise RatesError(f"{path.name}:{rowno}: NA education has no transition row")
        try:
            status = EconStatus(row["status"])
            col = _ECON_COL[status]
        except (ValueError, KeyError):
            raise RatesError(
                f"{path.name}:{rowno}: status {row['status']!r} not drawable"
            ) from None
        p = _parse_float(path, rowno, row["probability"], "probability")
        if p < 0:
            raise RatesError(f"{path.name}:{rowno}: negative probability {p}")
        b = band_idx[row["age_band"]]
        s = SEX_CODES.index(row["sex"])
        e = education_ordinal(level)
        probs[b, s, e, col] = p
        present[b, s, e] = True
    try:
        return EconTransitionTable(probs, present)
    except RatesError as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def _tuple_key_dist(obj: dict) -> dict[tuple[str, str], float]:
    return {tuple(key.split("|", 1)): float(v) for key, v in obj.items()}


def _load_nuptiality(path: Path) -> NuptialityConfig:
    if not path.is_file():
        raise RatesError(f"missing mandatory rates file {path.name}")
    with path.open() as fh:
        data = json.load(fh)
    sep = data["separation"]
    if "rate" in sep:
        rate = float(sep["rate"])
    else:
        married = float(sep["married_persons"])
        if married <= 0:
            raise RatesError(f"{path.name}: married_persons must be positive")
        rate = float(sep["separations_granted"]) / married
    try:
        return NuptialityConfig(
            marriage_rate=float(data.get("marriage_rate", 0.004)),
            marriage_rate_basis=data.get("marriage_rate_basis", "persons"),
            same_sex_share=float(data.get("same_sex_share", 0.03)),
            separation_rate=rate,
            candidate_age_sex_dists={
                mtype: _tuple_key_dist(d)
                for mtype, d in data["candidate_age_sex_dists"].items()
            },
        )
    except KeyError as exc:
        raise RatesError(f"{path.name}: missing field {exc}") from None
    except RatesError as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def _load_scenario(path: Path) -> ScenarioConfig:
    if not path.is_file():
        return ScenarioConfig()
    with path.open() as fh:
        data = json.load(fh)
    tfr = data.get("tfr", {})
    try:
        return ScenarioConfig(
            intl_scenario=data.get("intl_scenario", "M1"),
            internal_flow_year=int(data.get("internal_flow_year", 2022)),
            start_year=int(data.get("start_year", 2022)),
            horizon_years=int(data.get("horizon_years", 35)),
            master_seed=int(data.get("master_seed", 0)),
            tfr_start=float(tfr.get("start", 1.55)),
            tfr_floor=float(tfr.get("floor", 1.3)),
            tfr_floor_year=int(tfr.get("floor_year", 2038)),
            intl_scale=float(data.get("intl_scale", 1.0)),
            emigrants_2022=float(data.get("emigrants_2022", 60_000.0)),
            dropout_priority=data.get("dropout_priority", "above"),
        )
    except RatesError as exc:
        raise RatesError(f"{path.name}: {exc}") from None


def load_rates(dir_path) -> RateTables:
    """Load and invariant-check the full rates bundle from a directory."""
    base = Path(dir_path)
    if not base.is_dir():
        raise RatesError(f"rates directory {base} does not exist")
    geography = load_geography(base / GEOGRAPHY_FILE)
    flows: dict[int, InternalFlowTable] = {}
    for path in sorted(base.glob("internal_flows_*.csv")):
        stem = path.stem.rsplit("_", 1)[-1]
        try:
            year = int(stem)
        except ValueError:
            raise RatesError(f"{path.name}: flow file must end in a year") from None
        flows[year] = _load_internal_flows(path, year)
    if not flows:
        raise RatesError("missing mandatory rates file internal_flows_<year>.csv")
    tables = RateTables(
        geography=geography,
        mortality=_load_mortality(base / MORTALITY_FILE),
        fertility=_load_fertility(base / FERTILITY_FILE),
        internal_flows=flows,
        migration_dists=_load_migration_dists(base / MIGRATION_AGE_SEX_FILE),
        region_emigrant_shares=_load_region_shares(base / REGION_EMIGRANT_SHARES_FILE),
        education=_load_education(base / EDUCATION_RATES_FILE),
        econ=_load_econ(base / ECON_TRANSITIONS_FILE),
        nuptiality=_load_nuptiality(base / NUPTIALITY_FILE),
        scenario=_load_scenario(base / SCENARIO_FILE),
    )
    counties = set(tables.geography.counties)
    for year, table in tables.internal_flows.items():
        for (o, d) in table.inter:
            if o not in counties or d not in counties:
                raise RatesError(
                    f"internal_flows_{year}.csv: unknown county in flow {o}->{d}"
                )
        for county in table.intra:
            if county not in counties:
                raise RatesError(f"internal_flows_{year}.csv: unknown county {county}")
    return tables


# --------------------------------------------------------------------------
# Writers (used by the synthetic generator and the CLI)
# --------------------------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_rates(tables: RateTables, dir_path) -> None:
    base = Path(dir_path)
    base.mkdir(parents=True, exist_ok=True)

    _write_csv(base / GEOGRAPHY_FILE,
               ["ed_id", "county_id", "region_id", "base_population",
                "intra_county_immigrant_capacity", "inter_county_immigrant_capacity",
                "intl_immigrant_weight"],
               [[rec.ed_id, rec.county_id, rec.region_id, rec.base_population,
                 rec.intra_county_immigrant_capacity, rec.inter_county_immigrant_capacity,
                 repr(rec.intl_immigrant_weight)]
                for rec in sorted(tables.geography.eds.values(), key=lambda r: r.ed_id)])

    _write_csv(base / MORTALITY_FILE, ["sex", "age", "q"],
               [[sex, age, repr(float(tables.mortality.q[si, age]))]
                for si, sex in enumerate(SEX_CODES) for age in range(MAX_AGE + 1)])

    _write_csv(base / FERTILITY_FILE, ["region", "age_group", "marital_band", "rate"],
               [[r, g, b, repr(rate)]
                for (r, g, b), rate in sorted(tables.fertility.rates.items())])

    for year, table in sorted(tables.internal_flows.items()):
        rows = [[o, d, n] for (o, d), n in sorted(table.inter.items())]
        rows += [[c, c, n] for c, n in sorted(table.intra.items())]
        rows.sort(key=lambda r: (r[0], r[1]))
        _write_csv(base / f"internal_flows_{year}.csv",
                   ["origin_county", "dest_county", "count"], rows)

    rows = []
    for ctx in MIGRATION_CONTEXTS:
        for (sex, group), share in tables.migration_dists.brackets(ctx):
            rows.append([ctx, sex, group, repr(share)])
    _write_csv(base / MIGRATION_AGE_SEX_FILE, ["context", "sex", "age_group", "share"], rows)

    _write_csv(base / REGION_EMIGRANT_SHARES_FILE, ["region", "share"],
               [[r, repr(s)] for r, s in sorted(tables.region_emigrant_shares.items())])

    edu = tables.education
    education_json = {
        "parent_to_broad": edu.parent_to_broad,
        "dropout": {lvl.value: rate for lvl, rate in edu.dropout.items()},
        "secondary_dropout": {
            "base": edu.secondary_dropout_base,
            "annual_improvement": edu.secondary_dropout_improvement,
            "floor": edu.secondary_dropout_floor,
        },
        "dropout_outcomes": {lvl.value: row for lvl, row in edu.dropout_outcomes.items()},
        "graduate_outcomes": {lvl.value: row for lvl, row in edu.graduate_outcomes.items()},
        "course_duration": {lvl.value: d for lvl, d in edu.course_duration.items()},
        "enrolment_by_attained": {
            lvl.value: {course.value: p for course, p in row.items()}
            for lvl, row in edu.enrolment_by_attained.items()
        },
        "young_student_course_shares": {
            lvl.value: p for lvl, p in edu.young_student_course_shares.items()
        },
        "deg_entry_mix": {lvl.value: p for lvl, p in edu.deg_entry_mix.items()},
        "adult_student_share_18_24": edu.adult_student_share_18_24,
        "adult_student_rate_25_69": edu.adult_student_rate_25_69,
        "hc_in_third_level": edu.hc_in_third_level,
        "adult_learner_age_sex_dist": {
            f"{sex}|{group}": p
            for (sex, group), p in sorted(edu.adult_learner_age_sex_dist.items())
        },
    }
    (base / EDUCATION_RATES_FILE).write_text(json.dumps(education_json, indent=1, sort_keys=True))

    rows = []
    for b, band in enumerate(ECON_AGE_BANDS):
        for s, sex in enumerate(SEX_CODES):
            for level in ORDERED_LEVELS:
                e = education_ordinal(level)
                if not tables.econ.present[b, s, e]:
                    continue
                for col, status in enumerate(ECON_STATUSES):
                    rows.append([band, sex, level.value, status.value,
                                 repr(float(tables.econ.probs[b, s, e, col]))])
    _write_csv(base / ECON_TRANSITIONS_FILE,
               ["age_band", "sex", "education", "status", "probability"], rows)

    nup = tables.nuptiality
    nuptiality_json = {
        "marriage_rate": nup.marriage_rate,
        "marriage_rate_basis": nup.marriage_rate_basis,
        "same_sex_share": nup.same_sex_share,
        "separation": {"rate": nup.separation_rate},
        "candidate_age_sex_dists": {
            mtype: {f"{sex}|{group}": w for (sex, group), w in sorted(dist.items())}
            for mtype, dist in nup.candidate_age_sex_dists.items()
        },
    }
    (base / NUPTIALITY_FILE).write_text(json.dumps(nuptiality_json, indent=1, sort_keys=True))

    sc = tables.scenario
    scenario_json = {
        "intl_scenario": sc.intl_scenario,
        "internal_flow_year": sc.internal_flow_year,
        "start_year": sc.start_year,
        "horizon_years": sc.horizon_years,
        "master_seed": sc.master_seed,
        "tfr": {"start": sc.tfr_start, "floor": sc.tfr_floor, "floor_year": sc.tfr_floor_year},
        "intl_scale": sc.intl_scale,
        "emigrants_2022": sc.emigrants_2022,
        "dropout_priority": sc.dropout_priority,
    }
    (base / SCENARIO_FILE).write_text(json.dumps(scenario_json, indent=1, sort_keys=True))


# --------------------------------------------------------------------------
# Synthetic generation (desk-scale stand-ins for the national inputs)
# --------------------------------------------------------------------------

REFERENCE_NATIONAL_POPULATION = 5_100_000

_N_REGIONS = 8
_N_COUNTIES = 26


def gen_synthetic_geography(
    seed: int,
    total_population: int = 100_000,
    eds_per_county: int = 6,
    n_regions: int = _N_REGIONS,
    n_counties: int = _N_COUNTIES,
) -> Geography:
    """Region/county/ED hierarchy with skewed ED sizes and intake parameters."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x6E0)))
    counties_per_region = largest_remainder([1.0] * n_regions, n_counties)
    county_region: list[tuple[str, str]] = []
    county_no = 0
    for r in range(n_regions):
        for _ in range(counties_per_region[r]):
            county_no += 1
            county_region.append((f"C{county_no:02d}", f"R{r + 1}"))

    n_eds = n_counties * eds_per_county
    raw = rng.lognormal(mean=0.0, sigma=0.8, size=n_eds)
    pops = largest_remainder(raw, total_population)

    intl_raw = np.array(pops, dtype=float) * rng.uniform(0.5, 1.6, size=n_eds)
    # A slice of EDs takes no international immigrants at all, mirroring the
    # areas that recorded none in the base year.
    cutoff = np.quantile(intl_raw, 0.15)
    intl_raw[intl_raw <= cutoff] = 0.0
    intl_weights = intl_raw / intl_raw.sum()

    eds = []
    ed_no = 0
    for ci, (county, region) in enumerate(county_region):
        for _ in range(eds_per_county):
            pop = pops[ed_no]
            eds.append(EDRecord(
                ed_id=f"E{ed_no + 1:04d}",
                county_id=county,
                region_id=region,
                base_population=pop,
                intra_county_immigrant_capacity=max(2, int(round(pop * 0.05 * rng.uniform(0.8, 1.3)))),
                inter_county_immigrant_capacity=max(2, int(round(pop * 0.04 * rng.uniform(0.8, 1.3)))),
                intl_immigrant_weight=float(intl_weights[ed_no]),
            ))
            ed_no += 1
    return Geography(eds)


# Relative size of each five-year group in the synthetic base pyramid.
_PYRAMID_GROUP_WEIGHT = np.array(
    [0.92, 1.02, 1.08, 1.00, 0.92, 0.98, 1.10, 1.18, 1.16, 1.08,
     1.00, 0.92, 0.82, 0.68, 0.52, 0.36, 0.20, 0.10]
)

_MOBILITY_INTERNAL = np.array(
    [0.90, 0.70, 0.70, 1.10, 2.30, 2.60, 2.00, 1.40, 1.00, 0.70,
     0.50, 0.40, 0.35, 0.30, 0.25, 0.20, 0.15, 0.10]
)
_MOBILITY_INTL_OUT = np.array(
    [0.50, 0.40, 0.40, 1.50, 3.20, 3.00, 1.80, 1.10, 0.70, 0.45,
     0.30, 0.25, 0.20, 0.15, 0.10, 0.05, 0.03, 0.02]
)
_MOBILITY_INTL_IN = np.array(
    [0.90, 0.70, 0.60, 1.20, 2.60, 3.20, 2.60, 1.70, 1.10, 0.70,
     0.45, 0.30, 0.20, 0.15, 0.10, 0.05, 0.03, 0.02]
)

# National age-specific fertility (per woman per year) before regional and
# marital adjustment; scaled so the implied TFR is the base 1.55.
_BASE_ASFR = {
    "15-19": 0.006, "20-24": 0.030, "25-29": 0.065, "30-34": 0.105,
    "35-39": 0.080, "40-44": 0.019, "45-49": 0.0012,
}
# Roughly 40% of births happen outside marriage, so the within-marriage
# rates sit moderately above the unmarried ones.
_MARRIED_FERTILITY_MULT = 1.18
_UNMARRIED_FERTILITY_MULT = 0.80


def _mix_dist(rng, mobility: np.ndarray) -> dict[tuple[str, str], float]:
    weights = {}
    for si, sex in enumerate(SEX_CODES):
        jitter = rng.uniform(0.9, 1.1, size=len(AGE_GROUPS))
        for gi, group in enumerate(AGE_GROUPS):
            weights[(sex, group)] = _PYRAMID_GROUP_WEIGHT[gi] * mobility[gi] * jitter[gi]
    total = sum(weights.values())
    return {k: v / total for k, v in weights.items()}


def _synthetic_mortality(rng) -> MortalityTable:
    q = np.zeros((2, MAX_AGE + 1))
    params = {
        Sex.F: (1.8e-4, 2.2e-5, 0.098, 0.0030),
        Sex.M: (2.6e-4, 3.4e-5, 0.097, 0.0036),
    }
    ages = np.arange(MAX_AGE + 1, dtype=float)
    for sex, (a, b, c, infant) in params.items():
        a *= rng.uniform(0.92, 1.08)
        b *= rng.uniform(0.92, 1.08)
        c *= rng.uniform(0.99, 1.01)
        infant *= rng.uniform(0.9, 1.1)
        q[SEX_ROW[sex]] = np.minimum(0.65, infant * np.exp(-1.1 * ages) + a + b * np.exp(c * ages))
    return MortalityTable(q)


def _synthetic_fertility(rng, regions) -> FertilityTable:
    scale = 1.55 / (5.0 * sum(_BASE_ASFR.values()))
    rates: dict[tuple[str, str, str], float] = {}
    for region in regions:
        region_mult = rng.uniform(0.88, 1.12)
        for group in FERTILITY_AGE_GROUPS:
            base = _BASE_ASFR[group] * scale * region_mult
            for band in fertility_bands_for(group):
                if band == MARITAL_BAND_MAR:
                    rate = base * _MARRIED_FERTILITY_MULT
                elif band == MARITAL_BAND_NOT_MAR:
                    rate = base * _UNMARRIED_FERTILITY_MULT
                else:
                    rate = base
                rates[(region, group, band)] = rate
    return FertilityTable(rates)


def _synthetic_flows(rng, geography: Geography, year: int, inter_share: float,
                     intra_share: float) -> InternalFlowTable:
    county_pop = {
        county: sum(geography.eds[ed].base_population for ed in eds)
        for county, eds in geography.eds_by_county.items()
    }
    counties = list(geography.counties)
    total = sum(county_pop.values())
    pairs = [(o, d) for o in counties for d in counties if o != d]
    gravity = np.array([
        county_pop[o] * county_pop[d] * rng.uniform(0.6, 1.5) for o, d in pairs
    ])
    inter_total = int(round(inter_share * total))
    counts = largest_remainder(gravity, inter_total)
    inter = {pair: n for pair, n in zip(pairs, counts) if n > 0}
    intra = {
        county: int(round(intra_share * county_pop[county] * rng.uniform(0.8, 1.2)))
        for county in counties
    }
    return InternalFlowTable(year=year, inter=inter, intra=intra)


def _normalised(row: dict) -> dict:
    total = sum(row.values())
    return {k: v / total for k, v in row.items()}


def _synthetic_education(rng, regions) -> EducationRates:
    L = EducationLevel
    parent_to_broad = {
        BROAD_BAND_LOWER: {BROAD_BAND_LOWER: 0.22, BROAD_BAND_LC_PLC: 0.42, BROAD_BAND_THIRD: 0.36},
        BROAD_BAND_LC_PLC: {BROAD_BAND_LOWER: 0.08, BROAD_BAND_LC_PLC: 0.37, BROAD_BAND_THIRD: 0.55},
        BROAD_BAND_THIRD: {BROAD_BAND_LOWER: 0.03, BROAD_BAND_LC_PLC: 0.22, BROAD_BAND_THIRD: 0.75},
    }
    dropout = {L.PLC: 0.12, L.HC: 0.10, L.DEG: 0.08, L.PD: 0.05, L.D: 0.07}
    dropout_outcomes = {
        L.LS: {OUTCOME_REENROL: 0.30, "W": 0.20, "UNE": 0.30, "OTH": 0.20},
        L.US: {OUTCOME_REENROL: 0.28, "W": 0.30, "UNE": 0.27, "OTH": 0.15},
        L.PLC: {OUTCOME_REENROL: 0.25, "W": 0.40, "UNE": 0.22, "OTH": 0.13},
        L.HC: {OUTCOME_REENROL: 0.25, "W": 0.42, "UNE": 0.20, "OTH": 0.13},
        L.DEG: {OUTCOME_REENROL: 0.22, "W": 0.48, "UNE": 0.18, "OTH": 0.12},
        L.PD: {OUTCOME_REENROL: 0.15, "W": 0.60, "UNE": 0.15, "OTH": 0.10},
        L.D: {"W": 0.70, "UNE": 0.15, "OTH": 0.15},
    }
    graduate_outcomes = {
        L.US: {OUTCOME_CONTINUE: 0.72, "W": 0.17, "UNE": 0.06, "OTH": 0.05},
        L.PLC: {OUTCOME_CONTINUE: 0.45, "W": 0.42, "UNE": 0.08, "OTH": 0.05},
        L.HC: {OUTCOME_CONTINUE: 0.50, "W": 0.40, "UNE": 0.06, "OTH": 0.04},
        L.DEG: {OUTCOME_CONTINUE: 0.38, "W": 0.52, "UNE": 0.06, "OTH": 0.04},
        L.PD: {OUTCOME_CONTINUE: 0.08, "W": 0.82, "UNE": 0.06, "OTH": 0.04},
        L.D: {"W": 0.88, "UNE": 0.06, "OTH": 0.06},
    }
    course_duration = {L.P: 8, L.LS: 3, L.US: 2, L.PLC: 1, L.HC: 2, L.DEG: 3, L.PD: 1, L.D: 4}
    enrolment_by_attained = {
        L.NF: {L.LS: 1.0},
        L.P: {L.LS: 1.0},
        L.LS: {L.US: 0.85, L.PLC: 0.15},
        L.US: {L.PLC: 0.28, L.HC: 0.12, L.DEG: 0.60},
        L.PLC: {L.HC: 0.25, L.DEG: 0.75},
        L.HC: {L.DEG: 1.0},
        L.DEG: {L.PD: 1.0},
        L.PD: {L.D: 1.0},
    }
    adult_groups = AGE_GROUPS[3:14]  # 15-19 .. 65-69 (learners are 18+)
    learner_weight = [0.6, 1.0, 0.8, 0.6, 0.45, 0.35, 0.25, 0.18, 0.12, 0.07, 0.04]
    learner_dist = {}
    for sex in SEX_CODES:
        for group, w in zip(adult_groups, learner_weight):
            learner_dist[(sex, group)] = w * rng.uniform(0.9, 1.1)
    return EducationRates(
        parent_to_broad=parent_to_broad,
        dropout=dropout,
        dropout_outcomes=dropout_outcomes,
        graduate_outcomes=graduate_outcomes,
        course_duration=course_duration,
        enrolment_by_attained=enrolment_by_attained,
        young_student_course_shares={L.PLC: 0.17, L.HC: 0.08, L.DEG: 0.60, L.PD: 0.12, L.D: 0.03},
        deg_entry_mix={L.US: 0.72, L.PLC: 0.19, L.HC: 0.09},
        adult_student_rate_25_69={
            region: float(rng.uniform(0.035, 0.07)) for region in regions
        },
        adult_learner_age_sex_dist=_normalised(learner_dist),
    )


def _band_mid_age(band_idx: int) -> int:
    if band_idx == len(ECON_AGE_BANDS) - 1:
        return 95
    return 17 + 5 * band_idx


def _synthetic_econ(rng) -> EconTransitionTable:
    shape = (len(ECON_AGE_BANDS), 2, len(ORDERED_LEVELS), len(ECON_STATUSES))
    probs = np.zeros(shape)
    for b in range(len(ECON_AGE_BANDS)):
        m = _band_mid_age(b)
        if m < 20:
            base_w, base_une, base_oth = 0.35, 0.075, 0.12
        elif m < 25:
            base_w, base_une, base_oth = 0.68, 0.075, 0.05
        elif m < 55:
            base_w, base_une, base_oth = 0.82, 0.045, 0.03
        elif m < 60:
            base_w, base_une, base_oth = 0.74, 0.035, 0.03
        elif m < 65:
            base_w, base_une, base_oth = 0.56, 0.035, 0.02
        elif m < 70:
            base_w, base_une, base_oth = 0.18, 0.01, 0.02
        elif m < 75:
            base_w, base_une, base_oth = 0.08, 0.006, 0.02
        else:
            base_w, base_une, base_oth = 0.03, 0.004, 0.02
        if m < 55:
            base_r = 0.002
        elif m < 60:
            base_r = 0.04
        elif m < 65:
            base_r = 0.18
        elif m < 70:
            base_r = 0.62
        elif m < 75:
            base_r = 0.78
        elif m < 90:
            base_r = 0.85
        else:
            base_r = 0.90
        base_utwsd = min(0.08, 0.015 + 0.001 * max(0, m - 15)) if m < 90 else 0.04
        for s, sex in enumerate(SEX_CODES):
            lahf = (0.04 if m < 25 else 0.14 if m < 55 else 0.12 if m < 65 else 0.06)
            if sex == "M":
                lahf = 0.015
            for level in ORDERED_LEVELS:
                o = education_ordinal(level)
                w_mult = 0.78 + 0.045 * o
                une_mult = max(0.30, 1.9 - 0.2 * o)
                lahf_mult = max(0.4, 1.25 - 0.06 * o)
                utwsd_mult = max(0.4, 1.5 - 0.13 * o)
                raw = np.array([
                    base_w * w_mult,
                    lahf * lahf_mult,
                    base_r,
                    base_utwsd * utwsd_mult,
                    base_oth,
                    base_une * une_mult,
                ]) * rng.uniform(0.95, 1.05, size=len(ECON_STATUSES))
                probs[b, s, o] = raw / raw.sum()
    return EconTransitionTable(probs)


def _synthetic_nuptiality(rng, total_population: int) -> NuptialityConfig:
    adult_groups = AGE_GROUPS[3:14]

    def dist(weights, sexes):
        out = {}
        for sex in sexes:
            jitter = rng.uniform(0.9, 1.1, size=len(weights))
            for (group, w), j in zip(zip(adult_groups, weights), jitter):
                out[(sex, group)] = w * j
        full = {
            (sex, group): out.get((sex, group), 0.0)
            for sex in SEX_CODES for group in adult_groups
        }
        return _normalised(full) if sum(full.values()) else full

    bride_groom = [0.14, 1.4, 3.1, 2.75, 1.55, 0.78, 0.40, 0.23, 0.13, 0.07, 0.05]
    same_sex = [0.08, 1.0, 2.8, 2.9, 1.9, 1.0, 0.5, 0.3, 0.15, 0.08, 0.04]
    married_est = max(1, int(round(total_population * 0.34)))
    return NuptialityConfig(
        marriage_rate=0.004,
        marriage_rate_basis="couples",
        same_sex_share=0.03,
        separation_rate=round(married_est * 0.0045) / married_est,
        candidate_age_sex_dists={
            "opposite": dist(bride_groom, SEX_CODES),
            "same_sex_male": dist(same_sex, ("M",)),
            "same_sex_female": dist(same_sex, ("F",)),
        },
    )


def gen_synthetic_rates(
    seed: int,
    geography: Geography,
    scenario: Optional[ScenarioConfig] = None,
) -> RateTables:
    """Internally consistent desk-scale rate bundle, deterministic in seed."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5A7E)))
    total = sum(rec.base_population for rec in geography.eds.values())
    regions = list(geography.regions)

    region_pop = {
        region: sum(
            geography.eds[ed].base_population
            for county in geography.counties_by_region[region]
            for ed in geography.eds_by_county[county]
        )
        for region in regions
    }
    share_raw = {r: region_pop[r] * rng.uniform(0.8, 1.25) for r in regions}
    region_shares = _normalised(share_raw)

    if scenario is None:
        scenario = ScenarioConfig(
            master_seed=int(seed),
            intl_scale=total / REFERENCE_NATIONAL_POPULATION,
        )

    return RateTables(
        geography=geography,
        mortality=_synthetic_mortality(rng),
        fertility=_synthetic_fertility(rng, regions),
        internal_flows={
            2016: _synthetic_flows(rng, geography, 2016, inter_share=0.016, intra_share=0.026),
            2022: _synthetic_flows(rng, geography, 2022, inter_share=0.018, intra_share=0.028),
        },
        migration_dists=MigrationAgeSexDists({
            "intra": _mix_dist(rng, _MOBILITY_INTERNAL),
            "inter": _mix_dist(rng, _MOBILITY_INTERNAL),
            "intl_out": _mix_dist(rng, _MOBILITY_INTL_OUT),
            "intl_in": _mix_dist(rng, _MOBILITY_INTL_IN),
        }),
        region_emigrant_shares=region_shares,
        education=_synthetic_education(rng, regions),
        econ=_synthetic_econ(rng),
        nuptiality=_synthetic_nuptiality(rng, total),
        scenario=scenario,
    )
