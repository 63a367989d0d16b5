"""Annual education state machine and memoryless employment transitions.

Sub-step order within a year: lifetime targets are assigned at birth (by the
fertility event), then dropouts, graduations, primary enrolment and adult
learners; the employment draw runs after every other module so it sees the
year's final age and education.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .apportion import round_half_up
from .core import (
    AGE_GROUPS,
    LABOUR_MARKET_AGE,
    PRIMARY_START_AGE,
    EconStatus,
    EducationLevel,
    Individual,
    Population,
    Sex,
    age_group,
    education_ordinal,
)
from .rates import (
    BROAD_BANDS,
    BROAD_BAND_LC_PLC,
    BROAD_BAND_LOWER,
    BROAD_BAND_THIRD,
    OUTCOME_CONTINUE,
    OUTCOME_REENROL,
    RateTables,
)
from .genesis import school_stage_for_age
from .streams import YearStreams


def broad_band(level: EducationLevel, hc_in_third: bool = True) -> str:
    """Broad education band of an attainable level."""
    o = education_ordinal(level)
    if o <= 2:
        return BROAD_BAND_LOWER
    if o <= 4:
        return BROAD_BAND_LC_PLC
    if level == EducationLevel.HC and not hc_in_third:
        return BROAD_BAND_LC_PLC
    return BROAD_BAND_THIRD


def band_levels(band: str, hc_in_third: bool = True) -> tuple[EducationLevel, ...]:
    levels = {
        BROAD_BAND_LOWER: (EducationLevel.NF, EducationLevel.P, EducationLevel.LS),
        BROAD_BAND_LC_PLC: (EducationLevel.US, EducationLevel.PLC),
        BROAD_BAND_THIRD: (EducationLevel.HC, EducationLevel.DEG,
                           EducationLevel.PD, EducationLevel.D),
    }
    if not hc_in_third:
        levels[BROAD_BAND_LC_PLC] += (EducationLevel.HC,)
        levels[BROAD_BAND_THIRD] = levels[BROAD_BAND_THIRD][1:]
    return levels[band]


def adult_education_counts(pop: Population) -> dict[EducationLevel, int]:
    """Attained-level counts among adults (18+), used for target sampling."""
    counts: dict[EducationLevel, int] = {}
    for ind in pop.people():
        if ind.age >= 18 and ind.education_attained != EducationLevel.NA:
            counts[ind.education_attained] = counts.get(ind.education_attained, 0) + 1
    return counts


def _draw_key(rng: np.random.Generator, dist: dict) -> object:
    keys = sorted(dist, key=str)
    total = sum(dist[k] for k in keys)
    u = rng.random() * total
    acc = 0.0
    for k in keys:
        acc += dist[k]
        if u < acc:
            return k
    return keys[-1]


def assign_lifetime_target(
    newborn: Optional[Individual],
    parents_levels: Iterable[EducationLevel],
    adult_level_counts: dict[EducationLevel, int],
    rates: RateTables | object,
    rng: np.random.Generator,
    log=None,
    year: int = 0,
) -> EducationLevel:
    """Sample the highest level a newborn will attain in their lifetime.

    The broad band comes from the row of the higher of the known parents'
    bands (population-marginal row when no parent is known); the specific
    level is proportional to the band's current adult attainment counts.
    """
    edu = rates.education if isinstance(rates, RateTables) else rates
    hc = edu.hc_in_third_level
    parent_bands = [broad_band(lvl, hc) for lvl in parents_levels
                    if lvl != EducationLevel.NA]
    if parent_bands:
        band_row = edu.parent_to_broad[max(parent_bands, key=BROAD_BANDS.index)]
    else:
        totals = {band: 0 for band in BROAD_BANDS}
        for lvl, n in adult_level_counts.items():
            totals[broad_band(lvl, hc)] += n
        grand = sum(totals.values())
        if grand:
            band_row = {band: n / grand for band, n in totals.items()}
        else:
            band_row = {band: 1.0 / len(BROAD_BANDS) for band in BROAD_BANDS}
    band = _draw_key(rng, band_row)

    levels = band_levels(band, hc)
    weights = np.array([adult_level_counts.get(lvl, 0) for lvl in levels], dtype=float)
    if weights.sum() == 0:
        # Nobody currently holds a level in this band: fall back to uniform.
        weights = np.ones(len(levels))
    target = levels[int(rng.choice(len(levels), p=weights / weights.sum()))]
    if log is not None and newborn is not None:
        log.add(year, newborn.id, "target", "", target.value,
                newborn.econ_status.value)
    return target


# ---------------------------------------------------------------------------
# Dropouts
# ---------------------------------------------------------------------------

def apply_dropouts(pop: Population, tables: RateTables, year: int,
                   streams: YearStreams, log=None) -> int:
    """Remove the configured share of each course's students.

    Students whose lifetime target sits above their current course are
    selected first (the configured priority direction), then uniformly.
    """
    edu = tables.education
    rng = streams.module("education.dropouts")
    priority_above = tables.scenario.dropout_priority == "above"
    start_year = tables.scenario.start_year

    by_course: dict[EducationLevel, list[Individual]] = {}
    for ind in pop.people():
        if ind.econ_status == EconStatus.S and ind.prospective_education is not None:
            by_course.setdefault(ind.prospective_education, []).append(ind)

    dropouts = 0
    for course in sorted(by_course, key=education_ordinal):
        group = by_course[course]
        rate = edu.dropout_rate(course, year, start_year)
        if rate <= 0:
            continue
        target = round_half_up(rate * len(group))
        if target == 0:
            continue
        course_ord = education_ordinal(course)
        prio, rest = [], []
        for ind in group:
            lifetime = ind.lifetime_education_target
            is_prio = lifetime is not None and (
                education_ordinal(lifetime) > course_ord
                if priority_above else education_ordinal(lifetime) < course_ord
            )
            (prio if is_prio else rest).append(ind.id)
        if target <= len(prio):
            chosen = rng.choice(prio, size=target, replace=False)
        else:
            extra = min(target - len(prio), len(rest))
            chosen = np.concatenate([
                np.array(prio, dtype=int),
                rng.choice(rest, size=extra, replace=False) if extra else np.empty(0, int),
            ])
        outcomes = edu.dropout_outcomes.get(course, {"OTH": 1.0})
        for pid in sorted(int(i) for i in chosen):
            ind = pop.get(pid)
            dropouts += 1
            row = dict(outcomes)
            lifetime = ind.lifetime_education_target
            reached_target = lifetime is not None and (
                education_ordinal(ind.education_attained) >= education_ordinal(lifetime)
            )
            if reached_target or not edu.enrolment_by_attained.get(ind.education_attained):
                row.pop(OUTCOME_REENROL, None)
            if not row:
                row = {"OTH": 1.0}
            outcome = _draw_key(rng, row)
            if outcome == OUTCOME_REENROL:
                next_course = _draw_key(rng, edu.enrolment_by_attained[ind.education_attained])
                ind.prospective_education = next_course
                ind.graduation_year = year + edu.duration(next_course)
                if log is not None:
                    log.add(year, pid, "dropout", course.value, next_course.value, "S")
            else:
                ind.econ_status = EconStatus(outcome)
                ind.prospective_education = None
                ind.graduation_year = None
                if log is not None:
                    log.add(year, pid, "dropout", course.value, "", outcome)
    return dropouts


# ---------------------------------------------------------------------------
# Graduation
# ---------------------------------------------------------------------------

_SCHOOL_PROGRESSION = {
    EducationLevel.P: EducationLevel.LS,
    EducationLevel.LS: EducationLevel.US,
}


def apply_graduations(pop: Population, tables: RateTables, year: int,
                      streams: YearStreams, log=None) -> int:
    """Graduate students whose date has arrived and decide their next step."""
    edu = tables.education
    rng = streams.module("education.graduations")
    grads = [ind for ind in pop.people()
             if ind.econ_status == EconStatus.S and ind.graduation_year == year]
    for ind in grads:
        course = ind.prospective_education
        previous = ind.education_attained
        ind.education_attained = course

        next_school = _SCHOOL_PROGRESSION.get(course)
        if next_school is not None:
            ind.prospective_education = next_school
            ind.graduation_year = year + edu.duration(next_school)
            if log is not None:
                log.add(year, ind.id, "graduate", previous.value, course.value, "S")
            continue

        row = dict(edu.graduate_outcomes.get(course, {"W": 1.0}))
        lifetime = ind.lifetime_education_target
        reached = lifetime is not None and (
            education_ordinal(lifetime) <= education_ordinal(course))
        if reached or not edu.enrolment_by_attained.get(course):
            row.pop(OUTCOME_CONTINUE, None)
        if not row:
            row = {"W": 1.0}
        outcome = _draw_key(rng, row)
        if outcome == OUTCOME_CONTINUE:
            next_course = _draw_key(rng, edu.enrolment_by_attained[course])
            ind.prospective_education = next_course
            ind.graduation_year = year + edu.duration(next_course)
            if log is not None:
                log.add(year, ind.id, "graduate", previous.value, course.value, "S")
        else:
            ind.econ_status = EconStatus(outcome)
            ind.prospective_education = None
            ind.graduation_year = None
            if log is not None:
                log.add(year, ind.id, "graduate", previous.value, course.value, outcome)
    return len(grads)


# ---------------------------------------------------------------------------
# Enrolment
# ---------------------------------------------------------------------------

def enrol_primary(pop: Population, tables: RateTables, year: int, log=None) -> int:
    """Enrol children reaching the school entry age, and catch up any older
    arrival still without an attained level."""
    edu = tables.education
    enrolled = 0
    for ind in pop.people():
        if ind.econ_status == EconStatus.S:
            continue
        if ind.age == PRIMARY_START_AGE:
            ind.econ_status = EconStatus.S
            ind.education_attained = EducationLevel.NF
            ind.prospective_education = EducationLevel.P
            ind.graduation_year = year + edu.duration(EducationLevel.P)
            enrolled += 1
            if log is not None:
                log.add(year, ind.id, "enrol", "", EducationLevel.P.value, "S")
        elif ind.age > PRIMARY_START_AGE and ind.education_attained == EducationLevel.NA:
            stage = school_stage_for_age(ind.age, edu)
            if stage is None:
                # Past school age with no recorded education: settle the
                # attainment without re-enrolling.
                ind.education_attained = EducationLevel.LS
                if log is not None:
                    log.add(year, ind.id, "enrol", "", EducationLevel.LS.value,
                            ind.econ_status.value)
                continue
            course, attained, remaining = stage
            ind.econ_status = EconStatus.S
            ind.education_attained = attained
            ind.prospective_education = course
            ind.graduation_year = year + remaining
            enrolled += 1
            if log is not None:
                log.add(year, ind.id, "enrol", attained.value, course.value, "S")
    return enrolled


def _weighted_pick(rng, candidates: list[Individual], weights: np.ndarray, k: int) -> list[int]:
    """k distinct candidate indices, weight-proportional with uniform fallback."""
    if k <= 0 or not candidates:
        return []
    k = min(k, len(candidates))
    total = weights.sum()
    positive = int((weights > 0).sum())
    picked: list[int] = []
    if total > 0:
        take = min(k, positive)
        picked = list(rng.choice(len(candidates), size=take, replace=False,
                                 p=weights / total))
    if len(picked) < k:
        remaining = [i for i in range(len(candidates)) if i not in set(picked)]
        extra = rng.choice(remaining, size=k - len(picked), replace=False)
        picked.extend(int(i) for i in extra)
    return [int(i) for i in picked]


def enrol_adult_learners(pop: Population, tables: RateTables, year: int,
                         streams: YearStreams, log=None) -> int:
    """Top regional student counts back up to the adult participation levels.

    The 18-24 band is filled to its national share; 25-69 to the regional
    adult rate. Candidates below their lifetime target come first.
    """
    edu = tables.education
    geo = tables.geography
    rng = streams.module("education.adult_learners")

    region_members: dict[str, list[Individual]] = {r: [] for r in geo.regions}
    for ind in pop.people():
        if 18 <= ind.age <= 69:
            region_members[geo.region_of(ind.ed_id)].append(ind)

    enrolled = 0
    for region in geo.regions:
        members = region_members[region]
        for lo, hi, share in (
            (18, 24, edu.adult_student_share_18_24),
            (25, 69, edu.adult_student_rate_25_69[region]),
        ):
            band = [ind for ind in members if lo <= ind.age <= hi]
            students = sum(1 for ind in band if ind.econ_status == EconStatus.S)
            target = round_half_up(share * len(band))
            need = target - students
            if need <= 0:
                continue
            eligible = [
                ind for ind in band
                if ind.econ_status != EconStatus.S
                and edu.enrolment_by_attained.get(ind.education_attained)
            ]
            below, others = [], []
            for ind in eligible:
                lifetime = ind.lifetime_education_target
                if lifetime is not None and (
                    education_ordinal(ind.education_attained)
                    < education_ordinal(lifetime)
                ):
                    below.append(ind)
                else:
                    others.append(ind)
            picked: list[Individual] = []
            for group in (below, others):
                if len(picked) >= need:
                    break
                weights = np.array([
                    edu.adult_learner_age_sex_dist.get(
                        (ind.sex.value, age_group(ind.age)), 0.0)
                    for ind in group
                ])
                for i in _weighted_pick(rng, group, weights, need - len(picked)):
                    picked.append(group[i])
            if len(picked) < need and log is not None:
                log.add(year, -1, "adult_enrol_shortfall", region, "",
                        str(need - len(picked)))
            for ind in sorted(picked, key=lambda p: p.id):
                course = _draw_key(rng, edu.enrolment_by_attained[ind.education_attained])
                ind.econ_status = EconStatus.S
                ind.prospective_education = course
                ind.graduation_year = year + edu.duration(course)
                enrolled += 1
                if log is not None:
                    log.add(year, ind.id, "adult_enrol",
                            ind.education_attained.value, course.value, "S")
    return enrolled


# ---------------------------------------------------------------------------
# Employment
# ---------------------------------------------------------------------------

def apply_employment(pop: Population, tables: RateTables, streams: YearStreams) -> int:
    """Redraw the economic status of every non-student above the labour
    threshold from the (age band, sex, education) row, ignoring the current
    status entirely."""
    from .rates import ECON_STATUSES

    ids, bands, sexes, edus = [], [], [], []
    for ind in pop.people():
        if ind.econ_status == EconStatus.S or ind.age < LABOUR_MARKET_AGE:
            continue
        ids.append(ind.id)
        bands.append(min((ind.age - 15) // 5, 15))
        sexes.append(0 if ind.sex == Sex.F else 1)
        edus.append(education_ordinal(ind.education_attained))
    if not ids:
        return 0
    id_arr = np.array(ids, dtype=np.int64)
    cum_rows = tables.econ.cum[np.array(bands), np.array(sexes), np.array(edus)]
    u = streams.uniforms("employment", id_arr)
    status_idx = np.clip((u[:, None] >= cum_rows).sum(axis=1), 0, len(ECON_STATUSES) - 1)
    changed = 0
    for pid, s_idx in zip(ids, status_idx):
        ind = pop.get(pid)
        new_status = ECON_STATUSES[int(s_idx)]
        if ind.econ_status != new_status:
            changed += 1
        ind.econ_status = new_status
    return changed
