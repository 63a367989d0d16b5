"""Population initialisation: synthetic base generation, spouse matching and
education imputation.

A static base population (from file or ``gen_synthetic_base``) lacks spouse
links and carries NA education for students; ``initialise`` converts it into
a simulation-ready population.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .apportion import largest_remainder
from .core import (
    AGE_GROUPS,
    MAX_AGE,
    OUTSIDER,
    PRIMARY_START_AGE,
    EconStatus,
    EducationLevel,
    Geography,
    Individual,
    MaritalStatus,
    Population,
    Sex,
    age_group,
    education_ordinal,
)
from .rates import EducationRates, NuptialityConfig, _PYRAMID_GROUP_WEIGHT
from .streams import module_stream

DEFAULT_EDU_WEIGHT = 2.0       # one education level counts like two years of age
DEFAULT_TOP_K = 20
DEFAULT_CONCENTRATION = 1.0


# ---------------------------------------------------------------------------
# Partner matching
# ---------------------------------------------------------------------------

def dissimilarity(a: Individual, b: Individual, edu_weight: float = DEFAULT_EDU_WEIGHT) -> float:
    return abs(a.age - b.age) + edu_weight * abs(
        education_ordinal(a.education_attained) - education_ordinal(b.education_attained)
    )


def rank_candidates(
    focal: Individual,
    pool: Sequence[Individual],
    edu_weight: float = DEFAULT_EDU_WEIGHT,
) -> list[int]:
    """Candidate ids ordered by ascending dissimilarity, ties to the lower id."""
    ids = np.array([c.id for c in pool])
    focal_ord = education_ordinal(focal.education_attained)
    scores = np.array([
        abs(c.age - focal.age) + edu_weight * abs(education_ordinal(c.education_attained) - focal_ord)
        for c in pool
    ])
    order = np.lexsort((ids, scores))
    return [int(i) for i in ids[order]]


def match_partner(
    focal: Individual,
    pool: Sequence[Individual],
    rng: np.random.Generator,
    edu_weight: float = DEFAULT_EDU_WEIGHT,
    top_k: int = DEFAULT_TOP_K,
    concentration: float = DEFAULT_CONCENTRATION,
) -> Optional[int]:
    """Pick a spouse from the least dissimilar candidates.

    The top ``top_k`` candidates by dissimilarity get Dirichlet-distributed
    weights with concentration ``concentration / rank`` and one is drawn from
    the resulting categorical; closer matches are favoured without being
    certain. Returns None for an empty pool.
    """
    if not pool:
        return None
    ranked = rank_candidates(focal, pool, edu_weight)[: max(1, top_k)]
    alphas = concentration / np.arange(1, len(ranked) + 1, dtype=np.float64)
    weights = rng.dirichlet(alphas)
    pick = rng.choice(len(ranked), p=weights)
    return ranked[int(pick)]


# ---------------------------------------------------------------------------
# Synthetic base population
# ---------------------------------------------------------------------------

# (age anchor, SGL, MAR, SEP, WID): the base marital mix interpolates
# linearly between these by single age, so cohorts age through a gradient a
# steady marriage flow can actually sustain (no band-boundary jumps).
_MARITAL_ANCHORS = (
    (17, 1.00, 0.00, 0.00, 0.00),
    (22, 0.93, 0.06, 0.01, 0.00),
    (27, 0.62, 0.34, 0.03, 0.01),
    (32, 0.42, 0.52, 0.05, 0.01),
    (40, 0.28, 0.63, 0.07, 0.02),
    (50, 0.18, 0.68, 0.09, 0.05),
    (60, 0.13, 0.67, 0.09, 0.11),
    (70, 0.10, 0.60, 0.07, 0.23),
    (80, 0.08, 0.45, 0.05, 0.42),
    (95, 0.07, 0.25, 0.03, 0.65),
    (MAX_AGE, 0.07, 0.18, 0.03, 0.72),
)
_MARITAL_CODES = (MaritalStatus.SGL, MaritalStatus.MAR, MaritalStatus.SEP, MaritalStatus.WID)


def _marital_profile() -> np.ndarray:
    """Cumulative marital-status probabilities per single age."""
    anchor_ages = [a[0] for a in _MARITAL_ANCHORS]
    profile = np.zeros((MAX_AGE + 1, len(_MARITAL_CODES)))
    ages = np.arange(MAX_AGE + 1)
    for col in range(len(_MARITAL_CODES)):
        values = [a[col + 1] for a in _MARITAL_ANCHORS]
        profile[:, col] = np.interp(ages, anchor_ages, values)
    profile[:16] = 0.0
    profile[:16, 0] = 1.0  # nobody below 16 is ever married
    profile /= profile.sum(axis=1, keepdims=True)
    return np.cumsum(profile, axis=1)

# (upper age bound, then weights over the nine attainable levels NF..D) for
# non-student adults in the synthetic base.
_EDUCATION_BANDS = (
    (24, (0.005, 0.010, 0.090, 0.320, 0.130, 0.070, 0.300, 0.070, 0.005)),
    (34, (0.005, 0.015, 0.070, 0.250, 0.120, 0.070, 0.330, 0.120, 0.020)),
    (44, (0.010, 0.020, 0.090, 0.260, 0.120, 0.080, 0.290, 0.110, 0.020)),
    (54, (0.015, 0.040, 0.130, 0.280, 0.110, 0.080, 0.240, 0.080, 0.015)),
    (64, (0.020, 0.080, 0.180, 0.280, 0.100, 0.070, 0.180, 0.060, 0.010)),
    (MAX_AGE, (0.040, 0.160, 0.220, 0.250, 0.080, 0.060, 0.130, 0.050, 0.010)),
)
_EDU_CODES = (
    EducationLevel.NF, EducationLevel.P, EducationLevel.LS, EducationLevel.US,
    EducationLevel.PLC, EducationLevel.HC, EducationLevel.DEG, EducationLevel.PD,
    EducationLevel.D,
)

# (upper age bound, W, UNE, LAHF, OTH, UTWSD, R) for non-student adults.
_ECON_BANDS = (
    (24, (0.62, 0.13, 0.04, 0.18, 0.03, 0.00)),
    (54, (0.78, 0.055, 0.10, 0.025, 0.04, 0.00)),
    (64, (0.62, 0.04, 0.11, 0.02, 0.06, 0.15)),
    (74, (0.10, 0.005, 0.06, 0.01, 0.025, 0.80)),
    (MAX_AGE, (0.02, 0.00, 0.04, 0.01, 0.02, 0.91)),
)
_ECON_CODES = (EconStatus.W, EconStatus.UNE, EconStatus.LAHF, EconStatus.OTH,
               EconStatus.UTWSD, EconStatus.R)

_STUDENT_SHARE_18_24 = 0.61
_STUDENT_SHARE_25_69 = 0.045


def _band_lookup(bands, age):
    for entry in bands:
        if age <= entry[0]:
            return entry[1:] if len(entry) > 2 else entry[1]
    return bands[-1][1:]


def _age_weights() -> np.ndarray:
    w = np.zeros(MAX_AGE + 1)
    for g, group in enumerate(AGE_GROUPS):
        if group.endswith("+"):
            ages = np.arange(85, MAX_AGE + 1)
            decay = np.exp(-0.25 * (ages - 85))
            w[85:] = _PYRAMID_GROUP_WEIGHT[g] * decay / decay.sum()
        else:
            lo = 5 * g
            w[lo:lo + 5] = _PYRAMID_GROUP_WEIGHT[g] / 5.0
    return w / w.sum()


def gen_synthetic_base(seed: int, geography: Geography, size: int) -> Population:
    """Deterministic plausible static population spread over the geography.

    Children from the primary-school entry age up to 17 are students; per the
    survey convention students carry NA education until initialisation.
    """
    if size < 1:
        raise ValueError("size must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xBA5E)))
    age_w = _age_weights()
    marital_cum = _marital_profile()

    ed_ids = sorted(geography.eds)
    base_pops = [geography.eds[e].base_population for e in ed_ids]
    counts = largest_remainder(base_pops, size)

    pop = Population()
    next_id = 0
    for ed_id, n in zip(ed_ids, counts):
        if n == 0:
            continue
        ages = rng.choice(MAX_AGE + 1, size=n, p=age_w)
        sexes = rng.integers(0, 2, size=n)
        draws = rng.random(size=(n, 3))
        for k in range(n):
            age = int(ages[k])
            sex = Sex.M if sexes[k] else Sex.F
            idx = int(np.searchsorted(marital_cum[age], draws[k, 0], side="right"))
            marital = _MARITAL_CODES[min(idx, len(_MARITAL_CODES) - 1)]
            if age < PRIMARY_START_AGE:
                econ, edu = EconStatus.NA, EducationLevel.NA
            elif age < 18:
                econ, edu = EconStatus.S, EducationLevel.NA
            else:
                student_p = (_STUDENT_SHARE_18_24 if age <= 24
                             else _STUDENT_SHARE_25_69 if age <= 69 else 0.0)
                if draws[k, 1] < student_p:
                    econ, edu = EconStatus.S, EducationLevel.NA
                else:
                    econ = _sample_band(_ECON_BANDS, _ECON_CODES, age, draws[k, 2])
                    edu = _sample_band(_EDUCATION_BANDS, _EDU_CODES, age,
                                       float(rng.random()))
            pop.add(Individual(
                id=next_id, age=age, sex=sex, marital_status=marital,
                education_attained=edu, econ_status=econ, ed_id=ed_id,
            ))
            next_id += 1
    _link_mothers(pop, rng)
    return pop


def _sample_band(bands, codes, age, u):
    weights = _band_lookup(bands, age)
    acc = 0.0
    total = sum(weights)
    for code, w in zip(codes, weights):
        acc += w / total
        if u < acc:
            return code
    return codes[-1]


def _link_mothers(pop: Population, rng: np.random.Generator, link_prob: float = 0.85) -> None:
    """Attach most minors to a plausible mother within their ED."""
    women_by_ed: dict[str, list[tuple[int, int]]] = {}
    for ind in pop.people():
        if ind.sex == Sex.F and ind.age >= 18:
            women_by_ed.setdefault(ind.ed_id, []).append((ind.id, ind.age))
    for ind in pop.people():
        if ind.age > 17:
            continue
        if rng.random() > link_prob:
            continue
        candidates = [
            wid for wid, wage in women_by_ed.get(ind.ed_id, ())
            if ind.age + 20 <= wage <= ind.age + 42
        ]
        if not candidates:
            continue
        mother_id = candidates[int(rng.integers(len(candidates)))]
        ind.mother_id = mother_id
        pop.get(mother_id).children.add(ind.id)


# ---------------------------------------------------------------------------
# Marriage initialisation
# ---------------------------------------------------------------------------

def init_marriages(
    pop: Population,
    geo: Geography,
    config: NuptialityConfig,
    rng: np.random.Generator,
) -> dict[str, int]:
    """Link every married person to a spouse: same ED first, then same
    region, Outsider last. Around ``same_sex_share`` of formed couples are
    same-sex, split evenly between male and female couples."""
    unmatched = {
        ind.id for ind in pop.people()
        if ind.marital_status == MaritalStatus.MAR and ind.spouse is None
    }
    stats = {"couples": 0, "same_sex": 0, "outsider": 0}

    def pools_for(members: list[int]) -> dict[Sex, list[int]]:
        pools: dict[Sex, list[int]] = {Sex.F: [], Sex.M: []}
        for pid in members:
            pools[pop.get(pid).sex].append(pid)
        return pools

    def match_within(members: list[int]) -> None:
        pools = pools_for(members)
        for pid in members:
            if pid not in unmatched:
                continue
            focal = pop.get(pid)
            same_sex = rng.random() < config.same_sex_share
            want = focal.sex if same_sex else (Sex.F if focal.sex == Sex.M else Sex.M)
            pool_ids = [i for i in pools[want] if i in unmatched and i != pid]
            if not pool_ids and same_sex:
                # No same-sex candidate left: fall back to an opposite-sex
                # match rather than stranding the person at this stage.
                want = Sex.F if focal.sex == Sex.M else Sex.M
                same_sex = False
                pool_ids = [i for i in pools[want] if i in unmatched and i != pid]
            if not pool_ids:
                continue
            partner_id = match_partner(focal, [pop.get(i) for i in pool_ids], rng)
            partner = pop.get(partner_id)
            focal.spouse = partner_id
            partner.spouse = pid
            unmatched.discard(pid)
            unmatched.discard(partner_id)
            stats["couples"] += 1
            stats["same_sex"] += int(same_sex)

    for ed_id in sorted(geo.eds):
        members = [pid for pid in pop.residents(ed_id) if pid in unmatched]
        match_within(members)

    for region in geo.regions:
        members: list[int] = []
        for ed_id in geo.eds_in_region(region):
            members.extend(pid for pid in pop.residents(ed_id) if pid in unmatched)
        match_within(sorted(members))

    for pid in sorted(unmatched):
        pop.get(pid).spouse = OUTSIDER
        stats["outsider"] += 1
    return stats


# ---------------------------------------------------------------------------
# Education initialisation
# ---------------------------------------------------------------------------

def school_stage_for_age(age: int, rates: EducationRates):
    """School course implied by age, with the attained level and years left.

    Entry at the primary start age, then the configured course durations in
    sequence; returns None outside the schooling ages.
    """
    start = PRIMARY_START_AGE
    for course, attained in (
        (EducationLevel.P, EducationLevel.NF),
        (EducationLevel.LS, EducationLevel.P),
        (EducationLevel.US, EducationLevel.LS),
    ):
        end = start + rates.duration(course)
        if age < end:
            if age < PRIMARY_START_AGE:
                return None
            return course, attained, end - age
        start = end
    return None


def _dist_from_counts(counts: dict) -> Optional[tuple[list, np.ndarray]]:
    items = sorted(counts.items(), key=lambda kv: education_ordinal(kv[0]))
    total = sum(c for _, c in items)
    if total == 0:
        return None
    levels = [lvl for lvl, _ in items]
    probs = np.array([c / total for _, c in items])
    return levels, probs


def _draw(rng: np.random.Generator, levels: list, probs: np.ndarray):
    return levels[int(rng.choice(len(levels), p=probs))]


def init_education(
    pop: Population,
    rates: EducationRates,
    start_year: int,
    rng: np.random.Generator,
) -> None:
    """Impute missing attainment and give every student a course pipeline."""
    # Distributions observed among already-valid non-student adults, used to
    # impute NA/NS attainment for the same (age group, sex).
    group_counts: dict[tuple[str, str], dict[EducationLevel, int]] = {}
    national_counts: dict[EducationLevel, int] = {}
    for ind in pop.people():
        if ind.age >= 18 and ind.econ_status != EconStatus.S \
                and ind.education_attained != EducationLevel.NA:
            key = (ind.sex.value, age_group(ind.age))
            group_counts.setdefault(key, {})[ind.education_attained] = \
                group_counts.setdefault(key, {}).get(ind.education_attained, 0) + 1
            national_counts[ind.education_attained] = \
                national_counts.get(ind.education_attained, 0) + 1

    national = _dist_from_counts(national_counts)
    if national is None:
        national = ([EducationLevel.US], np.array([1.0]))
    group_dists = {
        key: _dist_from_counts(counts) or national
        for key, counts in group_counts.items()
    }

    # Attained distribution for students over 24, restricted to levels that
    # still have a course above them.
    adult_counts = {
        lvl: n for lvl, n in national_counts.items()
        if rates.enrolment_by_attained.get(lvl)
    }
    adult_student_attained = _dist_from_counts(adult_counts) or (
        [EducationLevel.US], np.array([1.0]))

    young_levels = sorted(rates.young_student_course_shares,
                          key=education_ordinal)
    young_probs = np.array([rates.young_student_course_shares[l] for l in young_levels])
    deg_levels = sorted(rates.deg_entry_mix, key=education_ordinal)
    deg_probs = np.array([rates.deg_entry_mix[l] for l in deg_levels])

    for ind in list(pop.people()):
        if ind.econ_status != EconStatus.S:
            if ind.age >= 18 and ind.education_attained == EducationLevel.NA:
                levels, probs = group_dists.get(
                    (ind.sex.value, age_group(ind.age)), national)
                ind.education_attained = _draw(rng, levels, probs)
            continue

        if ind.age < PRIMARY_START_AGE:
            # Too young for school despite the student flag in the input.
            ind.econ_status = EconStatus.NA
            continue

        if ind.age < 18:
            stage = school_stage_for_age(ind.age, rates)
            if stage is None:
                # Age 17 with the school track already complete: final year
                # of upper secondary, graduating next year.
                course, attained, remaining = EducationLevel.US, EducationLevel.LS, 1
            else:
                course, attained, remaining = stage
            ind.education_attained = attained
            ind.prospective_education = course
            ind.graduation_year = start_year + remaining
            continue

        if ind.age <= 24:
            course = _draw(rng, young_levels, young_probs)
            if course in (EducationLevel.PLC, EducationLevel.HC):
                attained = EducationLevel.US
            elif course == EducationLevel.DEG:
                attained = _draw(rng, deg_levels, deg_probs)
            else:
                # Postgraduate course: attained is the level just below it.
                attained = ORDERED_BELOW[course]
        else:
            attained = _draw(rng, *adult_student_attained)
            row = rates.enrolment_by_attained[attained]
            courses = sorted(row, key=education_ordinal)
            probs = np.array([row[c] for c in courses])
            course = _draw(rng, courses, probs)
        ind.education_attained = attained
        ind.prospective_education = course
        duration = rates.duration(course)
        ind.graduation_year = start_year + int(rng.integers(1, duration + 1))


ORDERED_BELOW = {
    level: prev for prev, level in zip(
        (EducationLevel.NF, EducationLevel.P, EducationLevel.LS, EducationLevel.US,
         EducationLevel.PLC, EducationLevel.HC, EducationLevel.DEG, EducationLevel.PD),
        (EducationLevel.P, EducationLevel.LS, EducationLevel.US, EducationLevel.PLC,
         EducationLevel.HC, EducationLevel.DEG, EducationLevel.PD, EducationLevel.D),
    )
}


def initialise(pop: Population, tables, master_seed: Optional[int] = None) -> dict[str, int]:
    """Run the full genesis sequence on a loaded base population.

    Education first (matching needs imputed attainment for the dissimilarity
    metric), then spouse links.
    """
    scenario = tables.scenario
    seed = scenario.master_seed if master_seed is None else master_seed
    start = scenario.start_year
    init_education(pop, tables.education, start,
                   module_stream(seed, start, "genesis.education"))
    return init_marriages(pop, tables.geography, tables.nuptiality,
                          module_stream(seed, start, "genesis.marriage"))
