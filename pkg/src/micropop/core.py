"""Core data model: individual attributes, geography and the population registry.

Every event module mutates a single Population instance; this module owns the
attribute encodings, the link bookkeeping (spouses, parents, children, the
per-ED resident index) and the invariant checker used after every simulated
year.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union

# Marker for a spouse living outside the simulated population.
OUTSIDER = "OUTSIDER"

MAX_AGE = 105
PRIMARY_START_AGE = 4
# First age at which an economic status is drawn; below this NA is legal.
LABOUR_MARKET_AGE = 16


class Sex(str, Enum):
    F = "F"
    M = "M"


class MaritalStatus(str, Enum):
    MAR = "MAR"
    SGL = "SGL"
    SEP = "SEP"  # separated and divorced are banded together
    WID = "WID"


class EducationLevel(str, Enum):
    NF = "NF"    # no formal education
    P = "P"      # primary
    LS = "LS"    # lower secondary
    US = "US"    # upper secondary
    PLC = "PLC"  # post-leaving certificate
    HC = "HC"    # higher certificate
    DEG = "DEG"  # undergraduate degree
    PD = "PD"    # postgraduate degree
    D = "D"      # doctorate
    NA = "NA"    # pre-school children only


class EconStatus(str, Enum):
    W = "W"          # at work
    S = "S"          # student
    LAHF = "LAHF"    # looking after home/family
    R = "R"          # retired
    UTWSD = "UTWSD"  # unable to work, sickness/disability
    OTH = "OTH"      # other
    UNE = "UNE"      # unemployed
    NA = "NA"        # children only


# Total order over attainable levels; NA sits outside the order.
EDUCATION_ORDER = {
    EducationLevel.NF: 0,
    EducationLevel.P: 1,
    EducationLevel.LS: 2,
    EducationLevel.US: 3,
    EducationLevel.PLC: 4,
    EducationLevel.HC: 5,
    EducationLevel.DEG: 6,
    EducationLevel.PD: 7,
    EducationLevel.D: 8,
}

ORDERED_LEVELS = tuple(EDUCATION_ORDER)

# Legal marital moves; anything else is a bug in an event module.
LEGAL_MARITAL_TRANSITIONS = {
    MaritalStatus.SGL: {MaritalStatus.MAR},
    MaritalStatus.MAR: {MaritalStatus.SEP, MaritalStatus.WID},
    MaritalStatus.SEP: {MaritalStatus.MAR},
    MaritalStatus.WID: {MaritalStatus.MAR},
}


def education_ordinal(level: EducationLevel) -> int:
    """Rank of an education level, NF=0 .. D=8. NA has no rank."""
    if level == EducationLevel.NA:
        raise ValueError("education level NA has no ordinal rank")
    return EDUCATION_ORDER[level]


# ---------------------------------------------------------------------------
# Age bracket helpers shared by the rate tables and the event modules.
# ---------------------------------------------------------------------------

AGE_GROUPS = tuple(f"{5 * i}-{5 * i + 4}" for i in range(17)) + ("85+",)
ECON_AGE_BANDS = tuple(f"{15 + 5 * i}-{19 + 5 * i}" for i in range(15)) + ("90+",)
FERTILITY_AGE_GROUPS = tuple(f"{15 + 5 * i}-{19 + 5 * i}" for i in range(7))

FERTILITY_MIN_AGE = 15
FERTILITY_MAX_AGE = 49
# Below this age fertility rates are not split by marital status.
FERTILITY_MARITAL_SPLIT_AGE = 25

MARITAL_BAND_ALL = "ALL"
MARITAL_BAND_MAR = "MAR"
MARITAL_BAND_NOT_MAR = "NOT_MAR"


# Direct age -> group lookup for the hot paths.
AGE_GROUP_BY_AGE = tuple(AGE_GROUPS[min(a // 5, 17)] for a in range(MAX_AGE + 1))


def age_group(age: int) -> str:
    """Five-year age group label, 0-4 .. 80-84, 85+."""
    return AGE_GROUP_BY_AGE[age]


def age_group_range(label: str) -> tuple[int, int]:
    """Inclusive single-age range covered by a five-year group label."""
    if label.endswith("+"):
        return int(label[:-1]), MAX_AGE
    lo, hi = label.split("-")
    return int(lo), int(hi)


def econ_age_band(age: int) -> str:
    """Economic-status transition band, 15-19 .. 85-89, 90+."""
    if age < 15:
        raise ValueError(f"no economic band below age 15 (got {age})")
    return ECON_AGE_BANDS[min((age - 15) // 5, 15)]


def fertility_age_group(age: int) -> Optional[str]:
    if age < FERTILITY_MIN_AGE or age > FERTILITY_MAX_AGE:
        return None
    return FERTILITY_AGE_GROUPS[(age - 15) // 5]


SpouseRef = Union[int, str, None]  # person id, OUTSIDER, or no spouse


@dataclass(slots=True)
class Individual:
    id: int
    age: int
    sex: Sex
    marital_status: MaritalStatus
    education_attained: EducationLevel
    econ_status: EconStatus
    ed_id: str
    spouse: SpouseRef = None
    mother_id: Optional[int] = None
    father_id: Optional[int] = None
    children: set[int] = field(default_factory=set)
    lifetime_education_target: Optional[EducationLevel] = None
    prospective_education: Optional[EducationLevel] = None
    graduation_year: Optional[int] = None
    immigrated_year: Optional[int] = None
    recent_immigrant_child: bool = False

    @property
    def is_student(self) -> bool:
        return self.econ_status == EconStatus.S

    @property
    def has_resident_spouse(self) -> bool:
        return isinstance(self.spouse, int)


class GeographyError(ValueError):
    pass


@dataclass(slots=True)
class EDRecord:
    ed_id: str
    county_id: str
    region_id: str
    base_population: int
    intra_county_immigrant_capacity: int
    inter_county_immigrant_capacity: int
    intl_immigrant_weight: float


class Geography:
    """ED -> county -> region hierarchy with per-ED intake parameters."""

    def __init__(self, eds: Iterable[EDRecord]):
        self.eds: dict[str, EDRecord] = {}
        self.region_of_county: dict[str, str] = {}
        self.region_of_ed: dict[str, str] = {}
        self.eds_by_county: dict[str, list[str]] = {}
        self.counties_by_region: dict[str, list[str]] = {}
        for rec in eds:
            if rec.ed_id in self.eds:
                raise GeographyError(f"duplicate ED id {rec.ed_id}")
            seen_region = self.region_of_county.get(rec.county_id)
            if seen_region is not None and seen_region != rec.region_id:
                raise GeographyError(
                    f"county {rec.county_id} assigned to two regions "
                    f"({seen_region}, {rec.region_id})"
                )
            self.eds[rec.ed_id] = rec
            self.region_of_county[rec.county_id] = rec.region_id
            self.region_of_ed[rec.ed_id] = rec.region_id
            self.eds_by_county.setdefault(rec.county_id, []).append(rec.ed_id)
        for county, region in self.region_of_county.items():
            self.counties_by_region.setdefault(region, []).append(county)
        for lst in self.eds_by_county.values():
            lst.sort()
        for lst in self.counties_by_region.values():
            lst.sort()
        self.counties = tuple(sorted(self.eds_by_county))
        self.regions = tuple(sorted(self.counties_by_region))
        total_weight = sum(rec.intl_immigrant_weight for rec in self.eds.values())
        if abs(total_weight - 1.0) > 1e-9:
            raise GeographyError(
                f"intl_immigrant_weight sums to {total_weight!r}, expected 1.0"
            )

    def county_of(self, ed_id: str) -> str:
        return self.eds[ed_id].county_id

    def region_of(self, ed_id: str) -> str:
        return self.region_of_ed[ed_id]

    def eds_in_region(self, region_id: str) -> list[str]:
        out: list[str] = []
        for county in self.counties_by_region[region_id]:
            out.extend(self.eds_by_county[county])
        return out


class Population:
    """Registry of individuals plus the ED resident index.

    Ids are handed out monotonically and never reused. Insertion order is
    ascending id, so iterating ``people()`` is deterministic.
    """

    def __init__(self, individuals: Iterable[Individual] = ()):
        self.individuals: dict[int, Individual] = {}
        self.ed_index: dict[str, set[int]] = {}
        self.next_id = 0
        for ind in sorted(individuals, key=lambda i: i.id):
            self.add(ind)

    def __len__(self) -> int:
        return len(self.individuals)

    def __contains__(self, pid: int) -> bool:
        return pid in self.individuals

    def people(self):
        return self.individuals.values()

    def get(self, pid: int) -> Individual:
        return self.individuals[pid]

    def new_id(self) -> int:
        pid = self.next_id
        self.next_id += 1
        return pid

    def add(self, ind: Individual) -> None:
        if ind.id in self.individuals:
            raise ValueError(f"person id {ind.id} already registered")
        self.individuals[ind.id] = ind
        self.ed_index.setdefault(ind.ed_id, set()).add(ind.id)
        self.next_id = max(self.next_id, ind.id + 1)

    def remove(self, pid: int) -> Individual:
        ind = self.individuals.pop(pid)
        self.ed_index[ind.ed_id].discard(pid)
        return ind

    def move(self, pid: int, new_ed: str) -> None:
        ind = self.individuals[pid]
        self.ed_index[ind.ed_id].discard(pid)
        ind.ed_id = new_ed
        self.ed_index.setdefault(new_ed, set()).add(pid)

    def residents(self, ed_id: str) -> list[int]:
        """Resident ids of one ED in ascending order."""
        return sorted(self.ed_index.get(ed_id, ()))

    def snapshot_state(self) -> tuple:
        """Cheap copyable image of the registry for atomic year rollback."""
        rows = [
            (i.id, i.age, i.sex, i.marital_status, i.education_attained,
             i.econ_status, i.ed_id, i.spouse, i.mother_id, i.father_id,
             tuple(i.children), i.lifetime_education_target,
             i.prospective_education, i.graduation_year, i.immigrated_year,
             i.recent_immigrant_child)
            for i in self.individuals.values()
        ]
        return rows, self.next_id

    def restore_state(self, snapshot: tuple) -> None:
        rows, next_id = snapshot
        self.individuals = {
            r[0]: Individual(
                id=r[0], age=r[1], sex=r[2], marital_status=r[3],
                education_attained=r[4], econ_status=r[5], ed_id=r[6],
                spouse=r[7], mother_id=r[8], father_id=r[9],
                children=set(r[10]), lifetime_education_target=r[11],
                prospective_education=r[12], graduation_year=r[13],
                immigrated_year=r[14], recent_immigrant_child=r[15],
            )
            for r in rows
        }
        index: dict[str, set[int]] = {}
        for pid, ind in self.individuals.items():
            index.setdefault(ind.ed_id, set()).add(pid)
        self.ed_index = index
        self.next_id = next_id


def validate(pop: Population, geo: Optional[Geography] = None) -> list[str]:
    """Check every structural invariant; returns one message per violation.

    Diagnostic only: an empty list means the population is internally
    consistent (ids, links, index, attribute legality).
    """
    out: list[str] = []
    inds = pop.individuals

    for pid, ind in inds.items():
        if pid != ind.id:
            out.append(f"{pid}: registry key differs from person id {ind.id}")
        if not (0 <= ind.age <= MAX_AGE):
            out.append(f"{pid}: age {ind.age} outside 0..{MAX_AGE}")
        if ind.education_attained == EducationLevel.NA and ind.age > PRIMARY_START_AGE:
            out.append(f"{pid}: education NA at age {ind.age}")
        if ind.econ_status == EconStatus.NA and ind.age >= LABOUR_MARKET_AGE:
            out.append(f"{pid}: econ NA at age {ind.age}")

        is_student = ind.econ_status == EconStatus.S
        has_pipeline = ind.prospective_education is not None and ind.graduation_year is not None
        if is_student != has_pipeline:
            out.append(
                f"{pid}: student flag and education pipeline disagree "
                f"(econ={ind.econ_status.value}, prospective={ind.prospective_education}, "
                f"graduation={ind.graduation_year})"
            )
        if ind.prospective_education is not None:
            if ind.education_attained == EducationLevel.NA:
                out.append(f"{pid}: student without an attained level")
            elif education_ordinal(ind.prospective_education) <= education_ordinal(
                ind.education_attained
            ):
                out.append(
                    f"{pid}: prospective {ind.prospective_education.value} not above "
                    f"attained {ind.education_attained.value}"
                )

        if ind.spouse is not None:
            if ind.marital_status != MaritalStatus.MAR:
                out.append(f"{pid}: spouse set but marital {ind.marital_status.value}")
            if isinstance(ind.spouse, int):
                partner = inds.get(ind.spouse)
                if partner is None:
                    out.append(f"{pid}: dangling spouse {ind.spouse}")
                else:
                    if partner.spouse != pid:
                        out.append(f"{pid}: spouse link to {ind.spouse} not symmetric")
                    if partner.marital_status != MaritalStatus.MAR:
                        out.append(
                            f"{pid}: spouse {ind.spouse} has marital "
                            f"{partner.marital_status.value}"
                        )
                if ind.spouse == pid:
                    out.append(f"{pid}: married to self")
            elif ind.spouse != OUTSIDER:
                out.append(f"{pid}: spouse value {ind.spouse!r} not an id or OUTSIDER")
        elif ind.marital_status == MaritalStatus.MAR:
            out.append(f"{pid}: married with no spouse reference")

        for role, parent_id in (("mother", ind.mother_id), ("father", ind.father_id)):
            if parent_id is None:
                continue
            parent = inds.get(parent_id)
            if parent is None:
                out.append(f"{pid}: dangling {role} {parent_id}")
            elif pid not in parent.children:
                out.append(f"{pid}: missing from {role} {parent_id}'s children")
        for child_id in ind.children:
            child = inds.get(child_id)
            if child is None:
                out.append(f"{pid}: dangling child {child_id}")
            elif pid not in (child.mother_id, child.father_id):
                out.append(f"{pid}: child {child_id} does not reference this parent")

        if pid >= pop.next_id:
            out.append(f"{pid}: id at or above next_id {pop.next_id}")

    # The ED index must be exactly the inverse of the ed_id field.
    indexed: set[int] = set()
    for ed, members in pop.ed_index.items():
        if geo is not None and ed not in geo.eds:
            out.append(f"index mismatch: unknown ED {ed} in index")
        for pid in members:
            ind = inds.get(pid)
            if ind is None:
                out.append(f"index mismatch: {pid} indexed under {ed} but not registered")
            elif ind.ed_id != ed:
                out.append(f"index mismatch: {pid} indexed under {ed}, lives in {ind.ed_id}")
        indexed |= members
    for pid, ind in inds.items():
        if pid not in indexed:
            out.append(f"index mismatch: {pid} missing from ED index")
        if geo is not None and ind.ed_id not in geo.eds:
            out.append(f"{pid}: unknown ED {ind.ed_id}")

    return out
