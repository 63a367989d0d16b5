"""Population file formats and the event/education logs.

Base-population CSV columns:
    id,ed_id,age,sex,marital_status,education_attained,econ_status,
    spouse_id,mother_id,father_id
Empty cells mean "none"; the spouse column additionally accepts the literal
OUTSIDER. Initialised populations add ``prospective_education`` and
``graduation_year``; simulation outputs add the immigration provenance and
lifetime-target columns on top.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

from .core import (
    OUTSIDER,
    EconStatus,
    EducationLevel,
    Geography,
    Individual,
    MaritalStatus,
    Population,
    Sex,
)


class PopulationIOError(ValueError):
    pass


BASE_COLUMNS = (
    "id", "ed_id", "age", "sex", "marital_status", "education_attained",
    "econ_status", "spouse_id", "mother_id", "father_id",
)
INITIALISED_COLUMNS = BASE_COLUMNS + ("prospective_education", "graduation_year")
FULL_COLUMNS = INITIALISED_COLUMNS + (
    "immigrated_year", "recent_immigrant_child", "lifetime_education_target",
)


def _opt_int(value: str) -> Optional[int]:
    return int(value) if value else None


def _opt_level(value: str) -> Optional[EducationLevel]:
    return EducationLevel(value) if value else None


def read_population(path, geography: Optional[Geography] = None) -> Population:
    """Load a population CSV (base, initialised or full schema)."""
    path = Path(path)
    if not path.is_file():
        raise PopulationIOError(f"population file {path} does not exist")
    pop = Population()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in BASE_COLUMNS:
            if col not in header:
                raise PopulationIOError(f"{path.name}: missing column {col!r}")
        for rowno, row in enumerate(reader, start=2):
            try:
                education = row["education_attained"]
                if education in ("", "NS"):
                    # "Not Stated" resolves to NA and is imputed at genesis.
                    education = "NA"
                spouse_raw = row["spouse_id"]
                if spouse_raw == "":
                    spouse = None
                elif spouse_raw == OUTSIDER:
                    spouse = OUTSIDER
                else:
                    spouse = int(spouse_raw)
                ind = Individual(
                    id=int(row["id"]),
                    age=int(row["age"]),
                    sex=Sex(row["sex"]),
                    marital_status=MaritalStatus(row["marital_status"]),
                    education_attained=EducationLevel(education),
                    econ_status=EconStatus(row["econ_status"] or "NA"),
                    ed_id=row["ed_id"],
                    spouse=spouse,
                    mother_id=_opt_int(row["mother_id"]),
                    father_id=_opt_int(row["father_id"]),
                )
                if "prospective_education" in row and row.get("prospective_education"):
                    ind.prospective_education = EducationLevel(row["prospective_education"])
                if "graduation_year" in row and row.get("graduation_year"):
                    ind.graduation_year = int(row["graduation_year"])
                if row.get("immigrated_year"):
                    ind.immigrated_year = int(row["immigrated_year"])
                if row.get("recent_immigrant_child") in ("1", "true", "True"):
                    ind.recent_immigrant_child = True
                if row.get("lifetime_education_target"):
                    ind.lifetime_education_target = EducationLevel(
                        row["lifetime_education_target"])
            except (ValueError, KeyError) as exc:
                raise PopulationIOError(f"{path.name}:{rowno}: {exc}") from None
            if geography is not None and ind.ed_id not in geography.eds:
                raise PopulationIOError(
                    f"{path.name}:{rowno}: unknown ED {ind.ed_id!r}")
            try:
                pop.add(ind)
            except ValueError as exc:
                raise PopulationIOError(f"{path.name}:{rowno}: {exc}") from None

    # Rebuild children sets from the parent columns and reject dangling ids.
    for ind in pop.people():
        for role, parent_id in (("mother", ind.mother_id), ("father", ind.father_id)):
            if parent_id is not None:
                if parent_id not in pop:
                    raise PopulationIOError(
                        f"{path.name}: person {ind.id} has dangling {role} {parent_id}")
                pop.get(parent_id).children.add(ind.id)
        if isinstance(ind.spouse, int) and ind.spouse not in pop:
            raise PopulationIOError(
                f"{path.name}: person {ind.id} has dangling spouse {ind.spouse}")
    return pop


def is_initialised(path) -> bool:
    """True when the CSV already carries the genesis pipeline columns."""
    with Path(path).open(newline="") as fh:
        header = next(csv.reader(fh), [])
    return "prospective_education" in header


def write_population(path, pop: Population, schema: str = "full") -> None:
    columns = {"base": BASE_COLUMNS, "initialised": INITIALISED_COLUMNS,
               "full": FULL_COLUMNS}[schema]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for pid in sorted(pop.individuals):
            ind = pop.get(pid)
            row = [
                ind.id, ind.ed_id, ind.age, ind.sex.value,
                ind.marital_status.value, ind.education_attained.value,
                ind.econ_status.value,
                "" if ind.spouse is None else str(ind.spouse),
                "" if ind.mother_id is None else ind.mother_id,
                "" if ind.father_id is None else ind.father_id,
            ]
            if schema != "base":
                row += [
                    ind.prospective_education.value if ind.prospective_education else "",
                    "" if ind.graduation_year is None else ind.graduation_year,
                ]
            if schema == "full":
                row += [
                    "" if ind.immigrated_year is None else ind.immigrated_year,
                    "1" if ind.recent_immigrant_child else "0",
                    ind.lifetime_education_target.value
                    if ind.lifetime_education_target else "",
                ]
            writer.writerow(row)


class EventLog:
    """Demographic event rows: year,event,person_id,ed_from,ed_to,detail."""

    HEADER = ("year", "event", "person_id", "ed_from", "ed_to", "detail")

    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, year: int, event: str, person_id: int,
            ed_from: str, ed_to: str, detail: str) -> None:
        self.rows.append((year, event, person_id, ed_from, ed_to, detail))

    def write(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.HEADER)
            writer.writerows(self.rows)


class EducationLog:
    """Education transition rows:
    year,person_id,event,from_level,to_level,next_status."""

    HEADER = ("year", "person_id", "event", "from_level", "to_level", "next_status")

    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, year: int, person_id: int, event: str,
            from_level: str, to_level: str, next_status: str) -> None:
        self.rows.append((year, person_id, event, from_level, to_level, next_status))

    def write(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.HEADER)
            writer.writerows(self.rows)
