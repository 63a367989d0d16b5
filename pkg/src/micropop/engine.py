"""Annual pipeline orchestration, determinism contract and checkpoints.

The module order is fixed: mortality, ageing, internal migration,
international emigration then immigration, fertility, separations then
marriages, the education sub-steps, and employment last so it sees the
year's final age and education. Output is a pure function of (base
population, rates, scenario, master seed) regardless of worker count.
"""

from __future__ import annotations

import gzip
import json
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import demography, socioecon
from .core import (
    LEGAL_MARITAL_TRANSITIONS,
    EducationLevel,
    Population,
    education_ordinal,
    validate,
)
from .dcm import ledger_from_population
from .demography import YearEventCounts
from .popio import EducationLog, EventLog
from .rates import RateTables
from .streams import YearStreams, rng_stream  # noqa: F401  (rng_stream is API)

CHECKPOINT_FORMAT_VERSION = 1

MODULE_ORDER = (
    "mortality",
    "ageing",
    "internal_migration",
    "intl_emigration",
    "intl_immigration",
    "fertility",
    "separations",
    "marriages",
    "education.dropouts",
    "education.graduations",
    "education.primary_enrolment",
    "education.adult_learners",
    "employment",
)


class YearStepError(RuntimeError):
    """A module failed; the year was rolled back to its pre-year state."""


class CheckpointError(RuntimeError):
    pass


@dataclass
class YearReport:
    year: int
    pop_start: int
    pop_end: int
    counts: YearEventCounts
    violations: list[str] = field(default_factory=list)
    extras: dict[str, int] = field(default_factory=dict)

    @property
    def accounting_ok(self) -> bool:
        c = self.counts
        return self.pop_end == (
            self.pop_start - c.deaths + c.births
            + c.intl_immigrants - c.intl_emigrants
        )


@dataclass
class SimState:
    population: Population
    tables: RateTables
    year: int
    master_seed: int
    reports: list[YearReport] = field(default_factory=list)

    @property
    def scenario(self):
        return self.tables.scenario


def new_state(tables: RateTables, population: Population,
              master_seed: Optional[int] = None) -> SimState:
    seed = tables.scenario.master_seed if master_seed is None else master_seed
    return SimState(population=population, tables=tables,
                    year=tables.scenario.start_year, master_seed=seed)


def run_year(
    state: SimState,
    workers: int = 1,
    check_invariants: bool = True,
    atomic: bool = True,
    event_log: Optional[EventLog] = None,
    edu_log: Optional[EducationLog] = None,
    run_log: Optional[list] = None,
) -> YearReport:
    """Advance the population through one year of events."""
    year = state.year
    pop = state.population
    tables = state.tables
    pop_start = len(pop)
    snapshot = pop.snapshot_state() if atomic else None
    before = None
    if check_invariants:
        before = {
            pid: (ind.marital_status,
                  -1 if ind.education_attained == EducationLevel.NA
                  else education_ordinal(ind.education_attained))
            for pid, ind in pop.individuals.items()
        }

    streams = YearStreams(master_seed=state.master_seed, year=year, workers=workers)
    counts = YearEventCounts()
    extras: dict[str, int] = {}

    def mark(module: str) -> None:
        if run_log is not None:
            run_log.append((year, module))

    try:
        counts.deaths = demography.apply_mortality(pop, tables, year, streams, event_log)
        mark("mortality")
        demography.age_population(pop)
        mark("ageing")
        counts.internal_moves = demography.apply_internal_migration(
            pop, tables, year, streams, event_log)
        mark("internal_migration")
        counts.intl_emigrants = demography.apply_international_emigration(
            pop, tables, year, streams, event_log)
        mark("intl_emigration")
        counts.intl_immigrants = demography.apply_international_immigration(
            pop, tables, year, streams, event_log)
        mark("intl_immigration")
        counts.births = demography.apply_fertility(
            pop, tables, year, streams, event_log, edu_log)
        mark("fertility")
        counts.separations = demography.apply_separations(
            pop, tables, year, streams, event_log)
        mark("separations")
        counts.marriages = demography.apply_marriages(
            pop, tables, year, streams, event_log)
        mark("marriages")
        extras["dropouts"] = socioecon.apply_dropouts(pop, tables, year, streams, edu_log)
        mark("education.dropouts")
        extras["graduates"] = socioecon.apply_graduations(pop, tables, year, streams, edu_log)
        mark("education.graduations")
        extras["primary_enrolled"] = socioecon.enrol_primary(pop, tables, year, edu_log)
        mark("education.primary_enrolment")
        extras["adult_enrolled"] = socioecon.enrol_adult_learners(
            pop, tables, year, streams, edu_log)
        mark("education.adult_learners")
        extras["econ_changed"] = socioecon.apply_employment(pop, tables, streams)
        mark("employment")
    except Exception as exc:
        if atomic and snapshot is not None:
            pop.restore_state(snapshot)
        raise YearStepError(f"year {year} aborted in mid-module: {exc}") from exc

    report = YearReport(year=year, pop_start=pop_start, pop_end=len(pop),
                        counts=counts, extras=extras)
    if not report.accounting_ok:
        raise YearStepError(
            f"year {year}: accounting identity broken "
            f"({pop_start} - {counts.deaths} + {counts.births} "
            f"+ {counts.intl_immigrants} - {counts.intl_emigrants} != {report.pop_end})"
        )
    if check_invariants:
        report.violations = validate(pop, tables.geography)
        report.violations += _temporal_violations(pop, before)
    state.reports.append(report)
    state.year = year + 1
    return report


def _temporal_violations(pop: Population, before: dict) -> list[str]:
    """Check marital moves against the legal graph and education monotonicity."""
    out = []
    for pid, (old_marital, old_ord) in before.items():
        ind = pop.individuals.get(pid)
        if ind is None:
            continue
        if ind.marital_status != old_marital and (
            ind.marital_status not in LEGAL_MARITAL_TRANSITIONS[old_marital]
        ):
            out.append(
                f"{pid}: illegal marital move {old_marital.value}"
                f"->{ind.marital_status.value}"
            )
        new_ord = (-1 if ind.education_attained == EducationLevel.NA
                   else education_ordinal(ind.education_attained))
        if new_ord < old_ord:
            out.append(f"{pid}: education regressed ({old_ord} -> {new_ord})")
    return out


@dataclass
class SimulationResult:
    reports: list[YearReport]
    ledgers: dict[int, np.ndarray]
    population: Population
    event_log: EventLog
    edu_log: EducationLog
    run_log: list[tuple[int, str]]

    @property
    def violations(self) -> list[str]:
        out = []
        for report in self.reports:
            out.extend(f"{report.year}: {v}" for v in report.violations)
        return out


def run(
    state: SimState,
    years: int,
    workers: int = 1,
    check_invariants: bool = True,
    atomic: bool = True,
    snapshot_dir: Optional[str] = None,
) -> SimulationResult:
    """Run ``years`` annual steps and collect reports, logs and cohort
    ledgers (including the starting year's)."""
    from .popio import write_population

    event_log = EventLog()
    edu_log = EducationLog()
    run_log: list[tuple[int, str]] = []
    ledgers = {state.year: ledger_from_population(state.population)}
    for _ in range(years):
        run_year(state, workers=workers, check_invariants=check_invariants,
                 atomic=atomic, event_log=event_log, edu_log=edu_log,
                 run_log=run_log)
        ledgers[state.year] = ledger_from_population(state.population)
        if snapshot_dir is not None:
            write_population(
                Path(snapshot_dir) / f"population_{state.year}.csv",
                state.population)
    return SimulationResult(
        reports=list(state.reports), ledgers=ledgers,
        population=state.population, event_log=event_log,
        edu_log=edu_log, run_log=run_log,
    )


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def checkpoint(state: SimState, path) -> None:
    """One-file snapshot: a JSON header line, then the pickled state."""
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "scenario": state.scenario.intl_scenario,
        "year": state.year,
        "master_seed": state.master_seed,
    }
    payload = {
        "population": state.population,
        "tables": state.tables,
        "year": state.year,
        "master_seed": state.master_seed,
        "reports": state.reports,
    }
    with gzip.open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(pickle.dumps(payload, protocol=pickle.HIGHEST_PROTOCOL))


def read_checkpoint_header(path) -> dict:
    try:
        with gzip.open(path, "rb") as fh:
            line = fh.readline()
        header = json.loads(line)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint header from {path}: {exc}") from exc
    if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format {header.get('format_version')!r}")
    return header


def restore(path) -> SimState:
    """Rebuild a state whose continued run matches an uninterrupted one."""
    header = read_checkpoint_header(path)
    try:
        with gzip.open(path, "rb") as fh:
            fh.readline()
            payload = pickle.loads(fh.read())
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    for key in ("population", "tables", "year", "master_seed", "reports"):
        if key not in payload:
            raise CheckpointError(f"checkpoint {path} missing field {key!r}")
    if payload["year"] != header["year"]:
        raise CheckpointError(f"checkpoint {path} header/payload year mismatch")
    return SimState(
        population=payload["population"],
        tables=payload["tables"],
        year=payload["year"],
        master_seed=payload["master_seed"],
        reports=payload["reports"],
    )
