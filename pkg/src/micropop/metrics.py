"""Result metrics over populations and snapshots.

Per-ED tables always cover the geography's full ED set; ratios that are
undefined (empty starting ED, empty labour force) carry NaN and are written
as the literal ``NA`` in CSV output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    EconStatus,
    EducationLevel,
    Geography,
    Population,
    education_ordinal,
)
from .dcm import dependency_ratios_from_ledger, ledger_from_population


class MetricsError(ValueError):
    pass


def dependency_ratios(pop: Population) -> tuple[float, float]:
    """(YDR, ODR): ages 0-14 and 65+ over ages 15-64, in percent."""
    try:
        return dependency_ratios_from_ledger(ledger_from_population(pop))
    except Exception as exc:
        raise MetricsError(str(exc)) from None


def _ed_counts(pop: Population, geo: Geography) -> dict[str, int]:
    return {ed: len(pop.ed_index.get(ed, ())) for ed in geo.eds}


def ed_relative_sizes(pop_start: Population, pop_end: Population,
                      geo: Geography) -> dict[str, float]:
    """End-of-run ED size relative to the start; NaN where the start is empty."""
    start = _ed_counts(pop_start, geo)
    end = _ed_counts(pop_end, geo)
    return {
        ed: (end[ed] / start[ed]) if start[ed] else float("nan")
        for ed in sorted(geo.eds)
    }


@dataclass(frozen=True)
class ImmigrantShares:
    per_ed: dict[str, float]
    national_immigrants_only: float
    national_with_children: float


def recent_immigrant_shares(pop: Population, geo: Geography) -> ImmigrantShares:
    """Share of each ED made of in-simulation immigrants or their children."""
    ed_total: dict[str, int] = {ed: 0 for ed in geo.eds}
    ed_recent: dict[str, int] = {ed: 0 for ed in geo.eds}
    immigrants = 0
    combined = 0
    for ind in pop.people():
        ed_total[ind.ed_id] += 1
        is_immigrant = ind.immigrated_year is not None
        if is_immigrant:
            immigrants += 1
        if is_immigrant or ind.recent_immigrant_child:
            combined += 1
            ed_recent[ind.ed_id] += 1
    total = len(pop)
    return ImmigrantShares(
        per_ed={
            ed: (ed_recent[ed] / ed_total[ed]) if ed_total[ed] else 0.0
            for ed in sorted(geo.eds)
        },
        national_immigrants_only=immigrants / total if total else 0.0,
        national_with_children=combined / total if total else 0.0,
    )


def share_histogram(shares, bins: int = 20) -> np.ndarray:
    """Counts of EDs per share bin over [0, 1]."""
    values = [s for s in shares if not math.isnan(s)]
    hist, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return hist


def education_shares(pop: Population) -> dict[EducationLevel, float]:
    """Attainment distribution among adults (18+), NA excluded."""
    counts: dict[EducationLevel, int] = {}
    for ind in pop.people():
        if ind.age >= 18 and ind.education_attained != EducationLevel.NA:
            counts[ind.education_attained] = counts.get(ind.education_attained, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return {}
    return {
        lvl: counts.get(lvl, 0) / total
        for lvl in sorted(counts, key=education_ordinal)
    }


def third_level_share(shares: dict[EducationLevel, float]) -> float:
    third = (EducationLevel.HC, EducationLevel.DEG, EducationLevel.PD, EducationLevel.D)
    return sum(shares.get(lvl, 0.0) for lvl in third)


def unemployment(pop: Population) -> tuple[float, float]:
    """(labour-force rate, population share).

    The labour-force rate is UNE / (W + UNE); the population share is UNE
    over everyone. Both are reported because published figures mix the two.
    """
    une = sum(1 for i in pop.people() if i.econ_status == EconStatus.UNE)
    working = sum(1 for i in pop.people() if i.econ_status == EconStatus.W)
    labour_force = une + working
    rate_lf = une / labour_force if labour_force else float("nan")
    share_pop = une / len(pop) if len(pop) else 0.0
    return rate_lf, share_pop


def adult_student_share_delta(pop_start: Population, pop_end: Population,
                              geo: Geography) -> dict[str, float]:
    """Per-ED change in the share of residents who are students over 17,
    in percentage points."""

    def shares(pop: Population) -> dict[str, float]:
        total = {ed: 0 for ed in geo.eds}
        students = {ed: 0 for ed in geo.eds}
        for ind in pop.people():
            total[ind.ed_id] += 1
            if ind.age > 17 and ind.econ_status == EconStatus.S:
                students[ind.ed_id] += 1
        return {ed: (students[ed] / total[ed]) if total[ed] else 0.0 for ed in geo.eds}

    start = shares(pop_start)
    end = shares(pop_end)
    return {ed: 100.0 * (end[ed] - start[ed]) for ed in sorted(geo.eds)}


def _fmt(value: float) -> str:
    return "NA" if isinstance(value, float) and math.isnan(value) else repr(value)


def write_ed_metrics(path, pop_start: Population, pop_end: Population,
                     geo: Geography) -> None:
    sizes = ed_relative_sizes(pop_start, pop_end, geo)
    imm = recent_immigrant_shares(pop_end, geo)
    deltas = adult_student_share_delta(pop_start, pop_end, geo)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("ed_id", "relative_size", "recent_immigrant_share",
                         "adult_student_share_delta_pp"))
        for ed in sorted(geo.eds):
            writer.writerow((ed, _fmt(sizes[ed]), _fmt(imm.per_ed[ed]),
                             _fmt(deltas[ed])))


def write_education_shares(path, pop_start: Population, pop_end: Population) -> None:
    start = education_shares(pop_start)
    end = education_shares(pop_end)
    levels = sorted(set(start) | set(end), key=education_ordinal)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("level", "share_start", "share_end"))
        for lvl in levels:
            writer.writerow((lvl.value, repr(start.get(lvl, 0.0)),
                             repr(end.get(lvl, 0.0))))


def write_national_metrics(path, pop_start: Population, pop_end: Population,
                           geo: Geography) -> None:
    imm = recent_immigrant_shares(pop_end, geo)
    rows = []
    for label, pop in (("start", pop_start), ("end", pop_end)):
        ydr, odr = dependency_ratios(pop)
        rate_lf, share_pop = unemployment(pop)
        shares = education_shares(pop)
        rows += [
            (label, "population", len(pop)),
            (label, "ydr", ydr),
            (label, "odr", odr),
            (label, "unemployment_rate_labour_force", _fmt(rate_lf)),
            (label, "unemployment_share_population", share_pop),
            (label, "third_level_share", third_level_share(shares)),
        ]
    rows += [
        ("end", "recent_immigrant_share", imm.national_immigrants_only),
        ("end", "recent_immigrant_share_with_children", imm.national_with_children),
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("population", "metric", "value"))
        writer.writerows(rows)
