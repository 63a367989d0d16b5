"""Annual demographic events: mortality, ageing, migration, fertility and
nuptiality.

All collective sampling draws from per-(year, module) streams; per-person
survival draws use the keyed uniform hash so they are independent of
iteration order and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .apportion import largest_remainder, round_half_up
from .core import (
    AGE_GROUPS,
    FERTILITY_MARITAL_SPLIT_AGE,
    MARITAL_BAND_ALL,
    MARITAL_BAND_MAR,
    MARITAL_BAND_NOT_MAR,
    MAX_AGE,
    OUTSIDER,
    EconStatus,
    EducationLevel,
    Individual,
    MaritalStatus,
    Population,
    Sex,
    age_group,
    age_group_range,
    fertility_age_group,
)
from .genesis import match_partner
from .rates import RateTables, migration_targets, tfr_factor
from .socioecon import adult_education_counts, assign_lifetime_target
from .streams import YearStreams


@dataclass
class YearEventCounts:
    """Event accounting for one simulated year.

    ``marriages`` counts marriage events (couples formed), matching the
    crude-rate convention; ``separations`` counts persons separated.
    """

    deaths: int = 0
    births: int = 0
    internal_moves: int = 0
    intl_immigrants: int = 0
    intl_emigrants: int = 0
    marriages: int = 0
    separations: int = 0


def remove_with_cleanup(pop: Population, pid: int, emigrating: bool) -> Individual:
    """Remove a person and erase every reference to them.

    A surviving resident spouse is widowed on death; on emigration they stay
    married to an Outsider.
    """
    ind = pop.get(pid)
    for cid in list(ind.children):
        child = pop.individuals.get(cid)
        if child is not None:
            if child.mother_id == pid:
                child.mother_id = None
            if child.father_id == pid:
                child.father_id = None
    for parent_id in (ind.mother_id, ind.father_id):
        if parent_id is not None:
            parent = pop.individuals.get(parent_id)
            if parent is not None:
                parent.children.discard(pid)
    if isinstance(ind.spouse, int):
        partner = pop.individuals.get(ind.spouse)
        if partner is not None and partner.spouse == pid:
            if emigrating:
                partner.spouse = OUTSIDER
            else:
                partner.spouse = None
                partner.marital_status = MaritalStatus.WID
    return pop.remove(pid)


# ---------------------------------------------------------------------------
# Mortality and ageing
# ---------------------------------------------------------------------------

def apply_mortality(pop: Population, tables: RateTables, year: int,
                    streams: YearStreams, log=None) -> int:
    """Kill each person with their improved (age, sex, year) probability."""
    n = len(pop)
    if n == 0:
        return 0
    ids = np.fromiter(pop.individuals.keys(), np.int64, n)
    ages = np.fromiter((i.age for i in pop.people()), np.int32, n)
    sexrow = np.fromiter((0 if i.sex == Sex.F else 1 for i in pop.people()), np.int8, n)
    q = tables.mortality.rate_matrix(year)[sexrow, ages]
    u = streams.uniforms("mortality", ids)
    dead = ids[u < q]
    for pid in dead:
        ind = pop.get(int(pid))
        if log is not None:
            log.add(year, "death", int(pid), ind.ed_id, "", f"age={ind.age}")
        remove_with_cleanup(pop, int(pid), emigrating=False)
    return len(dead)


def age_population(pop: Population) -> None:
    """Advance every survivor one year, capped at the maximum age."""
    for ind in pop.people():
        if ind.age < MAX_AGE:
            ind.age += 1


# ---------------------------------------------------------------------------
# Internal migration
# ---------------------------------------------------------------------------

def _bracket_weights(pop: Population, ids: list[int], dists, context: str) -> np.ndarray:
    """Per-person weights giving each (sex, age group) its configured share."""
    from .core import AGE_GROUP_BY_AGE

    registry = pop.individuals
    dist = dists._dists[context]
    brackets = []
    counts: dict[tuple[str, str], int] = {}
    for pid in ids:
        ind = registry[pid]
        key = (ind.sex.value, AGE_GROUP_BY_AGE[ind.age])
        brackets.append(key)
        counts[key] = counts.get(key, 0) + 1
    return np.array([dist.get(key, 0.0) / counts[key] for key in brackets])


def _sample_distinct(rng, ids: list[int], weights: np.ndarray, k: int) -> list[int]:
    """k distinct ids, weight-proportional, uniform among the rest if the
    positive-weight pool runs short."""
    k = min(k, len(ids))
    if k <= 0:
        return []
    total = weights.sum()
    chosen: list[int] = []
    if total > 0:
        take = min(k, int((weights > 0).sum()))
        picked = rng.choice(len(ids), size=take, replace=False, p=weights / total)
        chosen = [ids[int(i)] for i in picked]
    if len(chosen) < k:
        left = [pid for pid in ids if pid not in set(chosen)]
        extra = rng.choice(len(left), size=k - len(chosen), replace=False)
        chosen.extend(left[int(i)] for i in extra)
    return chosen


def _pick_origin_eds(rng, sizes: np.ndarray, n: int) -> np.ndarray:
    """Multinomial draw over origin EDs by population share, capped at each
    ED's head count."""
    counts = rng.multinomial(n, sizes / sizes.sum())
    while True:
        excess = counts - sizes
        over = excess > 0
        if not over.any():
            return counts
        spill = int(excess[over].sum())
        counts[over] = sizes[over]
        room = sizes - counts
        counts += rng.multinomial(spill, room / room.sum())


def apply_internal_migration(pop: Population, tables: RateTables, year: int,
                             streams: YearStreams, log=None) -> int:
    """Move the configured county-to-county flows, one person at a time.

    Origin EDs are drawn by their share of the county head count, movers by
    the context age/sex mix, and destination EDs uniformly among those still
    under their yearly intake capacity.
    """
    geo = tables.geography
    flows = tables.internal_flow_table()
    dists = tables.migration_dists
    rng = streams.module("internal_migration")
    intake: dict[tuple[str, str], int] = {}
    moves = 0

    for origin in geo.counties:
        for context in ("intra", "inter"):
            if context == "intra":
                dest_counts = {origin: flows.intra.get(origin, 0)}
            else:
                dest_counts = flows.outflows_from(origin)
            total_out = sum(dest_counts.values())
            if total_out == 0:
                continue

            eds = geo.eds_by_county[origin]
            sizes = np.array([len(pop.ed_index.get(ed, ())) for ed in eds])
            available = int(sizes.sum())
            n = min(total_out, available)
            if n < total_out and log is not None:
                log.add(year, "flow_clipped", -1, origin, "",
                        f"context={context};wanted={total_out};moved={n}")
            if n == 0:
                continue

            movers: list[int] = []
            ed_counts = _pick_origin_eds(rng, sizes, n)
            for ed, k in zip(eds, ed_counts):
                if k == 0:
                    continue
                ids = pop.residents(ed)
                weights = _bracket_weights(pop, ids, dists, context)
                movers.extend(_sample_distinct(rng, ids, weights, int(k)))

            order = rng.permutation(len(movers))
            movers = [movers[int(i)] for i in order]
            dests = sorted(dest_counts)
            alloc = largest_remainder([dest_counts[d] for d in dests], len(movers))
            cursor = 0
            for dest, quota in zip(dests, alloc):
                for pid in movers[cursor:cursor + quota]:
                    ed_from = pop.get(pid).ed_id
                    ed_to = _pick_destination(geo, dest, context, intake, rng)
                    pop.move(pid, ed_to)
                    intake[(ed_to, context)] = intake.get((ed_to, context), 0) + 1
                    moves += 1
                    if log is not None:
                        log.add(year, "internal_move", pid, ed_from, ed_to, context)
                cursor += quota
    return moves


def _pick_destination(geo, county: str, context: str,
                      intake: dict, rng) -> str:
    eds = geo.eds_by_county[county]
    caps = [
        geo.eds[ed].intra_county_immigrant_capacity if context == "intra"
        else geo.eds[ed].inter_county_immigrant_capacity
        for ed in eds
    ]
    free = [ed for ed, cap in zip(eds, caps) if intake.get((ed, context), 0) < cap]
    if free:
        return free[int(rng.integers(len(free)))]
    total = sum(caps)
    if total > 0:
        probs = np.array(caps, dtype=float) / total
        return eds[int(rng.choice(len(eds), p=probs))]
    return eds[int(rng.integers(len(eds)))]


# ---------------------------------------------------------------------------
# International migration
# ---------------------------------------------------------------------------

def apply_international_emigration(pop: Population, tables: RateTables, year: int,
                                   streams: YearStreams, log=None) -> int:
    """Remove this year's emigrants: regional counts by the observed shares,
    then (sex, age group) quotas within each region."""
    scenario = tables.scenario
    targets = migration_targets(scenario, year)
    total = round_half_up(targets.emigrants * scenario.intl_scale)
    if total <= 0:
        return 0
    geo = tables.geography
    rng = streams.module("intl_emigration")
    region_totals = largest_remainder(
        [tables.region_emigrant_shares[r] for r in geo.regions], total)
    brackets = tables.migration_dists.brackets("intl_out")
    removed = 0

    region_pools: dict[str, dict[tuple[str, str], list[int]]] = {
        r: {} for r in geo.regions
    }
    region_of_ed = geo.region_of_ed
    for ind in pop.people():
        region_pools[region_of_ed[ind.ed_id]].setdefault(
            (ind.sex.value, age_group(ind.age)), []).append(ind.id)

    for region, n_region in zip(geo.regions, region_totals):
        if n_region == 0:
            continue
        pools = region_pools[region]

        quotas = largest_remainder([p for _, p in brackets], n_region)
        pending = {key: q for (key, _), q in zip(brackets, quotas) if q > 0}
        chosen: list[int] = []
        while pending:
            shortfall = 0
            for key in list(pending):
                quota = pending.pop(key)
                pool = pools.get(key, [])
                take = min(quota, len(pool))
                if take:
                    picked = rng.choice(len(pool), size=take, replace=False)
                    for i in sorted((int(x) for x in picked), reverse=True):
                        chosen.append(pool.pop(i))
                shortfall += quota - take
            if shortfall == 0:
                break
            # Re-spread unfilled quota over brackets that still have people.
            open_brackets = [(key, p) for key, p in brackets if pools.get(key)]
            capacity = sum(len(pools[key]) for key, _ in open_brackets)
            if capacity == 0:
                if log is not None:
                    log.add(year, "emigration_shortfall", -1, region, "",
                            str(shortfall))
                break
            shortfall = min(shortfall, capacity)
            requotas = largest_remainder([p for _, p in open_brackets], shortfall)
            pending = {
                key: min(q, len(pools[key]))
                for (key, _), q in zip(open_brackets, requotas) if q > 0
            }

        for pid in sorted(chosen):
            ind = pop.get(pid)
            if log is not None:
                log.add(year, "emigration", pid, ind.ed_id, "",
                        f"{ind.sex.value}|{age_group(ind.age)}")
            remove_with_cleanup(pop, pid, emigrating=True)
            removed += 1
    return removed


_DONOR_FIELDS = ("marital_status", "education_attained", "econ_status",
                 "prospective_education", "graduation_year")


def apply_international_immigration(pop: Population, tables: RateTables, year: int,
                                    streams: YearStreams, log=None) -> int:
    """Create this year's immigrants.

    Sex and age group follow the immigrant mix (single age uniform in the
    group); the socioeconomic attributes are copied from a randomly drawn
    resident of the same (age group, sex); destination EDs follow the
    configured intake weights.
    """
    scenario = tables.scenario
    targets = migration_targets(scenario, year)
    total = round_half_up(targets.immigrants * scenario.intl_scale)
    if total <= 0:
        return 0
    geo = tables.geography
    rng = streams.module("intl_immigration")

    donor_pools: dict[tuple[str, str], list[int]] = {}
    for ind in pop.people():
        donor_pools.setdefault((ind.sex.value, age_group(ind.age)), []).append(ind.id)

    ed_ids = sorted(geo.eds)
    weights = np.array([geo.eds[e].intl_immigrant_weight for e in ed_ids])
    ed_picks = rng.choice(len(ed_ids), size=total, p=weights)

    brackets = tables.migration_dists.brackets("intl_in")
    quotas = largest_remainder([p for _, p in brackets], total)
    added = 0
    for ((sex_code, group), _), quota in zip(brackets, quotas):
        lo, hi = age_group_range(group)
        for _ in range(quota):
            age = int(rng.integers(lo, hi + 1))
            donor = _pick_donor(pop, donor_pools, sex_code, group, rng, log, year)
            newcomer = _make_immigrant(pop, Sex(sex_code), age, donor, year)
            newcomer.ed_id = ed_ids[int(ed_picks[added])]
            pop.add(newcomer)
            added += 1
            if log is not None:
                log.add(year, "immigration", newcomer.id, "", newcomer.ed_id,
                        f"{sex_code}|{group}")
    return added


def _pick_donor(pop, donor_pools, sex_code: str, group: str, rng, log, year):
    pool = donor_pools.get((sex_code, group))
    if not pool:
        gi = AGE_GROUPS.index(group)
        for dist in range(1, len(AGE_GROUPS)):
            for gj in (gi - dist, gi + dist):
                if 0 <= gj < len(AGE_GROUPS):
                    pool = donor_pools.get((sex_code, AGE_GROUPS[gj]))
                    if pool:
                        if log is not None:
                            log.add(year, "donor_fallback", -1, "", "",
                                    f"{sex_code}|{group}->{AGE_GROUPS[gj]}")
                        break
            if pool:
                break
    if not pool:
        return None
    return pop.get(pool[int(rng.integers(len(pool)))])


def _make_immigrant(pop: Population, sex: Sex, age: int, donor, year: int) -> Individual:
    newcomer = Individual(
        id=pop.new_id(), age=age, sex=sex,
        marital_status=MaritalStatus.SGL,
        education_attained=EducationLevel.NA if age <= 4 else EducationLevel.US,
        econ_status=EconStatus.NA if age < 16 else EconStatus.OTH,
        ed_id="", immigrated_year=year,
    )
    if donor is not None:
        for field_name in _DONOR_FIELDS:
            setattr(newcomer, field_name, getattr(donor, field_name))
        # Links are never copied; a married arrival's spouse lives abroad.
        newcomer.spouse = OUTSIDER if donor.marital_status == MaritalStatus.MAR else None
    return newcomer


# ---------------------------------------------------------------------------
# Fertility
# ---------------------------------------------------------------------------

def _marital_band(ind: Individual) -> str:
    if ind.age < FERTILITY_MARITAL_SPLIT_AGE:
        return MARITAL_BAND_ALL
    return MARITAL_BAND_MAR if ind.marital_status == MaritalStatus.MAR else MARITAL_BAND_NOT_MAR


def apply_fertility(pop: Population, tables: RateTables, year: int,
                    streams: YearStreams, log=None, edu_log=None) -> int:
    """Draw births per (region, age group, marital band) and create newborns.

    Mothers are sampled with replacement, so multiple births happen; each
    newborn immediately receives a lifetime education target.
    """
    geo = tables.geography
    rng = streams.module("fertility")
    factor = tfr_factor(tables.scenario, year)
    adult_counts = adult_education_counts(pop)

    brackets: dict[tuple[str, str, str], list[int]] = {}
    region_of_ed = geo.region_of_ed
    for ind in pop.people():
        if ind.sex != Sex.F:
            continue
        group = fertility_age_group(ind.age)
        if group is None:
            continue
        key = (region_of_ed[ind.ed_id], group, _marital_band(ind))
        brackets.setdefault(key, []).append(ind.id)

    births = 0
    for key in sorted(brackets):
        women = brackets[key]
        expected = tables.fertility.rate(*key) * factor * len(women)
        if expected <= 0:
            continue
        count = int(rng.poisson(expected))
        if count == 0:
            continue
        mothers = rng.choice(women, size=count, replace=True)
        for mid in mothers:
            mother = pop.get(int(mid))
            father = None
            if mother.marital_status == MaritalStatus.MAR and isinstance(mother.spouse, int):
                father = pop.get(mother.spouse)
            newborn = Individual(
                id=pop.new_id(), age=0,
                sex=Sex.M if rng.random() < 0.5 else Sex.F,
                marital_status=MaritalStatus.SGL,
                education_attained=EducationLevel.NA,
                econ_status=EconStatus.NA,
                ed_id=mother.ed_id,
                mother_id=mother.id,
                father_id=father.id if father is not None else None,
            )
            parents_levels = [mother.education_attained]
            if father is not None:
                parents_levels.append(father.education_attained)
            newborn.lifetime_education_target = assign_lifetime_target(
                newborn, parents_levels, adult_counts, tables, rng, edu_log, year)
            newborn.recent_immigrant_child = (
                mother.immigrated_year is not None
                or (father is not None and father.immigrated_year is not None)
            )
            pop.add(newborn)
            mother.children.add(newborn.id)
            if father is not None:
                father.children.add(newborn.id)
            births += 1
            if log is not None:
                log.add(year, "birth", newborn.id, "", newborn.ed_id,
                        f"mother={mother.id}")
    return births


# ---------------------------------------------------------------------------
# Separations and marriages
# ---------------------------------------------------------------------------

def apply_separations(pop: Population, tables: RateTables, year: int,
                      streams: YearStreams, log=None) -> int:
    """Split couples uniformly until the separation-rate target is reached.

    Resident couples count two persons toward the target, Outsider-married
    individuals one.
    """
    rate = tables.nuptiality.separation_rate
    married = [ind for ind in pop.people() if ind.marital_status == MaritalStatus.MAR]
    target = round_half_up(rate * len(married))
    if target == 0:
        return 0
    units: list[tuple[int, ...]] = []
    seen: set[int] = set()
    for ind in married:
        if isinstance(ind.spouse, int):
            if ind.id not in seen:
                seen.add(ind.id)
                seen.add(ind.spouse)
                units.append((ind.id, ind.spouse))
        elif ind.spouse == OUTSIDER:
            units.append((ind.id,))
    rng = streams.module("separations")
    separated = 0
    for idx in rng.permutation(len(units)):
        if separated >= target:
            break
        for pid in units[int(idx)]:
            ind = pop.get(pid)
            ind.marital_status = MaritalStatus.SEP
            ind.spouse = None
            separated += 1
            if log is not None:
                log.add(year, "separation", pid, ind.ed_id, "", "")
    return separated


def apply_marriages(pop: Population, tables: RateTables, year: int,
                    streams: YearStreams, log=None) -> int:
    """Form this year's marriages within each region; returns couples formed.

    Candidates are any non-married residents, drawn by the bride/groom
    age-sex mixes (separate mixes for same-sex couples), and paired by the
    dissimilarity matcher.
    """
    nup = tables.nuptiality
    geo = tables.geography
    couples_target = nup.target_couples(len(pop))
    if couples_target == 0:
        return 0
    rng = streams.module("marriages")

    region_pop: dict[str, int] = {r: 0 for r in geo.regions}
    candidates: dict[str, dict[Sex, list[Individual]]] = {
        r: {Sex.F: [], Sex.M: []} for r in geo.regions
    }
    region_of_ed = geo.region_of_ed
    for ind in pop.people():
        region = region_of_ed[ind.ed_id]
        region_pop[region] += 1
        if ind.marital_status != MaritalStatus.MAR and ind.age >= 16:
            candidates[region][ind.sex].append(ind)

    quotas = largest_remainder([region_pop[r] for r in geo.regions], couples_target)
    couples = 0
    for region, n_couples in zip(geo.regions, quotas):
        if n_couples == 0:
            continue
        n_same = int(rng.binomial(n_couples, nup.same_sex_share))
        n_mm = int(rng.binomial(n_same, 0.5))
        n_ff = n_same - n_mm
        n_opp = n_couples - n_same
        used: set[int] = set()

        def draw(count: int, sex: Sex, mtype: str) -> list[Individual]:
            pool = [c for c in candidates[region][sex] if c.id not in used]
            if count <= 0 or not pool:
                return []
            weights = np.array([
                nup.candidate_weight(mtype, sex, age_group(c.age)) for c in pool
            ])
            positive = int((weights > 0).sum())
            take = min(count, positive)
            if take == 0:
                return []
            picked = rng.choice(len(pool), size=take, replace=False,
                                p=weights / weights.sum())
            chosen = [pool[int(i)] for i in picked]
            used.update(c.id for c in chosen)
            return chosen

        formed = 0
        grooms = draw(n_opp, Sex.M, "opposite")
        brides = draw(n_opp, Sex.F, "opposite")
        pairs = min(len(grooms), len(brides))
        brides_left = list(brides)
        for groom in grooms[:pairs]:
            partner_id = match_partner(groom, brides_left, rng)
            bride = pop.get(partner_id)
            brides_left = [b for b in brides_left if b.id != partner_id]
            _wed(groom, bride)
            formed += 1
            couples += 1
            if log is not None:
                log.add(year, "marriage", groom.id, groom.ed_id, "",
                        f"spouse={bride.id};type=opposite")
                log.add(year, "marriage", bride.id, bride.ed_id, "",
                        f"spouse={groom.id};type=opposite")

        for count, sex, mtype in ((n_mm, Sex.M, "same_sex_male"),
                                  (n_ff, Sex.F, "same_sex_female")):
            group_pool = draw(2 * count, sex, mtype)
            while len(group_pool) >= 2:
                focal = group_pool.pop(0)
                partner_id = match_partner(focal, group_pool, rng)
                partner = pop.get(partner_id)
                group_pool = [c for c in group_pool if c.id != partner_id]
                _wed(focal, partner)
                formed += 1
                couples += 1
                if log is not None:
                    log.add(year, "marriage", focal.id, focal.ed_id, "",
                            f"spouse={partner.id};type={mtype}")
                    log.add(year, "marriage", partner.id, partner.ed_id, "",
                            f"spouse={focal.id};type={mtype}")

        if formed < n_couples and log is not None:
            log.add(year, "marriage_shortfall", -1, region, "",
                    str(n_couples - formed))
    return couples


def _wed(a: Individual, b: Individual) -> None:
    a.marital_status = MaritalStatus.MAR
    b.marital_status = MaritalStatus.MAR
    a.spouse = b.id
    b.spouse = a.id
