"""Command-line interface.

Subcommands: gen-synth, init, run, dcm, validate, report. Exit codes:
0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from . import dcm as dcm_mod
from . import engine, genesis, metrics
from .popio import (
    PopulationIOError,
    is_initialised,
    read_population,
    write_population,
)
from .rates import (
    RatesError,
    ScenarioConfig,
    gen_synthetic_geography,
    gen_synthetic_rates,
    load_rates,
    write_rates,
)

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _add_common(parser):
    parser.add_argument("--rates", required=True, help="rates bundle directory")
    parser.add_argument("--scenario", choices=("M1", "M2", "M3"),
                        help="international migration scenario override")
    parser.add_argument("--internal", type=int, choices=(2016, 2022),
                        help="internal flow table year override")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--years", type=int, help="horizon override")


def build_parser() -> _Parser:
    parser = _Parser(prog="micropop",
                     description="Deterministic population microsimulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic rates bundle and base population")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=20_000)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("init", help="initialise a base population (spouses, education)")
    _add_common(p)
    p.add_argument("--base", required=True, help="base population CSV")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="run the microsimulation")
    _add_common(p)
    p.add_argument("--base", required=True, help="base or initialised population CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--snapshots", choices=("none", "yearly"), default="none")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("dcm", help="run the cohort-component projection")
    _add_common(p)
    p.add_argument("--base", required=True, help="initialised population CSV")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("validate", help="compare a run against the DCM projection")
    p.add_argument("--out", required=True,
                   help="directory holding micro_cohorts.csv and dcm_projection.csv")
    p.add_argument("--scenario", choices=("M1", "M2", "M3"), default=None)

    p = sub.add_parser("report", help="compute result metrics from two snapshots")
    p.add_argument("--rates", required=True)
    p.add_argument("--start", required=True, help="starting population CSV")
    p.add_argument("--end", required=True, help="final population CSV")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _load_tables(args):
    tables = load_rates(args.rates)
    overrides = {}
    if getattr(args, "scenario", None):
        overrides["intl_scenario"] = args.scenario
    if getattr(args, "internal", None):
        overrides["internal_flow_year"] = args.internal
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "years", None) is not None:
        overrides["horizon_years"] = args.years
    if overrides:
        tables.scenario = dataclasses.replace(tables.scenario, **overrides)
        tables.internal_flow_table()  # fail fast on a missing flow year
    return tables


def _cmd_gen_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    geography = gen_synthetic_geography(args.seed, total_population=args.size)
    tables = gen_synthetic_rates(args.seed, geography)
    write_rates(tables, out)
    pop = genesis.gen_synthetic_base(args.seed, geography, args.size)
    write_population(out / "base_population.csv", pop, schema="base")
    print(f"wrote synthetic bundle for {len(pop)} people to {out}")
    return 0


def _cmd_init(args) -> int:
    tables = _load_tables(args)
    pop = read_population(args.base, tables.geography)
    genesis.initialise(pop, tables)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_population(out / "initialised_population.csv", pop, schema="initialised")
    print(f"initialised {len(pop)} people -> {out / 'initialised_population.csv'}")
    return 0


def _write_summary(path, reports) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("year", "pop_start", "pop_end", "deaths", "births",
                         "internal_moves", "intl_immigrants", "intl_emigrants",
                         "marriages", "separations"))
        for r in reports:
            c = r.counts
            writer.writerow((r.year, r.pop_start, r.pop_end, c.deaths, c.births,
                             c.internal_moves, c.intl_immigrants, c.intl_emigrants,
                             c.marriages, c.separations))


def _cmd_run(args) -> int:
    tables = _load_tables(args)
    pop = read_population(args.base, tables.geography)
    if not is_initialised(Path(args.base)):
        genesis.initialise(pop, tables)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    snapshot_dir = None
    if args.snapshots == "yearly":
        snapshot_dir = out / "snapshots"
        snapshot_dir.mkdir(exist_ok=True)
    write_population(out / "initial_population.csv", pop)

    state = engine.new_state(tables, pop)
    years = args.years if args.years is not None else tables.scenario.horizon_years
    result = engine.run(state, years, workers=args.workers,
                        snapshot_dir=snapshot_dir)

    _write_summary(out / "summary.csv", result.reports)
    result.event_log.write(out / "event_log.csv")
    result.edu_log.write(out / "education_log.csv")
    write_population(out / "final_population.csv", result.population)
    dcm_mod.write_dcm_csv(out / "micro_cohorts.csv", result.ledgers)
    with (out / "run_log.txt").open("w") as fh:
        for year, module in result.run_log:
            fh.write(f"{year} {module}\n")

    violations = result.violations
    if violations:
        print(f"run finished with {len(violations)} invariant violations",
              file=sys.stderr)
        for v in violations[:20]:
            print(f"  {v}", file=sys.stderr)
        return DATA_EXIT
    print(f"ran {years} years: population {result.reports[-1].pop_end}, "
          f"outputs in {out}")
    return 0


def _cmd_dcm(args) -> int:
    tables = _load_tables(args)
    pop = read_population(args.base, tables.geography)
    if not is_initialised(Path(args.base)):
        genesis.initialise(pop, tables)
    years = args.years if args.years is not None else tables.scenario.horizon_years
    ledger = dcm_mod.ledger_from_population(pop)
    fert = dcm_mod.effective_fertility_by_age(pop, tables)
    ledgers = dcm_mod.project_dcm(ledger, tables, years, fert)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dcm_mod.write_dcm_csv(out / "dcm_projection.csv", ledgers)
    print(f"projected {years} years -> {out / 'dcm_projection.csv'}")
    return 0


def _cmd_validate(args) -> int:
    out = Path(args.out)
    micro_path = out / "micro_cohorts.csv"
    dcm_path = out / "dcm_projection.csv"
    for path in (micro_path, dcm_path):
        if not path.is_file():
            raise PopulationIOError(f"missing {path}; run `run` and `dcm` first")
    scenario = args.scenario or "M1"
    report = dcm_mod.compare(
        dcm_mod.CohortSeries(scenario, dcm_mod.read_cohort_csv(micro_path)),
        dcm_mod.CohortSeries(scenario, dcm_mod.read_cohort_csv(dcm_path)),
    )
    report.write_csv(out / "validation_report.csv")
    table = dcm_mod.format_table2(report)
    (out / "table2_style.txt").write_text(table)
    print(table, end="")
    return 0


def _cmd_report(args) -> int:
    tables = load_rates(args.rates)
    start = read_population(args.start, tables.geography)
    end = read_population(args.end, tables.geography)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_ed_metrics(out / "ed_metrics.csv", start, end, tables.geography)
    metrics.write_education_shares(out / "education_shares.csv", start, end)
    metrics.write_national_metrics(out / "national_metrics.csv", start, end,
                                   tables.geography)
    print(f"wrote metrics to {out}")
    return 0


_COMMANDS = {
    "gen-synth": _cmd_gen_synth,
    "init": _cmd_init,
    "run": _cmd_run,
    "dcm": _cmd_dcm,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except (RatesError, PopulationIOError, dcm_mod.ComparisonError,
            metrics.MetricsError, engine.CheckpointError) as exc:
        print(f"micropop: data error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
