"""micropop: deterministic discrete-time population microsimulation.

The package projects an individual-level population through annual cycles of
mortality, migration, fertility, nuptiality, education and employment
events, and ships a cohort-component oracle for macro validation.
"""

from .core import (
    OUTSIDER,
    EconStatus,
    EducationLevel,
    Geography,
    Individual,
    MaritalStatus,
    Population,
    Sex,
    education_ordinal,
    validate,
)
from .engine import (
    SimState,
    SimulationResult,
    YearReport,
    checkpoint,
    new_state,
    restore,
    rng_stream,
    run,
    run_year,
)
from .rates import (
    RateTables,
    RatesError,
    ScenarioConfig,
    gen_synthetic_geography,
    gen_synthetic_rates,
    load_rates,
    migration_targets,
    mortality_rate,
    tfr_factor,
    write_rates,
)
from .genesis import gen_synthetic_base, initialise, match_partner

__version__ = "0.1.0"

__all__ = [
    "OUTSIDER", "EconStatus", "EducationLevel", "Geography", "Individual",
    "MaritalStatus", "Population", "Sex", "education_ordinal", "validate",
    "SimState", "SimulationResult", "YearReport", "checkpoint", "new_state",
    "restore", "rng_stream", "run", "run_year",
    "RateTables", "RatesError", "ScenarioConfig", "gen_synthetic_geography",
    "gen_synthetic_rates", "load_rates", "migration_targets", "mortality_rate",
    "tfr_factor", "write_rates",
    "gen_synthetic_base", "initialise", "match_partner",
    "__version__",
]
