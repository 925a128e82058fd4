"""Turn-based games averaged by rate-indexed densities: value enclosures,
limit-coincidence checks, strategy-family axioms, and rate schedules."""

from .densities import (
    BUILTIN_FAMILIES,
    CesaroDensity,
    Density,
    DensityFamily,
    ExponentialDensity,
    GeneratedDensity,
    PatchedDensity,
    ShiftedDensity,
    TabulatedDensity,
    cesaro_family,
    default_lambda_grid,
    default_mu_grid,
    escape_diagnostic,
    exponential_family,
    flatness_diagnostic,
    l1_distance,
    load_family,
    regularity_diagnostic,
    self_similar_decompose,
)
from .errors import (
    CapExceededError,
    ConcatenationError,
    DomainError,
    HorizonOverflowError,
    InfeasibleScheduleError,
    ModelFormatError,
    TauberGamesError,
    UnreachableQuantileError,
    UnsupportedFamilyError,
)
from .games import (
    GameModel,
    Process,
    StrategyFamily,
    bundled_models,
    check_axioms,
    concatenate_process,
    load_model,
    payoff,
    policy_family,
    random_model,
    reflect_cost,
)
from .reports import PACKAGE_VERSION, line_chart, write_csv
from .tauberian import (
    abel_check,
    build_geometric_schedule,
    build_partition_schedule,
    equivalence_matrix,
    hardy_single_trajectory,
    schedule_bound_check,
    tauber_check,
    uniform_limit_estimate,
    verify_descent_chain,
)
from .values import (
    ValueTable,
    backward_induct,
    dp_value,
    hybrid_value,
    lower_upper_bruteforce,
    saddle_gap,
)

__version__ = PACKAGE_VERSION

__all__ = [name for name in dir() if not name.startswith("_")]
