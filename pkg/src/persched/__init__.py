"""Joint design of periodic estimator gains and sparse sensor schedules.

For a discrete-time plant observed by M sensors, this package designs a
K-periodic sequence of estimator gains together with a sensor activation
schedule that respects per-sensor frequency bounds, trading average
estimation error against how often sensors are used. The solver alternates
a smooth gain subproblem with a closed-form sparsification step through an
augmented-Lagrangian splitting; exhaustive and random-schedule references
plus a diffusion-field benchmark are included for validation.
"""

from .admm import (
    AdmmConfig,
    AdmmDriver,
    AdmmState,
    IterationRecord,
    SolveReport,
    SweepCell,
    default_init_schedule,
    run,
    sweep,
)
from .baselines import (
    BaselineResult,
    OracleResult,
    exhaustive_search,
    random_baseline,
)
from .config import ExperimentConfig, load_experiment
from .exceptions import (
    BudgetError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    InitializationError,
    InputError,
    InstabilityError,
    LineSearchError,
    PerschedError,
)
from .gstep import ColumnStack, GStepProblem, g_objective, g_step, select_by_gamma, solve_equality_constrained
from .linalg import (
    matrix_exponential,
    solve_dare,
    solve_dlyap,
    solve_gain_sylvester,
    spectral_radius,
)
from .lstep import (
    LStepProblem,
    LStepResult,
    anderson_moore_update,
    armijo_step,
    gradient_phi,
    phi_value,
)
from .lstep import solve as solve_lstep
from .model import (
    AssumptionReport,
    FieldGeometry,
    SystemModel,
    benchmark_geometry,
    benchmark_system,
    build_diffusion_system,
    build_laplacian,
    validate_assumptions,
)
from .periodic import (
    CovarianceCycle,
    PeriodicGains,
    Schedule,
    ScheduleEvaluation,
    covariance_limit_cycle,
    evaluate_schedule,
    init_gains_for_schedule,
    lift_cyclic,
    monodromy_stable,
    objective_J,
    schedule_from_gains,
    value_cycle,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "AdmmDriver",
    "AdmmState",
    "AssumptionReport",
    "BaselineResult",
    "BudgetError",
    "ColumnStack",
    "ConfigError",
    "ConvergenceError",
    "CovarianceCycle",
    "DimensionError",
    "ExperimentConfig",
    "FieldGeometry",
    "GStepProblem",
    "InitializationError",
    "InputError",
    "InstabilityError",
    "IterationRecord",
    "LStepProblem",
    "LStepResult",
    "LineSearchError",
    "OracleResult",
    "PerschedError",
    "PeriodicGains",
    "Schedule",
    "ScheduleEvaluation",
    "SolveReport",
    "SweepCell",
    "SystemModel",
    "anderson_moore_update",
    "armijo_step",
    "benchmark_geometry",
    "benchmark_system",
    "build_diffusion_system",
    "build_laplacian",
    "covariance_limit_cycle",
    "default_init_schedule",
    "evaluate_schedule",
    "exhaustive_search",
    "g_objective",
    "g_step",
    "gradient_phi",
    "init_gains_for_schedule",
    "lift_cyclic",
    "load_experiment",
    "matrix_exponential",
    "monodromy_stable",
    "objective_J",
    "phi_value",
    "random_baseline",
    "run",
    "schedule_from_gains",
    "select_by_gamma",
    "solve_dare",
    "solve_dlyap",
    "solve_equality_constrained",
    "solve_gain_sylvester",
    "solve_lstep",
    "spectral_radius",
    "sweep",
    "validate_assumptions",
]
