"""Parameter identification with a hybrid genetic algorithm + Levenberg-Marquardt solver.

The package covers the weighted multi-test least-squares cost, a real-coded
GA, a normalized box-constrained LM refiner, and the statistical strategy
(uniform scan, domain reduction, ensemble topology analysis) used when the
data cannot discriminate a unique parameter set.
"""
from .errors import (
    ConfigError,
    DataError,
    DegenerateWeightError,
    DimensionError,
    IdentificationError,
    SolverError,
)
from .ga import GaConfig, GaTrace, Individual, run_ga
from .lm import LmConfig, fd_jacobian, normalized_step, run_lm
from .model import (
    CreepModel,
    ExperimentSet,
    ForwardModel,
    FrozenModel,
    MeasurementSeries,
    ParameterSpace,
    SloppyModel,
    TestDefinition,
    clamp_to_bounds,
    get_model,
)
from .objective import Objective, adaptive_fitness, cost_multi, cost_single, residual, sensor_weight
from .strategy import (
    EnsembleReport,
    ScanConfig,
    Stage,
    StrategyConfig,
    Verdict,
    classify_distribution,
    ensemble_analyze,
    reduce_domain,
    run_hybrid,
    run_stages,
    strategy_loop,
    uniform_scan,
)

__version__ = "0.1.0"
