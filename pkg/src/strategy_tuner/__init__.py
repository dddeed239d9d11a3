"""Adaptive tuner for black-box static analyzer abstraction parameters.

Models each analyzer parameter as a Dirac base point plus a stochastic
exploration delta over a latticed value space, then iterates
sample-analyze-refine rounds under a time budget: bases absorb the least
precise settings observed to eliminate alarms, deltas scale with the
completion rate.
"""

from .analyzers import (
    AnalysisOutcome,
    AnalysisTask,
    Analyzer,
    Completed,
    CostModel,
    Crashed,
    SyntheticAlarm,
    SyntheticAnalyzer,
    SyntheticProfile,
    TimedOut,
    Twist,
    parse_profile,
    synthetic_oracle_least_config,
)
from .distributions import (
    Bernoulli,
    BernoulliVector,
    MatrixRow,
    ParamDistribution,
    Poisson,
    ResultMatrix,
    refine_base,
    refine_delta,
    sample_param,
    sample_poisson,
    scaling_factor,
)
from .dominancy import (
    ControlledPair,
    DominancyReport,
    ParamScore,
    influence_score,
    run_dominancy,
)
from .errors import (
    BaselinesDoNotSeparateError,
    ConfigParseError,
    InvalidSettingsError,
    LatticeMismatchError,
    ProfileError,
    RenderError,
    TunerError,
)
from .lattice import (
    INFINITY,
    INT_CEILING,
    BitsKind,
    BitsVal,
    BoolKind,
    BoolVal,
    IntKind,
    IntVal,
    bottom,
    format_value,
    join,
    leq,
    meet,
    parse_value,
    top,
)
from .orchestrator import (
    BestSample,
    IterationRecord,
    TuneResult,
    TunerSettings,
    build_result_matrix,
    execute_iteration,
    tune,
)
from .paramspace import (
    Catalog,
    Configuration,
    ParamSpec,
    config_dominates,
    default_catalog,
    parse_configuration,
    render_cli_args,
    serialize_configuration,
)
from .rng import RandomStream
from .subprocess_adapter import AdapterConfig, SubprocessAnalyzer

__version__ = "0.1.0"
