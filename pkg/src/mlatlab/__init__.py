"""Simulation laboratory for sequential large-scale multilateration.

Solves the distance-only network adjustment of a tracking interferometer
under a configurable count of significant decimal digits, and quantifies
how arithmetic precision and the metrology uncertainty budget shape the
coverage intervals of the computed distances.
"""

__version__ = "0.1.0"

from .configio import LabConfig, bundled_config_path, load_lab_config
from .edlen import (
    AirConditions,
    SensorBudget,
    length_uncertainty_per_meter,
    refractive_index,
)
from .errors import (
    ConfigurationError,
    DomainError,
    GeometryError,
    MlatError,
    RankDeficiencyError,
    SolverError,
    UnderdeterminedError,
)
from .metrology import (
    RngStream,
    UncertaintyBudget,
    combine_rss,
    derive_seed,
    randomize_setup,
    sample_in_sphere,
    sample_uniform,
    simulate_length,
    simulate_observations,
)
from .model import (
    NetworkConfig,
    Observation,
    Station,
    TargetPoint,
    count_equations,
    count_unknowns,
    degrees_of_freedom,
    jacobian_row,
    pack,
    residual,
    unpack,
)
from .precision import MPValue, PrecisionContext, make_context, op, reference_context
from .protocols import (
    DEFAULT_EXPERIMENTS,
    ExperimentSpec,
    Protocol1Report,
    Protocol2Report,
    coverage_interval,
    distance_deviations,
    run_protocol1,
    run_protocol2,
)
from .solver import (
    SolutionReport,
    SolverOptions,
    points_from_vector,
    solve,
    solve_points,
)
