"""Simulation protocols: the digit sweep and the uncertainty experiment grid.

Protocol 1 isolates the arithmetic: noise-free readings are generated once
at reference precision from the nominal network, the solver starting values
are randomized once, and the same problem is then solved at each digit
count.  The statistic is the per-point deviation of the solved coordinates
from the nominal ones.

Protocol 2 crosses digit counts with the measurement uncertainty budget:
each run simulates averaged interferometer readings, randomizes the
starting values, solves at the experiment's digit count, and records the
deviations of the ten point-1-to-point-i distances.  Per-distance coverage
intervals (two sample standard deviations, the 95 percent convention) are
computed across runs.

Determinism: every run draws from a stream derived from the root seed, the
experiment id, and the run index, so reports are reproducible and runs are
independent.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DomainError, SolverError
from .metrology import (
    RngStream,
    UncertaintyBudget,
    derive_seed,
    randomize_setup,
    simulate_observations,
)
from .model import (
    NetworkConfig,
    Observation,
    TargetPoint,
    all_pair_observations,
    distance,
    nominal_lengths,
    unpack,
)
from .precision import PrecisionContext, make_context, reference_context
from .solver import SolutionReport, SolverOptions, solve

DEFAULT_RUNS = 55
DEFAULT_REPEATS = 5

# Fraction of failed runs beyond which an experiment's statistics are
# considered invalid.
FAILURE_TOLERANCE = 0.10


@dataclass(frozen=True)
class ExperimentSpec:
    """One cell of the protocol-2 grid."""

    id: str
    digits: int
    with_uncertainties: bool
    runs: int = DEFAULT_RUNS
    repeats_per_length: int = DEFAULT_REPEATS

    def __post_init__(self):
        if self.runs < 1:
            raise DomainError("runs must be >= 1")
        if self.repeats_per_length < 1:
            raise DomainError("repeats_per_length must be >= 1")


DEFAULT_EXPERIMENTS: Tuple[ExperimentSpec, ...] = (
    ExperimentSpec("Exp1", digits=20, with_uncertainties=False),
    ExperimentSpec("Exp2", digits=20, with_uncertainties=True),
    ExperimentSpec("Exp3", digits=10, with_uncertainties=False),
    ExperimentSpec("Exp4", digits=10, with_uncertainties=True),
)


def coverage_interval(samples: Sequence[float]) -> float:
    """Half-width of the 95 percent interval: two sample standard deviations."""
    if len(samples) < 2:
        raise DomainError("coverage interval needs at least 2 samples")
    return 2.0 * statistics.stdev(samples)


@dataclass(frozen=True)
class PointDeviation:
    point_id: int
    dx_mm: float
    dy_mm: float
    dz_mm: float
    magnitude_mm: float


@dataclass(frozen=True)
class DigitsResult:
    digits: int
    converged: bool
    iterations: int
    deviations: Tuple[PointDeviation, ...]
    mean_magnitude_mm: float


@dataclass(frozen=True)
class Protocol1Report:
    seed: int
    u_l_mm: float
    per_digits: Tuple[DigitsResult, ...]

    def mean_magnitude(self, digits: int) -> float:
        for res in self.per_digits:
            if res.digits == digits:
                return res.mean_magnitude_mm
        raise DomainError(f"no result for digits={digits}")


@dataclass(frozen=True)
class DistanceSample:
    run_index: int
    point_id: int
    deviation_mm: float


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    samples: Tuple[DistanceSample, ...]
    coverage_by_point_mm: Dict[int, float]
    largest_coverage_mm: float
    mean_coverage_mm: float
    failed_runs: int
    valid: bool


@dataclass(frozen=True)
class Protocol2Report:
    seed: int
    experiments: Tuple[ExperimentResult, ...]

    def experiment(self, exp_id: str) -> ExperimentResult:
        for res in self.experiments:
            if res.spec.id == exp_id:
                return res
        raise DomainError(f"no experiment {exp_id!r} in report")


def _point_deviations(
    solved: Sequence[TargetPoint],
    nominal: Sequence[TargetPoint],
    ref: PrecisionContext,
) -> List[PointDeviation]:
    out = []
    for got, want in zip(solved, nominal):
        comps_mm = [
            ref.mul(ref.sub(a, b), 1000)
            for a, b in zip(got.position, want.position)
        ]
        mag = ref.norm(comps_mm)
        out.append(
            PointDeviation(
                got.id,
                float(comps_mm[0]),
                float(comps_mm[1]),
                float(comps_mm[2]),
                float(mag),
            )
        )
    return out


def deviations_between_point_sets(
    solved: Sequence[TargetPoint],
    nominal: Sequence[TargetPoint],
    ref: Optional[PrecisionContext] = None,
) -> List[Tuple[int, float]]:
    """Deviation of each point-1-to-point-i distance, in mm, at high precision."""
    ref = ref or reference_context()
    if len(solved) != len(nominal) or len(nominal) < 2:
        raise DomainError("need matching point sets with at least two points")
    base_solved = solved[0].position
    base_nominal = nominal[0].position
    out = []
    for got, want in zip(solved[1:], nominal[1:]):
        d_solved = distance(ref, base_solved, got.position)
        d_nominal = distance(ref, base_nominal, want.position)
        out.append((want.id, float(ref.mul(ref.sub(d_solved, d_nominal), 1000))))
    return out


def distance_deviations(
    solution: SolutionReport, config: NetworkConfig
) -> List[Tuple[int, float]]:
    """Distance deviations of a solved network against its nominal points."""
    _, solved_points = unpack(config, solution.solved_params)
    return deviations_between_point_sets(solved_points, config.points)


def run_protocol1(
    config: NetworkConfig,
    digits_list: Sequence[int],
    seed: int,
    u_l_mm: float = 1.0,
    options: Optional[SolverOptions] = None,
) -> Protocol1Report:
    """Digit sweep on noise-free data with one shared randomized setup."""
    if not digits_list:
        raise DomainError("digits_list must not be empty")
    ref = reference_context()
    lengths = nominal_lengths(config, ref)
    observations = all_pair_observations(config, lengths)
    setup_rng = RngStream(derive_seed(seed, "protocol1", "setup"))
    initial = randomize_setup(config, u_l_mm, setup_rng)
    results = []
    for digits in sorted(set(int(d) for d in digits_list)):
        ctx = make_context(digits)
        obs_d = [
            Observation(o.station_id, o.point_id, ctx.round(o.length))
            for o in observations
        ]
        init_d = [ctx.round(v) for v in initial]
        try:
            report = solve(config, obs_d, init_d, ctx, options)
        except SolverError:
            results.append(DigitsResult(digits, False, 0, (), float("nan")))
            continue
        _, solved_points = unpack(config, report.solved_params)
        deviations = _point_deviations(solved_points, config.points, ref)
        mean_mag = sum(p.magnitude_mm for p in deviations) / len(deviations)
        results.append(
            DigitsResult(
                digits, report.converged, report.iterations, tuple(deviations), mean_mag
            )
        )
    return Protocol1Report(seed=seed, u_l_mm=float(u_l_mm), per_digits=tuple(results))


def _run_one(
    config: NetworkConfig,
    spec: ExperimentSpec,
    budget: UncertaintyBudget,
    rng: RngStream,
    ctx: PrecisionContext,
    options: Optional[SolverOptions],
):
    run_budget = budget if spec.with_uncertainties else UncertaintyBudget.zero()
    observations = simulate_observations(
        config, run_budget, spec.repeats_per_length, rng
    )
    obs_d = [
        Observation(o.station_id, o.point_id, ctx.round(o.length))
        for o in observations
    ]
    initial = randomize_setup(config, budget.u_l_mm, rng)
    init_d = [ctx.round(v) for v in initial]
    report = solve(config, obs_d, init_d, ctx, options)
    if not report.converged:
        return None
    _, solved_points = unpack(config, report.solved_params)
    return deviations_between_point_sets(solved_points, config.points)


def run_protocol2(
    config: NetworkConfig,
    experiments: Sequence[ExperimentSpec],
    seed: int,
    budget: UncertaintyBudget,
    options: Optional[SolverOptions] = None,
) -> Protocol2Report:
    """Uncertainty-by-digits experiment grid with per-distance coverage intervals.

    Runs that fail to converge (or raise a solver error) are excluded from
    the statistics and counted; an experiment with more than 10 percent
    failures is flagged invalid.
    """
    if config.pts < 2:
        raise DomainError("protocol 2 needs at least two target points")
    for spec in experiments:
        if spec.runs < 2:
            raise DomainError(
                f"experiment {spec.id}: coverage intervals need at least 2 runs"
            )
    results = []
    for spec in experiments:
        ctx = make_context(spec.digits)
        samples: List[DistanceSample] = []
        by_point: Dict[int, List[float]] = {p.id: [] for p in config.points[1:]}
        failed = 0
        for run in range(spec.runs):
            rng = RngStream(derive_seed(seed, spec.id, run))
            try:
                devs = _run_one(config, spec, budget, rng, ctx, options)
            except SolverError:
                devs = None
            if devs is None:
                failed += 1
                continue
            for point_id, dev_mm in devs:
                samples.append(DistanceSample(run, point_id, dev_mm))
                by_point[point_id].append(dev_mm)
        valid = failed <= FAILURE_TOLERANCE * spec.runs
        if all(len(vals) >= 2 for vals in by_point.values()):
            coverage = {pid: coverage_interval(vals) for pid, vals in by_point.items()}
            largest = max(coverage.values())
            mean = sum(coverage.values()) / len(coverage)
        else:
            # Too many failures to form the statistic at all.
            coverage = {pid: float("nan") for pid in by_point}
            largest = mean = float("nan")
            valid = False
        results.append(
            ExperimentResult(
                spec=spec,
                samples=tuple(samples),
                coverage_by_point_mm=coverage,
                largest_coverage_mm=largest,
                mean_coverage_mm=mean,
                failed_runs=failed,
                valid=valid,
            )
        )
    return Protocol2Report(seed=seed, experiments=tuple(results))
