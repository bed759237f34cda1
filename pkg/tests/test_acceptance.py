"""Acceptance suite: one test per exit criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  The protocol fixtures
are module-scoped; the full grid (4 experiments x 55 runs) dominates the
runtime at a couple of minutes.
"""

import random
from contextlib import contextmanager
from decimal import Decimal
from fractions import Fraction

import pytest

from conftest import D, compact_network
from mlatlab.cli import EXIT_OK, main
from mlatlab.configio import bundled_config_path, load_lab_config
from mlatlab.edlen import (
    SENSORS_AS_CALIBRATED,
    SENSORS_SPEC_SHEET,
    AirConditions,
    length_uncertainty_per_meter,
)
from mlatlab.metrology import RngStream, combine_rss, randomize_setup, sample_in_sphere
from mlatlab.model import (
    TargetPoint,
    all_pair_observations,
    count_equations,
    count_unknowns,
    degrees_of_freedom,
    jacobian_row,
    nominal_lengths,
    pack,
    residual,
)
from mlatlab.precision import make_context
from mlatlab.protocols import (
    DEFAULT_EXPERIMENTS,
    deviations_between_point_sets,
    run_protocol1,
    run_protocol2,
)
from mlatlab.solver import points_from_vector, solve, solve_points

ACCEPTANCE_SEED = 20260809


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"[criterion {number}] FAIL  {description}")
        raise
    print(f"[criterion {number}] PASS  {description}")


@pytest.fixture(scope="module")
def lab():
    return load_lab_config(bundled_config_path("default"))


@pytest.fixture(scope="module")
def protocol1_report(lab):
    return run_protocol1(
        lab.network, list(range(10, 21)), seed=ACCEPTANCE_SEED, u_l_mm=lab.budget.u_l_mm
    )


@pytest.fixture(scope="module")
def protocol2_report(lab):
    return run_protocol2(
        lab.network, DEFAULT_EXPERIMENTS, seed=ACCEPTANCE_SEED, budget=lab.budget
    )


def test_criterion_1_dimension_arithmetic():
    with criterion(1, "dimension arithmetic (5,7) and (5,11)"):
        assert count_equations(5, 7) == 35
        assert count_unknowns(5, 7) == 35
        assert degrees_of_freedom(5, 7) == 0
        assert count_equations(5, 11) == 55
        assert count_unknowns(5, 11) == 47
        assert degrees_of_freedom(5, 11) == 8


def test_criterion_2_rss_combination():
    with criterion(2, "SMR position uncertainty 8.44 um from [8, 2.7]"):
        assert round(combine_rss([8, 2.7]), 2) == 8.44


def test_criterion_3_edlen_order_of_magnitude():
    with criterion(3, "length uncertainty per meter in [0.3, 1.0] um/m"):
        nominal = AirConditions(20.0, 101325.0, 50.0)
        for sensors in (SENSORS_AS_CALIBRATED, SENSORS_SPEC_SHEET):
            u = length_uncertainty_per_meter(nominal, sensors)
            assert 0.3 <= u <= 1.0


def test_criterion_4_digit_sweep(protocol1_report):
    with criterion(4, "noise-free sweep: 20 digits beat 10, and sit at the minimum"):
        report = protocol1_report
        assert [r.digits for r in report.per_digits] == list(range(10, 21))
        assert all(r.converged for r in report.per_digits)
        means = {r.digits: r.mean_magnitude_mm for r in report.per_digits}
        assert means[20] < means[10]
        assert means[20] <= 1.1 * min(means.values())


def test_criterion_5a_no_uncertainty_intervals(protocol2_report):
    with criterion(5, "a: digit effect without uncertainties"):
        e1 = protocol2_report.experiment("Exp1")
        e3 = protocol2_report.experiment("Exp3")
        assert e1.valid and e3.valid
        assert e1.largest_coverage_mm <= 1e-5
        assert e3.largest_coverage_mm > e1.largest_coverage_mm
        reduction = (
            e3.largest_coverage_mm - e1.largest_coverage_mm
        ) / e3.largest_coverage_mm
        assert reduction >= 0.5


def test_criterion_5b_uncertainty_intervals(protocol2_report):
    with criterion(5, "b: budget-dominated intervals and digit comparison"):
        e1 = protocol2_report.experiment("Exp1")
        e2 = protocol2_report.experiment("Exp2")
        e3 = protocol2_report.experiment("Exp3")
        e4 = protocol2_report.experiment("Exp4")
        assert e2.valid and e4.valid
        assert 0.03 <= e2.largest_coverage_mm <= 0.2
        assert 0.03 <= e4.largest_coverage_mm <= 0.2
        assert e2.largest_coverage_mm > 100 * e1.largest_coverage_mm
        assert e4.largest_coverage_mm > 100 * e3.largest_coverage_mm
        spread = abs(e2.largest_coverage_mm - e4.largest_coverage_mm)
        assert spread / e2.largest_coverage_mm <= 0.25


def test_criterion_5c_mean_interval(protocol2_report):
    with criterion(5, "c: mean coverage interval of the ten distances"):
        e2 = protocol2_report.experiment("Exp2")
        assert 0.02 <= e2.mean_coverage_mm <= 0.1


def test_criterion_6_distance_trend(protocol2_report):
    with criterion(6, "coverage interval grows with distance (20 m vs 4 m)"):
        e2 = protocol2_report.experiment("Exp2")
        assert e2.coverage_by_point_mm[11] >= e2.coverage_by_point_mm[3]


@pytest.mark.parametrize("digits", [15, 20])
def test_criterion_7_solver_oracle(digits):
    with criterion(7, f"forward-simulation recovery at {digits} digits"):
        tol = Decimal(10) ** (3 - digits)

        # Known-station point location: 3 stations x 7 points, 21 equations
        # for 21 unknowns.
        teaching = load_lab_config(bundled_config_path("teaching")).network
        ctx = make_context(digits)
        obs = all_pair_observations(teaching, nominal_lengths(teaching, ctx))
        rng = RngStream(ACCEPTANCE_SEED)
        init = [
            TargetPoint(p.id, sample_in_sphere(p.position, D("0.001"), rng))
            for p in teaching.points
        ]
        rep = solve_points(teaching, obs, init, ctx)
        assert rep.converged
        for got, want in zip(points_from_vector(teaching, rep.solved_params), teaching.points):
            for a, b in zip(got.position, want.position):
                assert (a - b).copy_abs() <= tol

        # Full self-calibration: 5 stations x 7 points, 35 equations for 35
        # unknowns (zero redundancy).
        cfg = compact_network()
        assert degrees_of_freedom(cfg.pos, cfg.pts) == 0
        ctx = make_context(digits)
        obs = all_pair_observations(cfg, nominal_lengths(cfg, ctx))
        init = [
            ctx.round(v)
            for v in randomize_setup(cfg, 1.0, RngStream(ACCEPTANCE_SEED + 1))
        ]
        rep = solve(cfg, obs, init, ctx)
        assert rep.converged
        truth = pack(cfg)
        for got, want in zip(rep.solved_params, truth):
            assert (got - want).copy_abs() <= tol


def _fd_row(config, params, obs, ctx, rel_step=Decimal("1e-10")):
    row = []
    for k in range(len(params)):
        scale = params[k].copy_abs()
        if scale < 1:
            scale = Decimal(1)
        step = ctx.mul(rel_step, scale)
        plus = list(params)
        plus[k] = ctx.add(params[k], step)
        minus = list(params)
        minus[k] = ctx.sub(params[k], step)
        row.append(
            ctx.div(
                ctx.sub(
                    residual(config, plus, obs, ctx),
                    residual(config, minus, obs, ctx),
                ),
                ctx.mul(2, step),
            )
        )
    return row


def test_criterion_8_invariant_suites(tmp_path):
    with criterion(8, "sampler supports, Jacobian oracle, rigid motion, determinism"):
        # Sampler support and ball volume ratio.
        rng = RngStream(404)
        center = (D("1"), D("-2"), D("0.5"))
        radius = D("0.2")
        n = 40_000
        inside_half = 0
        for _ in range(n):
            s = sample_in_sphere(center, radius, rng)
            d2 = sum((float(a) - float(c)) ** 2 for a, c in zip(s, center))
            assert d2 <= float(radius) ** 2 * (1 + 1e-15)
            if d2 <= (float(radius) / 2) ** 2:
                inside_half += 1
        assert abs(inside_half / n - 0.125) <= 0.01

        # Analytic Jacobian against central differences at 30 digits.
        cfg = compact_network()
        ctx30 = make_context(30)
        base = pack(cfg)
        rnd = random.Random(1)
        from mlatlab.model import Observation

        for _ in range(4):
            params = [
                ctx30.add(v, Decimal(str(rnd.uniform(-2e-4, 2e-4)))) for v in base
            ]
            obs = Observation(rnd.randint(1, cfg.pos), rnd.randint(1, cfg.pts), D(1))
            analytic = jacobian_row(cfg, params, obs, ctx30)
            numeric = _fd_row(cfg, params, obs, ctx30)
            for a, f in zip(analytic, numeric):
                diff = abs(float(Decimal(a) - Decimal(f)))
                assert diff <= 1e-10 * max(abs(float(a)), abs(float(f)), 1e-30)

        # Distance deviations are invariant under an exact rigid motion.
        a, b, c, d = 2, 1, -1, 3
        norm = a * a + b * b + c * c + d * d
        R = [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
        ]
        import decimal as _dec

        wide = _dec.Context(prec=60)
        moved = []
        for p in cfg.points:
            x = [Fraction(str(v)) for v in p.position]
            y = [
                sum(Fraction(R[i][j], norm) * x[j] for j in range(3)) + Fraction(1, 4)
                for i in range(3)
            ]
            moved.append(
                TargetPoint(
                    p.id,
                    tuple(
                        wide.divide(Decimal(v.numerator), Decimal(v.denominator))
                        for v in y
                    ),
                )
            )
        for _, dev in deviations_between_point_sets(moved, list(cfg.points)):
            assert abs(dev) <= 1e-25

        # Byte-identical CSVs for equal seeds, via the CLI.
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        args1 = ["protocol1", "--digits", "10", "--seed", "77"]
        assert main(args1 + ["--out", str(out1)]) == EXIT_OK
        assert main(args1 + ["--out", str(out2)]) == EXIT_OK
        for name in ("protocol1_summary.csv", "protocol1_deviations.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        args2 = ["protocol2", "--experiments", "Exp3", "--runs", "3", "--seed", "78"]
        assert main(args2 + ["--out", str(out1)]) == EXIT_OK
        assert main(args2 + ["--out", str(out2)]) == EXIT_OK
        for name in ("protocol2_runs.csv", "protocol2_summary.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
