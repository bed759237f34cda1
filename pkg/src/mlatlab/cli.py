"""Command-line interface.

Three subcommands drive the package: ``protocol1`` (digit sweep on
noise-free data), ``protocol2`` (uncertainty-by-digits experiment grid),
and ``edlen-budget`` (air-index and per-meter length-uncertainty table).

Outputs are CSV files with 17-significant-digit numbers, fixed column
order, and LF line endings: byte-identical reruns for equal seeds are part
of the contract.  Each protocol run also writes a ``run_manifest.json``
recording the config hash, seed, and versions.

Exit codes: 0 success, 2 configuration error, 3 domain error, 4
solver-validity failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from pathlib import Path

from . import __version__
from .configio import bundled_config_path, load_lab_config
from .edlen import (
    AirConditions,
    SensorBudget,
    length_uncertainty_per_meter,
    refractive_index,
    sensor_contributions,
)
from .errors import ConfigurationError, DomainError, MlatError, SolverError
from .protocols import (
    DEFAULT_EXPERIMENTS,
    ExperimentSpec,
    run_protocol1,
    run_protocol2,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_SOLVER = 4
EXIT_IO = 5

DIGITS_MIN, DIGITS_MAX = 4, 50


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_digits(spec: str):
    """Parse ``A..B`` (either order) or a comma list into sorted digits."""
    spec = spec.strip()
    try:
        if ".." in spec:
            a_text, b_text = spec.split("..", 1)
            a, b = int(a_text), int(b_text)
            lo, hi = min(a, b), max(a, b)
            digits = list(range(lo, hi + 1))
        else:
            digits = sorted({int(tok) for tok in spec.split(",") if tok.strip()})
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse digits {spec!r}: {exc}") from exc
    if not digits:
        raise ConfigurationError(f"no digit counts in {spec!r}")
    for d in digits:
        if not (DIGITS_MIN <= d <= DIGITS_MAX):
            raise ConfigurationError(
                f"digits {d} outside [{DIGITS_MIN}, {DIGITS_MAX}]"
            )
    return digits


def parse_experiments(spec: str, runs=None):
    by_id = {e.id: e for e in DEFAULT_EXPERIMENTS}
    chosen = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if token not in by_id:
            raise ConfigurationError(
                f"unknown experiment {token!r}; available: {', '.join(by_id)}"
            )
        exp = by_id[token]
        if runs is not None:
            exp = ExperimentSpec(
                exp.id, exp.digits, exp.with_uncertainties, runs, exp.repeats_per_length
            )
        chosen.append(exp)
    if not chosen:
        raise ConfigurationError(f"no experiments selected in {spec!r}")
    return chosen


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="")


def _write_manifest(out_dir: Path, command: str, config_path: Path, seed: int, extra):
    manifest = {
        "command": command,
        "config": str(config_path),
        "config_sha256": hashlib.sha256(config_path.read_bytes()).hexdigest(),
        "seed": seed,
        "package_version": __version__,
        "python_version": platform.python_version(),
    }
    manifest.update(extra)
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )


def cmd_protocol1(args) -> int:
    config_path = Path(args.config)
    lab = load_lab_config(config_path)
    digits = parse_digits(args.digits)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = run_protocol1(
        lab.network, digits, seed=args.seed, u_l_mm=lab.budget.u_l_mm
    )

    dev_rows = []
    summary_rows = []
    for res in report.per_digits:
        for dev in res.deviations:
            dev_rows.append(
                [
                    str(dev.point_id),
                    str(res.digits),
                    _fmt(dev.dx_mm),
                    _fmt(dev.dy_mm),
                    _fmt(dev.dz_mm),
                    _fmt(dev.magnitude_mm),
                ]
            )
        summary_rows.append([str(res.digits), _fmt(res.mean_magnitude_mm)])
    _write_csv(
        out_dir / "protocol1_deviations.csv",
        ["point_id", "digits", "dx_mm", "dy_mm", "dz_mm", "magnitude_mm"],
        dev_rows,
    )
    _write_csv(
        out_dir / "protocol1_summary.csv",
        ["digits", "mean_magnitude_mm"],
        summary_rows,
    )
    _write_manifest(
        out_dir, "protocol1", config_path, args.seed, {"digits": digits}
    )

    unconverged = [res.digits for res in report.per_digits if not res.converged]
    if unconverged:
        print(
            f"protocol1: no convergence at digits {unconverged}", file=sys.stderr
        )
        return EXIT_SOLVER
    print(f"protocol1: wrote {len(digits)} digit settings to {out_dir}")
    return EXIT_OK


def cmd_protocol2(args) -> int:
    config_path = Path(args.config)
    lab = load_lab_config(config_path)
    experiments = parse_experiments(args.experiments, args.runs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = run_protocol2(lab.network, experiments, seed=args.seed, budget=lab.budget)

    run_rows = []
    summary_rows = []
    for res in report.experiments:
        spec = res.spec
        flag = "with" if spec.with_uncertainties else "without"
        for sample in res.samples:
            run_rows.append(
                [
                    spec.id,
                    str(spec.digits),
                    flag,
                    str(sample.run_index),
                    str(sample.point_id),
                    _fmt(sample.deviation_mm),
                ]
            )
        summary_rows.append(
            [
                spec.id,
                str(spec.digits),
                flag,
                _fmt(res.largest_coverage_mm),
                _fmt(res.mean_coverage_mm),
                str(res.failed_runs),
                "yes" if res.valid else "no",
            ]
        )
    _write_csv(
        out_dir / "protocol2_runs.csv",
        ["experiment", "digits", "uncertainties", "run", "point_id", "deviation_mm"],
        run_rows,
    )
    _write_csv(
        out_dir / "protocol2_summary.csv",
        [
            "experiment",
            "digits",
            "uncertainties",
            "largest_coverage_interval_mm",
            "mean_coverage_interval_mm",
            "failed_runs",
            "valid",
        ],
        summary_rows,
    )
    _write_manifest(
        out_dir,
        "protocol2",
        config_path,
        args.seed,
        {"experiments": [e.id for e in experiments], "runs": experiments[0].runs},
    )

    invalid = [res.spec.id for res in report.experiments if not res.valid]
    if invalid:
        print(f"protocol2: experiments flagged invalid: {invalid}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"protocol2: wrote {len(experiments)} experiments to {out_dir}")
    return EXIT_OK


def cmd_edlen_budget(args) -> int:
    lab = load_lab_config(Path(args.config))
    air = lab.air
    if args.temperature_c is not None or args.pressure_pa is not None or args.humidity_rh is not None:
        air = AirConditions(
            args.temperature_c if args.temperature_c is not None else air.temperature_c,
            args.pressure_pa if args.pressure_pa is not None else air.pressure_pa,
            args.humidity_rh if args.humidity_rh is not None else air.humidity_rh,
        )
    sensors = lab.sensors
    if args.u_t is not None or args.u_f is not None or args.u_p is not None:
        sensors = SensorBudget(
            args.u_t if args.u_t is not None else sensors.u_t_c,
            args.u_f if args.u_f is not None else sensors.u_f_rh,
            args.u_p if args.u_p is not None else sensors.u_p_pa,
            sensors.lambda_vacuum_um,
        )

    n = refractive_index(air, sensors.lambda_vacuum_um)
    contrib = sensor_contributions(air, sensors)
    combined = length_uncertainty_per_meter(air, sensors)

    print(f"air: {air.temperature_c} degC, {air.pressure_pa} Pa, {air.humidity_rh} %RH")
    print(f"vacuum wavelength: {sensors.lambda_vacuum_um} um")
    print(f"refractive index n = {n:.9f}")
    print(f"temperature sensor (+-{sensors.u_t_c} degC):  {contrib['temperature']:.4f} um/m")
    print(f"humidity sensor    (+-{sensors.u_f_rh} %RH):  {contrib['humidity']:.4f} um/m")
    print(f"pressure sensor    (+-{sensors.u_p_pa} Pa):  {contrib['pressure']:.4f} um/m")
    print(f"U_Edlen (corner sweep): {combined:.4f} um/m")

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = [
            ["refractive_index", _fmt(n)],
            ["temperature_um_per_m", _fmt(contrib["temperature"])],
            ["humidity_um_per_m", _fmt(contrib["humidity"])],
            ["pressure_um_per_m", _fmt(contrib["pressure"])],
            ["combined_um_per_m", _fmt(combined)],
        ]
        _write_csv(out_dir / "edlen_budget.csv", ["quantity", "value"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlatlab",
        description="Sequential multilateration simulation laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--config",
            default=str(bundled_config_path("default")),
            help="lab configuration file (default: bundled five-station setup)",
        )
        p.add_argument("--seed", type=int, default=20260809, help="root random seed")

    p1 = sub.add_parser("protocol1", help="digit sweep on noise-free data")
    common(p1)
    p1.add_argument("--digits", default="10..20", help="range A..B or comma list")
    p1.add_argument("--out", default="out", help="output directory")
    p1.set_defaults(func=cmd_protocol1)

    p2 = sub.add_parser("protocol2", help="uncertainty-by-digits experiment grid")
    common(p2)
    p2.add_argument(
        "--experiments",
        default="Exp1,Exp2,Exp3,Exp4",
        help="comma list of experiment ids",
    )
    p2.add_argument("--runs", type=int, default=None, help="override runs per experiment")
    p2.add_argument("--out", default="out", help="output directory")
    p2.set_defaults(func=cmd_protocol2)

    pe = sub.add_parser("edlen-budget", help="air index and length uncertainty table")
    common(pe)
    pe.add_argument("--temperature-c", type=float, default=None, dest="temperature_c")
    pe.add_argument("--pressure-pa", type=float, default=None, dest="pressure_pa")
    pe.add_argument("--humidity-rh", type=float, default=None, dest="humidity_rh")
    pe.add_argument("--u-t", type=float, default=None, dest="u_t", help="+- degC")
    pe.add_argument("--u-f", type=float, default=None, dest="u_f", help="+- %%RH")
    pe.add_argument("--u-p", type=float, default=None, dest="u_p", help="+- Pa")
    pe.add_argument("--out", default=None, help="also write edlen_budget.csv here")
    pe.set_defaults(func=cmd_edlen_budget)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except MlatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
