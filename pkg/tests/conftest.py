"""Shared network builders for the test suite."""

from decimal import Decimal

from mlatlab.model import NetworkConfig, Station, TargetPoint


def D(x) -> Decimal:
    return Decimal(str(x))


def table1_network() -> NetworkConfig:
    """The bundled five-station network (dead zones in meters)."""
    stations = (
        Station(1, (D(0), D(0), D(0)), D("0.020458")),
        Station(2, (D("-10.5"), D(0), D(0)), D("0.045455")),
        Station(3, (D(0), D("2.0"), D(0)), D("0.100256")),
        Station(4, (D(0), D("-2.0"), D("2.0")), D("0.052230")),
        Station(5, (D("10.5"), D(0), D("2.0")), D("0.012230")),
    )
    layout = [
        ("0", "-1.5", "0.5"),
        ("2", "1.5", "2.5"),
        ("4", "-1.5", "0.5"),
        ("6", "1.2", "2.0"),
        ("8", "-0.8", "1.0"),
        ("10", "1.8", "2.8"),
        ("12", "-1.2", "0.2"),
        ("14", "0.9", "2.2"),
        ("16", "-1.8", "1.4"),
        ("18", "0.6", "2.6"),
        ("20", "-1.5", "0.5"),
    ]
    points = tuple(
        TargetPoint(i, tuple(D(c) for c in layout[i - 1])) for i in range(1, 12)
    )
    return NetworkConfig(stations, points, workspace=(D(22), D(4), D(3)))


def compact_network(pts: int = 7) -> NetworkConfig:
    """A meter-scale five-station instance with stations surrounding the points.

    The geometry was tuned so the worst-case parameter amplification of the
    self-calibrating adjustment stays around 24: tight solver-recovery
    tolerances rely on residual rounding noise not being blown up by the
    network's conditioning.
    """
    stations = (
        Station(1, (D(0), D(0), D(0)), D("0.031")),
        Station(2, (D("2.1"), D(0), D(0)), D("0.052")),
        Station(3, (D("1.62"), D("1.91"), D(0)), D("0.024")),
        Station(4, (D("2.21"), D("1.0"), D("1.54")), D("0.045")),
        Station(5, (D("2.11"), D("0.45"), D("-1.71")), D("0.017")),
    )
    coords = [
        ("1.01", "-1.35", "-0.15"),
        ("0.64", "0.24", "0.07"),
        ("1.91", "-0.72", "-1.02"),
        ("0.99", "0.87", "1.03"),
        ("1.55", "0.9", "-0.18"),
        ("-0.07", "0.42", "0.37"),
        ("0.29", "-0.79", "-0.89"),
        ("1.9", "1.1", "1.5"),
        ("-0.4", "0.7", "0.6"),
        ("0.8", "-0.3", "1.9"),
    ]
    points = tuple(
        TargetPoint(i, tuple(D(c) for c in coords[i - 1])) for i in range(1, pts + 1)
    )
    return NetworkConfig(stations, points)


def known_station_network() -> NetworkConfig:
    """Three known stations and seven points, for point-only multilateration."""
    stations = (
        Station(1, (D(0), D(0), D(0)), D("0.012")),
        Station(2, (D("2.0"), D(0), D(0)), D("0.034")),
        Station(3, (D(0), D("2.0"), D(0)), D("0.021")),
    )
    coords = [
        ("0.4", "0.3", "1.1"),
        ("1.6", "0.5", "0.9"),
        ("0.8", "1.5", "1.3"),
        ("1.2", "1.0", "1.5"),
        ("0.3", "1.2", "0.8"),
        ("1.5", "1.4", "1.2"),
        ("1.0", "0.2", "1.4"),
    ]
    points = tuple(
        TargetPoint(i, tuple(D(c) for c in coords[i - 1])) for i in range(1, 8)
    )
    return NetworkConfig(stations, points)
