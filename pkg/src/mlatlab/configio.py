"""Configuration file loading.

The lab configuration is a TOML file (conventionally ``.cfg``) holding the
network geometry, the ambient conditions, the environment-sensor budget,
and the measurement uncertainty budget.  Floats are parsed as full-precision
decimals so geometry survives the file boundary bit-for-bit; they are
rounded into a working precision context only when a computation starts.
"""

from __future__ import annotations

import decimal
import sys
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .edlen import AirConditions, SensorBudget
from .errors import ConfigurationError, DomainError
from .metrology import UncertaintyBudget
from .model import NetworkConfig, Station, TargetPoint

_WIDE = decimal.Context(prec=60)
_BUNDLED = ("default", "teaching")


@dataclass(frozen=True)
class LabConfig:
    """Everything a protocol run needs, as loaded from one file."""

    network: NetworkConfig
    air: AirConditions
    sensors: SensorBudget
    budget: UncertaintyBudget
    source: Optional[Path] = None


def bundled_config_path(name: str) -> Path:
    """Path of a preset shipped with the package (``default`` or ``teaching``)."""
    if name not in _BUNDLED:
        raise ConfigurationError(
            f"unknown bundled config {name!r}; available: {', '.join(_BUNDLED)}"
        )
    return Path(str(resources.files("mlatlab") / "configs" / f"{name}.cfg"))


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigurationError(f"missing key {key!r} in [{where}]")
    return table[key]


def _station(entry: dict, index: int) -> Station:
    sid = _need(entry, "id", f"stations #{index}")
    pos = _need(entry, "position_m", f"stations #{index}")
    dz_mm = _need(entry, "dead_zone_mm", f"stations #{index}")
    dz_m = _WIDE.multiply(Decimal(str(dz_mm)), Decimal("0.001"))
    return Station(int(sid), tuple(Decimal(str(c)) for c in pos), dz_m)


def _point(entry: dict, index: int) -> TargetPoint:
    pid = _need(entry, "id", f"points #{index}")
    pos = _need(entry, "position_m", f"points #{index}")
    return TargetPoint(int(pid), tuple(Decimal(str(c)) for c in pos))


def load_lab_config(path) -> LabConfig:
    """Parse and validate a lab configuration file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"), parse_float=Decimal)
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc

    try:
        stations = [
            _station(e, i) for i, e in enumerate(_need(data, "stations", "file"), 1)
        ]
        points = [
            _point(e, i) for i, e in enumerate(_need(data, "points", "file"), 1)
        ]
        workspace = None
        if "workspace" in data and "extent_m" in data["workspace"]:
            workspace = tuple(
                Decimal(str(c)) for c in data["workspace"]["extent_m"]
            )
        network = NetworkConfig(tuple(stations), tuple(points), workspace)

        env = _need(data, "environment", "file")
        air = AirConditions(
            temperature_c=float(_need(env, "temperature_c", "environment")),
            pressure_pa=float(_need(env, "pressure_pa", "environment")),
            humidity_rh=float(_need(env, "humidity_rh", "environment")),
        )

        sens = _need(data, "sensors", "file")
        sensors = SensorBudget(
            u_t_c=float(_need(sens, "u_t_c", "sensors")),
            u_f_rh=float(_need(sens, "u_f_rh", "sensors")),
            u_p_pa=float(_need(sens, "u_p_pa", "sensors")),
            lambda_vacuum_um=float(sens.get("lambda_vacuum_um", 0.632991368)),
        )

        bud = _need(data, "budget", "file")
        budget = UncertaintyBudget.build(
            delta1_um=float(_need(bud, "delta1_um", "budget")),
            delta2_um=float(_need(bud, "delta2_um", "budget")),
            u_l_mm=float(_need(bud, "u_l_mm", "budget")),
            sensors=sensors,
            air=air,
            u_rp_um=float(bud["u_rp_um"]) if "u_rp_um" in bud else None,
            u_edlen_um_per_m=(
                float(bud["u_edlen_um_per_m"]) if "u_edlen_um_per_m" in bud else None
            ),
        )
    except ConfigurationError:
        raise
    except (
        DomainError,
        TypeError,
        ValueError,
        KeyError,
        decimal.DecimalException,
    ) as exc:
        raise ConfigurationError(f"invalid value in config {path}: {exc}") from exc

    return LabConfig(
        network=network, air=air, sensors=sensors, budget=budget, source=path
    )
