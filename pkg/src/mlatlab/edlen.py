"""Air refractive index and its propagation to a per-meter length uncertainty.

Implements the modified Edlen equations of Bönsch & Potulski (Metrologia 35,
1998): dispersion of standard air (20 °C, 100 kPa, dry, 400 ppm CO2),
density scaling in temperature and pressure, and the water-vapour
correction, with relative humidity converted to partial pressure through
the saturation-pressure exponential used alongside those equations.  CO2
content is held at the formula's reference value.

An interferometer compensates its wavelength from temperature, pressure and
humidity sensors; their uncertainties therefore leak into every measured
length.  :func:`length_uncertainty_per_meter` turns a sensor budget into
that leakage by sweeping the eight worst-case sensor corners and taking the
largest refractive-index shift, expressed in µm per metre of measured path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

DEFAULT_VACUUM_WAVELENGTH_UM = 0.632991368

TEMPERATURE_RANGE_C = (0.0, 40.0)
PRESSURE_RANGE_PA = (6.0e4, 1.2e5)
HUMIDITY_RANGE_RH = (0.0, 100.0)


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    value = float(value)
    if not (lo <= value <= hi) or math.isnan(value):
        raise DomainError(f"{name} {value!r} outside [{lo}, {hi}]")
    return value


@dataclass(frozen=True)
class AirConditions:
    """Ambient air state at the measurement volume."""

    temperature_c: float
    pressure_pa: float
    humidity_rh: float

    def __post_init__(self):
        _check_range("temperature_c", self.temperature_c, *TEMPERATURE_RANGE_C)
        _check_range("pressure_pa", self.pressure_pa, *PRESSURE_RANGE_PA)
        _check_range("humidity_rh", self.humidity_rh, *HUMIDITY_RANGE_RH)


@dataclass(frozen=True)
class SensorBudget:
    """Half-range uncertainties of the environment sensors (±)."""

    u_t_c: float
    u_f_rh: float
    u_p_pa: float
    lambda_vacuum_um: float = DEFAULT_VACUUM_WAVELENGTH_UM

    def __post_init__(self):
        for name in ("u_t_c", "u_f_rh", "u_p_pa"):
            v = float(getattr(self, name))
            if v < 0 or math.isnan(v):
                raise DomainError(f"{name} must be >= 0, got {v!r}")
        if not self.lambda_vacuum_um > 0:
            raise DomainError("lambda_vacuum_um must be > 0")


# The temperature sensor is quoted two ways in commercial documentation:
# the spec-sheet figure (0.2 °C) and the tighter as-calibrated value
# (0.169 °C).  Both presets are shipped; the bundled configuration uses the
# spec-sheet figure and can be overridden in the config file.
SENSORS_SPEC_SHEET = SensorBudget(u_t_c=0.2, u_f_rh=0.8, u_p_pa=150.0)
SENSORS_AS_CALIBRATED = SensorBudget(u_t_c=0.169, u_f_rh=0.8, u_p_pa=150.0)


def saturation_vapor_pressure_pa(temperature_c: float) -> float:
    """Saturation pressure of water vapour over a plane water surface (Pa)."""
    T = temperature_c + 273.15
    return math.exp(
        1.2378847e-5 * T * T - 1.9121316e-2 * T + 33.93711047 - 6343.1645 / T
    )


def refractive_index(
    cond: AirConditions, lambda_vacuum_um: float = DEFAULT_VACUUM_WAVELENGTH_UM
) -> float:
    """Phase refractive index of air for the given conditions and wavelength."""
    if not lambda_vacuum_um > 0:
        raise DomainError("lambda_vacuum_um must be > 0")
    sigma2 = (1.0 / lambda_vacuum_um) ** 2
    # Standard air at 20 degC, 100 kPa, dry, 400 ppm CO2.
    n_std = 1e-8 * (
        8091.37 + 2333983.0 / (130.0 - sigma2) + 15518.0 / (38.9 - sigma2)
    )
    t = cond.temperature_c
    p = cond.pressure_pa
    density = (
        p
        * (1.0 + 1e-8 * (0.5953 - 0.009876 * t) * p)
        / (93214.60 * (1.0 + 0.0036610 * t))
    )
    n_tp = 1.0 + n_std * density
    f = cond.humidity_rh / 100.0 * saturation_vapor_pressure_pa(t)
    return n_tp - f * (3.8020 - 0.0384 * sigma2) * 1e-10


def _corner_shift_um_per_m(nominal: AirConditions, budget: SensorBudget, signs) -> float:
    st, sf, sp = signs
    cond = AirConditions(
        nominal.temperature_c + st * budget.u_t_c,
        nominal.pressure_pa + sp * budget.u_p_pa,
        nominal.humidity_rh + sf * budget.u_f_rh,
    )
    n0 = refractive_index(nominal, budget.lambda_vacuum_um)
    return abs(refractive_index(cond, budget.lambda_vacuum_um) - n0) * 1e6


def length_uncertainty_per_meter(nominal: AirConditions, budget: SensorBudget) -> float:
    """Worst-case length error per metre (±µm/m) over the sensor extremes.

    Sweeps the 2^3 corners of (±u_t, ±u_f, ±u_p) around the nominal
    conditions and returns the largest refractive-index shift in µm/m.
    Corners falling outside the physical validity ranges raise a
    :class:`DomainError` naming the offending field.
    """
    worst = 0.0
    for st in (-1.0, 1.0):
        for sf in (-1.0, 1.0):
            for sp in (-1.0, 1.0):
                worst = max(
                    worst, _corner_shift_um_per_m(nominal, budget, (st, sf, sp))
                )
    return worst


def sensor_contributions(nominal: AirConditions, budget: SensorBudget) -> dict:
    """Per-sensor length-uncertainty contributions, each sensor varied alone."""
    out = {}
    for key, solo in (
        ("temperature", SensorBudget(budget.u_t_c, 0.0, 0.0, budget.lambda_vacuum_um)),
        ("humidity", SensorBudget(0.0, budget.u_f_rh, 0.0, budget.lambda_vacuum_um)),
        ("pressure", SensorBudget(0.0, 0.0, budget.u_p_pa, budget.lambda_vacuum_um)),
    ):
        out[key] = length_uncertainty_per_meter(nominal, solo)
    return out
