"""Uncertainty budget, seedable samplers, and the length-measurement simulator.

Sampling follows two hard rules.  First, reproducibility: streams are
Mersenne-Twister generators (CPython's ``random.Random``), whose raw
``random()`` output is stable across platforms and versions, and derived
streams come from hashing the root seed with task tokens.  Second, exact
supports: a sample never leaves its ball or interval, not even by one
rounding unit.  Ball sampling therefore rejects on an exactly-computed sum
of squares, and offsets are built as ``radius * unit`` products carried out
in an exact (trapped-inexact) decimal context.
"""

from __future__ import annotations

import decimal
import hashlib
import math
import random
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Optional, Sequence, Tuple

from .edlen import AirConditions, SensorBudget, length_uncertainty_per_meter
from .errors import DomainError, GeometryError
from .model import (
    NetworkConfig,
    Observation,
    Station,
    TargetPoint,
    distance,
    gauge_free_axes,
    pack,
)
from .precision import PrecisionContext, reference_context

# Assumed worst-case misalignment between SMR corner cube and beam behind
# the default optical-aberration term of the budget.
ASSUMED_SMR_MISALIGNMENT_DEG = 2.5

# Arithmetic used to construct perturbed setup/measurement values exactly:
# wide precision with the Inexact trap armed, so a silent rounding is
# impossible by construction.  Results stay far below this precision.
_EXACT = decimal.Context(prec=300, Emin=-999999, Emax=999999)
_EXACT.traps[decimal.Inexact] = True

_MICRO = Decimal("1e-6")
_MILLI = Decimal("0.001")


def _exact_decimal(x) -> Decimal:
    if isinstance(x, Decimal):
        return x
    if isinstance(x, (int, float)):
        return Decimal(x)
    raise DomainError(f"expected a number, got {type(x).__name__!r}")


def combine_rss(components: Iterable[float]) -> float:
    """Root-sum-of-squares combination of same-unit uncertainty components."""
    values = list(components)
    if not values:
        raise DomainError("combine_rss needs at least one component")
    total = 0.0
    for v in values:
        v = float(v)
        if v < 0 or math.isnan(v):
            raise DomainError(f"uncertainty components must be >= 0, got {v!r}")
        total += v * v
    return math.sqrt(total)


def derive_seed(root_seed: int, *tokens) -> int:
    """Stable 64-bit stream seed from a root seed and task tokens."""
    text = "|".join(["mlatlab", str(int(root_seed))] + [str(t) for t in tokens])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream:
    """Seedable, platform-stable pseudo-random stream (single-owner state)."""

    algorithm = "mt19937"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._rng = random.Random(self.seed)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, algorithm={self.algorithm!r})"

    def random(self) -> float:
        return self._rng.random()

    def spawn(self, *tokens) -> "RngStream":
        """Independent child stream for a named task."""
        return RngStream(derive_seed(self.seed, *tokens))


def sample_uniform(lo: float, hi: float, rng: RngStream) -> float:
    """Uniform draw on [lo, hi]; never leaves the interval."""
    lo, hi = float(lo), float(hi)
    if math.isnan(lo) or math.isnan(hi) or lo > hi:
        raise DomainError(f"invalid uniform interval [{lo}, {hi}]")
    return lo + rng.random() * (hi - lo)


def _unit_ball_sample(rng: RngStream) -> Tuple[float, float, float]:
    # Rejection from the cube; the acceptance test is exact in decimal, so
    # accepted triples satisfy x^2+y^2+z^2 <= 1 as real numbers.
    while True:
        x = 2.0 * rng.random() - 1.0
        y = 2.0 * rng.random() - 1.0
        z = 2.0 * rng.random() - 1.0
        dx, dy, dz = Decimal(x), Decimal(y), Decimal(z)
        s = _EXACT.add(
            _EXACT.add(_EXACT.multiply(dx, dx), _EXACT.multiply(dy, dy)),
            _EXACT.multiply(dz, dz),
        )
        if s <= 1:
            return x, y, z


def sample_in_sphere(center: Sequence, radius, rng: RngStream) -> Tuple[Decimal, ...]:
    """Uniform point in the closed ball around ``center`` (exact support)."""
    r = _exact_decimal(radius)
    if not r.is_finite() or r < 0:
        raise DomainError(f"sphere radius must be >= 0, got {radius!r}")
    if len(center) != 3:
        raise DomainError("center must have 3 components")
    u = _unit_ball_sample(rng)
    return tuple(
        _EXACT.add(_exact_decimal(c), _EXACT.multiply(r, Decimal(ui)))
        for c, ui in zip(center, u)
    )


@dataclass(frozen=True)
class UncertaintyBudget:
    """Measurement and setup uncertainty budget (units in field names)."""

    delta1_um: float          # SMR-support positioning
    delta2_um: float          # optical aberration / coaxiality at the assumed misalignment
    u_rp_um: float            # combined SMR position uncertainty
    u_edlen_um_per_m: float   # interferometric length uncertainty per meter
    u_l_mm: float             # setup-value randomization radius
    sensors: SensorBudget

    def __post_init__(self):
        for name in ("delta1_um", "delta2_um", "u_rp_um", "u_edlen_um_per_m", "u_l_mm"):
            v = float(getattr(self, name))
            if v < 0 or math.isnan(v):
                raise DomainError(f"{name} must be >= 0, got {v!r}")

    @classmethod
    def build(
        cls,
        delta1_um: float,
        delta2_um: float,
        u_l_mm: float,
        sensors: SensorBudget,
        air: AirConditions,
        u_rp_um: Optional[float] = None,
        u_edlen_um_per_m: Optional[float] = None,
    ) -> "UncertaintyBudget":
        """Assemble the budget, deriving combined terms unless overridden."""
        if u_rp_um is None:
            u_rp_um = combine_rss([delta1_um, delta2_um])
        if u_edlen_um_per_m is None:
            u_edlen_um_per_m = length_uncertainty_per_meter(air, sensors)
        return cls(
            delta1_um=float(delta1_um),
            delta2_um=float(delta2_um),
            u_rp_um=float(u_rp_um),
            u_edlen_um_per_m=float(u_edlen_um_per_m),
            u_l_mm=float(u_l_mm),
            sensors=sensors,
        )

    @classmethod
    def zero(cls) -> "UncertaintyBudget":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, SensorBudget(0.0, 0.0, 0.0))


def simulate_length(
    point: TargetPoint,
    station: Station,
    budget: UncertaintyBudget,
    repeats: int,
    rng: RngStream,
    ctx: Optional[PrecisionContext] = None,
) -> Decimal:
    """Simulated interferometer reading of ``point`` from ``station`` (m).

    Per repeat: displace the SMR uniformly inside the ball of radius
    ``u_rp_um``; scale the resulting distance by ``1 + e*1e-6`` with ``e``
    uniform in ±``u_edlen_um_per_m`` (the per-meter wavelength-compensation
    error); subtract the station dead zone.  The mean of the repeats is
    returned.  Distance arithmetic runs in ``ctx`` (reference precision by
    default), so noise-free inputs reproduce nominal readings exactly.
    """
    if repeats < 1:
        raise DomainError("repeats must be >= 1")
    ctx = ctx or reference_context()
    u_rp_m = _EXACT.multiply(_exact_decimal(budget.u_rp_um), _MICRO)
    u_e = float(budget.u_edlen_um_per_m)
    total = Decimal(0)
    for _ in range(repeats):
        smr = sample_in_sphere(point.position, u_rp_m, rng)
        d = distance(ctx, smr, station.position)
        e = sample_uniform(-u_e, u_e, rng)
        factor = ctx.add(1, ctx.mul(Decimal(e), _MICRO))
        reading = ctx.sub(ctx.mul(d, factor), station.dead_zone)
        if reading <= 0:
            raise GeometryError(
                f"station {station.id} dead zone exceeds the distance to "
                f"point {point.id}"
            )
        # Exact accumulation; the mean rounds once, so identical repeats
        # average to exactly their common value.
        total = _EXACT.add(total, reading)
    return ctx.div(total, repeats)


def simulate_observations(
    config: NetworkConfig,
    budget: UncertaintyBudget,
    repeats: int,
    rng: RngStream,
    ctx: Optional[PrecisionContext] = None,
):
    """Station-major list of simulated observations for every (station, point)."""
    out = []
    for st in config.stations:
        for pt in config.points:
            out.append(
                Observation(
                    st.id, pt.id, simulate_length(pt, st, budget, repeats, rng, ctx)
                )
            )
    return out


def randomize_setup(
    config: NetworkConfig, u_l_mm, rng: RngStream
) -> Tuple[Decimal, ...]:
    """Starting values for the solver: nominals displaced within ``u_l_mm``.

    Each target point and each station with free coordinates is displaced by
    a uniform ball sample of radius ``u_l_mm`` (gauge-pinned axes stay
    exactly zero); each dead zone is displaced uniformly within the same
    half-range.  Draw order: stations in id order (ball where free, then
    dead zone), then points in id order.
    """
    u_l = _EXACT.multiply(_exact_decimal(u_l_mm), _MILLI)
    if not u_l.is_finite() or u_l < 0:
        raise DomainError(f"u_l_mm must be >= 0, got {u_l_mm!r}")
    stations = []
    for st in config.stations:
        free = gauge_free_axes(st.id)
        position = list(st.position)
        if free:
            ball = sample_in_sphere(st.position, u_l, rng)
            for axis in free:
                position[axis] = ball[axis]
        # Dead-zone offset as radius * unit keeps the support exact.
        unit = sample_uniform(-1.0, 1.0, rng)
        dz = _EXACT.add(st.dead_zone, _EXACT.multiply(u_l, Decimal(unit)))
        stations.append(Station(st.id, tuple(position), dz))
    points = [
        TargetPoint(pt.id, sample_in_sphere(pt.position, u_l, rng))
        for pt in config.points
    ]
    return pack(config, stations, points)
