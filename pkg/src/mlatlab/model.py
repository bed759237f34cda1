"""Multilateration network model.

Stations (tracking-interferometer positions with per-station laser dead
zones), target points, observation equations, and the gauge-fixed flat
parameter vector used by the solver.

Observation model: the instrument at station ``P_j`` reads
``L = |M_i - P_j| - Dz_j`` for target point ``M_i``, so the residual of an
observation is ``r = |M_i - P_j| - Dz_j - L``.

Gauge: the measurement frame is built from the first three stations.
Station 1 is pinned to the origin, station 2 to the x axis (its x stays
free, sign unconstrained), station 3 to the xy plane.  That removes the six
rigid-body freedoms, so the unknowns are ``4*POS + 3*PTS - 6``: the free
station coordinates, one dead zone per station, and three coordinates per
target point, packed in that order (stations first, each as free coords
then dead zone; then points).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ConfigurationError, DomainError, GeometryError, UnderdeterminedError
from .precision import PrecisionContext

Vec3 = Tuple[Decimal, Decimal, Decimal]

_ZERO = Decimal(0)
_NEG_ONE = Decimal(-1)


def _as_vec3(raw) -> Vec3:
    if len(raw) != 3:
        raise ConfigurationError(f"position must have 3 components, got {len(raw)}")
    out = tuple(v if isinstance(v, Decimal) else Decimal(str(v)) for v in raw)
    for v in out:
        if not v.is_finite():
            raise ConfigurationError(f"non-finite coordinate {v}")
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class Station:
    """A tracking-interferometer station: position (m) and laser dead zone (m)."""

    id: int
    position: Vec3
    dead_zone: Decimal

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position))
        dz = self.dead_zone
        if not isinstance(dz, Decimal):
            dz = Decimal(str(dz))
            object.__setattr__(self, "dead_zone", dz)
        if not dz.is_finite() or dz < 0:
            raise ConfigurationError(f"station {self.id}: dead zone must be >= 0, got {dz}")


@dataclass(frozen=True)
class TargetPoint:
    """A measured target point (SMR nest position), meters."""

    id: int
    position: Vec3

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position))


@dataclass(frozen=True)
class Observation:
    """One interferometric reading: station j sighting point i, length in m."""

    station_id: int
    point_id: int
    length: Decimal

    def __post_init__(self):
        length = self.length
        if not isinstance(length, Decimal):
            length = Decimal(str(length))
            object.__setattr__(self, "length", length)
        if not length.is_finite() or length < 0:
            raise DomainError(
                f"observation ({self.station_id},{self.point_id}): length must be >= 0"
            )


def _check_ids(kind: str, ids: Sequence[int]) -> None:
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise ConfigurationError(f"{kind} ids must be 1..{len(ids)} with no gaps")


@dataclass(frozen=True)
class NetworkConfig:
    """The measurement network: stations, target points, workspace extents (m)."""

    stations: Tuple[Station, ...]
    points: Tuple[TargetPoint, ...]
    workspace: Optional[Vec3] = None

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.stations) < 3:
            raise ConfigurationError("gauge frame requires at least three stations")
        if len(self.points) < 1:
            raise ConfigurationError("network needs at least one target point")
        _check_ids("station", [s.id for s in self.stations])
        _check_ids("point", [p.id for p in self.points])
        object.__setattr__(
            self, "stations", tuple(sorted(self.stations, key=lambda s: s.id))
        )
        object.__setattr__(
            self, "points", tuple(sorted(self.points, key=lambda p: p.id))
        )
        if self.workspace is not None:
            object.__setattr__(self, "workspace", _as_vec3(self.workspace))

    @property
    def pos(self) -> int:
        return len(self.stations)

    @property
    def pts(self) -> int:
        return len(self.points)

    def station(self, station_id: int) -> Station:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise DomainError(f"unknown station id {station_id}")

    def point(self, point_id: int) -> TargetPoint:
        for p in self.points:
            if p.id == point_id:
                return p
        raise DomainError(f"unknown point id {point_id}")


def count_unknowns(pos: int, pts: int) -> int:
    """Unknown count for the gauge-fixed network: 4*POS + 3*PTS - 6."""
    if pos < 3:
        raise ConfigurationError("gauge frame requires at least three stations")
    if pts < 1:
        raise ConfigurationError("network needs at least one target point")
    return 4 * pos + 3 * pts - 6


def count_equations(pos: int, pts: int) -> int:
    """Observation count when every station sights every point: POS*PTS."""
    if pos < 3:
        raise ConfigurationError("gauge frame requires at least three stations")
    if pts < 1:
        raise ConfigurationError("network needs at least one target point")
    return pos * pts


def degrees_of_freedom(pos: int, pts: int) -> int:
    """Equations minus unknowns; negative counts are rejected as unsolvable."""
    dof = count_equations(pos, pts) - count_unknowns(pos, pts)
    if dof < 0:
        raise UnderdeterminedError(
            f"{pos} stations x {pts} points gives {count_equations(pos, pts)} "
            f"equations for {count_unknowns(pos, pts)} unknowns (dof {dof})"
        )
    return dof


def gauge_free_axes(station_id: int) -> Tuple[int, ...]:
    """Axes of a station's position left free by the gauge (0=x, 1=y, 2=z)."""
    if station_id == 1:
        return ()
    if station_id == 2:
        return (0,)
    if station_id == 3:
        return (0, 1)
    return (0, 1, 2)


class ParameterLayout:
    """Index map between network entities and the flat parameter vector."""

    def __init__(self, config: NetworkConfig):
        self.config = config
        self.station_coord_index: Dict[Tuple[int, int], int] = {}
        self.station_dz_index: Dict[int, int] = {}
        self.point_coord_index: Dict[Tuple[int, int], int] = {}
        k = 0
        for st in config.stations:
            for axis in gauge_free_axes(st.id):
                self.station_coord_index[(st.id, axis)] = k
                k += 1
            self.station_dz_index[st.id] = k
            k += 1
        for pt in config.points:
            for axis in range(3):
                self.point_coord_index[(pt.id, axis)] = k
                k += 1
        self.size = k
        assert self.size == count_unknowns(config.pos, config.pts)


_LAYOUT_CACHE: Dict[int, ParameterLayout] = {}


def layout_for(config: NetworkConfig) -> ParameterLayout:
    key = id(config)
    cached = _LAYOUT_CACHE.get(key)
    if cached is None or cached.config is not config:
        cached = ParameterLayout(config)
        _LAYOUT_CACHE.clear()
        _LAYOUT_CACHE[key] = cached
    return cached


def pack(
    config: NetworkConfig,
    stations: Optional[Sequence[Station]] = None,
    points: Optional[Sequence[TargetPoint]] = None,
) -> Tuple[Decimal, ...]:
    """Flatten station/point estimates into the gauge-fixed parameter vector.

    Estimates default to the nominal configuration.  Gauge-pinned
    coordinates must be exactly zero; anything else is a structural error,
    because the estimate would live outside the parameterization.
    """
    stations = config.stations if stations is None else list(stations)
    points = config.points if points is None else list(points)
    if len(stations) != config.pos or len(points) != config.pts:
        raise ConfigurationError("estimate counts do not match the network dimensions")
    values: List[Decimal] = []
    for st in sorted(stations, key=lambda s: s.id):
        free = gauge_free_axes(st.id)
        for axis in range(3):
            if axis in free:
                continue
            if st.position[axis] != 0:
                raise ConfigurationError(
                    f"station {st.id}: axis {'xyz'[axis]} is pinned by the gauge "
                    f"and must be exactly 0, got {st.position[axis]}"
                )
        values.extend(st.position[axis] for axis in free)
        values.append(st.dead_zone)
    for pt in sorted(points, key=lambda p: p.id):
        values.extend(pt.position)
    return tuple(values)


def unpack(
    config: NetworkConfig, params: Sequence[Decimal]
) -> Tuple[Tuple[Station, ...], Tuple[TargetPoint, ...]]:
    """Rebuild station/point estimates from a flat parameter vector."""
    lay = layout_for(config)
    if len(params) != lay.size:
        raise ConfigurationError(
            f"parameter vector has length {len(params)}, expected {lay.size}"
        )
    stations: List[Station] = []
    for st in config.stations:
        coords = []
        for axis in range(3):
            idx = lay.station_coord_index.get((st.id, axis))
            coords.append(_ZERO if idx is None else params[idx])
        stations.append(
            Station(st.id, tuple(coords), params[lay.station_dz_index[st.id]])
        )
    points: List[TargetPoint] = []
    for pt in config.points:
        base = lay.point_coord_index[(pt.id, 0)]
        points.append(TargetPoint(pt.id, tuple(params[base : base + 3])))
    return tuple(stations), tuple(points)


def distance(ctx: PrecisionContext, a: Vec3, b: Vec3) -> Decimal:
    """Euclidean distance evaluated entirely in ``ctx``."""
    sub, mul, add = ctx.sub, ctx.mul, ctx.add
    dx = sub(a[0], b[0])
    dy = sub(a[1], b[1])
    dz = sub(a[2], b[2])
    s = add(add(mul(dx, dx), mul(dy, dy)), mul(dz, dz))
    return ctx.sqrt(s)


def _observation_geometry(
    config: NetworkConfig, params: Sequence[Decimal], obs: Observation
):
    lay = layout_for(config)
    if len(params) != lay.size:
        raise ConfigurationError(
            f"parameter vector has length {len(params)}, expected {lay.size}"
        )
    st = config.station(obs.station_id)
    config.point(obs.point_id)
    point_base = lay.point_coord_index[(obs.point_id, 0)]
    m = tuple(params[point_base : point_base + 3])
    p = []
    for axis in range(3):
        idx = lay.station_coord_index.get((st.id, axis))
        p.append(_ZERO if idx is None else params[idx])
    dz = params[lay.station_dz_index[st.id]]
    return lay, m, tuple(p), dz, point_base


def residual(
    config: NetworkConfig,
    params: Sequence[Decimal],
    obs: Observation,
    ctx: PrecisionContext,
) -> Decimal:
    """Residual ``|M_i - P_j| - Dz_j - L`` of one observation, in ``ctx``."""
    _, m, p, dz, _ = _observation_geometry(config, params, obs)
    d = distance(ctx, m, p)
    return ctx.sub(ctx.sub(d, dz), obs.length)


def jacobian_entries(
    config: NetworkConfig,
    params: Sequence[Decimal],
    obs: Observation,
    ctx: PrecisionContext,
) -> List[Tuple[int, Decimal]]:
    """Sparse residual partials for one observation as (index, value) pairs.

    Partials: unit vector ``u = (M - P)/|M - P|`` for the point coordinates,
    ``-u`` for the station's free coordinates, ``-1`` for the dead zone.
    """
    lay, m, p, _, point_base = _observation_geometry(config, params, obs)
    sub, div = ctx.sub, ctx.div
    diff = (sub(m[0], p[0]), sub(m[1], p[1]), sub(m[2], p[2]))
    d = distance(ctx, m, p)
    if d == 0:
        raise GeometryError(
            f"point {obs.point_id} coincides with station {obs.station_id}; "
            "direction is undefined"
        )
    u = tuple(div(c, d) for c in diff)
    entries: List[Tuple[int, Decimal]] = [
        (point_base + axis, u[axis]) for axis in range(3)
    ]
    for axis in gauge_free_axes(obs.station_id):
        entries.append(
            (lay.station_coord_index[(obs.station_id, axis)], u[axis].copy_negate())
        )
    entries.append((lay.station_dz_index[obs.station_id], _NEG_ONE))
    return entries


def jacobian_row(
    config: NetworkConfig,
    params: Sequence[Decimal],
    obs: Observation,
    ctx: PrecisionContext,
) -> List[Decimal]:
    """Dense residual gradient of one observation (length = unknown count)."""
    row = [_ZERO] * layout_for(config).size
    for idx, val in jacobian_entries(config, params, obs, ctx):
        row[idx] = val
    return row


def all_pair_observations(
    config: NetworkConfig, lengths: Dict[Tuple[int, int], Decimal]
) -> List[Observation]:
    """Build the station-major observation list from a (station, point) -> length map."""
    out = []
    for st in config.stations:
        for pt in config.points:
            out.append(Observation(st.id, pt.id, lengths[(st.id, pt.id)]))
    return out


def nominal_lengths(
    config: NetworkConfig, ctx: PrecisionContext
) -> Dict[Tuple[int, int], Decimal]:
    """Noise-free instrument readings ``|M - P| - Dz`` for every pair, in ``ctx``."""
    out: Dict[Tuple[int, int], Decimal] = {}
    for st in config.stations:
        for pt in config.points:
            d = distance(ctx, pt.position, st.position)
            out[(st.id, pt.id)] = ctx.sub(d, st.dead_zone)
    return out
