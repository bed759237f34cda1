"""Damped nonlinear least-squares solver executed inside a PrecisionContext.

Levenberg-Marquardt with multiplicative damping on the normal-equations
diagonal.  Every numeric step (residuals, Jacobian, normal equations,
Cholesky factorization, substitutions, norms) runs through the context, so
the solve bottoms out at the rounding floor of the configured digit count
instead of the host's native float precision.

Two entry points share the iteration core: :func:`solve` adjusts the full
gauge-fixed network (station coordinates, dead zones, point coordinates)
and :func:`solve_points` locates target points under known, calibrated
stations (the classic sphere-intersection problem).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import List, Optional, Sequence, Tuple

from .errors import ConfigurationError, DomainError, RankDeficiencyError, UnderdeterminedError
from .model import (
    NetworkConfig,
    Observation,
    TargetPoint,
    count_unknowns,
    gauge_free_axes,
    layout_for,
)
from .precision import PrecisionContext

_ZERO = Decimal(0)
_ONE = Decimal(1)
_NEG_ONE = Decimal(-1)


def _as_option_decimal(name: str, value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, (int, float, str)):
        return Decimal(str(value))
    raise ConfigurationError(f"{name} must be numeric, got {value!r}")


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    convergence_tolerance: Optional[Decimal] = None  # default 10**(2 - digits)
    initial_damping: Decimal = Decimal("0.001")
    damping_increase: Decimal = Decimal(10)
    damping_decrease: Decimal = Decimal("0.5")

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        for name in ("initial_damping", "damping_increase", "damping_decrease"):
            object.__setattr__(self, name, _as_option_decimal(name, getattr(self, name)))
        if self.convergence_tolerance is not None:
            tol = _as_option_decimal("convergence_tolerance", self.convergence_tolerance)
            if not tol > 0:
                raise ConfigurationError("convergence_tolerance must be > 0")
            object.__setattr__(self, "convergence_tolerance", tol)
        if self.initial_damping < 0:
            raise ConfigurationError("initial_damping must be >= 0")
        if not self.damping_increase > 1:
            raise ConfigurationError("damping_increase must be > 1")
        if not (0 < self.damping_decrease < 1):
            raise ConfigurationError("damping_decrease must be in (0, 1)")

    def tolerance_for(self, ctx: PrecisionContext) -> Decimal:
        if self.convergence_tolerance is not None:
            return self.convergence_tolerance
        return Decimal(f"1E{2 - ctx.digits}")


@dataclass(frozen=True)
class SolutionReport:
    """Outcome of one least-squares adjustment."""

    solved_params: Tuple[Decimal, ...]
    residual_norm: Decimal
    iterations: int
    converged: bool
    digits_used: int
    accepted_costs: Tuple[Decimal, ...] = field(repr=False, default=())


class _NetworkProblem:
    """Residuals/Jacobian of the full self-calibrating network."""

    def __init__(self, config: NetworkConfig, observations, ctx: PrecisionContext):
        lay = layout_for(config)
        self.ctx = ctx
        self.n = lay.size
        self.rows = []
        for obs in observations:
            st = config.station(obs.station_id)
            config.point(obs.point_id)
            point_base = lay.point_coord_index[(obs.point_id, 0)]
            free = gauge_free_axes(st.id)
            coord_idx = tuple(
                lay.station_coord_index[(st.id, a)] if a in free else None
                for a in range(3)
            )
            self.rows.append(
                (
                    point_base,
                    coord_idx,
                    lay.station_dz_index[st.id],
                    ctx.round(obs.length),
                )
            )

    def _geom(self, x, row):
        ctx = self.ctx
        sub, mul, add = ctx.sub, ctx.mul, ctx.add
        point_base, coord_idx, dz_idx, length = row
        diff = []
        for a in range(3):
            m = x[point_base + a]
            idx = coord_idx[a]
            p = _ZERO if idx is None else x[idx]
            diff.append(sub(m, p))
        s = add(add(mul(diff[0], diff[0]), mul(diff[1], diff[1])), mul(diff[2], diff[2]))
        d = ctx.sqrt(s)
        return diff, d, dz_idx, length

    def residuals(self, x) -> List[Decimal]:
        ctx = self.ctx
        sub = ctx.sub
        out = []
        for row in self.rows:
            _, d, dz_idx, length = self._geom(x, row)
            out.append(sub(sub(d, x[dz_idx]), length))
        return out

    def jac_entries(self, x):
        ctx = self.ctx
        div = ctx.div
        out = []
        for row in self.rows:
            diff, d, dz_idx, _ = self._geom(x, row)
            if d == 0:
                raise RankDeficiencyError(
                    "point and station coincide; Jacobian row undefined"
                )
            point_base, coord_idx, _, _ = row
            entries = []
            for a in range(3):
                u = div(diff[a], d)
                entries.append((point_base + a, u))
                if coord_idx[a] is not None:
                    entries.append((coord_idx[a], u.copy_negate()))
            entries.append((dz_idx, _NEG_ONE))
            out.append(entries)
        return out


class _FixedStationProblem:
    """Residuals/Jacobian for point location under known stations."""

    def __init__(self, config: NetworkConfig, observations, ctx: PrecisionContext):
        self.ctx = ctx
        self.n = 3 * config.pts
        base_of = {pt.id: 3 * k for k, pt in enumerate(config.points)}
        self.rows = []
        for obs in observations:
            st = config.station(obs.station_id)
            config.point(obs.point_id)
            self.rows.append(
                (
                    base_of[obs.point_id],
                    tuple(ctx.round(c) for c in st.position),
                    ctx.round(st.dead_zone),
                    ctx.round(obs.length),
                )
            )

    def _geom(self, x, row):
        ctx = self.ctx
        sub, mul, add = ctx.sub, ctx.mul, ctx.add
        base, p, dz, length = row
        diff = [sub(x[base + a], p[a]) for a in range(3)]
        s = add(add(mul(diff[0], diff[0]), mul(diff[1], diff[1])), mul(diff[2], diff[2]))
        return diff, ctx.sqrt(s), dz, length

    def residuals(self, x) -> List[Decimal]:
        sub = self.ctx.sub
        out = []
        for row in self.rows:
            _, d, dz, length = self._geom(x, row)
            out.append(sub(sub(d, dz), length))
        return out

    def jac_entries(self, x):
        div = self.ctx.div
        out = []
        for row in self.rows:
            diff, d, _, _ = self._geom(x, row)
            if d == 0:
                raise RankDeficiencyError(
                    "point and station coincide; Jacobian row undefined"
                )
            base = row[0]
            out.append([(base + a, div(diff[a], d)) for a in range(3)])
        return out


def _normal_equations(ctx: PrecisionContext, entries_rows, residuals, n: int):
    add, mul = ctx.add, ctx.mul
    H = [[_ZERO] * n for _ in range(n)]
    g = [_ZERO] * n
    for entries, r in zip(entries_rows, residuals):
        for a, va in entries:
            g[a] = add(g[a], mul(va, r))
            Ha = H[a]
            for b, vb in entries:
                if b >= a:
                    Ha[b] = add(Ha[b], mul(va, vb))
    for i in range(n):
        Hi = H[i]
        for j in range(i):
            Hi[j] = H[j][i]
    return H, g


def _solve_damped(ctx: PrecisionContext, H, g, lam: Decimal, iteration: int):
    """Solve (H + lam*diag(H)) d = -g by Cholesky factorization in ``ctx``."""
    n = len(g)
    add, sub, mul, div, sqrt = ctx.add, ctx.sub, ctx.mul, ctx.div, ctx.sqrt
    scale = add(_ONE, lam)
    A = [row[:] for row in H]
    for i in range(n):
        A[i][i] = mul(A[i][i], scale)
    for j in range(n):
        Aj = A[j]
        d = Aj[j]
        for k in range(j):
            d = sub(d, mul(Aj[k], Aj[k]))
        if not d > 0:
            raise RankDeficiencyError(
                f"normal matrix not positive definite at iteration {iteration}"
            )
        ljj = sqrt(d)
        Aj[j] = ljj
        for i in range(j + 1, n):
            Ai = A[i]
            s = Ai[j]
            for k in range(j):
                s = sub(s, mul(Ai[k], Aj[k]))
            Ai[j] = div(s, ljj)
    z: List[Decimal] = [_ZERO] * n
    for i in range(n):
        Ai = A[i]
        s = g[i].copy_negate()
        for k in range(i):
            s = sub(s, mul(Ai[k], z[k]))
        z[i] = div(s, Ai[i])
    delta: List[Decimal] = [_ZERO] * n
    for i in range(n - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, n):
            s = sub(s, mul(A[k][i], delta[k]))
        delta[i] = div(s, A[i][i])
    return delta


def _levenberg_marquardt(problem, initial, ctx: PrecisionContext, opts: SolverOptions):
    add, mul = ctx.add, ctx.mul
    tol = opts.tolerance_for(ctx)
    x = [ctx.round(v) for v in initial]
    r = problem.residuals(x)
    cost = ctx.dot(r, r)
    accepted = [cost]
    lam = opts.initial_damping
    H = g = None
    converged = False
    iterations = 0
    for it in range(1, opts.max_iterations + 1):
        iterations = it
        if H is None:
            H, g = _normal_equations(ctx, problem.jac_entries(x), r, problem.n)
        delta = _solve_damped(ctx, H, g, lam, it)
        xnorm = ctx.norm(x)
        denom = xnorm if xnorm > 1 else _ONE
        rel_step = ctx.div(ctx.norm(delta), denom)
        x_try = [add(xi, di) for xi, di in zip(x, delta)]
        r_try = problem.residuals(x_try)
        cost_try = ctx.dot(r_try, r_try)
        if cost_try <= cost:
            x, r, cost = x_try, r_try, cost_try
            accepted.append(cost)
            lam = mul(lam, opts.damping_decrease)
            H = g = None
        else:
            lam = mul(lam, opts.damping_increase)
        if rel_step <= tol:
            converged = True
            break
    return SolutionReport(
        solved_params=tuple(x),
        residual_norm=ctx.sqrt(cost),
        iterations=iterations,
        converged=converged,
        digits_used=ctx.digits,
        accepted_costs=tuple(accepted),
    )


def _check_observations(observations: Sequence[Observation], needed: int) -> None:
    if len(observations) < needed:
        raise UnderdeterminedError(
            f"{len(observations)} observations cannot determine {needed} unknowns"
        )
    seen = set()
    for obs in observations:
        key = (obs.station_id, obs.point_id)
        if key in seen:
            raise DomainError(f"duplicate observation for station/point pair {key}")
        seen.add(key)


def solve(
    config: NetworkConfig,
    observations: Sequence[Observation],
    initial: Sequence[Decimal],
    ctx: PrecisionContext,
    options: Optional[SolverOptions] = None,
) -> SolutionReport:
    """Adjust the full network (stations, dead zones, points) to the observations.

    ``initial`` is the packed gauge-fixed parameter vector of starting
    values; it is rounded into ``ctx`` once, before iteration.  Failure to
    converge is reported via ``converged=False``, not raised; a singular
    normal matrix raises :class:`RankDeficiencyError`.
    """
    opts = options or SolverOptions()
    n = count_unknowns(config.pos, config.pts)
    if len(initial) != n:
        raise ConfigurationError(
            f"initial vector has length {len(initial)}, expected {n}"
        )
    _check_observations(observations, n)
    problem = _NetworkProblem(config, observations, ctx)
    return _levenberg_marquardt(problem, initial, ctx, opts)


def solve_points(
    config: NetworkConfig,
    observations: Sequence[Observation],
    initial_points: Sequence[TargetPoint],
    ctx: PrecisionContext,
    options: Optional[SolverOptions] = None,
) -> SolutionReport:
    """Locate target points treating station positions and dead zones as known.

    The parameter vector is the flat (x, y, z) list of the points in id
    order; station constants are rounded into ``ctx`` once at setup.
    """
    opts = options or SolverOptions()
    n = 3 * config.pts
    pts = sorted(initial_points, key=lambda p: p.id)
    if [p.id for p in pts] != [p.id for p in config.points]:
        raise ConfigurationError("initial point estimates must cover the config points")
    _check_observations(observations, n)
    initial = [c for p in pts for c in p.position]
    problem = _FixedStationProblem(config, observations, ctx)
    return _levenberg_marquardt(problem, initial, ctx, opts)


def points_from_vector(
    config: NetworkConfig, params: Sequence[Decimal]
) -> Tuple[TargetPoint, ...]:
    """Rebuild TargetPoint estimates from a solve_points parameter vector."""
    if len(params) != 3 * config.pts:
        raise ConfigurationError(
            f"point vector has length {len(params)}, expected {3 * config.pts}"
        )
    return tuple(
        TargetPoint(pt.id, tuple(params[3 * k : 3 * k + 3]))
        for k, pt in enumerate(config.points)
    )
