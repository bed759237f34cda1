import random
from decimal import Decimal

import pytest

from conftest import D, compact_network, table1_network
from mlatlab.errors import (
    ConfigurationError,
    DomainError,
    GeometryError,
    UnderdeterminedError,
)
from mlatlab.model import (
    NetworkConfig,
    Observation,
    Station,
    TargetPoint,
    all_pair_observations,
    count_equations,
    count_unknowns,
    degrees_of_freedom,
    distance,
    jacobian_entries,
    jacobian_row,
    nominal_lengths,
    pack,
    residual,
    unpack,
)
from mlatlab.precision import make_context, reference_context


def test_count_unknowns_examples():
    assert count_unknowns(5, 7) == 35
    assert count_unknowns(5, 11) == 47
    assert count_unknowns(3, 1) == 9


def test_count_equations_examples():
    assert count_equations(5, 7) == 35
    assert count_equations(5, 11) == 55
    assert count_equations(3, 1) == 3


def test_degrees_of_freedom_examples():
    assert degrees_of_freedom(5, 11) == 8
    assert degrees_of_freedom(5, 7) == 0
    with pytest.raises(UnderdeterminedError):
        degrees_of_freedom(3, 1)


def test_counting_rejects_too_few_stations():
    with pytest.raises(ConfigurationError):
        count_unknowns(2, 5)
    with pytest.raises(ConfigurationError):
        count_equations(2, 5)
    with pytest.raises(ConfigurationError):
        count_unknowns(5, 0)


def test_dof_identity_over_grid():
    for pos in range(3, 8):
        for pts in range(1, 13):
            eq, unk = count_equations(pos, pts), count_unknowns(pos, pts)
            if eq >= unk:
                assert degrees_of_freedom(pos, pts) == eq - unk
            else:
                with pytest.raises(UnderdeterminedError):
                    degrees_of_freedom(pos, pts)


def _one_point_network(point_pos, dz="0"):
    stations = (
        Station(1, (0, 0, 0), D(dz)),
        Station(2, (D(8), 0, 0), D(0)),
        Station(3, (0, D(8), 0), D(0)),
    )
    return NetworkConfig(stations, (TargetPoint(1, point_pos),))


def test_residual_three_four_five():
    cfg = _one_point_network((3, 4, 0))
    ctx = make_context(20)
    params = pack(cfg)
    obs = Observation(1, 1, D(5))
    assert residual(cfg, params, obs, ctx) == 0


def test_residual_with_dead_zone():
    cfg = _one_point_network((3, 4, 0), dz="0.020458")
    ctx = make_context(20)
    params = pack(cfg)
    obs = Observation(1, 1, D("4.979542"))
    assert residual(cfg, params, obs, ctx) == 0


def test_residual_zero_distance():
    cfg = _one_point_network((0, 0, 0))
    ctx = make_context(20)
    params = pack(cfg)
    obs = Observation(1, 1, D(1))
    assert residual(cfg, params, obs, ctx) == -1


def test_residual_unknown_ids():
    cfg = _one_point_network((3, 4, 0))
    params = pack(cfg)
    ctx = make_context(20)
    with pytest.raises(DomainError):
        residual(cfg, params, Observation(9, 1, D(1)), ctx)
    with pytest.raises(DomainError):
        residual(cfg, params, Observation(1, 9, D(1)), ctx)


def test_jacobian_unit_direction():
    cfg = _one_point_network((1, 0, 0))
    ctx = make_context(20)
    params = pack(cfg)
    lay_size = len(params)
    row = jacobian_row(cfg, params, Observation(1, 1, D(1)), ctx)
    assert len(row) == lay_size
    # Station 1 contributes no coordinates; point 1 occupies the last 3 slots.
    assert row[-3:] == [Decimal(1), Decimal(0), Decimal(0)]
    # Dead zone partial of station 1.
    assert row[0] == -1


def test_jacobian_point_station_pairs_cancel():
    cfg = compact_network()
    ctx = make_context(25)
    params = pack(cfg)
    obs = Observation(4, 2, D(1))  # station 4: all coordinates free
    entries = dict(jacobian_entries(cfg, params, obs, ctx))
    from mlatlab.model import layout_for

    lay = layout_for(cfg)
    for axis in range(3):
        u_pt = entries[lay.point_coord_index[(2, axis)]]
        u_st = entries[lay.station_coord_index[(4, axis)]]
        assert u_pt == -u_st


def test_jacobian_coincident_geometry_rejected():
    cfg = _one_point_network((0, 0, 0))
    ctx = make_context(20)
    with pytest.raises(GeometryError):
        jacobian_row(cfg, pack(cfg), Observation(1, 1, D(1)), ctx)


def fd_jacobian_row(config, params, obs, ctx, rel_step=Decimal("1e-10")):
    """Central finite differences of the residual; independent oracle."""
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
        rp = residual(config, plus, obs, ctx)
        rm = residual(config, minus, obs, ctx)
        row.append(ctx.div(ctx.sub(rp, rm), ctx.mul(2, step)))
    return row


def _assert_rows_close(analytic, numeric, rel_tol):
    for a, f in zip(analytic, numeric):
        diff = float(abs(Decimal(a) - Decimal(f)))
        scale = max(abs(float(a)), abs(float(f)), 1e-30)
        assert diff <= rel_tol * scale, (a, f)


def test_jacobian_matches_finite_differences_example():
    cfg = compact_network()
    ctx = make_context(30)
    rng = random.Random(7)
    params = [
        ctx.add(v, Decimal(str(rng.uniform(-1e-4, 1e-4)))) for v in pack(cfg)
    ]
    obs = Observation(3, 5, D("1.25"))
    _assert_rows_close(
        jacobian_row(cfg, params, obs, ctx),
        fd_jacobian_row(cfg, params, obs, ctx),
        1e-12,
    )


def test_jacobian_matches_finite_differences_property():
    cfg = compact_network()
    ctx = make_context(30)
    rng = random.Random(2024)
    base = pack(cfg)
    for _ in range(12):
        params = [
            ctx.add(v, Decimal(str(rng.uniform(-5e-4, 5e-4)))) for v in base
        ]
        sid = rng.randint(1, cfg.pos)
        pid = rng.randint(1, cfg.pts)
        obs = Observation(sid, pid, D(str(rng.uniform(0.5, 3.0))))
        _assert_rows_close(
            jacobian_row(cfg, params, obs, ctx),
            fd_jacobian_row(cfg, params, obs, ctx),
            1e-10,
        )


def test_pack_lengths():
    from conftest import known_station_network

    assert len(pack(table1_network())) == 47
    assert len(pack(compact_network())) == 35
    assert len(pack(known_station_network())) == 27


def test_pack_unpack_roundtrip():
    cfg = compact_network()
    params = pack(cfg)
    stations, points = unpack(cfg, params)
    assert pack(cfg, stations, points) == params
    # And starting from entity estimates.
    st2, pt2 = unpack(cfg, pack(cfg, stations, points))
    assert st2 == stations and pt2 == points


def test_pack_rejects_gauge_violation():
    cfg = compact_network()
    stations = list(cfg.stations)
    bad = Station(1, (D("0.001"), D(0), D(0)), stations[0].dead_zone)
    stations[0] = bad
    with pytest.raises(ConfigurationError, match="pinned"):
        pack(cfg, stations, cfg.points)


def test_unpack_rejects_wrong_length():
    cfg = compact_network()
    with pytest.raises(ConfigurationError):
        unpack(cfg, pack(cfg)[:-1])


def test_table1_network_satisfies_gauge():
    cfg = table1_network()
    assert len(pack(cfg)) == 47
    assert degrees_of_freedom(cfg.pos, cfg.pts) == 8


def test_network_config_validation():
    st = [
        Station(1, (0, 0, 0), D(0)),
        Station(2, (1, 0, 0), D(0)),
        Station(3, (0, 1, 0), D(0)),
    ]
    with pytest.raises(ConfigurationError):
        NetworkConfig(st[:2], (TargetPoint(1, (1, 1, 1)),))
    with pytest.raises(ConfigurationError):
        NetworkConfig(st, ())
    with pytest.raises(ConfigurationError):
        NetworkConfig(st, (TargetPoint(2, (1, 1, 1)),))
    with pytest.raises(ConfigurationError):
        Station(1, (0, 0), D(0))
    with pytest.raises(ConfigurationError):
        Station(1, (0, 0, 0), D(-1))
    with pytest.raises(DomainError):
        Observation(1, 1, D(-2))


def test_residual_at_truth_bounded_by_context_rounding():
    cfg = table1_network()
    ref = reference_context()
    lengths = nominal_lengths(cfg, ref)
    observations = all_pair_observations(cfg, lengths)
    for digits in (10, 16, 20):
        ctx = make_context(digits)
        params = tuple(ctx.round(v) for v in pack(cfg))
        bound_unit = Decimal(10) ** (2 - digits)
        for obs in observations:
            obs_d = Observation(obs.station_id, obs.point_id, ctx.round(obs.length))
            r = residual(cfg, params, obs_d, ctx)
            d = distance(
                ref,
                cfg.point(obs.point_id).position,
                cfg.station(obs.station_id).position,
            )
            scale = d if d > 1 else Decimal(1)
            assert r.copy_abs() <= bound_unit * scale


def test_nominal_lengths_positive_and_station_major():
    cfg = table1_network()
    ref = reference_context()
    lengths = nominal_lengths(cfg, ref)
    assert len(lengths) == 55
    assert all(v > 0 for v in lengths.values())
    obs = all_pair_observations(cfg, lengths)
    assert [o.station_id for o in obs[:11]] == [1] * 11
    assert [o.point_id for o in obs[:3]] == [1, 2, 3]
