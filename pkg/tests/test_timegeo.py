import itertools
import math
import random

import pytest

from conftest import day_plan, equator_poi, make_instance
from tripeval.model import ALL_DAY, TimeWindow
from tripeval.timegeo import (
    EARTH_RADIUS_KM,
    DistanceMatrix,
    MalformedTimeSpec,
    format_time_spec,
    haversine_km,
    nearest_neighbor_path,
    parse_time_spec,
    path_length,
    plan_travel_km,
    shortest_open_path,
    two_opt_path,
)


# ---------------------------------------------------------------------------
# parse_time_spec / format_time_spec


def test_parse_plain_range():
    assert parse_time_spec("9:00-14:00") == TimeWindow(540, 840)


def test_parse_all_day_spellings():
    assert parse_time_spec("0:00-24:00") == ALL_DAY
    assert parse_time_spec("Open All Day") == ALL_DAY
    assert parse_time_spec("open all day.") == ALL_DAY


def test_parse_wrapping_window():
    window = parse_time_spec("22:00-2:00")
    assert window == TimeWindow(1320, 120, wraps_midnight=True)


def test_parse_rejects_garbage():
    for bad in ("whenever", "25:00-26:00", "9:0-14:00", "9:61-14:00", ""):
        with pytest.raises(MalformedTimeSpec):
            parse_time_spec(bad)


def test_format_parse_round_trip():
    rng = random.Random(7)
    windows = [ALL_DAY]
    for _ in range(50):
        a, b = sorted(rng.sample(range(0, 1440), 2))
        windows.append(TimeWindow(a, b))
        windows.append(TimeWindow(b, a, wraps_midnight=True))
    for window in windows:
        assert parse_time_spec(format_time_spec(window)) == window


# ---------------------------------------------------------------------------
# haversine


def test_haversine_identity():
    assert haversine_km(12.3, 45.6, 12.3, 45.6) == 0.0


def test_haversine_one_degree_on_equator():
    # One degree of longitude on the equator is R * pi / 180.
    assert haversine_km(0, 0, 0, 1) == pytest.approx(111.19, abs=0.01)


def test_haversine_antipodal():
    assert haversine_km(0, 0, 0, 180) == pytest.approx(math.pi * EARTH_RADIUS_KM, abs=0.01)


def test_haversine_symmetry():
    rng = random.Random(3)
    for _ in range(25):
        a = (rng.uniform(-90, 90), rng.uniform(-180, 180))
        b = (rng.uniform(-90, 90), rng.uniform(-180, 180))
        assert haversine_km(*a, *b) == pytest.approx(haversine_km(*b, *a), abs=1e-9)
        assert haversine_km(*a, *b) >= 0


# ---------------------------------------------------------------------------
# DistanceMatrix


def test_distance_matrix_validation():
    with pytest.raises(ValueError):
        DistanceMatrix(((0.0, 1.0), (2.0, 0.0)))  # asymmetric
    with pytest.raises(ValueError):
        DistanceMatrix(((1.0,),))  # nonzero diagonal
    with pytest.raises(ValueError):
        DistanceMatrix(((0.0, -1.0), (-1.0, 0.0)))  # negative


def random_matrix(rng, n, scale=50.0):
    rows = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = rng.random() * scale
            rows[i][j] = rows[j][i] = d
    return DistanceMatrix(tuple(tuple(r) for r in rows))


def brute_force_open_path(m):
    best = math.inf
    for perm in itertools.permutations(range(m.n)):
        if perm[0] > perm[-1]:
            continue  # a path equals its reversal
        best = min(best, path_length(m, perm))
    return best


# ---------------------------------------------------------------------------
# shortest_open_path


def test_single_node_path():
    order, length = shortest_open_path(DistanceMatrix(((0.0,),)))
    assert order == [0]
    assert length == 0.0


def test_collinear_four_points():
    pois = [equator_poi(f"P{k}", float(k)) for k in range(4)]
    m = DistanceMatrix.from_points([(p.lat, p.lon) for p in pois])
    order, length = shortest_open_path(m)
    assert length == pytest.approx(brute_force_open_path(m), abs=1e-9)
    assert length == pytest.approx(3.0, abs=1e-6)
    assert order in ([0, 1, 2, 3], [3, 2, 1, 0])


def test_exact_solver_matches_brute_force_n8():
    rng = random.Random(11)
    for _ in range(12):
        m = random_matrix(rng, 8)
        order, length = shortest_open_path(m)
        assert sorted(order) == list(range(8))
        assert length == pytest.approx(path_length(m, order), abs=1e-9)
        assert length == pytest.approx(brute_force_open_path(m), abs=1e-9)


def test_returned_length_matches_returned_order_beyond_exact_regime():
    rng = random.Random(13)
    m = random_matrix(rng, 16)
    order, length = shortest_open_path(m)
    assert sorted(order) == list(range(16))
    assert length == pytest.approx(path_length(m, order), abs=1e-9)


def test_two_opt_never_worse_than_nearest_neighbor():
    rng = random.Random(17)
    for _ in range(20):
        m = random_matrix(rng, rng.randint(4, 15))
        nn_order, nn_length = nearest_neighbor_path(m)
        _, improved = two_opt_path(m, nn_order)
        assert improved <= nn_length + 1e-9


def test_optimum_lower_bounds_single_day_orders():
    rng = random.Random(19)
    for _ in range(10):
        n = rng.randint(2, 9)
        m = random_matrix(rng, n)
        _, optimum = shortest_open_path(m)
        for _ in range(10):
            perm = rng.sample(range(n), n)
            assert optimum <= path_length(m, perm) + 1e-9


# ---------------------------------------------------------------------------
# plan_travel_km


def test_one_poi_per_day_travels_nothing():
    pois = [equator_poi("A", 0.0), equator_poi("B", 10.0)]
    instance = make_instance(pois)
    plan = day_plan([("A", 540, 600)], [("B", 540, 600)])
    assert plan_travel_km(plan, instance) == 0.0


def test_collinear_day_travel(four_collinear):
    instance = make_instance(four_collinear)
    plan = day_plan([("P0", 540, 600), ("P2", 620, 680), ("P1", 700, 760), ("P3", 780, 840)])
    assert plan_travel_km(plan, instance) == pytest.approx(5.0, abs=1e-6)


def test_hallucinated_entry_is_skipped(four_collinear):
    instance = make_instance(four_collinear)
    plan = day_plan([("P0", 540, 600), ("Ghost", 620, 680), ("P1", 700, 760)])
    direct = day_plan([("P0", 540, 600), ("P1", 700, 760)])
    assert plan_travel_km(plan, instance) == pytest.approx(plan_travel_km(direct, instance), abs=1e-12)
    assert plan_travel_km(plan, instance) == pytest.approx(1.0, abs=1e-6)
