import math

import pytest

from tripeval.model import (
    ALL_DAY,
    ConstraintKind,
    DatasetInstance,
    Plan,
    PlanEntry,
    Poi,
    Query,
    Trajectory,
)
from tripeval.timegeo import EARTH_RADIUS_KM

# Degrees of longitude per kilometer along the equator; lets tests place POIs
# at exact kilometer marks so haversine legs come out as whole numbers.
DEG_PER_KM = 180.0 / (math.pi * EARTH_RADIUS_KM)


def make_poi(
    name,
    lat=0.0,
    lon=0.0,
    opening=None,
    recommended=None,
    expected_h=2.0,
    description="Historical & Cultural Heritage highlight.",
):
    return Poi(
        name=name,
        address=f"1 {name} Road",
        lat=lat,
        lon=lon,
        opening_hours=opening or ALL_DAY,
        recommended_visit=recommended,
        expected_duration_h=expected_h,
        description=description,
    )


def equator_poi(name, km, **kwargs):
    """POI sitting km kilometers east of the origin along the equator."""
    return make_poi(name, lat=0.0, lon=km * DEG_PER_KM, **kwargs)


def make_query(
    qid="q1",
    city="Hangzhou",
    days=3,
    kind=ConstraintKind.GENERIC,
    constraint=None,
    text=None,
):
    return Query(
        id=qid,
        city=city,
        duration_days=days,
        constraint_kind=kind,
        constraint_text=constraint,
        text=text or f"Plan a {days}-day trip to {city} with a relaxed schedule.",
    )


def make_instance(pois, query=None, trajectories=None, leaderboard=None):
    pois = tuple(pois)
    if trajectories is None:
        trajectories = (Trajectory((tuple(p.name for p in pois[:3]),)),)
    if leaderboard is None:
        leaderboard = tuple(p.name for p in pois)
    return DatasetInstance(
        query=query or make_query(),
        candidates=pois,
        trajectories=tuple(trajectories),
        leaderboard=tuple(leaderboard),
    )


def day_plan(*days):
    """Build a plan from days given as lists of (name, start, end) tuples."""
    return Plan(tuple(tuple(PlanEntry(n, s, e) for n, s, e in day) for day in days))


def single_day_plan(names, start=540, visit_min=60, gap_min=30):
    entries = []
    cursor = start
    for name in names:
        entries.append(PlanEntry(name, cursor, cursor + visit_min))
        cursor += visit_min + gap_min
    return Plan((tuple(entries),))


@pytest.fixture
def four_collinear():
    """POIs at kilometer marks 0, 1, 2, 3 on the equator."""
    return [equator_poi(f"P{k}", float(k)) for k in range(4)]
