import math
import random

import numpy as np
import pytest
from geographiclib.geodesic import Geodesic
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely import STRtree
from shapely.geometry import Point, Polygon

from geoemotion import fixtures
from geoemotion.geo import (
    EARTH_RADIUS_M,
    SpatialIndex,
    build_index,
    haversine,
    locate,
    locate_bruteforce,
    locate_many_bruteforce,
    localize,
    tract_contains,
)
from geoemotion.ingest import Tract


def unit_square(tract_id, x0=0.0, y0=0.0, size=1.0, holes=()):
    ring = ((x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size), (x0, y0))
    return Tract(tract_id, ((ring,) + tuple(holes),))


# -------------------------------------------------------------- haversine


def test_identity_and_antipode():
    assert haversine((34.05, -118.24), (34.05, -118.24)) == 0.0
    assert haversine((0, 0), (0, 180)) == pytest.approx(math.pi * EARTH_RADIUS_M, rel=1e-12)
    assert round(haversine((0, 0), (0, 180))) == 20_015_087


def test_la_pair_against_ellipsoidal_geodesic():
    a, b = (34.0522, -118.2437), (34.1478, -118.1445)
    ref = Geodesic.WGS84.Inverse(a[0], a[1], b[0], b[1])["s12"]
    assert abs(haversine(a, b) - ref) / ref < 0.005


def test_random_pairs_against_ellipsoidal_geodesic():
    rng = random.Random(4)
    for _ in range(500):
        a = (rng.uniform(33, 35), rng.uniform(-119, -117))
        b = (rng.uniform(33, 35), rng.uniform(-119, -117))
        ref = Geodesic.WGS84.Inverse(a[0], a[1], b[0], b[1])["s12"]
        if ref > 1.0:
            assert abs(haversine(a, b) - ref) / ref < 0.005


_lat = st.floats(-90, 90, allow_nan=False)
_lon = st.floats(-180, 180, allow_nan=False)
_pt = st.tuples(_lat, _lon)


@settings(max_examples=500)
@given(_pt, _pt, _pt)
def test_metric_properties(a, b, c):
    ab, ba = haversine(a, b), haversine(b, a)
    assert ab >= 0
    assert abs(ab - ba) <= 1e-6
    assert haversine(a, a) <= 1e-6
    assert haversine(a, c) <= ab + haversine(b, c) + 1e-6


# -------------------------------------------------------------- containment


def test_unit_square_examples():
    index = build_index([unit_square("T")])
    assert locate(index, (0.5, 0.5)) == "T"
    assert locate(index, (2, 2)) is None


def test_boundary_inclusive_and_holes():
    hole = ((0.25, 0.25), (0.25, 0.75), (0.75, 0.75), (0.75, 0.25), (0.25, 0.25))
    t = unit_square("T", holes=(hole,))
    assert tract_contains(t, 0.0, 0.5)  # outer edge
    assert tract_contains(t, 1.0, 1.0)  # corner
    assert tract_contains(t, 0.25, 0.5)  # hole edge belongs to the tract
    assert not tract_contains(t, 0.5, 0.5)  # inside the hole
    assert tract_contains(t, 0.1, 0.1)


def test_shared_edge_goes_to_smallest_id():
    index = build_index([unit_square("B", 1.0), unit_square("A", 0.0), unit_square("C", 0.0, 1.0)])
    # points are (lat, lon); A spans lon 0-1, B lon 1-2, C sits on top of A
    assert locate(index, (1.0, 1.0)) == "A"  # corner shared by A, B and C
    assert locate(index, (0.5, 1.0)) == "A"  # A/B edge
    assert locate(index, (1.0, 0.5)) == "A"  # A/C edge
    assert locate(index, (1.0, 1.5)) == "B"  # top edge of B only
    assert locate(index, (1.5, 1.0)) == "C"  # east edge of C only


def test_overlap_resolved_by_smallest_id():
    index = build_index([unit_square("Z"), unit_square("M", 0.5, 0.5)])
    assert locate(index, (0.75, 0.75)) == "M"


def test_concave_tract():
    ring = ((0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3), (0, 0))
    t = Tract("U", ((ring,),))
    assert tract_contains(t, 0.5, 2.5)
    assert not tract_contains(t, 1.5, 2.0)
    assert tract_contains(t, 1.5, 1.0)


def test_empty_index_rejected():
    with pytest.raises(ValueError):
        SpatialIndex([])


# -------------------------------------------------------------- grid fixture oracles


@pytest.fixture(scope="module")
def grid_index(grid_tracts):
    return build_index(grid_tracts)


@pytest.fixture(scope="module")
def grid_points(grid_spec):
    return fixtures.random_points(grid_spec, 10_000) + fixtures.boundary_points(grid_spec, 1000)


def shapely_locate(tracts, points):
    """Independent oracle: shapely ``covers`` with smallest-id tie break."""
    geoms, owners = [], []
    for t in tracts:
        for poly in t.polygons:
            geoms.append(Polygon(poly[0], poly[1:]))
            owners.append(t.tract_id)
    tree = STRtree(geoms)
    pts = [Point(lon, lat) for lat, lon in points]
    pt_idx, geom_idx = tree.query(pts, predicate="covered_by")
    best = [None] * len(points)
    for p, g in zip(pt_idx.tolist(), geom_idx.tolist()):
        if best[p] is None or owners[g] < best[p]:
            best[p] = owners[g]
    return best


def test_every_tract_in_exactly_one_leaf(grid_index, grid_tracts):
    assert sorted(grid_index.leaf_entries()) == list(range(len(grid_tracts)))


def test_grid_has_holes_and_islands(grid_tracts):
    assert sum(1 for t in grid_tracts if len(t.polygons) > 1) > 50
    assert sum(1 for t in grid_tracts for p in t.polygons if len(p) > 1) > 200


def test_indexed_equals_shapely_oracle(grid_index, grid_tracts, grid_points):
    expected = shapely_locate(grid_tracts, grid_points)
    lats = [p[0] for p in grid_points]
    lons = [p[1] for p in grid_points]
    assert grid_index.locate_many(lats, lons) == expected
    assert sum(e is None for e in expected) > 300  # outside-grid and hole points exercised


def test_scalar_locate_equals_linear_scan(grid_index, grid_tracts, grid_points):
    rng = random.Random(8)
    sample = rng.sample(grid_points[:10_000], 300) + grid_points[10_000:]
    for p in sample:
        assert locate(grid_index, p) == locate_bruteforce(grid_tracts, p)


def test_vector_linear_scan_agrees(grid_index, grid_tracts, grid_points):
    pts = grid_points[9_000:]
    lats = [p[0] for p in pts]
    lons = [p[1] for p in pts]
    assert locate_many_bruteforce(grid_tracts, lats, lons) == grid_index.locate_many(lats, lons)


@settings(max_examples=300, deadline=None)
@given(st.floats(33.65, 34.35), st.floats(-118.8, -117.95))
def test_candidates_never_miss_a_containing_tract(grid_index, grid_tracts, lat, lon):
    cands = set(grid_index.candidates(lat, lon))
    for i, t in enumerate(grid_tracts):
        if tract_contains(t, lon, lat):
            assert i in cands


def test_localize_independent_of_workers(grid_index, grid_points):
    pts = grid_points[:3000]
    one = localize(grid_index, pts, workers=1)
    assert localize(grid_index, pts, workers=3) == one


def test_index_structure_is_deterministic(grid_tracts):
    a = build_index(grid_tracts).leaf_entries()
    b = build_index(list(grid_tracts)).leaf_entries()
    assert a == b


def test_locate_many_matches_scalar_on_random_polygons():
    rng = np.random.default_rng(12)
    tracts = []
    for k in range(30):
        cx, cy = rng.uniform(0, 10, 2)
        n = int(rng.integers(3, 9))
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
        radii = rng.uniform(0.3, 1.5, n)
        ring = [(float(cx + r * math.cos(a)), float(cy + r * math.sin(a))) for a, r in zip(angles, radii)]
        ring.append(ring[0])
        tracts.append(Tract(f"P{k:02d}", ((tuple(ring),),)))
    index = build_index(tracts)
    lats = rng.uniform(-1, 11, 2000)
    lons = rng.uniform(-1, 11, 2000)
    vector = index.locate_many(lats, lons)
    scalar = [locate_bruteforce(tracts, (la, lo)) for la, lo in zip(lats.tolist(), lons.tolist())]
    assert vector == scalar
