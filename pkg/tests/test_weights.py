import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from provnet.errors import DimensionMismatch, KTooLarge
from provnet.ingest import RegionSet
from provnet.synth import random_regions
from provnet.weights import EARTH_RADIUS_KM, build_knn, haversine_matrix, spatial_lag


def _gc_distance(lon1, lat1, lon2, lat2):
    # spherical law of cosines, independent of the haversine form
    p1, p2 = math.radians(lat1), math.radians(lat2)
    c = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(math.radians(lon2 - lon1))
    return EARTH_RADIUS_KM * math.acos(max(-1.0, min(1.0, c)))


def test_line_k1_tie_breaks_to_smaller_index(line4):
    W = build_knn(line4, 1)
    assert W.neighbors.ravel().tolist() == [1, 0, 1, 2]


def test_k7_weights_are_one_seventh(W76):
    assert W76.neighbors.shape == (76, 7)
    assert (W76.row_weights == 1 / 7).all()


def test_k_too_large():
    regions = random_regions(5, seed=1)
    with pytest.raises(KTooLarge):
        build_knn(regions, 5)
    build_knn(regions, 4)


def test_structural_invariants(W76):
    nbrs = W76.neighbors
    assert not (nbrs == np.arange(76)[:, None]).any()
    assert all(len(set(row)) == 7 for row in nbrs)
    np.testing.assert_allclose(np.asarray(W76.sparse.sum(axis=1)).ravel(), 1.0, atol=1e-12)
    assert abs(W76.s0 - 76) < 1e-9


def test_knn_is_generally_asymmetric(W76):
    D = W76.dense()
    assert not np.array_equal(D > 0, (D > 0).T)


def test_haversine_matches_law_of_cosines(regions76):
    D = haversine_matrix(regions76.lon, regions76.lat)
    for i, j in [(0, 1), (5, 40), (17, 75), (3, 3)]:
        ref = _gc_distance(regions76.lon[i], regions76.lat[i], regions76.lon[j], regions76.lat[j])
        assert abs(D[i, j] - ref) < 1e-6


def test_neighbors_match_brute_force_ranking(regions76):
    W = build_knn(regions76, 7)
    n = regions76.n
    for i in range(n):
        cand = sorted(
            (round(_gc_distance(regions76.lon[i], regions76.lat[i], regions76.lon[j], regions76.lat[j]), 6), j)
            for j in range(n) if j != i
        )
        assert W.neighbors[i].tolist() == [j for _, j in cand[:7]]


def test_duplicate_centroids_allowed():
    r = RegionSet(("A", "B", "C"), ("A", "B", "C"), [0.0, 0.0, 1.0], [0.0, 0.0, 0.0])
    W = build_knn(r, 1)
    assert W.neighbors.ravel().tolist() == [1, 0, 0]


def test_rebuild_is_bit_identical(regions76):
    a, b = build_knn(regions76, 7), build_knn(regions76, 7)
    assert np.array_equal(a.sparse.indices, b.sparse.indices)
    assert a.sparse.data.tobytes() == b.sparse.data.tobytes()


def test_lag_path_example():
    r = RegionSet(("A", "B", "C"), ("A", "B", "C"), [0.0, 1.0, 2.0], [0.0, 0.0, 0.0])
    W = build_knn(r, 1)
    assert W.neighbors.ravel().tolist() == [1, 0, 1]
    np.testing.assert_array_equal(spatial_lag(W, [1.0, 2.0, 3.0]), [2.0, 1.0, 2.0])


def test_lag_of_constant(W76):
    np.testing.assert_allclose(spatial_lag(W76, np.full(76, 3.25)), 3.25, rtol=0, atol=1e-14)


def test_lag_dimension_mismatch(W76):
    with pytest.raises(DimensionMismatch):
        spatial_lag(W76, np.ones(75))


@given(st.integers(0, 2**32 - 1), st.floats(-10, 10), st.floats(-10, 10))
def test_lag_linear_and_bounded(W76, seed, a, b):
    rng = np.random.default_rng(seed)
    y, z = rng.normal(size=76), rng.normal(size=76)
    lhs = spatial_lag(W76, a * y + b * z)
    np.testing.assert_allclose(lhs, a * spatial_lag(W76, y) + b * spatial_lag(W76, z), atol=1e-12)
    lag = spatial_lag(W76, y)
    assert (lag >= y.min() - 1e-12).all() and (lag <= y.max() + 1e-12).all()


def test_weights_csv(tmp_path, line4):
    W = build_knn(line4, 1)
    W.to_csv(tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "from_id,to_id,weight"
    assert lines[1:] == ["A,B,1.0", "B,A,1.0", "C,B,1.0", "D,C,1.0"]
