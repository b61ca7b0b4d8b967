import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provnet.errors import (
    BadCoordinate,
    BadCounts,
    DuplicateRegion,
    EmptyInput,
    MissingValue,
    TooFewObservations,
    UnknownRegion,
    ZeroDenominator,
    ZeroVariance,
)
from provnet.ingest import (
    AttributeTable,
    ChapterCounts,
    compute_ratios,
    load_attributes,
    load_counts,
    load_regions,
    write_attributes,
    zscore,
)

from conftest import write


class TestLoadRegions:
    def test_csv_in_file_order(self, tmp_path):
        p = write(tmp_path / "regions.csv", "region_id,name,lon,lat\nA,Alpha,100.0,15.0\nB,Beta,101.0,15.5\n")
        r = load_regions(p)
        assert r.n == 2
        assert r.index == {"A": 0, "B": 1}
        assert r.names == ("Alpha", "Beta")
        np.testing.assert_array_equal(r.lon, [100.0, 101.0])

    def test_duplicate_id(self, tmp_path):
        p = write(tmp_path / "regions.csv", "region_id,name,lon,lat\nA,Alpha,100.0,15.0\nA,Again,101.0,15.5\n")
        with pytest.raises(DuplicateRegion) as exc:
            load_regions(p)
        assert exc.value.region_id == "A"

    def test_bad_coordinate_reports_row(self, tmp_path):
        p = write(tmp_path / "regions.csv", "region_id,name,lon,lat\nA,Alpha,100.0,15.0\nB,Beta,east,15.5\n")
        with pytest.raises(BadCoordinate) as exc:
            load_regions(p)
        assert exc.value.row == 2

    @pytest.mark.parametrize("lon,lat", [("181", "0"), ("0", "-91"), ("nan", "0"), ("", "1")])
    def test_out_of_range_or_missing(self, tmp_path, lon, lat):
        p = write(tmp_path / "regions.csv", f"region_id,name,lon,lat\nA,Alpha,{lon},{lat}\n")
        with pytest.raises(BadCoordinate):
            load_regions(p)

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyInput):
            load_regions(write(tmp_path / "regions.csv", ""))
        with pytest.raises(EmptyInput):
            load_regions(write(tmp_path / "header_only.csv", "region_id,name,lon,lat\n"))

    def test_geojson_points_keep_feature_order(self, tmp_path):
        feats = [
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [102.0, 14.0]},
             "properties": {"region_id": "Z", "name": "Zed"}},
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [100.0, 13.0]},
             "properties": {"region_id": "M", "name": "Em"}},
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [99.0, 18.0]},
             "properties": {"region_id": "A", "name": "Ay", "lon": 99.5, "lat": 18.5}},
        ]
        p = write(tmp_path / "r.geojson", json.dumps({"type": "FeatureCollection", "features": feats}))
        r = load_regions(p)
        assert r.region_ids == ("Z", "M", "A")
        np.testing.assert_array_equal(r.lon, [102.0, 100.0, 99.5])
        np.testing.assert_array_equal(r.lat, [14.0, 13.0, 18.5])
        assert not r.has_geometry

    def test_geojson_polygon_retained(self, tmp_path):
        square = {"type": "Polygon", "coordinates": [[[0, 0], [2, 0], [2, 2], [0, 2], [0, 0]]]}
        feats = [{"type": "Feature", "geometry": square, "properties": {"region_id": "S"}}]
        r = load_regions(write(tmp_path / "r.geojson", json.dumps({"type": "FeatureCollection", "features": feats})))
        assert r.geometries[0] == square
        assert (r.lon[0], r.lat[0]) == (1.0, 1.0)
        assert r.has_geometry


class TestCounts:
    def test_three_region_fixture(self, tmp_path):
        p = write(tmp_path / "counts.csv",
                  "region_id,chapter,count,total\nA,C2,3,10\nB,C2,5,20\nC,C2,7,70\n")
        table = compute_ratios(load_counts(p))
        np.testing.assert_allclose(table["C2"], [0.3, 0.25, 0.1], rtol=0, atol=1e-15)
        assert table.kinds["C2"] == "ratio"

    def test_simple_ratios(self):
        c = ChapterCounts(("A", "B"), ("C1",), [[10], [0]], [100, 50])
        np.testing.assert_array_equal(compute_ratios(c)["C1"], [0.10, 0.0])

    def test_zero_denominator(self):
        c = ChapterCounts(("A", "B"), ("C1",), [[0], [1]], [0, 5])
        with pytest.raises(ZeroDenominator) as exc:
            compute_ratios(c)
        assert exc.value.region_id == "A"

    def test_count_above_total_rejected(self):
        with pytest.raises(BadCounts):
            ChapterCounts(("A",), ("C1",), [[11]], [10])

    def test_chapters_need_not_partition_total(self):
        c = ChapterCounts(("A",), ("C1", "C2"), [[2, 3]], [100])
        assert compute_ratios(c)["C2"][0] == 0.03

    def test_missing_cell(self, tmp_path):
        p = write(tmp_path / "counts.csv", "region_id,chapter,count,total\nA,C1,1,10\nA,C2,1,10\nB,C1,1,10\n")
        with pytest.raises(MissingValue):
            load_counts(p)

    def test_inconsistent_total(self, tmp_path):
        p = write(tmp_path / "counts.csv", "region_id,chapter,count,total\nA,C1,1,10\nA,C2,1,11\n")
        with pytest.raises(BadCounts):
            load_counts(p)

    def test_national_ratio(self):
        c = ChapterCounts(("A", "B"), ("C1",), [[10], [20]], [100, 100])
        assert c.national_ratio() == {"C1": 0.15}

    @given(st.lists(st.tuples(st.integers(0, 50), st.integers(1, 50)), min_size=1, max_size=8),
           st.integers(1, 20))
    def test_ratio_scale_invariance(self, cells, factor):
        counts = [[min(c, m)] for c, m in cells]
        totals = [m for _, m in cells]
        ids = tuple(f"R{i}" for i in range(len(cells)))
        a = compute_ratios(ChapterCounts(ids, ("C",), counts, totals))["C"]
        b = compute_ratios(ChapterCounts(ids, ("C",), [[c[0] * factor] for c in counts],
                                         [m * factor for m in totals]))["C"]
        np.testing.assert_allclose(a, b, rtol=1e-15, atol=0)
        assert ((a >= 0) & (a <= 1)).all()

    def test_align_follows_region_order(self, line4):
        c = ChapterCounts(("D", "C", "B", "A"), ("C1",), [[4], [3], [2], [1]], [10, 10, 10, 10])
        np.testing.assert_array_equal(c.align(line4).counts[:, 0], [1, 2, 3, 4])


class TestAttributes:
    def test_join_reorders_and_round_trips(self, tmp_path, pair):
        p = write(tmp_path / "a.csv", "region_id,x,y\nB,0.1,2.5e-7\nA,1.2345678901234567,-3\n")
        t = load_attributes(p, pair)
        assert t.region_ids == ("A", "B")
        np.testing.assert_array_equal(t["x"], [1.2345678901234567, 0.1])
        write_attributes(t, tmp_path / "b.csv")
        t2 = load_attributes(tmp_path / "b.csv", pair)
        for c in t.names:
            np.testing.assert_array_equal(t[c], t2[c])

    def test_missing_value_rejected(self, tmp_path, pair):
        p = write(tmp_path / "a.csv", "region_id,x\nA,1.0\nB,\n")
        with pytest.raises(MissingValue) as exc:
            load_attributes(p, pair)
        assert (exc.value.region_id, exc.value.column) == ("B", "x")

    def test_region_missing_from_file(self, tmp_path, pair):
        with pytest.raises(MissingValue):
            load_attributes(write(tmp_path / "a.csv", "region_id,x\nA,1.0\n"), pair)

    def test_unknown_region(self, tmp_path, pair):
        with pytest.raises(UnknownRegion):
            load_attributes(write(tmp_path / "a.csv", "region_id,x\nA,1\nB,2\nQ,3\n"), pair)

    def test_standardized_flags_columns(self):
        t = AttributeTable(("a", "b", "c"), {"x": [1.0, 2.0, 3.0]}).standardized()
        assert t.kinds["x"] == "zscored"
        assert abs(t["x"].mean()) < 1e-9 and abs(t["x"].std(ddof=1) - 1) < 1e-9

    @settings(max_examples=50)
    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=20))
    def test_csv_round_trip_is_exact(self, tmp_path_factory, values):
        ids = tuple(f"R{i}" for i in range(len(values)))
        t = AttributeTable(ids, {"v": values})
        p = tmp_path_factory.mktemp("rt") / "a.csv"
        write_attributes(t, p)
        np.testing.assert_array_equal(load_attributes(p)["v"], t["v"])


class TestZscore:
    def test_hand_example(self):
        np.testing.assert_allclose(zscore([1, 2, 3]), [-1, 0, 1], atol=1e-15)

    def test_constant(self):
        with pytest.raises(ZeroVariance):
            zscore([5, 5, 5])
        with pytest.raises(ZeroVariance):
            zscore([0.1, 0.1, 0.1])

    def test_too_few(self):
        with pytest.raises(TooFewObservations):
            zscore([1.0])

    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=30).filter(
        lambda v: np.std(v) > 1e-3))
    def test_moments_and_idempotence(self, values):
        z = zscore(values)
        assert abs(z.mean()) < 1e-9
        assert abs(z.std(ddof=1) - 1.0) < 1e-9
        np.testing.assert_allclose(zscore(z), z, atol=1e-9)

    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=30).filter(
        lambda v: np.std(v) > 1e-3),
        st.floats(-100, 100).filter(lambda a: abs(a) > 1e-2), st.floats(-100, 100))
    def test_affine(self, values, a, b):
        x = np.array(values)
        np.testing.assert_allclose(zscore(a * x + b), np.sign(a) * zscore(x), atol=1e-8)


class TestCentroid:
    @staticmethod
    def _sq(x0, y0, s):
        return [[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s], [x0, y0]]

    def test_orientation_free(self):
        from provnet.ingest import _ring_centroid
        for ring in (self._sq(0, 0, 2), self._sq(0, 0, 2)[::-1]):
            assert _ring_centroid({"type": "Polygon", "coordinates": [ring]}) == (1.0, 1.0)

    def test_l_shape(self):
        from provnet.ingest import _ring_centroid
        L = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2], [0, 0]]
        x, y = _ring_centroid({"type": "Polygon", "coordinates": [L]})
        assert x == pytest.approx(5 / 6) and y == pytest.approx(5 / 6)

    def test_hole_subtracts(self):
        from provnet.ingest import _ring_centroid
        x, _ = _ring_centroid({"type": "Polygon", "coordinates": [self._sq(0, 0, 4), self._sq(0, 0, 2)]})
        assert x == pytest.approx((16 * 2 - 4 * 1) / 12)

    def test_multipolygon_weighted_by_area(self):
        from provnet.ingest import _ring_centroid
        x, y = _ring_centroid({"type": "MultiPolygon", "coordinates": [[self._sq(0, 0, 1)], [self._sq(10, 0, 3)]]})
        assert (x, y) == pytest.approx(((0.5 + 9 * 11.5) / 10, (0.5 + 9 * 1.5) / 10))
