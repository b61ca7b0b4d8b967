"""Loading regions and attribute tables, ratio construction, standardization.

Region order is the order of the input file and defines the row index used
by every vector and matrix downstream.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
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

__all__ = [
    "RegionSet",
    "ChapterCounts",
    "AttributeTable",
    "load_regions",
    "load_counts",
    "load_attributes",
    "write_attributes",
    "compute_ratios",
    "zscore",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegionSet:
    """Ordered regions with centroid coordinates (WGS84 degrees).

    ``geometries`` holds an optional GeoJSON geometry mapping per region and
    is only used for rendering.
    """

    region_ids: tuple
    names: tuple
    lon: np.ndarray
    lat: np.ndarray
    geometries: tuple = None

    def __post_init__(self):
        ids = tuple(str(r) for r in self.region_ids)
        n = len(ids)
        if n == 0:
            raise EmptyInput("region set is empty")
        object.__setattr__(self, "region_ids", ids)
        object.__setattr__(self, "names", tuple(str(s) for s in self.names))
        object.__setattr__(self, "lon", _frozen(self.lon))
        object.__setattr__(self, "lat", _frozen(self.lat))
        geoms = self.geometries if self.geometries is not None else (None,) * n
        object.__setattr__(self, "geometries", tuple(geoms))
        if not (len(self.names) == len(self.lon) == len(self.lat) == len(self.geometries) == n):
            raise ValueError("region fields have inconsistent lengths")
        seen = set()
        for row, rid in enumerate(ids):
            if not rid:
                raise BadCoordinate(row + 1, "empty region_id")
            if rid in seen:
                raise DuplicateRegion(rid)
            seen.add(rid)
        for row, (x, y) in enumerate(zip(self.lon, self.lat)):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise BadCoordinate(row + 1, "non-finite coordinate")
            if not (-180.0 <= x <= 180.0 and -90.0 <= y <= 90.0):
                raise BadCoordinate(row + 1, f"lon={x}, lat={y} out of range")

    def __len__(self):
        return len(self.region_ids)

    @property
    def n(self) -> int:
        return len(self.region_ids)

    @property
    def index(self) -> dict:
        """Mapping region_id -> row index."""
        return {rid: i for i, rid in enumerate(self.region_ids)}

    @property
    def has_geometry(self) -> bool:
        return all(g is not None for g in self.geometries)

    def with_geometries(self, geometries: Mapping[str, dict]) -> "RegionSet":
        """Copy with polygon geometry attached by region_id."""
        geoms = tuple(geometries.get(rid) for rid in self.region_ids)
        return RegionSet(self.region_ids, self.names, self.lon, self.lat, geoms)


def _parse_coord(value, row, what):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise BadCoordinate(row, f"{what}={value!r} is not a number") from None
    if not math.isfinite(v):
        raise BadCoordinate(row, f"{what}={value!r} is not finite")
    return v


def _read_csv(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    if not header or not rows:
        raise EmptyInput(f"{path} has no data rows")
    return header, rows


def _require(header, required, path):
    missing = [c for c in required if c not in header]
    if missing:
        raise BadCounts(f"{path}: missing required column(s) {', '.join(missing)}")


def load_regions(path, format: str | None = None) -> RegionSet:
    """Read a region set from ``regions.csv`` or a GeoJSON FeatureCollection.

    CSV files need the header ``region_id,name,lon,lat``. GeoJSON features
    carry those as properties; if ``lon``/``lat`` are absent the point
    geometry (or the vertex mean of a polygon's outer ring) is used. Polygon
    geometries are retained for rendering.
    """
    path = Path(path)
    if format is None:
        format = "geojson" if path.suffix.lower() in (".geojson", ".json") else "csv"
    if format == "csv":
        return _load_regions_csv(path)
    if format == "geojson":
        return _load_regions_geojson(path)
    raise ValueError(f"unknown region format {format!r}")


def _load_regions_csv(path):
    if path.stat().st_size == 0:
        raise EmptyInput(f"{path} is empty")
    header, rows = _read_csv(path)
    _require(header, ("region_id", "name", "lon", "lat"), path)
    ids, names, lon, lat = [], [], [], []
    seen = set()
    for row_no, row in enumerate(rows, start=1):
        rid = (row["region_id"] or "").strip()
        if rid in seen:
            raise DuplicateRegion(rid)
        seen.add(rid)
        ids.append(rid)
        names.append((row["name"] or "").strip())
        lon.append(_parse_coord(row["lon"], row_no, "lon"))
        lat.append(_parse_coord(row["lat"], row_no, "lat"))
    return RegionSet(tuple(ids), tuple(names), lon, lat)


def _shoelace(ring):
    """Signed area and area-weighted centroid sums of one closed ring."""
    pts = np.asarray(ring, dtype=float)[:, :2]
    x, y = pts[:, 0], pts[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cross = x * y1 - x1 * y
    return cross.sum() / 2, ((x + x1) * cross).sum() / 6, ((y + y1) * cross).sum() / 6


def _ring_centroid(geometry):
    """Area-weighted centroid of a (Multi)Polygon; holes subtract."""
    kind = geometry.get("type")
    coords = geometry.get("coordinates")
    if kind == "Point":
        return coords[0], coords[1]
    if kind == "Polygon":
        polys = [coords]
    elif kind == "MultiPolygon":
        polys = coords
    else:
        raise ValueError(kind)
    area = cx = cy = 0.0
    for poly in polys:
        for j, ring in enumerate(poly):
            a, sx, sy = _shoelace(ring)
            # orient each ring by role: exterior adds, holes subtract
            sign = (1.0 if j == 0 else -1.0) * (1.0 if a >= 0 else -1.0)
            area += sign * a
            cx += sign * sx
            cy += sign * sy
    if abs(area) <= 1e-15:
        pts = np.asarray([pt[:2] for poly in polys for pt in poly[0]], dtype=float)
        return float(pts[:, 0].mean()), float(pts[:, 1].mean())
    return float(cx / area), float(cy / area)


def _load_regions_geojson(path):
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise EmptyInput(f"{path} is empty")
    doc = json.loads(text)
    features = doc.get("features") or []
    if not features:
        raise EmptyInput(f"{path} has no features")
    ids, names, lon, lat, geoms = [], [], [], [], []
    seen = set()
    for row_no, feat in enumerate(features, start=1):
        props = feat.get("properties") or {}
        geom = feat.get("geometry")
        rid = str(props.get("region_id", "")).strip()
        if rid in seen:
            raise DuplicateRegion(rid)
        seen.add(rid)
        if "lon" in props and "lat" in props:
            x = _parse_coord(props["lon"], row_no, "lon")
            y = _parse_coord(props["lat"], row_no, "lat")
        elif geom:
            try:
                x, y = _ring_centroid(geom)
            except (ValueError, TypeError, IndexError, KeyError):
                raise BadCoordinate(row_no, "cannot derive centroid from geometry") from None
        else:
            raise BadCoordinate(row_no, "no lon/lat properties and no geometry")
        ids.append(rid)
        names.append(str(props.get("name", rid)))
        lon.append(x)
        lat.append(y)
        polygonal = geom is not None and geom.get("type") in ("Polygon", "MultiPolygon")
        geoms.append(geom if polygonal else None)
    return RegionSet(tuple(ids), tuple(names), lon, lat, tuple(geoms))


@dataclass(frozen=True)
class ChapterCounts:
    """Case counts per (region, chapter) with the per-region total.

    ``counts`` has shape (n_regions, n_chapters); ``totals`` has length
    n_regions.
    """

    region_ids: tuple
    chapters: tuple
    counts: np.ndarray
    totals: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        totals = np.array(self.totals, dtype=np.int64)
        if counts.shape != (len(self.region_ids), len(self.chapters)) or totals.shape != (len(self.region_ids),):
            raise BadCounts("count array shapes do not match region/chapter labels")
        if (counts < 0).any() or (totals < 0).any():
            raise BadCounts("counts must be non-negative")
        over = counts.max(axis=1, initial=0) > totals
        if over.any():
            rid = self.region_ids[int(np.argmax(over))]
            raise BadCounts(f"region {rid!r}: a chapter count exceeds the total")
        counts.setflags(write=False)
        totals.setflags(write=False)
        object.__setattr__(self, "region_ids", tuple(self.region_ids))
        object.__setattr__(self, "chapters", tuple(self.chapters))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "totals", totals)

    def national_ratio(self) -> dict:
        """Pooled share per chapter, sum of chapter cases over sum of totals."""
        total = int(self.totals.sum())
        if total == 0:
            raise ZeroDenominator("<all regions>")
        return {c: int(self.counts[:, j].sum()) / total for j, c in enumerate(self.chapters)}

    def align(self, regions: RegionSet) -> "ChapterCounts":
        """Reorder rows to follow ``regions``; every region must be present."""
        pos = {rid: i for i, rid in enumerate(self.region_ids)}
        for rid in self.region_ids:
            if rid not in regions.index:
                raise UnknownRegion(rid)
        order = []
        for rid in regions.region_ids:
            if rid not in pos:
                raise MissingValue(rid, "total")
            order.append(pos[rid])
        return ChapterCounts(regions.region_ids, self.chapters, self.counts[order], self.totals[order])


def load_counts(path) -> ChapterCounts:
    """Read long-format ``counts.csv`` (``region_id,chapter,count,total``)."""
    path = Path(path)
    header, rows = _read_csv(path)
    _require(header, ("region_id", "chapter", "count", "total"), path)
    regions, chapters = [], []
    cells, totals = {}, {}
    for row_no, row in enumerate(rows, start=1):
        rid = row["region_id"].strip()
        ch = row["chapter"].strip()
        try:
            c = int(row["count"])
            m = int(row["total"])
        except (TypeError, ValueError):
            raise BadCounts(f"{path} row {row_no}: count/total must be integers") from None
        if rid not in totals:
            regions.append(rid)
            totals[rid] = m
        elif totals[rid] != m:
            raise BadCounts(f"{path} row {row_no}: inconsistent total for region {rid!r}")
        if ch not in chapters:
            chapters.append(ch)
        if (rid, ch) in cells:
            raise BadCounts(f"{path} row {row_no}: duplicate ({rid}, {ch}) row")
        cells[rid, ch] = c
    counts = np.zeros((len(regions), len(chapters)), dtype=np.int64)
    for i, rid in enumerate(regions):
        for j, ch in enumerate(chapters):
            if (rid, ch) not in cells:
                raise MissingValue(rid, ch)
            counts[i, j] = cells[rid, ch]
    return ChapterCounts(tuple(regions), tuple(chapters), counts, [totals[r] for r in regions])


RAW, RATIO, ZSCORED = "raw", "ratio", "zscored"


@dataclass(frozen=True)
class AttributeTable:
    """Named numeric columns aligned with a region order.

    ``kinds`` maps each column to one of ``"raw"``, ``"ratio"``,
    ``"zscored"``.
    """

    region_ids: tuple
    columns: Mapping[str, np.ndarray]
    kinds: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.region_ids)
        cols = {}
        for name, values in self.columns.items():
            v = _frozen(values)
            if v.shape != (n,):
                raise MissingValue("<shape>", name)
            bad = ~np.isfinite(v)
            if bad.any():
                raise MissingValue(self.region_ids[int(np.argmax(bad))], name)
            cols[name] = v
        kinds = {name: self.kinds.get(name, RAW) for name in cols}
        object.__setattr__(self, "region_ids", tuple(self.region_ids))
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "kinds", kinds)

    @property
    def names(self) -> list:
        return list(self.columns)

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        """Stack the named columns into an (n, len(names)) array."""
        return np.column_stack([self.columns[c] for c in names])

    def select(self, names: Sequence[str]) -> "AttributeTable":
        return AttributeTable(self.region_ids, {c: self.columns[c] for c in names},
                              {c: self.kinds[c] for c in names})

    def standardized(self, names: Sequence[str] | None = None) -> "AttributeTable":
        """Copy with the named columns (default: all) z-scored."""
        names = self.names if names is None else list(names)
        cols = dict(self.columns)
        kinds = dict(self.kinds)
        for c in names:
            try:
                cols[c] = zscore(self.columns[c])
            except ZeroVariance:
                raise ZeroVariance(c) from None
            kinds[c] = ZSCORED
        return AttributeTable(self.region_ids, cols, kinds)


def load_attributes(path, regions: RegionSet | None = None) -> AttributeTable:
    """Read a wide ``attributes.csv`` (``region_id,<col1>,<col2>,...``).

    With ``regions`` given, rows are joined on region_id and reordered to
    the region order; ids missing on either side are an error.
    """
    path = Path(path)
    header, rows = _read_csv(path)
    if header[0] != "region_id":
        raise BadCounts(f"{path}: first column must be region_id")
    names = header[1:]
    by_id = {}
    for row in rows:
        rid = row["region_id"].strip()
        if rid in by_id:
            raise DuplicateRegion(rid)
        by_id[rid] = row
    ids = list(by_id) if regions is None else list(regions.region_ids)
    if regions is not None:
        for rid in by_id:
            if rid not in regions.index:
                raise UnknownRegion(rid)
    cols = {c: np.empty(len(ids)) for c in names}
    for i, rid in enumerate(ids):
        row = by_id.get(rid)
        for c in names:
            raw = None if row is None else row.get(c)
            try:
                v = float(raw)
            except (TypeError, ValueError):
                raise MissingValue(rid, c) from None
            if not math.isfinite(v):
                raise MissingValue(rid, c)
            cols[c][i] = v
    return AttributeTable(tuple(ids), cols)


def write_attributes(table: AttributeTable, path, names: Sequence[str] | None = None) -> None:
    """Write ``table`` as a wide CSV; floats use shortest round-trip repr."""
    names = table.names if names is None else list(names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", *names])
        for i, rid in enumerate(table.region_ids):
            w.writerow([rid, *(repr(float(table.columns[c][i])) for c in names)])


def compute_ratios(counts: ChapterCounts) -> AttributeTable:
    """Chapter share per region: chapter count divided by the region total."""
    zero = counts.totals == 0
    if zero.any():
        raise ZeroDenominator(counts.region_ids[int(np.argmax(zero))])
    m = counts.totals.astype(float)
    cols = {ch: counts.counts[:, j] / m for j, ch in enumerate(counts.chapters)}
    return AttributeTable(counts.region_ids, cols, {ch: RATIO for ch in counts.chapters})


def zscore(column) -> np.ndarray:
    """Standardize to mean 0 and sample standard deviation (ddof=1) of 1."""
    x = np.asarray(column, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise TooFewObservations("z-scoring needs at least 2 observations")
    centered = x - x.mean()
    sd = centered.std(ddof=1)
    # rounding noise on a constant column is not variance
    if not sd > 1e-13 * np.abs(x).max():
        raise ZeroVariance()
    return centered / sd
