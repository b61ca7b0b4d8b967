"""Row-standardized k-nearest-neighbor spatial weights."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, KTooLarge
from .ingest import RegionSet

__all__ = ["SpatialWeights", "build_knn", "spatial_lag", "haversine_matrix", "EARTH_RADIUS_KM"]

EARTH_RADIUS_KM = 6371.0088

# distances are rounded to this many decimals (km) before ranking so that
# equidistant candidates tie exactly and the smaller row index wins
_TIE_DECIMALS = 6


@dataclass(frozen=True)
class SpatialWeights:
    """Sparse weights with exactly ``k`` neighbors per row, each weighted 1/k.

    Attributes
    ----------
    sparse : scipy.sparse.csr_matrix
        n x n matrix; row i holds the neighbors of region i, column indices
        ordered by increasing distance.
    k : int
        Neighbors per row.
    region_ids : tuple
        Row labels.
    """

    sparse: sparse.csr_matrix
    k: int
    region_ids: tuple

    @property
    def n(self) -> int:
        return self.sparse.shape[0]

    @property
    def neighbors(self) -> np.ndarray:
        """(n, k) array of neighbor indices."""
        return self.sparse.indices.reshape(self.n, self.k)

    @property
    def row_weights(self) -> np.ndarray:
        """(n, k) array of weights matching :attr:`neighbors`."""
        return self.sparse.data.reshape(self.n, self.k)

    @property
    def s0(self) -> float:
        return float(self.sparse.data.sum())

    def dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def to_csv(self, path) -> None:
        """Write ``from_id,to_id,weight`` edge rows."""
        ids = self.region_ids
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["from_id", "to_id", "weight"])
            for i, (nbrs, wts) in enumerate(zip(self.neighbors, self.row_weights)):
                for j, v in zip(nbrs, wts):
                    w.writerow([ids[i], ids[j], repr(float(v))])


def haversine_matrix(lon, lat, radius=EARTH_RADIUS_KM) -> np.ndarray:
    """Pairwise great-circle distances in km."""
    lon = np.asarray(lon, dtype=float)
    lat = np.radians(np.asarray(lat, dtype=float))
    dlon = np.radians(lon[None, :] - lon[:, None])
    dlat = lat[None, :] - lat[:, None]
    a = np.sin(dlat / 2) ** 2 + np.cos(lat[:, None]) * np.cos(lat[None, :]) * np.sin(dlon / 2) ** 2
    return 2 * radius * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def build_knn(regions: RegionSet, k: int = 7) -> SpatialWeights:
    """KNN weights from region centroids using haversine distance.

    Each region's ``k`` nearest other regions become its neighbors with
    weight ``1/k``. Equidistant candidates are ordered by row index.
    """
    n = regions.n
    k = int(k)
    if k < 1:
        raise ValueError("k must be positive")
    if k >= n:
        raise KTooLarge(k, n)
    d = np.round(haversine_matrix(regions.lon, regions.lat), _TIE_DECIMALS)
    np.fill_diagonal(d, np.inf)
    cols = np.arange(n)
    indices = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        # lexsort: last key is primary
        order = np.lexsort((cols, d[i]))
        indices[i] = order[:k]
    data = np.full(n * k, 1.0 / k)
    indptr = np.arange(0, n * k + 1, k)
    W = sparse.csr_matrix((data, indices.ravel(), indptr), shape=(n, n))
    return SpatialWeights(W, k, regions.region_ids)


def spatial_lag(W: SpatialWeights, y) -> np.ndarray:
    """Neighbor-weighted average ``W @ y``. Accepts a vector or an (n, m) array."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != W.n:
        raise DimensionMismatch(f"expected {W.n} rows, got {y.shape[0]}")
    return W.sparse @ y
