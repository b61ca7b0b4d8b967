"""Synthetic fixtures: SDM data-generating process, regular lattices and a
brute-force Moran's I oracle."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadShape, DimensionMismatch, SingularFilter, ZeroVariance
from .ingest import RegionSet
from .render import write_geojson
from .weights import SpatialWeights, build_knn, spatial_lag

__all__ = ["DgpSpec", "SdmSample", "gen_sdm", "brute_moran", "gen_lattice", "random_regions", "square_cells",
           "write_fixture"]


@dataclass(frozen=True)
class DgpSpec:
    """Parameters of ``y = rho W y + a + X beta + W X theta + eps``.

    ``covariates`` may hold a user-supplied (n, p) array; otherwise X is
    drawn i.i.d. standard normal from ``seed``.
    """

    rho: float
    beta: tuple
    theta: tuple
    intercept: float = 0.0
    sigma: float = 1.0
    seed: int = 0
    covariates: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        object.__setattr__(self, "theta", tuple(float(t) for t in np.atleast_1d(self.theta)))
        if len(self.beta) != len(self.theta):
            raise DimensionMismatch("beta and theta must have the same length")
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be below 1")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.covariates is not None:
            X = np.asarray(self.covariates, dtype=float)
            if X.ndim != 2 or X.shape[1] != len(self.beta):
                raise DimensionMismatch("covariates must be (n, p) with p = len(beta)")

    @property
    def p(self):
        return len(self.beta)

    def as_dict(self) -> dict:
        return {"rho": self.rho, "beta": list(self.beta), "theta": list(self.theta),
                "intercept": self.intercept, "sigma": self.sigma, "seed": self.seed,
                "covariates": "user" if self.covariates is not None else "iid-normal"}


@dataclass(frozen=True)
class SdmSample:
    y: np.ndarray
    X: np.ndarray
    epsilon: np.ndarray


def gen_sdm(W: SpatialWeights, spec: DgpSpec) -> SdmSample:
    """Draw one sample by solving ``(I - rho W) y = a + X beta + W X theta + eps``.

    The generator is ``numpy.random.default_rng(spec.seed)``; X (when not
    supplied) is drawn first, then the standard-normal noise scaled by
    ``sigma``.
    """
    n = W.n
    rng = np.random.default_rng(spec.seed)
    if spec.covariates is None:
        X = rng.standard_normal((n, spec.p))
    else:
        X = np.array(spec.covariates, dtype=float)
        if X.shape[0] != n:
            raise DimensionMismatch(f"covariates have {X.shape[0]} rows, W has {n}")
    eps = spec.sigma * rng.standard_normal(n)
    rhs = spec.intercept + X @ np.asarray(spec.beta) + spatial_lag(W, X) @ np.asarray(spec.theta) + eps
    A = np.eye(n) - spec.rho * W.dense()
    try:
        y = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularFilter(f"I - rho W is singular at rho={spec.rho}") from exc
    if not np.all(np.isfinite(y)) or np.max(np.abs(A @ y - rhs)) > 1e-10 * max(1.0, np.max(np.abs(rhs))):
        raise SingularFilter(f"I - rho W is numerically singular at rho={spec.rho}")
    return SdmSample(y, X, eps)


def brute_moran(y, W: SpatialWeights) -> float:
    """Moran's I by a literal double loop over all (i, j) pairs."""
    y = [float(v) for v in y]
    n = len(y)
    if n != W.n:
        raise DimensionMismatch(f"expected {W.n} values, got {n}")
    w = W.dense().tolist()
    ybar = sum(y) / n
    num = 0.0
    s0 = 0.0
    for i in range(n):
        for j in range(n):
            num += w[i][j] * (y[i] - ybar) * (y[j] - ybar)
            s0 += w[i][j]
    den = sum((v - ybar) ** 2 for v in y)
    if den == 0.0:
        raise ZeroVariance()
    return (n / s0) * num / den


def gen_lattice(n: int, kind: str = "ring", k: int = 2, spacing: float = 0.5) -> RegionSet:
    """Regions whose KNN graph is a ring or a square grid.

    ``ring`` spreads ``n`` centroids evenly around the equator, so with
    even ``k`` each node's neighbors are the ``k/2`` nodes on either side.
    ``grid`` places a sqrt(n) x sqrt(n) grid centered on (0, 0) with
    ``spacing`` degrees between cells.
    """
    if n < 2 or k < 1 or n < k + 1:
        raise BadShape(f"need n >= k + 1 (n={n}, k={k})")
    if kind == "ring":
        lon = -180.0 + 360.0 * np.arange(n) / n
        lat = np.zeros(n)
    elif kind == "grid":
        side = math.isqrt(n)
        if side * side != n:
            raise BadShape(f"grid needs a perfect square, got n={n}")
        r, c = np.divmod(np.arange(n), side)
        offset = (side - 1) / 2
        lon = (c - offset) * spacing
        lat = (offset - r) * spacing
    else:
        raise BadShape(f"unknown lattice kind {kind!r}")
    ids = tuple(f"R{i}" for i in range(n))
    return RegionSet(ids, ids, lon, lat)


def random_regions(n: int, seed: int = 0, lon_range=(97.5, 105.5), lat_range=(6.0, 20.5)) -> RegionSet:
    """Uniformly scattered centroids in a lon/lat box (defaults span Thailand)."""
    rng = np.random.default_rng(seed)
    lon = rng.uniform(*lon_range, size=n)
    lat = rng.uniform(*lat_range, size=n)
    ids = tuple(f"P{i:03d}" for i in range(n))
    return RegionSet(ids, tuple(f"Region {i}" for i in range(n)), lon, lat)


def square_cells(regions: RegionSet, fraction: float = 0.45) -> RegionSet:
    """Attach a square polygon around each centroid for rendering.

    The half-width is ``fraction`` of the distance (in degrees) to the
    nearest other centroid, so squares never overlap.
    """
    lon, lat = regions.lon, regions.lat
    d = np.hypot(lon[:, None] - lon[None, :], lat[:, None] - lat[None, :])
    np.fill_diagonal(d, np.inf)
    half = fraction * d.min(axis=1) / math.sqrt(2)
    geoms = {}
    for rid, x, y, h in zip(regions.region_ids, lon, lat, half):
        ring = [[x - h, y - h], [x + h, y - h], [x + h, y + h], [x - h, y + h], [x - h, y - h]]
        geoms[rid] = {"type": "Polygon", "coordinates": [[[round(a, 9), round(b, 9)] for a, b in ring]]}
    return regions.with_geometries(geoms)


def write_fixture(out, n: int = 76, lattice: str = "random", k: int = 7, n_outcomes: int = 14,
                  n_covariates: int = 7, rho: float = 0.5, beta=None, theta=None, intercept: float = 1.0,
                  sigma: float = 0.5, seed: int = 0, nsim: int = 999) -> dict:
    """Write a complete synthetic input set into directory ``out``.

    Files: ``regions.csv``, ``regions.geojson`` (square cells),
    ``attributes.csv`` (outcomes ``C1..Cm`` plus covariates ``x1..xp``),
    ``synth_manifest.txt`` with the full generating parameters, and
    ``pipeline.cfg`` pointing at them. Covariates are drawn once from
    ``seed``; outcome j is generated with noise seed ``seed + j``.
    Returns the path of each file by role.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if lattice == "random":
        regions = random_regions(n, seed)
    else:
        regions = gen_lattice(n, lattice, k)
    regions = square_cells(regions)
    W = build_knn(regions, k)
    p = n_covariates
    beta = tuple([0.5] * p if beta is None else beta)
    theta = tuple([0.25] * p if theta is None else theta)
    X = np.random.default_rng(seed).standard_normal((n, p))
    outcome_names = [f"C{j + 1}" for j in range(n_outcomes)]
    cov_names = [f"x{j + 1}" for j in range(p)]
    specs, ys = [], []
    for j in range(n_outcomes):
        spec = DgpSpec(rho, beta, theta, intercept, sigma, seed + j + 1, covariates=X)
        specs.append(spec)
        ys.append(gen_sdm(W, spec).y)

    paths = {name: out / fname for name, fname in (
        ("regions_csv", "regions.csv"), ("regions_geojson", "regions.geojson"),
        ("attributes", "attributes.csv"), ("manifest", "synth_manifest.txt"), ("config", "pipeline.cfg"))}
    with open(paths["regions_csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", "name", "lon", "lat"])
        for rid, name, x, y in zip(regions.region_ids, regions.names, regions.lon, regions.lat):
            w.writerow([rid, name, repr(float(x)), repr(float(y))])
    write_geojson(regions, {"lon": regions.lon.tolist(), "lat": regions.lat.tolist()}, paths["regions_geojson"])
    with open(paths["attributes"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", *outcome_names, *cov_names])
        for i, rid in enumerate(regions.region_ids):
            w.writerow([rid, *(repr(float(y[i])) for y in ys), *(repr(float(v)) for v in X[i])])
    lines = [f"n = {n}", f"lattice = {lattice}", f"k = {k}", f"covariates = iid-normal (seed {seed})",
             f"covariate_names = {','.join(cov_names)}", f"noise = iid-normal"]
    for name, spec in zip(outcome_names, specs):
        d = spec.as_dict()
        lines.append(f"{name} = rho={d['rho']!r} beta={d['beta']} theta={d['theta']} "
                     f"intercept={d['intercept']!r} sigma={d['sigma']!r} seed={d['seed']}")
    paths["manifest"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths["config"].write_text("\n".join([
        "# generated by provnet synth",
        "regions = regions.geojson",
        "attributes = attributes.csv",
        f"outcomes = {','.join(outcome_names)}",
        f"covariate_columns = {','.join(cov_names)}",
        f"k = {k}",
        f"nsim = {nsim}",
        f"seed = {seed}",
        "out = results",
    ]) + "\n", encoding="utf-8")
    return paths
