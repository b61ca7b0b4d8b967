"""Choropleth SVG and GeoJSON emitters.

Maps use an equirectangular projection (x scaled by the cosine of the
central latitude). Palettes are fixed so outputs hash reproducibly.
"""

from __future__ import annotations

import json
import math
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import DimensionMismatch, NoGeometry, ZeroVariance
from .ingest import RegionSet

__all__ = ["LISA_COLORS", "SEQUENTIAL_RAMP", "DIVERGING_RAMP", "render_choropleth", "write_geojson"]

LISA_COLORS = {
    "HH": "#d7191c",
    "LL": "#2c7bb6",
    "HL": "#f4a582",
    "LH": "#92c5de",
    "Insignificant": "#d9d9d9",
}
SEQUENTIAL_RAMP = ("#fff5eb", "#7f2704")
DIVERGING_RAMP = ("#2166ac", "#f7f7f7", "#b2182b")

_LEGEND_W = 130


def _hex(c):
    c = c.lstrip("#")
    return np.array([int(c[i:i + 2], 16) for i in (0, 2, 4)], dtype=float)


def _mix(c0, c1, t):
    rgb = np.rint(_hex(c0) + (_hex(c1) - _hex(c0)) * t).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _ramp_color(t, ramp):
    """Color at ``t`` in [0, 1] along a 2- or 3-stop ramp."""
    if len(ramp) == 2:
        return _mix(ramp[0], ramp[1], t)
    if t <= 0.5:
        return _mix(ramp[0], ramp[1], 2 * t)
    return _mix(ramp[1], ramp[2], 2 * t - 1)


def _rings(geometry):
    kind = geometry["type"]
    if kind == "Polygon":
        return list(geometry["coordinates"])
    if kind == "MultiPolygon":
        return [ring for poly in geometry["coordinates"] for ring in poly]
    raise NoGeometry(f"unsupported geometry type {kind}")


def _fmt(v):
    return f"{v:.2f}"


def render_choropleth(regions: RegionSet, values=None, labels=None, title: str = "",
                      ramp=SEQUENTIAL_RAMP, diverging: bool = False, width: int = 480) -> str:
    """SVG map with one ``<path data-region-id=...>`` per region.

    Pass ``values`` for a continuous map or ``labels`` for a LISA cluster
    map. ``diverging=True`` centers the ramp on zero (for z-scores) and
    defaults the ramp to :data:`DIVERGING_RAMP`.

    Raises
    ------
    NoGeometry
        A region has no polygon.
    ZeroVariance
        A value map of a constant column.
    """
    if (values is None) == (labels is None):
        raise ValueError("give exactly one of values or labels")
    n = regions.n
    for rid, g in zip(regions.region_ids, regions.geometries):
        if g is None:
            raise NoGeometry(rid)

    if values is not None:
        v = np.asarray(values, dtype=float)
        if v.shape != (n,):
            raise DimensionMismatch(f"expected {n} values, got {v.shape}")
        if diverging:
            if ramp is SEQUENTIAL_RAMP:
                ramp = DIVERGING_RAMP
            span = float(np.abs(v).max())
            if span == 0:
                raise ZeroVariance("map values")
            t = 0.5 + 0.5 * v / span
            lo, hi = -span, span
        else:
            lo, hi = float(v.min()), float(v.max())
            if hi - lo <= 1e-13 * max(abs(lo), abs(hi)):
                raise ZeroVariance("map values")
            t = (v - lo) / (hi - lo)
        fills = [_ramp_color(float(x), ramp) for x in t]
    else:
        if len(labels) != n:
            raise DimensionMismatch(f"expected {n} labels, got {len(labels)}")
        fills = [LISA_COLORS[lab] for lab in labels]

    all_pts = np.array([pt[:2] for g in regions.geometries for ring in _rings(g) for pt in ring], dtype=float)
    lon0, lat0 = all_pts.min(axis=0)
    lon1, lat1 = all_pts.max(axis=0)
    kx = math.cos(math.radians(0.5 * (lat0 + lat1)))
    span_x = max((lon1 - lon0) * kx, 1e-12)
    span_y = max(lat1 - lat0, 1e-12)
    pad = 10.0
    top = 30.0 if title else pad
    scale = (width - 2 * pad) / span_x
    map_h = span_y * scale
    height = max(top + map_h + pad, top + 150.0)

    def project(lon, lat):
        return pad + (lon - lon0) * kx * scale, top + (lat1 - lat) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width + _LEGEND_W}" '
        f'height="{_fmt(height)}" viewBox="0 0 {width + _LEGEND_W} {_fmt(height)}">',
    ]
    if title:
        out.append(f'<text x="{pad}" y="20" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    out.append('<g stroke="#ffffff" stroke-width="0.5">')
    for rid, g, fill in zip(regions.region_ids, regions.geometries, fills):
        parts = []
        for ring in _rings(g):
            pts = [project(pt[0], pt[1]) for pt in ring]
            parts.append("M" + " L".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts) + " Z")
        out.append(f'<path data-region-id={quoteattr(rid)} fill="{fill}" fill-rule="evenodd" d="{" ".join(parts)}"/>')
    out.append("</g>")
    out.extend(_legend(width, top, values is not None, ramp, lo if values is not None else None,
                       hi if values is not None else None))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _legend(x0, y0, continuous, ramp, lo, hi):
    g = [f'<g font-family="sans-serif" font-size="11" transform="translate({x0} {_fmt(y0)})">']
    if continuous:
        g.append("<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">")
        stops = np.linspace(0.0, 1.0, len(ramp))
        for off, c in zip(stops, ramp):
            g.append(f'<stop offset="{off:.2f}" stop-color="{c}"/>')
        g.append("</linearGradient></defs>")
        g.append('<rect x="0" y="0" width="16" height="120" fill="url(#ramp)" stroke="#666666"/>')
        g.append(f'<text x="22" y="10">{hi:.4g}</text>')
        g.append(f'<text x="22" y="120">{lo:.4g}</text>')
    else:
        for i, (lab, color) in enumerate(LISA_COLORS.items()):
            y = i * 20
            g.append(f'<rect x="0" y="{y}" width="14" height="14" fill="{color}" stroke="#666666"/>')
            g.append(f'<text x="20" y="{y + 11}">{escape(lab)}</text>')
    g.append("</g>")
    return g


def write_geojson(regions: RegionSet, properties: dict, path) -> None:
    """FeatureCollection with one feature per region.

    Polygon geometry is used when present, otherwise the centroid point.
    ``properties`` maps property name to a length-n sequence.
    """
    for name, vals in properties.items():
        if len(vals) != regions.n:
            raise DimensionMismatch(f"property {name!r} has {len(vals)} values for {regions.n} regions")
    features = []
    for i, rid in enumerate(regions.region_ids):
        geom = regions.geometries[i] or {"type": "Point",
                                         "coordinates": [float(regions.lon[i]), float(regions.lat[i])]}
        props = {"region_id": rid, "name": regions.names[i]}
        for name, vals in properties.items():
            v = vals[i]
            props[name] = v.item() if isinstance(v, np.generic) else v
        features.append({"type": "Feature", "geometry": geom, "properties": props})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=1)
        fh.write("\n")
