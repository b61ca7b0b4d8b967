"""Command-line entry point: ``provnet <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .config import PipelineConfig, load_config
from .errors import ConfigError, ProvnetError
from .ingest import load_attributes, load_regions
from .pipeline import run_pipeline
from .render import render_choropleth
from .synth import write_fixture
from .weights import build_knn

log = logging.getLogger("provnet")


def _csv_list(value):
    return tuple(s.strip() for s in value.split(",") if s.strip())


def _floats(value):
    return tuple(float(s) for s in _csv_list(value))


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--seed", type=int)
    g.add_argument("--nsim", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--out", help="output directory")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _data():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("inputs")
    g.add_argument("--regions", help="regions.csv or .geojson")
    g.add_argument("--attributes", help="wide attributes.csv")
    g.add_argument("--counts", help="long counts.csv (chapter ratios are computed)")
    g.add_argument("--covariates", help="wide CSV holding covariate columns")
    g.add_argument("--columns", type=_csv_list, help="comma list of outcome columns")
    g.add_argument("--covariate-columns", type=_csv_list)
    g.add_argument("--lisa-tail", choices=("directed", "greater", "two-sided"))
    g.add_argument("--fdr", action="store_true", default=None, help="BH-adjust LISA p-values before labelling")
    g.add_argument("--no-standardize", action="store_true", help="use covariates as given")
    g.add_argument("--no-maps", action="store_true", help="skip SVG rendering")
    return p


def _config_from(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    over = dict(seed=args.seed, nsim=args.nsim, k=args.k, alpha=args.alpha, out=args.out)
    if hasattr(args, "regions"):
        over.update(regions=args.regions, attributes=args.attributes, counts=args.counts,
                    covariates=args.covariates, outcomes=args.columns,
                    covariate_columns=args.covariate_columns, lisa_tail=args.lisa_tail, fdr=args.fdr)
        if args.no_standardize:
            over["standardize_covariates"] = False
        if args.no_maps:
            over["render_maps"] = False
    return cfg.with_overrides(**over)


def _cmd_stage(stages):
    def run(args):
        cfg = _config_from(args)
        manifest = run_pipeline(cfg, stages)
        print(f"wrote {len(manifest.artifacts) + 1} files to {cfg.out} (manifest: {manifest.path})")
        moran = Path(cfg.out) / "moran_global.csv"
        if "moran" in stages and moran.exists():
            print(moran.read_text(encoding="utf-8"), end="")
        return 0
    return run


def _cmd_weights(args):
    cfg = _config_from(args)
    if not cfg.regions:
        raise ConfigError("--regions is required")
    W = build_knn(load_regions(cfg.regions), cfg.k)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    W.to_csv(out / "weights.csv")
    print(f"n={W.n} k={W.k} -> {out / 'weights.csv'}")
    return 0


def _cmd_synth(args):
    out = args.out or "synth"
    paths = write_fixture(out, n=args.n, lattice=args.lattice, k=args.k or 7, n_outcomes=args.outcomes,
                          n_covariates=args.covariates, rho=args.rho, beta=args.beta, theta=args.theta,
                          intercept=args.intercept, sigma=args.sigma, seed=args.seed or 0,
                          nsim=args.nsim or 999)
    for role, p in paths.items():
        print(f"{role}: {p}")
    return 0


def _cmd_render(args):
    regions = load_regions(args.regions)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.lisa:
        with open(args.lisa, newline="", encoding="utf-8") as fh:
            by_id = {row["region_id"]: row["label"] for row in csv.DictReader(fh)}
        labels = [by_id[r] for r in regions.region_ids]
        svg = render_choropleth(regions, labels=labels, title=args.title or "LISA clusters")
    else:
        if not (args.values and args.column):
            raise ConfigError("render needs --lisa FILE or --values FILE --column NAME")
        table = load_attributes(args.values, regions)
        if args.column not in table:
            raise ConfigError(f"unknown column {args.column!r}")
        svg = render_choropleth(regions, values=table[args.column], title=args.title or args.column,
                                diverging=args.diverging)
    target = out / args.name
    target.write_text(svg, encoding="utf-8")
    print(target)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common, data = _common(), _data()
    parser = argparse.ArgumentParser(prog="provnet", description="Spatial autocorrelation and spatial Durbin analysis.")
    parser.add_argument("--version", action="version", version=f"provnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", parents=[common, data], help="build KNN weights and export weights.csv")
    p.set_defaults(func=_cmd_weights)
    for name, stages, text in (
        ("moran", ("moran",), "global Moran's I permutation tests"),
        ("lisa", ("lisa",), "local Moran's I, LISA labels and maps"),
        ("sdm", ("sdm",), "spatial Durbin model vs OLS"),
        ("pca", ("pca",), "correlation PCA and LISA on PC1"),
        ("pipeline", ("weights", "moran", "lisa", "sdm", "pca"), "run every stage"),
    ):
        p = sub.add_parser(name, parents=[common, data], help=text)
        p.set_defaults(func=_cmd_stage(stages))

    p = sub.add_parser("synth", parents=[common], help="write a synthetic fixture from the SDM generator")
    p.add_argument("--n", type=int, default=76)
    p.add_argument("--lattice", choices=("random", "ring", "grid"), default="random")
    p.add_argument("--outcomes", type=int, default=14)
    p.add_argument("--covariates", type=int, default=7)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--beta", type=_floats)
    p.add_argument("--theta", type=_floats)
    p.add_argument("--intercept", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.5)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("render", parents=[common], help="render an SVG choropleth")
    p.add_argument("--regions", required=True, help="GeoJSON with polygons")
    p.add_argument("--values", help="wide CSV with the column to map")
    p.add_argument("--column")
    p.add_argument("--lisa", help="lisa_<column>.csv to map as clusters")
    p.add_argument("--diverging", action="store_true", help="center the ramp on zero")
    p.add_argument("--title")
    p.add_argument("--name", default="map.svg", help="output file name inside --out")
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ProvnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
