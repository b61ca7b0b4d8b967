"""End-to-end analysis: ratios, weights, Moran/LISA, SDM vs OLS, PCA.

Every file written is listed in ``manifest.txt`` together with the config
hash and seed. If any stage fails, the files written so far are removed and
:class:`~provnet.errors.StageError` names the stage.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from . import tables
from .autocorr import global_moran_test, local_moran
from .config import PipelineConfig
from .errors import ConfigError, IoError, ProvnetError, StageError
from .ingest import compute_ratios, load_attributes, load_counts, load_regions
from .pca import pca_fit
from .render import render_choropleth, write_geojson
from .sdm import build_design, fit_ols, fit_sdm, lm_residual_test, model_compare
from .weights import build_knn

__all__ = ["Manifest", "run_pipeline", "STAGES", "safe_name"]

log = logging.getLogger(__name__)

STAGES = ("weights", "moran", "lisa", "sdm", "pca")


def safe_name(column: str) -> str:
    """Column name made safe for use inside a filename."""
    return re.sub(r"[^A-Za-z0-9._-]", "_", column)


@dataclass(frozen=True)
class Manifest:
    path: Path
    config_hash: str
    seed: int
    artifacts: tuple


class _Run:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = Path(config.out)
        self.written = []
        self.regions = None
        self.W = None
        self.outcomes = None
        self.covariates = None
        self.population_ratio = None

    def path(self, name):
        p = self.out / name
        self.written.append(p)
        return p

    def stage(self, name, fn):
        log.info("stage %s", name)
        try:
            fn()
        except StageError:
            raise
        except (ProvnetError, OSError, ValueError, ArithmeticError) as exc:
            self.cleanup()
            raise StageError(name, exc) from exc

    def cleanup(self):
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        self.written.clear()

    # -- stages -------------------------------------------------------

    def load(self):
        cfg = self.cfg
        self.regions = load_regions(cfg.regions)
        if cfg.counts:
            counts = load_counts(cfg.counts).align(self.regions)
            table = compute_ratios(counts)
            self.population_ratio = counts.national_ratio()
        else:
            table = load_attributes(cfg.attributes, self.regions)
        cov_source = None
        if cfg.covariate_columns:
            cov_source = load_attributes(cfg.covariates, self.regions) if cfg.covariates else table
        self._table, self._cov_source = table, cov_source

    def check_columns(self):
        cfg = self.cfg
        table, cov_source = self._table, self._cov_source
        names = list(cfg.outcomes) or [c for c in table.names if c not in cfg.covariate_columns]
        missing = [c for c in names if c not in table]
        if cov_source is not None:
            missing += [c for c in cfg.covariate_columns if c not in cov_source]
        if missing:
            raise ConfigError("unknown column(s): " + ", ".join(missing))
        if not names:
            raise ConfigError("no outcome columns selected")
        self.outcomes = table.select(names)
        if cov_source is not None:
            cov = cov_source.select(cfg.covariate_columns)
            self.covariates = cov.standardized() if cfg.standardize_covariates else cov

    def weights(self):
        self.W = build_knn(self.regions, self.cfg.k)
        self.W.to_csv(self.path("weights.csv"))

    def moran(self):
        cfg = self.cfg
        results = [(c, global_moran_test(self.outcomes[c], self.W, cfg.nsim, cfg.seed)) for c in self.outcomes.names]
        tables.write_moran_table(results, self.path("moran_global.csv"))
        if self.population_ratio is not None:
            tables.write_population_ratio(self.population_ratio, self.path("population_ratio.csv"),
                                          self.outcomes.names)

    def _lisa_outputs(self, column, values):
        cfg = self.cfg
        res = local_moran(values, self.W, cfg.nsim, cfg.seed, cfg.alpha, cfg.lisa_tail, cfg.fdr)
        stem = safe_name(column)
        tables.write_lisa(res, self.path(f"lisa_{stem}.csv"))
        write_geojson(self.regions, {
            "value": [float(v) for v in values],
            "local_I": res.local_I.tolist(),
            "p_value": res.p_values.tolist(),
            "z": res.z.tolist(),
            "z_lag": res.z_lag.tolist(),
            "z_sim": res.z_sim.tolist(),
            "label": list(res.labels),
        }, self.path(f"lisa_{stem}.geojson"))
        if cfg.render_maps and self.regions.has_geometry:
            svgs = {
                f"value_{stem}.svg": dict(values=values, title=f"{column}: values", ramp=tuple(cfg.value_ramp)),
                f"lisa_z_{stem}.svg": dict(values=res.z_sim, title=f"{column}: local Moran z-score", diverging=True),
                f"lisa_{stem}.svg": dict(labels=res.labels, title=f"{column}: LISA clusters"),
            }
            for name, kw in svgs.items():
                self.path(name).write_text(render_choropleth(self.regions, width=cfg.map_width, **kw),
                                           encoding="utf-8")
        return res

    def lisa(self):
        for c in self.outcomes.names:
            self._lisa_outputs(c, self.outcomes[c])

    def sdm(self):
        if self.covariates is None:
            log.info("no covariate_columns configured; skipping SDM")
            return
        cfg = self.cfg
        X = self.covariates
        design = build_design(X, self.W)
        rows, comparisons = [], []
        for c in self.outcomes.names:
            y = self.outcomes[c]
            fit = fit_sdm(y, X, self.W)
            ols = fit_ols(y, design)
            lm = lm_residual_test(fit, self.W, cfg.nsim, cfg.seed)
            rows.append((c, fit, lm))
            comparisons.append((c, model_compare(fit, ols)))
            tables.write_sdm_full(fit, self.path(f"sdm_full_{safe_name(c)}.csv"))
        tables.write_sdm_summary(rows, self.path("sdm_summary.csv"), cfg.alpha)
        with open(self.path("sdm_vs_ols.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["column", "aic_sdm", "aic_ols", "delta_aic", "lr", "preferred"])
            for c, cmp in comparisons:
                w.writerow([c, repr(cmp.aic_sdm), repr(cmp.aic_ols), repr(cmp.delta_aic), repr(cmp.lr), cmp.preferred])

    def pca(self):
        names = self.outcomes.names
        if len(names) < 2:
            log.info("fewer than two outcome columns; skipping PCA")
            return
        res = pca_fit(self.outcomes, names)
        tables.write_pca(res, self.regions.region_ids, self.path("pca_loadings.csv"), self.path("pca_scores.csv"))
        tables.write_correlations(res.names, res.correlation, self.path("chapter_correlations.csv"))
        self._lisa_outputs("PC1", res.pc1)

    def manifest(self) -> Manifest:
        cfg = self.cfg
        artifacts = tuple(p.name for p in self.written)
        path = self.path("manifest.txt")
        lines = [
            f"config_hash = {cfg.hash()}",
            f"seed = {cfg.seed}",
            f"k = {cfg.k}",
            f"nsim = {cfg.nsim}",
            f"alpha = {cfg.alpha}",
            f"lisa_tail = {cfg.lisa_tail}",
            f"standardize_covariates = {str(cfg.standardize_covariates).lower()}",
            f"n_regions = {self.regions.n}",
            f"outcomes = {','.join(self.outcomes.names)}",
            f"covariates = {','.join(cfg.covariate_columns)}",
        ]
        lines += [f"artifact = {a}" for a in artifacts]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return Manifest(path, cfg.hash(), cfg.seed, artifacts)


def run_pipeline(config: PipelineConfig, stages=STAGES) -> Manifest:
    """Run the selected stages and write ``manifest.txt`` into ``config.out``.

    ``stages`` is a subset of :data:`STAGES`; ``weights`` always runs since
    every later stage needs it.
    """
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stage(s): {', '.join(sorted(unknown))}")
    run = _Run(config)
    run.stage("validate", config.validate)
    try:
        run.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("setup", IoError(f"cannot create {run.out}: {exc}")) from exc
    run.stage("ingest", run.load)
    run.stage("validate", run.check_columns)
    run.stage("weights", run.weights)
    for name in STAGES[1:]:
        if name in stages:
            run.stage(name, getattr(run, name))
    manifest = None

    def _finish():
        nonlocal manifest
        manifest = run.manifest()

    run.stage("manifest", _finish)
    return manifest
