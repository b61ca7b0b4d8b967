"""CSV writers for the result tables.

Floats are written with ``repr`` so files round-trip exactly and reruns are
byte-identical.
"""

from __future__ import annotations

import csv
from contextlib import contextmanager

from .errors import IoError

__all__ = [
    "MORAN_HEADER",
    "LISA_HEADER",
    "SDM_SUMMARY_HEADER",
    "write_moran_table",
    "write_lisa",
    "write_sdm_summary",
    "write_sdm_full",
    "write_population_ratio",
    "write_pca",
    "write_correlations",
]

MORAN_HEADER = ("column", "I", "p_value", "nsim", "seed")
LISA_HEADER = ("region_id", "local_I", "p_value", "z", "z_lag", "label")
SDM_SUMMARY_HEADER = ("column", "rho", "p_rho", "direct_significant", "indirect_significant", "aic", "lm_p")
SDM_FULL_HEADER = ("term", "estimate", "se", "p_value")


def _f(v):
    return repr(float(v))


@contextmanager
def _writer(path):
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        yield csv.writer(fh, lineterminator="\n")


def write_moran_table(results, path) -> None:
    """One row per ``(column, GlobalMoranResult)`` pair, in the given order."""
    with _writer(path) as w:
        w.writerow(MORAN_HEADER)
        for column, res in results:
            w.writerow([column, _f(res.I), _f(res.p_value), res.nsim, res.seed])


def write_lisa(result, path) -> None:
    with _writer(path) as w:
        w.writerow(LISA_HEADER)
        for i, rid in enumerate(result.region_ids):
            w.writerow([rid, _f(result.local_I[i]), _f(result.p_values[i]), _f(result.z[i]),
                        _f(result.z_lag[i]), result.labels[i]])


def write_sdm_summary(rows, path, alpha=0.05) -> None:
    """``rows`` holds ``(column, SdmFit, LmTestResult)`` triples."""
    with _writer(path) as w:
        w.writerow(SDM_SUMMARY_HEADER)
        for column, fit, lm in rows:
            w.writerow([column, _f(fit.rho), _f(fit.p_rho),
                        ";".join(fit.direct_significant(alpha)),
                        ";".join(fit.indirect_significant(alpha)),
                        _f(fit.aic), _f(lm.p_value)])


def write_sdm_full(fit, path) -> None:
    with _writer(path) as w:
        w.writerow(SDM_FULL_HEADER)
        for name, est, se, p in fit.coefficient_table():
            w.writerow([name, _f(est), _f(se), _f(p)])


def write_population_ratio(ratios: dict, path, columns=None) -> None:
    columns = list(ratios) if columns is None else columns
    with _writer(path) as w:
        w.writerow(["column", "national_ratio"])
        for c in columns:
            w.writerow([c, _f(ratios[c])])


def write_pca(result, region_ids, loadings_path, scores_path) -> None:
    pcs = [f"PC{j + 1}" for j in range(result.loadings.shape[1])]
    with _writer(loadings_path) as w:
        w.writerow(["variable", *pcs])
        for name, row in zip(result.names, result.loadings):
            w.writerow([name, *map(_f, row)])
    with _writer(scores_path) as w:
        w.writerow(["region_id", *pcs])
        for rid, row in zip(region_ids, result.scores):
            w.writerow([rid, *map(_f, row)])


def write_correlations(names, matrix, path) -> None:
    with _writer(path) as w:
        w.writerow(["column", *names])
        for name, row in zip(names, matrix):
            w.writerow([name, *map(_f, row)])
