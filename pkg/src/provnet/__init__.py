"""KNN spatial weights, Moran's I / LISA with permutation inference,
spatial Durbin models and correlation PCA for regional attribute data."""

__version__ = "0.1.0"

from .autocorr import global_moran, global_moran_test, local_moran
from .ingest import AttributeTable, RegionSet, compute_ratios, load_attributes, load_counts, load_regions, zscore
from .pca import correlation_matrix, pca_fit
from .sdm import build_design, fit_ols, fit_sdm, lm_residual_test, log_det_spatial_filter, model_compare
from .weights import SpatialWeights, build_knn, spatial_lag

__all__ = [
    "AttributeTable",
    "RegionSet",
    "SpatialWeights",
    "build_design",
    "build_knn",
    "compute_ratios",
    "correlation_matrix",
    "fit_ols",
    "fit_sdm",
    "global_moran",
    "global_moran_test",
    "lm_residual_test",
    "load_attributes",
    "load_counts",
    "load_regions",
    "local_moran",
    "log_det_spatial_filter",
    "model_compare",
    "pca_fit",
    "spatial_lag",
    "zscore",
]
