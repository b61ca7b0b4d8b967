"""
Fitting the spatial Durbin model
================================

Generate data with known spillovers, fit by concentrated maximum likelihood
and compare against plain regression on the same regressors.
"""

import numpy as np

from provnet.sdm import build_design, fit_ols, fit_sdm, lm_residual_test, model_compare
from provnet.synth import DgpSpec, gen_lattice, gen_sdm
from provnet.weights import build_knn

# a ring of 500 regions, each linked to its 7 nearest
W = build_knn(gen_lattice(500, "ring", k=7), 7)
spec = DgpSpec(rho=0.5, beta=(1.0, -0.5), theta=(0.5, 0.25), intercept=1.0, sigma=0.2, seed=0)
sample = gen_sdm(W, spec)

fit = fit_sdm(sample.y, sample.X, W, names=["living", "health"])
print(f"rho = {fit.rho:.4f} (se {fit.rho_se:.4f}, LR p {fit.p_rho:.2e})")
for name, est, se, p in fit.coefficient_table()[1:]:
    print(f"  {name:10s} {est:+.4f}  se {se:.4f}  p {p:.1e}")
print("direct:", fit.direct_significant(), " indirect:", fit.indirect_significant())

# the spatial model should beat OLS on [1, X, WX] by a wide margin
ols = fit_ols(sample.y, build_design(sample.X, W))
cmp = model_compare(fit, ols)
print(f"AIC sdm {cmp.aic_sdm:.1f}  ols {cmp.aic_ols:.1f}  preferred {cmp.preferred}")

# and leave no spatial structure in its residuals
lm = lm_residual_test(fit, W, nsim=999, seed=1)
print(f"residual Moran p = {lm.p_value:.3f}")

# with rho = 0 and no noise the fit is exact
exact = gen_sdm(W, DgpSpec(0.0, (1.0, -0.5), (0.5, 0.25), 1.0, 0.0, seed=0))
fit0 = fit_sdm(exact.y, exact.X, W)
print("noiseless coefficient error:", np.abs(fit0.coefficients - [1.0, 1.0, -0.5, 0.5, 0.25]).max())
