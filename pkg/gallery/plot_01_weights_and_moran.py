"""
Neighbors and global clustering
===============================

Build a 7-nearest-neighbor graph over scattered regions, then ask whether a
variable clusters in space with a permutation Moran test.
"""

import numpy as np

from provnet.autocorr import global_moran_test
from provnet.synth import DgpSpec, gen_sdm, random_regions
from provnet.weights import build_knn, spatial_lag

# 76 centroids in a Thailand-sized box; each region gets its 7 nearest
regions = random_regions(76, seed=7)
W = build_knn(regions, k=7)
print("first region's neighbors:", [regions.region_ids[j] for j in W.neighbors[0]])

# rows sum to one, so the spatial lag is a neighbor average
y = np.arange(76, dtype=float)
print("lag of region 0:", spatial_lag(W, y)[0], "=", y[W.neighbors[0]].mean())

# pure noise: no clustering expected
noise = np.random.default_rng(0).normal(size=76)
res = global_moran_test(noise, W, nsim=999, seed=1)
print(f"noise      I = {res.I:+.4f}  p = {res.p_value:.3f}")

# a draw with strong spatial feedback
clustered = gen_sdm(W, DgpSpec(rho=0.8, beta=(0.0,), theta=(0.0,), seed=3)).y
res = global_moran_test(clustered, W, nsim=999, seed=1)
print(f"clustered  I = {res.I:+.4f}  p = {res.p_value:.3f}")

# the permutation distribution centers near -1/(n-1)
print(f"permutation mean {res.sim_mean:+.4f} vs {-1 / 75:+.4f}")
