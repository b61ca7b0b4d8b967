"""
Local clusters and maps
=======================

Local Moran's I splits the global statistic region by region. Significant
regions get an HH, LL, HL or LH label; the result is drawn as SVG.
"""

from pathlib import Path

from provnet.autocorr import local_moran
from provnet.render import render_choropleth
from provnet.synth import DgpSpec, gen_sdm, random_regions, square_cells
from provnet.weights import build_knn

out = Path("gallery_output")
out.mkdir(exist_ok=True)

# square cells stand in for province polygons
regions = square_cells(random_regions(76, seed=7))
W = build_knn(regions, 7)
y = gen_sdm(W, DgpSpec(0.8, (0.0,), (0.0,), seed=3)).y

lisa = local_moran(y, W, nsim=999, seed=12345, alpha=0.05)
print("label counts:", lisa.counts())

# local values add back up to n times the global I
print("sum of local I / n:", lisa.local_I.sum() / W.n)

# Benjamini-Hochberg gating is stricter
strict = local_moran(y, W, nsim=999, seed=12345, fdr=True)
print("with FDR:", strict.counts())

(out / "values.svg").write_text(render_choropleth(regions, values=y, title="values"))
(out / "z.svg").write_text(render_choropleth(regions, values=lisa.z_sim, diverging=True, title="local z"))
(out / "lisa.svg").write_text(render_choropleth(regions, labels=lisa.labels, title="LISA clusters"))
print("maps written to", out.resolve())
