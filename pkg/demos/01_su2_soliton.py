"""
The round su(2) soliton
=======================

SU(2) with the bi-invariant metric and H = epsilon is a steady soliton of
generalized Ricci flow. Check that, then look at lambda and its spectrum.
"""

import numpy as np

from genricci import functional as fn
from genricci import geometry as geo
from genricci import presets
from genricci import variation as var

# the preset: g = identity, b = 0, background three-form kappa * epsilon
st = fn.with_minimizer(presets.su2_state(1.0))
r_g, r_b = geo.soliton_residual(st)
print("soliton residuals:", r_g, r_b)

# lambda is constant-potential here, so it equals the scalar R - |H|^2/12
print("lambda =", fn.lambda_value(st))

# any other kappa breaks the soliton equation at g = identity
for kappa in (0.5, 2.0):
    print(kappa, geo.soliton_residual(presets.su2_state(kappa)))

# the operator N on the slice: six eigenvalues -1, nothing in the kernel
sp = var.stability_spectrum(st)
print(np.round(np.sort(sp.eigenvalues), 12), sp.verdict)
