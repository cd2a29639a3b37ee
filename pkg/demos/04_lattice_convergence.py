"""
The same identities on a periodic lattice
=========================================

On a torus the identities only hold up to discretization error. Refining
the grid shows the expected order.
"""

import numpy as np

from genricci import functional as fn
from genricci import geometry as geo
from genricci import lattice as lat
from genricci import presets

for order in (2, 4):
    errs = []
    for N in (16, 32):
        grid = lat.LatticeGrid(3, N, stencil_order=order)
        st = presets.random_lattice_state(grid, np.random.default_rng(0), amplitude=0.01,
                                          torsion=0.1)
        errs.append(geo.bianchi_residual(st))
    print("stencil %d: %.2e -> %.2e, order %.2f"
          % (order, errs[0], errs[1], np.log2(errs[0] / errs[1])))

# flat torus: constant potential, lambda = 0 to roundoff
print("flat lambda:", fn.lambda_value(presets.lattice_state(3, 8)))
