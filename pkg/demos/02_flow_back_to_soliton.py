"""
Flowing back to the soliton
===========================

Push the su(2) soliton a little along a slice direction and run the gauged
flow. lambda should only go up and the residual should decay exponentially.
"""

import numpy as np

from genricci import flow
from genricci import functional as fn
from genricci import presets
from genricci import variation as var

rng = np.random.default_rng(7)
sol = fn.with_minimizer(presets.su2_state(1.0))

gam = var.project_to_slice(sol, fn.random_direction(sol, rng))
st0 = fn.perturb(sol, gam / sol.norm_f(gam), 0.05)

traj = flow.integrate(st0, 30.0)
print(traj.status, "after", len(traj.times), "steps")
print("lambda: %.6f -> %.6f" % (traj.lambda_series[0], traj.lambda_series[-1]))
print("worst lambda decrease:", traj.lambda_violation())

# the decay rate is twice the smallest |eigenvalue| of N
print("fitted rate:", traj.rate_fit["rate"])

# a rescaled soliton: g = kappa I is the fixed point for H = kappa epsilon
far = flow.integrate(presets.su2_state(3.0), 80.0, rhs="grf")
print(np.round(np.diag(far.final_state.g), 8))
