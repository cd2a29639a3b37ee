"""Named reference states used by the runner, the tests and the examples."""

import numpy as np

from . import geometry as geo
from . import lattice as lat
from . import lie
from . import pluriclosed as pc

HOPF_TORSION_SCALE = -1.0

STATE_PRESETS = {
    "su2": "su(2), g = identity, H = kappa * Cartan form (soliton iff kappa = +-1)",
    "hopf": "su(2)+u(1), g = identity, H = -d^c omega = -Cartan form on su(2); Bismut-flat",
    "einstein": "alias of su2 with kappa = 1: generalized Einstein, constant minimizer",
    "abelian:n": "flat invariant torus, H = 0",
    "lattice": "periodic flat torus grid (dim 3 or 4, N >= 8), H = 0 unless perturbed",
}


def su2_state(kappa=1.0, g=None, b=None):
    alg = lie.su2()
    return geo.homogeneous_state(alg, g=g, b=b, H0=lie.cartan_form(alg, kappa))


def hopf_torsion():
    """``-d^c omega`` for the identity metric and the Samelson structure."""
    H = np.zeros((4, 4, 4))
    H[1:, 1:, 1:] = HOPF_TORSION_SCALE * lie._eps3()
    return H


def hopf_state(g=None, b=None):
    return geo.homogeneous_state(lie.hopf(), g=g, b=b, H0=hopf_torsion())


def abelian_state(n, g=None, b=None):
    return geo.homogeneous_state(lie.abelian(n), g=g, b=b)


def lattice_state(dim=3, N=8, L=2 * np.pi, stencil_order=2):
    grid = lat.LatticeGrid(dim=dim, N=N, L=L, stencil_order=stencil_order)
    return geo.lattice_state(grid)


def complex_structure(name, n=None):
    if name == "hopf":
        return pc.samelson_hopf()
    if name == "standard":
        if n is None:
            raise ValueError("standard complex structure needs the dimension")
        return pc.standard(n)
    raise KeyError(f"unknown complex structure {name!r}; known: hopf, standard")


def state(name, **params):
    """Build a named preset; ``params`` are the preset's keyword arguments."""
    if name == "su2":
        return su2_state(kappa=float(params.get("kappa", 1.0)))
    if name == "einstein":
        return su2_state(1.0)
    if name == "hopf":
        return hopf_state()
    if name.startswith("abelian:"):
        return abelian_state(lie.preset(name).dim)
    if name == "lattice":
        return lattice_state(dim=int(params.get("dim", 3)), N=int(params.get("N", 8)),
                             L=float(params.get("L", 2 * np.pi)),
                             stencil_order=int(params.get("stencil_order", 2)))
    raise KeyError(f"unknown state preset {name!r}; known: {', '.join(STATE_PRESETS)}")


def random_lattice_state(grid, rng, amplitude=0.1, max_mode=1, torsion=0.0, f_amplitude=None):
    """Smooth random ``(g, b, f)`` on ``grid`` with constant background ``H0 = torsion * eps``.

    ``g = I + sym(A)`` and ``b = skew(B)`` with low-mode trigonometric ``A, B``.
    """
    n = grid.dim
    A = lat.random_trig_field(rng, n, (n, n), L=grid.L, amplitude=amplitude,
                              max_mode=max_mode).sample(grid)
    B = lat.random_trig_field(rng, n, (n, n), L=grid.L, amplitude=amplitude,
                              max_mode=max_mode).sample(grid)
    fa = amplitude if f_amplitude is None else f_amplitude
    f = lat.random_trig_field(rng, n, (), L=grid.L, amplitude=fa, max_mode=max_mode).sample(grid)
    g = np.eye(n) + 0.5 * (A + np.swapaxes(A, -1, -2))
    b = 0.5 * (B - np.swapaxes(B, -1, -2))
    H0 = np.zeros((n, n, n))
    if torsion:
        if n != 3:
            raise ValueError("constant torsion background is only provided in dimension 3")
        H0 = torsion * lie._eps3()
    return geo.lattice_state(grid, g, b, H0, f)
