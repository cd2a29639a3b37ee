"""Left-invariant geometry on compact Lie groups.

Every invariant tensor is a plain array in a fixed basis ``e_0, ..., e_{n-1}``
of the Lie algebra; frame derivatives of invariant quantities vanish, so all
covariant derivatives reduce to contractions with connection coefficients.
The Haar volume is normalized so that the basis-orthonormal metric has unit
volume, hence ``vol(g) = sqrt(det g)``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensors

TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LieAlgebraPreset:
    """Unimodular Lie algebra given by structure constants.

    ``c[i, j, k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``.
    """

    name: str
    c: np.ndarray
    point_ndim: int = field(default=0, init=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ValueError("structure constants must be an n x n x n array")
        object.__setattr__(self, "c", c)
        if np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0) > TOL:
            raise ValueError(f"{self.name}: bracket is not antisymmetric")
        if self.jacobi_residual() > TOL:
            raise ValueError(f"{self.name}: Jacobi identity fails ({self.jacobi_residual():.3e})")
        if self.unimodularity_residual() > TOL:
            raise ValueError(
                f"{self.name}: algebra is not unimodular "
                f"(trace of ad = {self.unimodularity_residual():.3e})")

    @property
    def dim(self):
        return self.c.shape[0]

    n = dim

    @property
    def structure_constants(self):
        return self.c

    @property
    def is_homogeneous(self):
        return True

    def jacobi_residual(self):
        c = self.c
        t = (np.einsum("ijm,mkl->ijkl", c, c) + np.einsum("jkm,mil->ijkl", c, c)
             + np.einsum("kim,mjl->ijkl", c, c))
        return float(np.max(np.abs(t), initial=0.0))

    def unimodularity_residual(self):
        return float(np.max(np.abs(np.einsum("iji->j", self.c)), initial=0.0))

    def bracket(self, x, y):
        return np.einsum("i,j,ijk->k", x, y, self.c)

    # backend protocol: invariant fields have vanishing frame derivatives
    def grad(self, tensor):
        tensor = np.asarray(tensor, dtype=float)
        return np.zeros((self.dim,) + tensor.shape)

    def grad_transpose(self, tensor):
        return np.zeros(np.shape(tensor)[1:])

    def integrate(self, density):
        return float(density)

    def zeros(self, order):
        return np.zeros((self.dim,) * order)

    def constant(self, value):
        return float(value)

    def describe(self):
        return {"backend": "lie", "preset": self.name, "dim": self.dim}


def _eps3():
    e = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
                         (1, 0, 2): -1, (0, 2, 1): -1, (2, 1, 0): -1}.items():
        e[i, j, k] = s
    return e


def su2():
    """su(2) with ``[e_i, e_j] = eps_ijk e_k``."""
    return LieAlgebraPreset("su2", _eps3())


def hopf():
    """su(2) + u(1); ``e_0`` spans the centre, ``e_1, e_2, e_3`` span su(2)."""
    c = np.zeros((4, 4, 4))
    c[1:, 1:, 1:] = _eps3()
    return LieAlgebraPreset("hopf", c)


def abelian(n):
    if n < 1:
        raise ValueError("abelian preset needs n >= 1")
    return LieAlgebraPreset(f"abelian:{n}", np.zeros((n, n, n)))


PRESETS = {
    "su2": "su(2), [e_i,e_j] = eps_ijk e_k; bi-invariant metric = identity",
    "hopf": "su(2)+u(1), e_0 central; complex structure J e_1 = e_2, J e_3 = e_0",
    "abelian:n": "abelian R^n (flat torus class), any n >= 1",
}


def preset(name):
    """Look up a preset by its configuration name."""
    if name == "su2":
        return su2()
    if name == "hopf":
        return hopf()
    if name.startswith("abelian:"):
        try:
            n = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad abelian preset {name!r}; use 'abelian:n'") from None
        return abelian(n)
    raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")


def cartan_form(algebra, scale=1.0):
    """The 3-form ``(x, y, z) -> scale * <[x, y], z>`` for the identity metric."""
    return scale * np.asarray(algebra.c, dtype=float).copy()


def check_form(form, order):
    if tensors.antisymmetry_defect(np.asarray(form), order) > TOL:
        raise ValueError("input is not fully antisymmetric")


def chevalley_d(form, algebra):
    """Chevalley-Eilenberg differential of an invariant p-form.

    ``(db)(x, y, z) = -b([x,y],z) - b([y,z],x) - b([z,x],y)`` for 2-forms and the
    analogous alternating bracket sum in every degree.
    """
    form = np.asarray(form, dtype=float)
    order = form.ndim
    check_form(form, order)
    return tensors.exterior_derivative(form, algebra.grad, algebra.c, order)


def invariant_derivative(tensor, connection_coeffs):
    """Covariant derivative of an invariant tensor: only the coefficient terms survive."""
    tensor = np.asarray(tensor, dtype=float)
    order = tensor.ndim
    n = connection_coeffs.shape[0]
    return tensors.covariant_derivative(
        tensor, [connection_coeffs] * order,
        lambda t: np.zeros((n,) + np.shape(t)), order)


def check_spd(g):
    g = np.asarray(g, dtype=float)
    if np.max(np.abs(g - np.swapaxes(g, -1, -2)), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(g))):
        raise ValueError("metric is not symmetric")
    ev = np.linalg.eigvalsh(g)
    lo = float(np.min(ev))
    if not lo > 0:
        raise ValueError(f"metric is not positive definite: smallest eigenvalue {lo:.6e}")
    return g


def koszul_connection(g, algebra):
    """Levi-Civita coefficients of an invariant metric.

    Uses ``2<nabla_x y, z> = <[x,y],z> - <[y,z],x> + <[z,x],y>``.
    """
    g = check_spd(g)
    ginv = np.linalg.inv(g)
    return tensors.levi_civita_coefficients(g, np.zeros((algebra.dim,) * 3), algebra.c, ginv)
