"""Connections, curvature and f-twisted operators for both backends.

Conventions
-----------
* ``R(X,Y,Z,W) = <nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, W>``,
  ``Rc_jk = g^il R_ijkl``.
* ``<nabla^+-_X Y, Z> = <nabla_X Y, Z> +- H(X,Y,Z)/2``; the mixed connection
  uses ``nabla^-`` on the first slot and ``nabla^+`` on the second.
* ``H2_ij = H_ikl H_jkl`` and ``|H|^2 = H_ijk H_ijk`` (contractions through g).
* ``(d*T)_{j...} = -g^{ma} nabla_m T_{aj...}``, the adjoint of ``d`` for the
  usual form inner product.
* The f-twisted pairing is ``<A, B>_f = int <A, B>_g exp(-f) dV``.

Two renderings of divergence-type operators exist on the lattice: the
*strong* one substitutes central differences into the displayed formula,
the *weak* one is the exact discrete adjoint of the covariant derivative.
They agree to second order in the mesh size and coincide on the
homogeneous backend. Adjoint operators (``div_f``, ``d*_f``, scalar
``Delta_f``) use the weak rendering, pointwise curvature uses the strong one.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import tensors
from .lie import check_spd


@dataclass(frozen=True, eq=False)
class GeometryState:
    """A point ``(g, b, f)`` together with the background 3-form ``H0``.

    ``H = H0 + db`` is always derived, never stored independently.
    """

    backend: object
    g: np.ndarray
    b: np.ndarray
    H0: np.ndarray
    f: object

    def __post_init__(self):
        bk = self.backend
        pshape = bk.shape if not bk.is_homogeneous else ()
        n = bk.n
        g = np.asarray(self.g, dtype=float)
        b = np.asarray(self.b, dtype=float)
        H0 = np.asarray(self.H0, dtype=float)
        if H0.shape == (n, n, n) and pshape:
            H0 = np.broadcast_to(H0, pshape + (n, n, n)).copy()
        for name, arr, p in (("g", g, 2), ("b", b, 2), ("H0", H0, 3)):
            if arr.shape != pshape + (n,) * p:
                raise ValueError(f"{name} has shape {arr.shape}, expected {pshape + (n,) * p}")
        f = np.asarray(self.f, dtype=float)
        if f.shape != pshape:
            raise ValueError(f"f has shape {f.shape}, expected {pshape}")
        check_spd(g)
        if np.max(np.abs(b + np.swapaxes(b, -1, -2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(b))):
            raise ValueError("b is not skew")
        if tensors.antisymmetry_defect(H0, 3) > 1e-12 * max(1.0, np.max(np.abs(H0))):
            raise ValueError("H0 is not fully antisymmetric")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "f", float(f) if f.ndim == 0 else f)

    # basic derived fields --------------------------------------------------
    @property
    def n(self):
        return self.backend.n

    @property
    def pnd(self):
        return self.backend.point_ndim

    def replace(self, **changes):
        return replace(self, **changes)

    def order(self, tensor):
        return np.ndim(tensor) - self.pnd

    @cached_property
    def ginv(self):
        return np.linalg.inv(self.g)

    @cached_property
    def volume_density(self):
        return np.sqrt(np.linalg.det(self.g))

    @cached_property
    def weight(self):
        """``exp(-f) sqrt(det g)``: density of the twisted measure."""
        return np.exp(-np.asarray(self.f)) * self.volume_density

    @cached_property
    def db(self):
        return exterior_d(self.backend, self.b)

    @cached_property
    def H(self):
        return self.H0 + self.db

    @cached_property
    def df(self):
        return self.backend.grad(np.asarray(self.f, dtype=float))

    @cached_property
    def grad_f(self):
        """``nabla f`` as a vector (index raised)."""
        return np.einsum("...ab,...b->...a", self.ginv, self.df)

    @cached_property
    def gamma(self):
        bk = self.backend
        return tensors.levi_civita_coefficients(self.g, bk.grad(self.g), bk.structure_constants,
                                                self.ginv)

    @cached_property
    def torsion_shift(self):
        """``H(e_m, e_i, .)`` raised: the Bismut correction to the coefficients."""
        return 0.5 * np.einsum("...mil,...lk->...mik", self.H, self.ginv)

    @cached_property
    def gamma_plus(self):
        return self.gamma + self.torsion_shift

    @cached_property
    def gamma_minus(self):
        return self.gamma - self.torsion_shift

    def coefficients(self, conn, order):
        if conn == "lc":
            return [self.gamma] * order
        if conn == "+":
            return [self.gamma_plus] * order
        if conn == "-":
            return [self.gamma_minus] * order
        if conn == "mixed":
            if order != 2:
                raise ValueError("the mixed connection acts on 2-tensors")
            return [self.gamma_minus, self.gamma_plus]
        raise ValueError(f"unknown connection {conn!r}")

    # calculus ----------------------------------------------------------------
    def nabla(self, tensor, conn="lc"):
        p = self.order(tensor)
        return tensors.covariant_derivative(np.asarray(tensor, dtype=float),
                                            self.coefficients(conn, p), self.backend.grad, p)

    def nabla_adjoint(self, s_tensor, conn="lc"):
        """f-twisted adjoint of :meth:`nabla`; contracts the first slot."""
        p = self.order(s_tensor) - 1
        return tensors.covariant_adjoint(np.asarray(s_tensor, dtype=float),
                                         self.coefficients(conn, p), self.backend.grad_transpose,
                                         self.g, self.ginv, self.weight, p)

    def raise_all(self, tensor):
        return tensors.transform_all(tensor, self.ginv, self.order(tensor))

    def inner(self, a, b):
        return tensors.pointwise_inner(a, b, self.ginv, self.order(a))

    def inner_f(self, a, b):
        return self.backend.integrate(self.weight * self.inner(a, b))

    def norm_f(self, a):
        return float(np.sqrt(max(self.inner_f(a, a), 0.0)))

    def integrate_f(self, scalar):
        return self.backend.integrate(self.weight * scalar)

    def trace(self, t):
        return np.einsum("...ij,...ij->...", self.ginv, t)

    def max_abs(self, t):
        return float(np.max(np.abs(t), initial=0.0))


def exterior_d(backend, form):
    form = np.asarray(form, dtype=float)
    return tensors.exterior_derivative(form, backend.grad, backend.structure_constants,
                                       form.ndim - backend.point_ndim)


# constructors ----------------------------------------------------------------

def homogeneous_state(algebra, g=None, b=None, H0=None, f=None):
    """Invariant state; ``f`` defaults to the minimizer ``ln vol(g)``."""
    n = algebra.dim
    g = np.eye(n) if g is None else np.asarray(g, dtype=float)
    b = np.zeros((n, n)) if b is None else np.asarray(b, dtype=float)
    H0 = np.zeros((n, n, n)) if H0 is None else np.asarray(H0, dtype=float)
    if f is None:
        f = 0.5 * np.log(np.linalg.det(g))
    if np.max(np.abs(exterior_d(algebra, H0))) > 1e-12:
        raise ValueError("H0 is not closed")
    return GeometryState(algebra, g, b, H0, f)


def lattice_state(grid, g=None, b=None, H0=None, f=None):
    n = grid.dim
    g = grid.identity_metric() if g is None else np.asarray(g, dtype=float)
    b = grid.zeros(2) if b is None else np.asarray(b, dtype=float)
    H0 = np.zeros((n, n, n)) if H0 is None else np.asarray(H0, dtype=float)
    if H0.shape == (n, n, n):
        H0 = np.broadcast_to(H0, grid.shape + (n, n, n)).copy()
    f = grid.constant(0.0) if f is None else np.asarray(f, dtype=float)
    return GeometryState(grid, g, b, H0, f)


# curvature -------------------------------------------------------------------

def connection_curvature(state, gamma):
    """``R(e_i,e_j,e_k,e_l)`` of the connection with coefficients ``gamma``."""
    bk = state.backend
    dG = bk.grad(gamma)                      # [..., i, a, b, k] = d_i gamma^k_ab
    c = bk.structure_constants
    R = dG - np.swapaxes(dG, -4, -3)
    R = R + np.einsum("...ilm,...jkl->...ijkm", gamma, gamma)
    R = R - np.einsum("...jlm,...ikl->...ijkm", gamma, gamma)
    if np.any(c):
        R = R - np.einsum("ija,...akm->...ijkm", c, gamma)
    return np.einsum("...ijkm,...ml->...ijkl", R, state.g)


def h_pair(state, H=None):
    """``HH[x, w, y, z] = <H(x, w, .), H(y, z, .)>``."""
    H = state.H if H is None else H
    return np.einsum("...xwa,...yzb,...ab->...xwyz", H, H, state.ginv)


@dataclass(frozen=True)
class CurvaturePack:
    Rm: np.ndarray
    Rc: np.ndarray
    R: object
    Rm_plus: np.ndarray
    Rc_plus: np.ndarray
    R_plus: object
    H2: np.ndarray
    H_norm2: object
    dstar_H: np.ndarray
    nabla_H: np.ndarray


def ricci_trace(state, rm):
    return np.einsum("...il,...ijkl->...jk", state.ginv, rm)


def curvature(state):
    """Levi-Civita and Bismut curvature; ``Rm_plus`` follows the torsion expansion."""
    Rm = connection_curvature(state, state.gamma)
    Rc = ricci_trace(state, Rm)
    R = state.trace(Rc)
    H = state.H
    nH = state.nabla(H)
    HH = h_pair(state, H)
    Rm_plus = (Rm + 0.5 * nH - 0.5 * np.swapaxes(nH, -4, -3)
               - 0.25 * np.einsum("...xwyz->...xyzw", HH)
               + 0.25 * np.einsum("...ywxz->...xyzw", HH))
    Rc_plus = ricci_trace(state, Rm_plus)
    R_plus = state.trace(Rc_plus)
    H2 = np.einsum("...ikl,...jmn,...km,...ln->...ij", H, H, state.ginv, state.ginv)
    H_norm2 = state.trace(H2)
    dstar_H = -np.einsum("...ma,...mabc->...bc", state.ginv, nH)
    return CurvaturePack(Rm, Rc, R, Rm_plus, Rc_plus, R_plus, H2, H_norm2, dstar_H, nH)


def bismut_curvature_direct(state, sign=+1):
    """Curvature of ``nabla^+`` (or ``nabla^-``) straight from its coefficients."""
    return connection_curvature(state, state.gamma_plus if sign > 0 else state.gamma_minus)


def bismut_trace_residuals(state, pack=None):
    """Residuals of ``R+ = R - |H|^2/4`` and ``Rc+ = Rc - H2/4 - d*H/2``."""
    pk = curvature(state) if pack is None else pack
    r_scalar = state.max_abs(pk.R_plus - (pk.R - 0.25 * pk.H_norm2))
    r_ricci = state.max_abs(pk.Rc_plus - (pk.Rc - 0.25 * pk.H2 - 0.5 * pk.dstar_H))
    return {"scalar": r_scalar, "ricci": r_ricci}


def bismut_derivative(state, tensor, sign=+1):
    """``nabla^+`` (sign=+1), ``nabla^-`` (sign=-1) or mixed (sign=0, 2-tensors)."""
    conn = {1: "+", -1: "-", 0: "mixed"}[int(np.sign(sign))]
    return state.nabla(tensor, conn)


def interior_grad_f(state, form):
    """``i_{grad f} form`` (contraction on the first slot)."""
    p = state.order(form)
    rest = tensors._SLOTS[1:p]
    return np.einsum(f"...a,...a{rest}->...{rest}", state.grad_f, form)


def trace_first_two(state, t):
    """``g^{ab} t_{ab...}``."""
    rest = tensors._SLOTS[2:state.order(t)]
    return np.einsum(f"...ab,...ab{rest}->...{rest}", state.ginv, t)


def hessian_f(state):
    return state.nabla(state.df)


def rc_Hf(state, pack=None):
    """Twisted Bakry-Emery curvature ``Rc - H2/4 + nabla^2 f - (d*H + i_{grad f} H)/2``."""
    pk = curvature(state) if pack is None else pack
    iH = interior_grad_f(state, state.H)
    return pk.Rc - 0.25 * pk.H2 + hessian_f(state) - 0.5 * (pk.dstar_H + iH)


def soliton_equations(state, pack=None):
    """The metric and B-field soliton equations as tensors."""
    pk = curvature(state) if pack is None else pack
    iH = interior_grad_f(state, state.H)
    return pk.Rc - 0.25 * pk.H2 + hessian_f(state), pk.dstar_H + iH


def soliton_residual(state, pack=None):
    """f-twisted L2 norms ``(r_g, r_b)`` of the two soliton equations."""
    eq_g, eq_b = soliton_equations(state, pack)
    return state.norm_f(eq_g), state.norm_f(eq_b)


def bianchi_residual(state):
    """Max-norm defect of the Bismut first Bianchi identity.

    The cyclic sum uses the curvature computed directly from the ``nabla^+``
    coefficients, independently of the torsion expansion in :func:`curvature`.
    """
    Rp = bismut_curvature_direct(state, +1)
    lhs = Rp + np.einsum("...yzxw->...xyzw", Rp) + np.einsum("...zxyw->...xyzw", Rp)
    npH = state.nabla(state.H, "+")         # [x, y, z, w] = (nabla^+_x H)(y, z, w)
    cyc = npH + np.einsum("...yzxw->...xyzw", npH) + np.einsum("...zxyw->...xyzw", npH)
    rhs = 0.5 * (cyc + np.einsum("...wxyz->...xyzw", npH))
    return state.max_abs(lhs - rhs)


# f-twisted operators -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FOps:
    """Operator bundle built on one state; carries no mutable caches."""

    state: GeometryState

    def laplacian(self, a):
        """Scalar ``Delta_f``: minus the weak composition ``nabla^{*f} nabla``."""
        st = self.state
        return -st.nabla_adjoint(st.nabla(a))

    def tensor_laplacian(self, t):
        """Rough ``Delta_f = g^{ab} nabla_a nabla_b - nabla_{grad f}`` (strong form)."""
        st = self.state
        d1 = st.nabla(t)
        return trace_first_two(st, st.nabla(d1)) - interior_grad_f(st, d1)

    def div(self, t):
        """``div_f T = -tr nabla T + T(grad f, ...)`` as the weak adjoint of ``nabla``."""
        return self.state.nabla_adjoint(t)

    def div_strong(self, t):
        st = self.state
        return -trace_first_two(st, st.nabla(t)) + interior_grad_f(st, t)

    def dstar(self, form):
        """``d*_f`` on forms; equals ``div_f`` on the first slot."""
        return self.state.nabla_adjoint(form)

    def d(self, form):
        return exterior_d(self.state.backend, form)

    def hodge_laplacian(self, form):
        """``d d*_f + d*_f d``."""
        out = self.dstar(self.d(form))
        if self.state.order(form) > 0:
            out = out + self.d(self.dstar(form))
        return out


def f_ops(state):
    return FOps(state)
