"""Periodic finite-difference tori.

Fields are arrays of shape ``(N,)*dim + (dim,)*p`` holding down-index tensor
components in the coordinate frame. Derivatives are central differences of
order 2 or 4 with periodic wraparound; since these are antisymmetric
operators, sums by parts hold exactly on the grid.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla


@dataclass(frozen=True, eq=False)
class LatticeGrid:
    """Uniform periodic grid on the flat torus ``[0, L)^dim``."""

    dim: int = 3
    N: int = 16
    L: float = 2 * np.pi
    stencil_order: int = 2
    point_ndim: int = field(init=False)

    def __post_init__(self):
        if self.dim not in (3, 4):
            raise ValueError("lattice dimension must be 3 or 4")
        if self.N < 8:
            raise ValueError("lattice needs N >= 8")
        if self.stencil_order not in (2, 4):
            raise ValueError("stencil order must be 2 or 4")
        if not self.L > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "point_ndim", self.dim)
        object.__setattr__(self, "c", np.zeros((self.dim,) * 3))

    @property
    def n(self):
        return self.dim

    @property
    def h(self):
        return self.L / self.N

    @property
    def cell_volume(self):
        return self.h ** self.dim

    @property
    def shape(self):
        return (self.N,) * self.dim

    @property
    def structure_constants(self):
        return self.c

    @property
    def is_homogeneous(self):
        return False

    def coords(self):
        x = np.arange(self.N) * self.h
        return np.meshgrid(*([x] * self.dim), indexing="ij")

    def refined(self, factor=2):
        return LatticeGrid(self.dim, self.N * factor, self.L, self.stencil_order)

    def partial(self, values, axis):
        """Central difference along grid ``axis`` (periodic)."""
        def sh(k):
            return np.roll(values, -k, axis=axis)
        if self.stencil_order == 2:
            return (sh(1) - sh(-1)) / (2 * self.h)
        return (8 * (sh(1) - sh(-1)) - (sh(2) - sh(-2))) / (12 * self.h)

    def grad(self, values):
        values = np.asarray(values, dtype=float)
        return np.stack([self.partial(values, a) for a in range(self.dim)], axis=self.dim)

    def grad_transpose(self, values):
        """Transpose of :meth:`grad` for the plain grid sum."""
        values = np.asarray(values, dtype=float)
        out = np.zeros(values.shape[:self.dim] + values.shape[self.dim + 1:])
        for a in range(self.dim):
            out -= self.partial(np.take(values, a, axis=self.dim), a)
        return out

    def integrate(self, density):
        return float(np.sum(density) * self.cell_volume)

    def zeros(self, order):
        return np.zeros(self.shape + (self.dim,) * order)

    def constant(self, value):
        return np.full(self.shape, float(value))

    def identity_metric(self):
        return np.broadcast_to(np.eye(self.dim), self.shape + (self.dim, self.dim)).copy()

    def describe(self):
        return {"backend": "lattice", "dim": self.dim, "N": self.N, "L": self.L,
                "stencil_order": self.stencil_order}

    # sparse one-sided differences for the compact Laplacian
    def _shift(self, axis, k):
        idx = np.arange(self.N ** self.dim).reshape(self.shape)
        src = np.roll(idx, -k, axis=axis).ravel()
        m = self.N ** self.dim
        return sparse.csr_matrix((np.ones(m), (np.arange(m), src)), shape=(m, m))

    def one_sided(self, axis, forward=True):
        eye = sparse.identity(self.N ** self.dim, format="csr")
        if forward:
            return (self._shift(axis, 1) - eye) / self.h
        return (eye - self._shift(axis, -1)) / self.h


def integrate_f(values, f, g, grid):
    """``sum values * exp(-f) * sqrt(det g) * cell volume``."""
    return grid.integrate(values * np.exp(-f) * np.sqrt(np.linalg.det(g)))


def compact_laplacian(grid, g):
    """Symmetric matrix ``A`` with ``u.A.u = int |grad u|_g^2 dV`` (one-sided differences).

    Forward and backward differences are averaged, which removes the
    checkerboard null space of the wide central stencil.
    """
    ginv = np.linalg.inv(g)
    vol = np.sqrt(np.linalg.det(g))
    m = grid.N ** grid.dim
    A = sparse.csr_matrix((m, m))
    for forward in (True, False):
        D = [grid.one_sided(a, forward) for a in range(grid.dim)]
        for i in range(grid.dim):
            for j in range(grid.dim):
                w = (vol * ginv[..., i, j]).ravel()
                if not np.any(w):
                    continue
                A = A + 0.5 * (D[i].T @ sparse.diags(w) @ D[j])
    return A.tocsr()


def compact_gradient_square(grid, g, u):
    """Average over forward/backward differences of ``g^{ij} d_i u d_j u``."""
    ginv = np.linalg.inv(g)
    total = np.zeros(grid.shape)
    for forward in (True, False):
        du = []
        for a in range(grid.dim):
            if forward:
                du.append((np.roll(u, -1, axis=a) - u) / grid.h)
            else:
                du.append((u - np.roll(u, 1, axis=a)) / grid.h)
        du = np.stack(du, axis=-1)
        total += 0.5 * np.einsum("...i,...ij,...j->...", du, ginv, du)
    return total


def compact_laplace_apply(grid, g, u):
    """``Delta u`` of the compact scheme: ``-(1/sqrt g) A u``."""
    A = compact_laplacian(grid, g)
    vol = np.sqrt(np.linalg.det(g))
    return -(A @ u.ravel()).reshape(grid.shape) / vol


class EigenSolveError(RuntimeError):
    pass


@dataclass
class GroundState:
    eigenvalue: float
    u: np.ndarray
    residual: float
    iterations: int


def ground_state(potential, g, grid, tol=1e-10, max_iter=500, cg_rtol=1e-14):
    """Lowest eigenpair of ``-4 Delta + V`` on the grid.

    Inverse power iteration with a fixed shift below ``min V``; every inner
    solve is a conjugate-gradient solve of the shifted symmetric operator.
    ``u`` is positive and normalized by ``int u^2 dV = 1``.
    """
    V = np.broadcast_to(np.asarray(potential, dtype=float), grid.shape)
    vol = np.sqrt(np.linalg.det(g)).ravel()
    s = 1.0 / np.sqrt(vol)
    K = 4.0 * compact_laplacian(grid, g)
    M = sparse.diags(s) @ K @ sparse.diags(s) + sparse.diags(V.ravel())
    M = M.tocsr()
    shift = float(V.min()) - 1.0
    Ms = (M - shift * sparse.identity(M.shape[0])).tocsr()
    diag = Ms.diagonal()
    precond = spla.LinearOperator(Ms.shape, matvec=lambda x: x / diag)
    y = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    lam = float(y @ (M @ y))
    residual = np.inf
    for it in range(1, max_iter + 1):
        z, info = spla.cg(Ms, y, x0=y / max(lam - shift, 1e-3), rtol=cg_rtol, atol=0.0,
                          maxiter=10 * M.shape[0], M=precond)
        if info < 0:
            raise EigenSolveError(f"conjugate gradient breakdown (info={info})")
        y = z / np.linalg.norm(z)
        My = M @ y
        lam = float(y @ My)
        residual = float(np.linalg.norm(My - lam * y))
        if residual < tol * max(1.0, abs(lam)):
            break
    else:
        raise EigenSolveError(f"inverse iteration did not converge: residual {residual:.3e}")
    u = (s * y).reshape(grid.shape) / np.sqrt(grid.cell_volume)
    if u.sum() < 0:
        u = -u
    return GroundState(lam, u, residual, it)


def schrodinger_matrix(potential, g, grid):
    """Dense symmetric matrix of the discrete operator, for small-grid oracles."""
    V = np.broadcast_to(np.asarray(potential, dtype=float), grid.shape)
    vol = np.sqrt(np.linalg.det(g)).ravel()
    s = 1.0 / np.sqrt(vol)
    K = 4.0 * compact_laplacian(grid, g)
    return (sparse.diags(s) @ K @ sparse.diags(s) + sparse.diags(V.ravel())).toarray()


def rayleigh_quotient(u, potential, g, grid):
    vol = np.sqrt(np.linalg.det(g))
    K = compact_laplacian(grid, g)
    num = 4.0 * u.ravel() @ (K @ u.ravel()) + np.sum(potential * u * u * vol)
    return float(num / np.sum(u * u * vol))


@dataclass(frozen=True)
class TrigField:
    """Smooth periodic field given by a few Fourier modes; sample on any grid."""

    wavevectors: np.ndarray  # (terms, dim) integers
    cos_coeffs: np.ndarray   # (terms,) + component shape
    sin_coeffs: np.ndarray
    L: float

    def sample(self, grid):
        x = np.stack(grid.coords(), axis=-1)
        phase = 2 * np.pi / self.L * np.einsum("...d,td->...t", x, self.wavevectors)
        return (np.tensordot(np.cos(phase), self.cos_coeffs, axes=([-1], [0]))
                + np.tensordot(np.sin(phase), self.sin_coeffs, axes=([-1], [0])))


def random_trig_field(rng, dim, component_shape=(), terms=4, max_mode=2, L=2 * np.pi,
                      amplitude=1.0):
    """Random smooth field of low wavenumber; reproducible from ``rng``."""
    ks = rng.integers(-max_mode, max_mode + 1, size=(terms, dim))
    scale = amplitude / np.sqrt(terms)
    cc = rng.uniform(-1, 1, size=(terms,) + tuple(component_shape)) * scale
    sc = rng.uniform(-1, 1, size=(terms,) + tuple(component_shape)) * scale
    return TrigField(ks, cc, sc, L)
