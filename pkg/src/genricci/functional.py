"""The entropy functional lambda, its minimizer and its first variation."""

import csv
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from . import lattice as lat


@dataclass(frozen=True, eq=False)
class LambdaResult:
    """Minimum ``lambda`` with minimizer ``f`` (``int e^{-f} dV = 1``)."""

    value: float
    f: object
    normalization_residual: float
    potential: object
    u: object = None
    eigen_residual: float = 0.0

    @property
    def lambda_(self):
        return self.value


def potential(state, pack=None):
    """Schrodinger potential ``R - |H|^2 / 12``."""
    pk = geo.curvature(state) if pack is None else pack
    return pk.R - pk.H_norm2 / 12.0


def lambda_min(state, tol=1e-12):
    """Lowest eigenvalue of ``-4 Delta + R - |H|^2/12`` and its minimizer.

    On the homogeneous backend the potential is constant, so the ground
    state is constant and ``f = ln vol(g)``.
    """
    V = potential(state)
    bk = state.backend
    if bk.is_homogeneous:
        f = float(np.log(state.volume_density))
        norm = abs(np.exp(-f) * state.volume_density - 1.0)
        return LambdaResult(float(V), f, norm, float(V), None, 0.0)
    gs = lat.ground_state(V, state.g, bk, tol=tol)
    f = -2.0 * np.log(gs.u)
    norm = abs(bk.integrate(np.exp(-f) * state.volume_density) - 1.0)
    return LambdaResult(gs.eigenvalue, f, norm, V, gs.u, gs.residual)


def with_minimizer(state, result=None):
    """Copy of ``state`` whose ``f`` is the lambda-minimizer."""
    res = lambda_min(state) if result is None else result
    return state.replace(f=res.f)


def F_value(state):
    """Generalized Einstein-Hilbert functional ``int (R - |H|^2/12 + |grad f|^2) e^{-f} dV``.

    On the lattice ``|grad f|^2 e^{-f}`` is rendered as ``4 |grad u|^2`` with
    ``u = e^{-f/2}`` and the compact stencil, so ``F >= lambda`` holds exactly
    on the grid for normalized ``f``.
    """
    V = potential(state)
    bk = state.backend
    if bk.is_homogeneous:
        return float((V + 0.0) * state.weight)
    u = np.exp(-0.5 * np.asarray(state.f))
    kin = 4.0 * lat.compact_gradient_square(bk, state.g, u) * state.volume_density
    return bk.integrate(kin + V * u * u * state.volume_density)


def lam_identity_residual(state, result):
    """Max defect of ``lambda = R - |H|^2/12 + 2 Delta f - |grad f|^2``."""
    bk = state.backend
    if bk.is_homogeneous:
        return abs(float(result.potential) - result.value)
    f = result.f
    lap = lat.compact_laplace_apply(bk, state.g, f)
    grad2 = lat.compact_gradient_square(bk, state.g, f)
    return float(np.max(np.abs(result.potential + 2 * lap - grad2 - result.value)))


def is_constant_metric(state, tol=1e-14):
    if state.backend.is_homogeneous:
        return True
    g = state.g
    return float(np.max(np.abs(g - g.reshape(-1, state.n, state.n)[0]))) <= tol


def rc_Hf_variational(state, result=None):
    """Discrete gradient of the lattice ``lambda`` at a constant-metric base.

    Returns ``G`` with ``d lambda(gamma) = -<gamma, G>_f`` exactly for the
    discretization used by :func:`lambda_min`. ``G`` is a consistent
    second-order rendering of ``Rc - H2/4 + nabla^2 f - (d*H + i_{grad f} H)/2``.
    """
    bk = state.backend
    if bk.is_homogeneous:
        raise ValueError("use geometry.rc_Hf on the homogeneous backend")
    if not is_constant_metric(state):
        raise ValueError("variational rendering needs a constant metric")
    res = lambda_min(state) if result is None else result
    u = res.u
    g0 = state.g.reshape(-1, state.n, state.n)[0]
    gi = np.linalg.inv(g0)
    vol = float(np.sqrt(np.linalg.det(g0)))
    w = u * u * vol
    # averaged one-sided gradient products
    P = np.zeros(bk.shape + (state.n, state.n))
    for forward in (True, False):
        du = []
        for a in range(bk.dim):
            if forward:
                du.append((np.roll(u, -1, axis=a) - u) / bk.h)
            else:
                du.append((u - np.roll(u, 1, axis=a)) / bk.h)
        du = np.stack(du, axis=-1)
        P += 0.5 * np.einsum("...i,...j->...ij", du, du)
    Pup = np.einsum("ia,jb,...ab->...ij", gi, gi, P)
    trP = np.einsum("ij,...ij->...", gi, P)
    ddw = bk.grad(bk.grad(w))                       # [..., j, i] = D_j D_i w
    ddw_up = np.einsum("ka,lb,...ab->...kl", gi, gi, ddw)
    lap_w = np.einsum("ij,...ij->...", gi, ddw)
    pk = geo.curvature(state)
    H2_up = np.einsum("ia,jb,...ab->...ij", gi, gi, pk.H2)
    V = res.potential
    T = (vol * 4.0 * (0.5 * trP[..., None, None] * gi - Pup)
         + ddw_up - lap_w[..., None, None] * gi
         + 0.25 * w[..., None, None] * H2_up
         + 0.5 * ((V - res.value) * w)[..., None, None] * gi)
    H_up = np.einsum("ia,jb,kc,...abc->...ijk", gi, gi, gi, state.H)
    S = 0.5 * np.einsum("...aabc->...bc", bk.grad(w[..., None, None, None] * H_up))
    G_up = -T / w[..., None, None] + S / w[..., None, None]
    return np.einsum("ia,jb,...ab->...ij", g0, g0, G_up)


def first_variation(state, gamma, rendering="auto", result=None):
    """``d lambda(gamma) = -int <gamma, Rc^{H,f}> e^{-f} dV`` at the minimizer.

    ``rendering`` selects the lattice form: ``"variational"`` (constant-metric
    bases; exact derivative of the discrete lambda), ``"pointwise"`` (central
    differences in the formula; second-order accurate) or ``"auto"``.
    """
    bk = state.backend
    if bk.is_homogeneous:
        st = with_minimizer(state)
        return -st.inner_f(gamma, geo.rc_Hf(st))
    res = lambda_min(state) if result is None else result
    st = state.replace(f=res.f)
    if rendering == "auto":
        rendering = "variational" if is_constant_metric(state) else "pointwise"
    if rendering == "variational":
        G = rc_Hf_variational(st, res)
    elif rendering == "pointwise":
        G = geo.rc_Hf(st)
    else:
        raise ValueError(f"unknown rendering {rendering!r}")
    return -st.inner_f(gamma, G)


def perturb(state, gamma, t=1.0):
    """State ``(g + t h, b + t K)`` for ``gamma = h - K``; ``f`` is left as is."""
    gamma = np.asarray(gamma)
    h = 0.5 * (gamma + np.swapaxes(gamma, -1, -2))
    K = -0.5 * (gamma - np.swapaxes(gamma, -1, -2))
    return state.replace(g=state.g + t * h, b=state.b + t * K)


def lambda_value(state):
    return lambda_min(state).value


def fd_first_variation(state, gamma, eps):
    return (lambda_value(perturb(state, gamma, eps))
            - lambda_value(perturb(state, gamma, -eps))) / (2 * eps)


def fd_second_variation(state, gamma, t, lam0=None):
    lam0 = lambda_value(state) if lam0 is None else lam0
    return (lambda_value(perturb(state, gamma, t)) - 2 * lam0
            + lambda_value(perturb(state, gamma, -t))) / t ** 2


def observed_order(err_coarse, err_fine, ratio):
    """``log(err_coarse / err_fine) / log(ratio)``; ``inf`` if the fine error vanishes."""
    if err_fine == 0.0:
        return np.inf
    return float(np.log(err_coarse / err_fine) / np.log(ratio))


# sampled inequalities ----------------------------------------------------------

def random_direction(state, rng):
    """i.i.d. uniform entries in [-1, 1] in every component."""
    shape = np.shape(state.g)
    return rng.uniform(-1.0, 1.0, size=shape)


def _same_background(a, b):
    if np.shape(a.H0) != np.shape(b.H0) or np.max(np.abs(a.H0 - b.H0)) > 0:
        raise ValueError("states have different background H0; lambda values are not comparable")


def lojasiewicz_sample(soliton, radius, count, seed=0, slice_=False, tol=1e-10):
    """Rows ``(sample_id, |lambda - lambda_0|^{1/2}, ||Rc^{H,f}||, ratio)``."""
    from . import variation
    st0 = with_minimizer(soliton)
    rg, rb = geo.soliton_residual(st0)
    if max(rg, rb) > tol:
        raise ValueError(f"base is not a soliton (residual {max(rg, rb):.3e})")
    lam0 = lambda_value(st0)
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        gam = random_direction(st0, rng)
        if slice_:
            gam = variation.project_to_slice(st0, gam)
        scale = radius * rng.uniform(0.5, 1.0) / max(st0.norm_f(gam), 1e-300)
        pst = perturb(st0, gam, scale)
        res = lambda_min(pst)
        pst = pst.replace(f=res.f)
        _same_background(st0, pst)
        lhs = float(np.sqrt(abs(res.value - lam0)))
        rhs = pst.norm_f(geo.rc_Hf(pst))
        rows.append((k, lhs, rhs, _ratio(lhs, rhs)))
    return rows


def rc_H(state, pack=None):
    """``Rc - H2/4 - d*H/2`` (the f-free Bismut Ricci tensor)."""
    pk = geo.curvature(state) if pack is None else pack
    return pk.Rc - 0.25 * pk.H2 - 0.5 * pk.dstar_H


def transversality_sample(einstein, radius, count, seed=0, tol=1e-10):
    """Rows ``(sample_id, ||Rc^H||, ||Rc^{H,f}||, ratio)`` around a generalized Einstein state."""
    st0 = with_minimizer(einstein)
    rg, rb = geo.soliton_residual(st0)
    if max(rg, rb) > tol or float(np.max(np.abs(st0.df))) > tol:
        raise ValueError("base is not generalized Einstein (needs soliton with constant minimizer)")
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        gam = random_direction(st0, rng)
        scale = radius * rng.uniform(0.5, 1.0) / max(st0.norm_f(gam), 1e-300)
        pst = with_minimizer(perturb(st0, gam, scale))
        lhs = pst.norm_f(rc_H(pst))
        rhs = pst.norm_f(geo.rc_Hf(pst))
        rows.append((k, lhs, rhs, _ratio(lhs, rhs)))
    return rows


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else np.inf


def write_samples_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "lhs", "rhs", "ratio"])
        for r in rows:
            w.writerow([r[0], repr(float(r[1])), repr(float(r[2])), repr(float(r[3]))])


def max_ratio(rows):
    return max(r[3] for r in rows) if rows else 0.0
