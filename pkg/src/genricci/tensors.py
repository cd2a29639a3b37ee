"""Index bookkeeping shared by both backends.

Arrays carry leading point axes (none on the homogeneous backend, the grid
axes on the lattice) followed by tensor index axes, all indices down.
Connection coefficients use ``gamma[..., m, i, k]`` for the coefficient of
``e_k`` in ``nabla_{e_m} e_i``.
"""

import numpy as np

_SLOTS = "abcdefgh"


def order_of(tensor, point_ndim):
    return np.ndim(tensor) - point_ndim


def contract_slot(tensor, matrix, slot, order):
    """Return ``matrix[a, b] * tensor[..., b, ...]`` with ``b`` at ``slot``."""
    letters = _SLOTS[:order]
    src = letters[:slot] + "z" + letters[slot + 1:]
    return np.einsum(f"...{letters[slot]}z,...{src}->...{letters}", matrix, tensor)


def transform_all(tensor, matrix, order):
    out = tensor
    for s in range(order):
        out = contract_slot(out, matrix, s, order)
    return out


def pointwise_inner(a, b, ginv, order):
    """Full contraction of two down-index tensors through ``ginv``."""
    if order == 0:
        return a * b
    raised = transform_all(b, ginv, order)
    axes = tuple(range(-order, 0))
    return np.sum(a * raised, axis=axes)


def sym(t):
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def skew(t):
    return 0.5 * (t - np.swapaxes(t, -1, -2))


def antisymmetry_defect(t, order):
    """Largest violation of full antisymmetry over adjacent transpositions."""
    worst = 0.0
    for s in range(order - 1):
        swapped = np.swapaxes(t, -order + s, -order + s + 1)
        worst = max(worst, float(np.max(np.abs(t + swapped), initial=0.0)))
    return worst


def alternate_3(t):
    """Full antisymmetrization of a 3-tensor (weights 1/6)."""
    perms = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
             ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)]
    nd = t.ndim
    out = np.zeros_like(t)
    for p, s in perms:
        axes = list(range(nd - 3)) + [nd - 3 + q for q in p]
        out = out + s * np.transpose(t, axes)
    return out / 6.0


def levi_civita_coefficients(g, dg, c, ginv):
    """Koszul formula in a frame with structure constants ``c``.

    ``dg[..., m, i, l]`` is the frame derivative of ``g_il`` along ``e_m``.
    """
    cg = np.einsum("mia,...al->...mil", c, g) if np.any(c) else None
    low = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
    if cg is not None:
        # <[e_m,e_i],e_l> - <[e_m,e_l],e_i> - <[e_i,e_l],e_m>
        low = low + cg - np.swapaxes(cg, -2, -1) - np.moveaxis(cg, -1, -3)
    low = 0.5 * low
    return np.einsum("...mil,...lk->...mik", low, ginv)


def covariant_derivative(tensor, gammas, grad, order):
    """``(nabla_m T)_{i...} = d_m T_{i...} - sum over slots of gamma terms``.

    ``gammas`` holds one coefficient array per slot; ``grad`` maps a tensor
    to its frame derivative with the new index in front.
    """
    out = grad(tensor)
    letters = _SLOTS[:order]
    for s in range(order):
        src = letters[:s] + "z" + letters[s + 1:]
        out = out - np.einsum(f"...y{letters[s]}z,...{src}->...y{letters}",
                              gammas[s], tensor)
    return out


def covariant_adjoint(s_tensor, gammas, grad_t, g, ginv, weight, order):
    """Weighted adjoint of :func:`covariant_derivative`.

    ``s_tensor`` has ``order + 1`` slots, the first one being the derivative
    slot. The result pairs exactly with ``covariant_derivative`` under the
    weighted pointwise inner product summed with ``grad_t``.
    """
    raised = transform_all(s_tensor, ginv, order + 1)
    w = np.asarray(weight)[(...,) + (None,) * (order + 1)]
    raised = w * raised
    out = grad_t(raised)
    letters = _SLOTS[:order]
    for s in range(order):
        src = "y" + letters[:s] + "x" + letters[s + 1:]
        out = out - np.einsum(f"...yx{letters[s]},...{src}->...{letters}",
                              gammas[s], raised)
    out = transform_all(out, g, order)
    return out / np.asarray(weight)[(...,) + (None,) * order]


def exterior_derivative(form, grad, c, order):
    """Exterior derivative of a p-form in a frame with structure constants ``c``."""
    n = form.shape[-1] if order > 0 else c.shape[0]
    point = form.shape[:form.ndim - order]
    out = np.zeros(point + (n,) * (order + 1))
    pn = len(point)
    d = grad(form)
    for i in range(order + 1):
        out = out + (-1) ** i * np.moveaxis(d, pn, pn + i)
    if order > 0 and np.any(c):
        rest = _SLOTS[:order - 1]
        br = np.einsum(f"ijz,...z{rest}->...ij{rest}", c, form)
        for i in range(order + 1):
            for j in range(i + 1, order + 1):
                out = out + (-1) ** (i + j) * np.moveaxis(br, [pn, pn + 1], [pn + i, pn + j])
    return out
