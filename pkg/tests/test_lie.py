import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from genricci import geometry as geo
from genricci import lie, tensors


def alternate(t):
    """Full antisymmetrization (average over permutations with sign)."""
    p = t.ndim
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(p)):
        sign = np.linalg.det(np.eye(p)[list(perm)])
        out = out + sign * np.transpose(t, perm)
    return out / np.prod(range(1, p + 1))


def d_oracle(form, alg):
    """``d w(x_0..x_p) = sum_{i<j} (-1)^{i+j} w([x_i, x_j], x_0..^i..^j..x_p)`` on basis vectors."""
    p = form.ndim
    n = alg.dim
    out = np.zeros((n,) * (p + 1))
    for idx in itertools.product(range(n), repeat=p + 1):
        total = 0.0
        for i in range(p + 1):
            for j in range(i + 1, p + 1):
                br = alg.c[idx[i], idx[j]]
                rest = [idx[k] for k in range(p + 1) if k not in (i, j)]
                total += (-1) ** (i + j) * np.einsum("z,z...->...", br, form)[tuple(rest)]
        out[idx] = total
    return out


ALGEBRAS = [lie.su2(), lie.hopf(), lie.abelian(3)]


@pytest.mark.parametrize("alg", ALGEBRAS, ids=lambda a: a.name)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_exterior_derivative_matches_bracket_formula(alg, p, rng):
    form = alternate(rng.standard_normal((alg.dim,) * p))
    assert np.allclose(lie.chevalley_d(form, alg), d_oracle(form, alg), atol=1e-13)


def test_invariant_two_forms_on_hopf_are_not_all_closed():
    # e^0 ^ e^1 has d = -e^0 ^ d e^1 which is nonzero on su(2) + u(1)
    w = np.zeros((4, 4))
    w[0, 1], w[1, 0] = 1.0, -1.0
    assert np.max(np.abs(lie.chevalley_d(w, lie.hopf()))) > 0.5


@settings(max_examples=30, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(-1, 1)), st.sampled_from(ALGEBRAS[:2]))
def test_d_squared_vanishes(a, alg):
    n = alg.dim
    w = alternate(a[:n, :n])
    dd = lie.chevalley_d(lie.chevalley_d(w, alg), alg)
    assert np.max(np.abs(dd)) < 1e-12


def test_d_of_one_form_is_minus_bracket_dual():
    alg = lie.su2()
    # d e^k (x, y) = -e^k([x, y]) = -c[x, y, k]
    for k in range(3):
        e = np.eye(3)[k]
        assert np.allclose(lie.chevalley_d(e, alg), -alg.c[:, :, k])


def test_cartan_form_is_closed_and_alternating():
    for alg in (lie.su2(), lie.hopf()):
        H = lie.cartan_form(alg)
        assert tensors.antisymmetry_defect(H, 3) == 0.0
        assert np.max(np.abs(geo.exterior_d(alg, H))) == 0.0


def test_bi_invariant_levi_civita_is_half_bracket():
    alg = lie.su2()
    gam = lie.koszul_connection(np.eye(3), alg)
    assert np.allclose(gam, 0.5 * alg.c, atol=1e-15)


def test_scaled_metric_keeps_levi_civita_coefficients():
    alg = lie.su2()
    assert np.allclose(lie.koszul_connection(3.0 * np.eye(3), alg),
                       lie.koszul_connection(np.eye(3), alg))


def test_rejects_bad_structure_constants():
    c = np.zeros((2, 2, 2))
    c[0, 1, 0] = 1.0
    c[1, 0, 0] = -1.0
    with pytest.raises(ValueError, match="unimodular"):
        lie.LieAlgebraPreset("ax+b", c)
    with pytest.raises(ValueError, match="antisymmetric"):
        lie.LieAlgebraPreset("bad", np.ones((2, 2, 2)))


def test_rejects_non_spd_metric():
    with pytest.raises(ValueError, match="positive definite"):
        lie.check_spd(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError, match="symmetric"):
        lie.check_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_preset_lookup():
    assert lie.preset("abelian:5").dim == 5
    assert lie.preset("hopf").dim == 4
    with pytest.raises(KeyError):
        lie.preset("sl2")
    with pytest.raises(ValueError):
        lie.preset("abelian:x")
