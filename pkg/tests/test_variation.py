import numpy as np
import pytest

from genricci import functional as fn
from genricci import lattice as lat
from genricci import presets
from genricci import variation as var
from tests.conftest import smooth_lattice


def test_comm_suite_su2(su2_soliton):
    suite = var.comm_suite(su2_soliton, samples=5, seed=1)
    assert set(suite) >= {"divbar_divbar_star", "div_divbar_divbar_star", "phi_potential",
                          "L_gauge_image", "divbar_L", "laplacian_div_coupling", "N_gauge_image"}
    assert max(suite.values()) < 1e-12


def test_N_vanishes_on_gauge_image_flat_lattice(rng):
    st0 = fn.with_minimizer(presets.lattice_state(3, 8))
    for _ in range(3):
        gs = var.div_bar_star(st0, var.random_pair(st0, rng))
        assert st0.max_abs(var.N_f(st0, gs)) < 1e-8


def test_operator_refuses_non_soliton(rng):
    st0 = fn.with_minimizer(presets.su2_state(0.5))
    with pytest.raises(var.NotASolitonError):
        var.N_f(st0, var.random_tensor(st0, rng))


@pytest.mark.parametrize("state", ["su2", "hopf"])
def test_slice_and_gauge_projections(state, rng):
    st0 = fn.with_minimizer(presets.state(state))
    gam = var.random_tensor(st0, rng)
    s = var.project_to_slice(st0, gam)
    gpart = var.project_to_gauge(st0, gam)
    assert np.allclose(s + gpart, gam, atol=1e-13)
    assert var.pair_norm_f(st0, var.div_bar(st0, s)) < 1e-12
    assert abs(st0.inner_f(s, gpart)) < 1e-12
    assert np.allclose(var.project_to_slice(st0, s), s, atol=1e-13)


def test_adjoint_pairing(rng):
    st0 = fn.with_minimizer(presets.su2_state(1.0, g=np.diag([1.0, 2.0, 3.0])))
    gam = var.random_tensor(st0, rng)
    p = var.random_pair(st0, rng)
    lhs = st0.inner_f(gam, var.div_bar_star(st0, p))
    rhs = var.pair_inner_f(st0, var.div_bar(st0, gam), p)
    assert lhs == pytest.approx(rhs, abs=1e-13)


def test_lattice_adjoint_pairing():
    st0 = fn.with_minimizer(smooth_lattice(8, seed=3, amplitude=0.2, torsion=0.2))
    r = np.random.default_rng(0)
    gam = var.random_tensor(st0, r)
    p = var.random_pair(st0, r)
    lhs = st0.inner_f(gam, var.div_bar_star(st0, p))
    rhs = var.pair_inner_f(st0, var.div_bar(st0, gam), p)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_su2_spectrum(su2_soliton):
    sp = var.stability_spectrum(su2_soliton)
    assert np.allclose(sorted(sp.eigenvalues), [-1.0] * 6, atol=1e-12)
    assert sp.kernel_dim == 0
    assert sp.verdict == "linearly stable"
    assert sp.symmetry_defect < 1e-12


def test_hopf_spectrum(hopf):
    sp = var.stability_spectrum(hopf)
    ev = np.sort(sp.eigenvalues)
    assert np.allclose(ev[:9], -1.0, atol=1e-12)
    assert np.allclose(ev[9:], 0.0, atol=1e-12)
    assert sp.kernel_dim == 4
    for k in sp.kernel_basis:
        assert var.long_residual(hopf, k) < 1e-12
        assert var.parallel_residuals(hopf, k)["plus"] < 1e-12


def test_flat_torus_kernel_is_all_parallel_tensors():
    st0 = fn.with_minimizer(presets.abelian_state(3))
    sp = var.stability_spectrum(st0)
    assert sp.kernel_dim == 9
    assert max(np.abs(sp.eigenvalues)) < 1e-12


def test_second_variation_matches_second_differences(su2_soliton, rng):
    lam0 = fn.lambda_value(su2_soliton)
    for _ in range(2):
        gam = var.project_to_slice(su2_soliton, fn.random_direction(su2_soliton, rng))
        q = var.second_variation(su2_soliton, gam)
        e = [abs(fn.fd_second_variation(su2_soliton, gam, t, lam0) - q) for t in (1e-2, 5e-3)]
        assert fn.observed_order(e[0], e[1], 2) > 1.9


def test_quadratic_forms_agree_on_slice(su2_soliton, rng):
    gam = var.project_to_slice(su2_soliton, var.random_tensor(su2_soliton, rng))
    assert var.quadratic_form(su2_soliton, gam) == pytest.approx(
        var.second_variation(su2_soliton, gam), abs=1e-13)


def test_lattice_bochner_commutator_converges():
    r = []
    for N in (16, 32):
        grid = lat.LatticeGrid(3, N)
        st0 = smooth_lattice(N, seed=1, amplitude=0.2, f_amplitude=0.0)
        st0 = st0.replace(b=grid.zeros(2))
        u = lat.random_trig_field(np.random.default_rng(3), 3, (3,), max_mode=1).sample(grid)
        v = lat.random_trig_field(np.random.default_rng(4), 3, (3,), max_mode=1).sample(grid)
        r.append(var.bochner_classical_residual(st0, (u, v)))
    assert np.log2(r[0] / r[1]) > 1.5


def test_flat_lattice_spectrum_kernel():
    st0 = fn.with_minimizer(presets.lattice_state(3, 8))
    sp = var.stability_spectrum(st0, max_mode=1)
    assert sp.kernel_dim == 9
    assert max(sp.eigenvalues) < 1e-8
