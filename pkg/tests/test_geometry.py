import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genricci import geometry as geo
from genricci import lie, presets
from tests.conftest import smooth_lattice

kappas = st.floats(-2.0, 2.0, allow_nan=False)


def random_spd(r, n, spread=0.3):
    a = r.standard_normal((n, n)) * spread
    return np.eye(n) + 0.5 * (a + a.T) + spread * np.eye(n)


def random_homogeneous(seed, alg=None):
    r = np.random.default_rng(seed)
    alg = lie.su2() if alg is None else alg
    n = alg.dim
    b = r.standard_normal((n, n))
    H0 = np.zeros((n, n, n))
    if n == 3:
        H0 = r.standard_normal() * lie._eps3()
    return geo.homogeneous_state(alg, random_spd(r, n), b - b.T, H0)


def test_su2_levi_civita_curvature_oracle():
    st0 = presets.su2_state(0.0)
    c = st0.backend.c
    pk = geo.curvature(st0)
    # R(x, y, z, w) = -1/4 <[[x, y], z], w> for a bi-invariant metric
    oracle = -0.25 * np.einsum("xya,azw->xyzw", c, c)
    assert np.max(np.abs(pk.Rm - oracle)) < 1e-15
    assert np.allclose(pk.Rc, 0.5 * np.eye(3))
    assert pk.R == pytest.approx(1.5)


@settings(max_examples=20, deadline=None)
@given(kappas)
def test_su2_torsion_quantities(kappa):
    pk = geo.curvature(presets.su2_state(kappa))
    assert np.allclose(pk.H2, 2 * kappa ** 2 * np.eye(3), atol=1e-14)
    assert pk.H_norm2 == pytest.approx(6 * kappa ** 2, abs=1e-14)
    assert np.max(np.abs(pk.dstar_H)) < 1e-15


@settings(max_examples=25, deadline=None)
@given(kappas)
def test_su2_soliton_iff_unit_kappa(kappa):
    rg, rb = geo.soliton_residual(presets.su2_state(kappa))
    expected = abs(0.5 - 0.5 * kappa ** 2) * np.sqrt(3)
    assert rg == pytest.approx(expected, abs=1e-13)
    assert rb < 1e-14


@pytest.mark.parametrize("kappa", [1.0, -1.0])
def test_su2_bismut_flat_at_unit_kappa(kappa):
    st0 = presets.su2_state(kappa)
    for sign in (1, -1):
        assert np.max(np.abs(geo.bismut_curvature_direct(st0, sign))) < 1e-15
    assert np.max(np.abs(geo.curvature(st0).Rm_plus)) < 1e-15


def test_bismut_not_flat_off_unit_kappa():
    assert np.max(np.abs(geo.curvature(presets.su2_state(0.5)).Rm_plus)) > 0.05


@pytest.mark.parametrize("seed", range(5))
def test_torsion_expansion_matches_direct_bismut_curvature(seed):
    st0 = random_homogeneous(seed)
    pk = geo.curvature(st0)
    assert np.max(np.abs(pk.Rm_plus - geo.bismut_curvature_direct(st0, +1))) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_p3_and_bianchi_on_random_invariant_states(seed):
    st0 = random_homogeneous(seed)
    r = geo.bismut_trace_residuals(st0)
    assert max(r.values()) < 1e-12
    assert geo.bianchi_residual(st0) < 1e-12


@settings(max_examples=15, deadline=None)
@given(kappas)
def test_bianchi_su2_any_kappa(kappa):
    assert geo.bianchi_residual(presets.su2_state(kappa)) < 1e-12


def test_flat_torus_everything_vanishes():
    st0 = presets.abelian_state(4)
    pk = geo.curvature(st0)
    assert np.max(np.abs(pk.Rm)) == 0.0
    assert geo.soliton_residual(st0) == (0.0, 0.0)
    lat0 = presets.lattice_state(3, 8)
    assert geo.soliton_residual(lat0) == (0.0, 0.0)
    assert geo.bianchi_residual(lat0) == 0.0


def test_h_is_derived_from_b():
    st0 = random_homogeneous(3)
    assert np.allclose(st0.H, st0.H0 + geo.exterior_d(st0.backend, st0.b))


def test_lattice_p3_holds_and_direct_curvature_converges():
    errs = []
    for N in (8, 16):
        st0 = smooth_lattice(N, seed=2, amplitude=0.1, torsion=0.2)
        pk = geo.curvature(st0)
        assert max(geo.bismut_trace_residuals(st0, pk).values()) < 1e-8
        errs.append(st0.max_abs(pk.Rm_plus - geo.bismut_curvature_direct(st0, +1)))
    assert np.log2(errs[0] / errs[1]) > 1.5


def test_lattice_bianchi_second_order():
    r = [geo.bianchi_residual(smooth_lattice(N, seed=1, amplitude=0.01, torsion=0.1))
         for N in (8, 16)]
    assert np.log2(r[0] / r[1]) > 1.5
