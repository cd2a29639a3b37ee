import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genricci import functional as fn
from genricci import geometry as geo
from genricci import lattice as lat
from genricci import presets
from tests.conftest import smooth_lattice


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2, allow_nan=False))
def test_su2_lambda_closed_form(kappa):
    res = fn.lambda_min(presets.su2_state(kappa))
    assert res.value == pytest.approx(1.5 - 0.5 * kappa ** 2, abs=1e-14)
    assert res.normalization_residual < 1e-14


def test_scaled_metric_lambda():
    # R scales like 1/s for g -> s g, |H|^2 like 1/s^3 for fixed H
    s = 2.0
    res = fn.lambda_min(presets.su2_state(1.0, g=s * np.eye(3)))
    assert res.value == pytest.approx(1.5 / s - 0.5 / s ** 3)
    assert res.f == pytest.approx(1.5 * np.log(s))


def test_flat_lattice_lambda_zero():
    res = fn.lambda_min(presets.lattice_state(3, 8))
    assert abs(res.value) < 1e-12
    assert res.normalization_residual < 1e-12


def test_lattice_lambda_is_dense_ground_state():
    st0 = smooth_lattice(8, seed=4, amplitude=0.2, torsion=0.3)
    res = fn.lambda_min(st0)
    V = fn.potential(st0)
    dense = np.linalg.eigvalsh(lat.schrodinger_matrix(V, st0.g, st0.backend))[0]
    assert res.value == pytest.approx(dense, abs=1e-10)
    assert res.normalization_residual < 1e-10
    assert res.eigen_residual < 1e-9


def test_lattice_lambda_identity_converges_with_grid():
    r = []
    for N in (16, 32):
        st0 = smooth_lattice(N, seed=4, amplitude=0.2, torsion=0.3)
        r.append(fn.lam_identity_residual(st0, fn.lambda_min(st0)))
    assert r[1] < 5e-4
    assert np.log2(r[0] / r[1]) > 1.5


@pytest.mark.parametrize("seed", range(3))
def test_F_bounded_below_by_lambda(seed):
    st0 = smooth_lattice(8, seed=seed, amplitude=0.2, torsion=0.2)
    lam = fn.lambda_value(st0)
    grid = st0.backend
    f = lat.random_trig_field(np.random.default_rng(seed), 3, max_mode=1).sample(grid)
    # normalize int e^{-f} dV = 1
    f = f + np.log(grid.integrate(np.exp(-f) * st0.volume_density))
    assert fn.F_value(st0.replace(f=f)) >= lam - 1e-12
    assert fn.F_value(fn.with_minimizer(st0)) == pytest.approx(lam, abs=1e-9)


def test_first_variation_homogeneous_order_two(rng):
    st0 = fn.with_minimizer(presets.su2_state(0.5))
    for _ in range(3):
        gam = fn.random_direction(st0, rng)
        a = fn.first_variation(st0, gam)
        e = [abs(fn.fd_first_variation(st0, gam, eps) - a) for eps in (1e-3, 1e-4)]
        assert fn.observed_order(e[0], e[1], 10) > 1.9


def test_first_variation_vanishes_at_soliton(su2_soliton, rng):
    gam = fn.random_direction(su2_soliton, rng)
    assert abs(fn.first_variation(su2_soliton, gam)) < 1e-14


def test_lattice_variational_rendering_matches_pointwise_formula():
    grid = lat.LatticeGrid(3, 16)
    st0 = smooth_lattice(16, seed=1, amplitude=0.2, torsion=0.3)
    st0 = st0.replace(g=grid.identity_metric())
    res = fn.lambda_min(st0)
    stm = st0.replace(f=res.f)
    G1 = fn.rc_Hf_variational(stm, res)
    G2 = geo.rc_Hf(stm)
    assert stm.max_abs(G1 - G2) < 0.05 * max(stm.max_abs(G2), 1e-3)


def test_perturb_splits_symmetric_and_antisymmetric_parts(rng):
    st0 = presets.su2_state(1.0)
    gam = rng.standard_normal((3, 3))
    p = fn.perturb(st0, gam, 0.1)
    assert np.allclose(p.g - st0.g, 0.05 * (gam + gam.T))
    assert np.allclose(p.b - st0.b, -0.05 * (gam - gam.T))


def test_observed_order():
    assert fn.observed_order(1e-4, 1e-6, 10) == pytest.approx(2.0)
    assert fn.observed_order(1.0, 0.0, 2) == np.inf


def test_sampling_rejects_non_soliton():
    with pytest.raises(ValueError, match="not a soliton"):
        fn.lojasiewicz_sample(presets.su2_state(0.5), 1e-3, 2)
    with pytest.raises(ValueError, match="generalized Einstein"):
        fn.transversality_sample(presets.su2_state(0.5), 1e-3, 2)


def test_lojasiewicz_rows_shape(su2_soliton):
    rows = fn.lojasiewicz_sample(su2_soliton, 1e-3, 5, seed=1)
    assert len(rows) == 5
    assert all(np.isfinite(r[3]) and r[3] > 0 for r in rows)
    assert rows == fn.lojasiewicz_sample(su2_soliton, 1e-3, 5, seed=1)
