import numpy as np
import pytest

from genricci import flow
from genricci import functional as fn
from genricci import geometry as geo
from genricci import lie, presets
from genricci import pluriclosed as pc
from genricci import variation as var


def conjugated(seed, scale=0.3):
    r = np.random.default_rng(seed)
    P = np.eye(4) + scale * r.standard_normal((4, 4))
    return pc.ComplexStructure(P @ pc.samelson_hopf().J @ np.linalg.inv(P))


def nijenhuis_oracle(J, alg, x, y):
    br = alg.bracket
    return br(J @ x, J @ y) - J @ br(J @ x, y) - J @ br(x, J @ y) - br(x, y)


@pytest.mark.parametrize("seed", range(3))
def test_nijenhuis_matches_vector_formula(seed):
    cs = conjugated(seed)
    alg = lie.hopf()
    N = cs.nijenhuis(alg.c)
    r = np.random.default_rng(seed + 10)
    x, y = r.standard_normal(4), r.standard_normal(4)
    assert np.allclose(np.einsum("i,j,ijk->k", x, y, N), nijenhuis_oracle(cs.J, alg, x, y))
    assert cs.nijenhuis_residual(alg) > 1e-3


def test_presets_are_integrable():
    assert pc.samelson_hopf().nijenhuis_residual(lie.hopf()) < 1e-12
    assert pc.standard(4).nijenhuis_residual(lie.abelian(4)) == 0.0


def test_rejects_bad_structures():
    with pytest.raises(ValueError):
        pc.ComplexStructure(np.eye(2))
    with pytest.raises(ValueError):
        pc.ComplexStructure(np.zeros((3, 3)))
    st0 = presets.hopf_state(g=np.diag([1.0, 2.0, 1.0, 1.0]))
    with pytest.raises(pc.IncompatibleStructureError):
        pc.hermitian_pack(st0, pc.samelson_hopf())


def test_type_projections(hopf_cs, rng):
    T = rng.standard_normal((4, 4))
    a, b = hopf_cs.part11(T), hopf_cs.part20(T)
    assert np.allclose(a + b, T)
    assert np.allclose(hopf_cs.conj(a), a)
    assert np.allclose(hopf_cs.conj(b), -b)


def test_omega_metric_round_trip(hopf_cs):
    g = np.diag([2.0, 1.5, 1.5, 2.0])
    om = hopf_cs.omega(g)
    assert np.allclose(om, -om.T)
    assert np.allclose(hopf_cs.metric_from_omega(om), g)


def test_hopf_hermitian_data(hopf, hopf_cs):
    hp = pc.hermitian_pack(hopf, hopf_cs)
    assert hp.pluriclosed_residual < 1e-12
    assert hp.torsion_residual < 1e-12
    assert hp.nijenhuis_residual < 1e-12
    assert np.max(np.abs(hp.d_omega)) > 0.5          # not Kahler
    assert np.allclose(hp.theta, [-1.0, 0.0, 0.0, 0.0])
    assert np.max(np.abs(pc.bismut_ricci(hopf, hopf_cs))) < 1e-12
    assert pc.bismut_J_residual(hopf, hopf_cs) < 1e-12
    assert abs(pc.bismut_scalar(hopf, hopf_cs)) < 1e-12


def test_flat_kahler_torus_is_trivial():
    st0 = fn.with_minimizer(presets.abelian_state(4))
    cs = pc.standard(4)
    hp = pc.hermitian_pack(st0, cs)
    assert np.max(np.abs(hp.d_omega)) == 0.0
    assert np.max(np.abs(hp.theta)) == 0.0
    rhs = pc.pluriclosed_rhs(st0, cs)
    assert rhs.worst == 0.0
    assert np.max(np.abs(rhs.dg)) == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_bismut_ricci_form_matches_direct_curvature_and_is_closed(hopf, hopf_cs, seed):
    st0 = pc.random_pluriclosed_perturbation(hopf, hopf_cs, 0.2, np.random.default_rng(seed))
    rho = pc.bismut_ricci(st0, hopf_cs)
    Rd = geo.bismut_curvature_direct(st0, +1)
    direct = 0.5 * np.einsum("xyab,ai,ib->xy", Rd, hopf_cs.J, st0.ginv)
    assert np.max(np.abs(rho - direct)) < 1e-12
    assert np.allclose(rho, -rho.T, atol=1e-14)
    assert np.max(np.abs(geo.exterior_d(st0.backend, rho))) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_pluriclosed_flow_is_gauge_equivalent_to_grf(hopf, hopf_cs, seed):
    st0 = pc.random_pluriclosed_perturbation(hopf, hopf_cs, 0.1, np.random.default_rng(seed))
    assert pc.hermitian_pack(st0, hopf_cs).pluriclosed_residual < 1e-12
    assert pc.pluriclosed_rhs(st0, hopf_cs).worst < 1e-12


def test_pluriclosed_forms_on_hopf(hopf_cs):
    assert len(pc.hermitian_11_basis(hopf_cs)) == 4
    assert len(pc.pluriclosed_11_forms(lie.hopf(), hopf_cs)) == 4


def test_decomposition_of_hermitian_variation(hopf, hopf_cs, rng):
    h = rng.standard_normal((4, 4))
    h = hopf_cs.part11(h + h.T)
    d = pc.decompose_variation(hopf, h, hopf_cs)
    assert np.max(np.abs(d.eta_tilde)) < 1e-14
    assert np.allclose(d.xi, -hopf_cs.compose(h))
    assert d.admissibility < 1e-14


def test_decomposition_of_complex_structure_variation(hopf, hopf_cs, rng):
    S = rng.standard_normal((4, 4))
    S = S + S.T
    J = hopf_cs.J
    I = 0.5 * (S + J @ S @ J)
    assert np.allclose(I @ J, -J @ I)
    gam = hopf_cs.omega(hopf.g) @ I
    d = pc.decompose_variation(hopf, gam, hopf_cs)
    assert np.max(np.abs(d.xi)) < 1e-14
    assert np.allclose(d.eta_tilde, -hopf.g @ I)
    assert d.residual < 1e-14


def test_l_equivalence_bounds(hopf, hopf_cs, rng):
    for _ in range(5):
        a, b = pc.equivalence_bounds(hopf, rng.standard_normal((4, 4)), hopf_cs)
        # J is g-orthogonal and nabla^+-parallel here, so the bound constant is 1
        assert a <= b * (1 + 1e-12) + 1e-14
        assert b <= a * (1 + 1e-12) + 1e-14


def test_closed_formula_matches_second_variation_on_domain(hopf, hopf_cs, rng):
    dom = pc.hermitian_slice_basis(hopf, hopf_cs)
    assert len(dom) == 6
    for _ in range(4):
        gam = sum(rng.standard_normal() * b for b in dom)
        res = pc.hermitian_second_variation(hopf, gam, hopf_cs)
        assert res.mismatch < 1e-10
        assert res.value <= 1e-12


def test_closed_formula_rejects_out_of_domain(hopf, hopf_cs, rng):
    with pytest.raises(pc.SliceError):
        pc.hermitian_second_variation(hopf, var.project_to_gauge(hopf, rng.standard_normal((4, 4))),
                               hopf_cs)
    sl = var.project_to_slice(hopf, rng.standard_normal((4, 4)))
    with pytest.raises(pc.DomainError):
        pc.hermitian_second_variation(hopf, sl, hopf_cs)


def test_aeppli_directions(hopf, hopf_cs, rng):
    for _ in range(4):
        a = pc.aeppli_direction(hopf, hopf_cs, rng.standard_normal(4))
        assert a["value"] == a["closed_form"]
        assert a["dd_alpha"] < 1e-14
    z = pc.aeppli_direction(hopf, hopf_cs, np.array([1.0, 0.0, 0.0, 0.0]))
    assert z["d_alpha_norm"] == 0.0 and z["value"] == 0.0
    nz = pc.aeppli_direction(hopf, hopf_cs, np.array([0.0, 1.0, 0.0, 0.0]))
    assert nz["d_alpha_norm"] > 0 and nz["value"] < 0


@pytest.mark.parametrize("name", ["su2", "hopf"])
def test_L_on_two_forms_identity(name, rng):
    st0 = fn.with_minimizer(presets.state(name))
    n = st0.n
    for _ in range(3):
        xi = rng.standard_normal((n, n))
        assert pc.two_form_L_residual(st0, xi - xi.T) < 1e-12


def test_hopf_kernel_report(hopf, hopf_cs):
    rep = pc.hermitian_kernel_checks(hopf, hopf_cs)
    assert (rep.kernel_dim, rep.domain_dim, rep.fixed_structure_dim) == (4, 1, 0)
    assert rep.worst < 1e-12
    assert any("vacuous" in n for n in rep.notes)


def test_short_pluriclosed_flow_keeps_structure(hopf, hopf_cs):
    st0 = pc.random_pluriclosed_perturbation(hopf, hopf_cs, 0.05, np.random.default_rng(3))
    traj = flow.integrate(st0, 1.0, rhs=pc.flow_rhs(hopf_cs))
    chk = pc.trajectory_checks(traj, hopf_cs)
    assert chk["torsion"] < 1e-10
    assert chk["compatibility"] < 1e-10
    assert traj.lambda_violation() < 1e-9
