import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genricci import lattice as lat


def sin_error(N, order):
    grid = lat.LatticeGrid(3, N, stencil_order=order)
    x, y, z = grid.coords()
    u = np.sin(x) * np.cos(2 * y)
    exact = np.cos(x) * np.cos(2 * y)
    return np.max(np.abs(grid.partial(u, 0) - exact))


@pytest.mark.parametrize("order", [2, 4])
def test_central_difference_order(order):
    e1, e2 = sin_error(16, order), sin_error(32, order)
    assert np.log2(e1 / e2) == pytest.approx(order, abs=0.15)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 4]))
def test_grad_transpose_is_adjoint(seed, order):
    grid = lat.LatticeGrid(3, 8, stencil_order=order)
    r = np.random.default_rng(seed)
    u = r.standard_normal(grid.shape + (2,))
    w = r.standard_normal(grid.shape + (3, 2))
    assert np.sum(grid.grad(u) * w) == pytest.approx(np.sum(u * grid.grad_transpose(w)),
                                                     rel=1e-12, abs=1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        lat.LatticeGrid(2, 8)
    with pytest.raises(ValueError):
        lat.LatticeGrid(3, 4)
    with pytest.raises(ValueError):
        lat.LatticeGrid(3, 8, stencil_order=3)


def test_compact_laplacian_symmetric_psd_constant_kernel():
    grid = lat.LatticeGrid(3, 8)
    g = grid.identity_metric() * 1.5
    A = lat.compact_laplacian(grid, g).toarray()
    assert np.max(np.abs(A - A.T)) < 1e-12
    ev = np.linalg.eigvalsh(A)
    assert ev[0] > -1e-10
    assert np.sum(np.abs(ev) < 1e-9) == 1
    assert np.max(np.abs(A @ np.ones(A.shape[0]))) < 1e-10


def test_ground_state_zero_potential():
    grid = lat.LatticeGrid(3, 8)
    gs = lat.ground_state(np.zeros(grid.shape), grid.identity_metric(), grid)
    assert abs(gs.eigenvalue) < 1e-12
    assert np.ptp(gs.u) < 1e-10
    assert grid.integrate(gs.u ** 2) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("seed", [0, 1])
def test_ground_state_matches_dense_eigensolver(seed):
    grid = lat.LatticeGrid(3, 8)
    r = np.random.default_rng(seed)
    V = lat.random_trig_field(r, 3, max_mode=1).sample(grid)
    A = lat.random_trig_field(r, 3, (3, 3), max_mode=1, amplitude=0.2).sample(grid)
    g = grid.identity_metric() + 0.5 * (A + np.swapaxes(A, -1, -2))
    gs = lat.ground_state(V, g, grid)
    dense = np.linalg.eigvalsh(lat.schrodinger_matrix(V, g, grid))[0]
    assert gs.eigenvalue == pytest.approx(dense, abs=1e-10)
    assert np.all(gs.u > 0)
    assert lat.rayleigh_quotient(gs.u, V, g, grid) == pytest.approx(dense, abs=1e-10)


def test_trig_field_reproducible_and_periodic():
    a = lat.random_trig_field(np.random.default_rng(5), 3, (2,)).sample(lat.LatticeGrid(3, 8))
    b = lat.random_trig_field(np.random.default_rng(5), 3, (2,)).sample(lat.LatticeGrid(3, 8))
    assert np.array_equal(a, b)
    fine = lat.random_trig_field(np.random.default_rng(5), 3, (2,)).sample(lat.LatticeGrid(3, 16))
    assert np.allclose(fine[::2, ::2, ::2], a, atol=1e-13)
