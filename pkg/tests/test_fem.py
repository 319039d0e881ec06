import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.sparse.linalg import spsolve

from translab.errors import ConvergenceError, DomainError, ParameterError
from translab.fem import (DiscreteField, Grid, SparseSystem, assemble, check_symmetric, energy, gauss_points,
                          l2_error, mass_matrix, pcg, solve_cg, stiffness_and_load)
from translab.problem import CoefficientTensor, Empty, TransmissionProblem, identity_block


def laplace(n=2, m=1, boundary=None, forcing=None, A=None):
    A = A or CoefficientTensor.isotropic(n, m, 1.0)
    return TransmissionProblem(A, A, Empty(), boundary=boundary, forcing=forcing)


def test_grid_geometry():
    g = Grid(2, 4)
    assert g.h == 0.5 and g.num_nodes == 25 and g.num_cells == 16
    assert g.boundary_mask.sum() == 16
    assert np.allclose(g.nodes[g.cell_nodes[0]], [[-1, -1], [-1, -0.5], [-0.5, -1], [-0.5, -0.5]])
    with pytest.raises(ParameterError):
        Grid(2, 6)
    with pytest.raises(DomainError):
        g.locate([[1.5, 0.0]])


def test_gauss_points_inside_cells():
    g = Grid(2, 4)
    pts, w = gauss_points(g)
    assert pts.shape == (16, 4, 2)
    assert w.sum() == pytest.approx(g.h**2)


def test_mass_integrates_area():
    for n in (1, 2, 3):
        M = mass_matrix(Grid(n, 4))
        assert M.sum() == pytest.approx(2.0**n)


def test_stiffness_symmetric_and_annihilates_constants():
    K, _ = stiffness_and_load(laplace(), Grid(2, 8))
    assert check_symmetric(K)
    assert np.abs(K @ np.ones(K.shape[0])).max() < 1e-12


@pytest.mark.parametrize("m", [1, 2])
def test_affine_patch_test(m):
    # affine data with constant coefficients is reproduced exactly
    grad = np.array([[1.0, -2.0], [0.5, 3.0]])[:m]
    exact = lambda x: 0.25 + x @ grad.T  # noqa: E731
    mat = np.eye(2 * m) + 0.2 * np.ones((2 * m, 2 * m))
    A = CoefficientTensor.from_matrix(mat, 2, m, lam=0.5)
    s = assemble(laplace(m=m, A=A, boundary=exact), Grid(2, 16))
    u = solve_cg(s, tol=1e-12).reshape(m, -1)
    assert np.abs(u - exact(Grid(2, 16).nodes).T).max() < 1e-9


def test_pcg_matches_direct(rng):
    s = assemble(laplace(boundary=lambda x: np.sin(x[:, 0]) * x[:, 1]), Grid(2, 16))
    x, info = pcg(s.matrix, s.rhs, tol=1e-12)
    assert info.converged
    assert np.allclose(x, spsolve(s.matrix.tocsc(), s.rhs), atol=1e-9)


def test_pcg_zero_rhs_and_failure():
    A = sp.identity(5, format="csr")
    x, info = pcg(A, np.zeros(5))
    assert info.iterations == 0 and not x.any()
    s = assemble(laplace(boundary=lambda x: x[:, 0] ** 2), Grid(2, 32))
    with pytest.raises(ConvergenceError) as exc:
        solve_cg(s, max_iter=2)
    assert exc.value.partial is not None and exc.value.residual > 1e-10


def test_non_symmetric_rejected():
    mat = sp.csr_matrix(np.array([[2.0, 1.0], [0.0, 2.0]]))
    with pytest.raises(ParameterError):
        solve_cg(SparseSystem.from_matrix(mat, np.ones(2)))


def test_forcing_sign_matches_divergence_form():
    # lap u = div F = 1 with zero data, so u is negative inside
    F = lambda x: np.stack([x[:, 0], np.zeros(len(x))], axis=1)[:, None, :]  # noqa: E731
    s = assemble(laplace(forcing=F), Grid(2, 32))
    u = DiscreteField(Grid(2, 32), solve_cg(s))
    assert u.evaluate([[0.0, 0.0]])[0, 0] < 0


def test_energy_of_solution_is_minimal():
    g = Grid(2, 16)
    p = laplace(boundary=lambda x: x[:, 0] * x[:, 1] + x[:, 0] ** 2)
    s = assemble(p, g)
    u = solve_cg(s, tol=1e-12)
    bump = np.zeros_like(u)
    bump[~s.dirichlet_mask] = 1e-3 * np.cos(np.arange((~s.dirichlet_mask).sum()))
    assert energy(s.full_matrix, u) < energy(s.full_matrix, u + bump)


def test_discrete_field_interpolation():
    g = Grid(2, 8)
    f = DiscreteField.interpolate(g, lambda x: np.stack([2 * x[:, 0] - x[:, 1], x[:, 1]], axis=1))
    assert f.m == 2
    u, gr = f.evaluate(np.array([[0.13, -0.4]]), with_gradient=True)
    assert np.allclose(u, [[0.66, -0.4]])
    assert np.allclose(gr[0], [[2, -1], [0, 1]])
    assert np.allclose(f.cell_gradients[:, 0], [2, -1])
    assert np.allclose(f.gradient_at((3, 4)), [[2, -1], [0, 1]])


def test_l2_error_of_interpolant():
    g = Grid(2, 32)
    fn = lambda x: np.sin(np.pi * x[:, 0]) * np.cos(x[:, 1])  # noqa: E731
    err, norm = l2_error(DiscreteField.interpolate(g, fn), fn)
    assert err < 5e-3 * norm
    err2, _ = l2_error(DiscreteField.interpolate(Grid(2, 64), fn), fn)
    assert err / err2 == pytest.approx(4.0, rel=0.05)


def test_export_triplets(tmp_path):
    s = assemble(laplace(boundary=lambda x: x[:, 0]), Grid(2, 4))
    path = tmp_path / "k.txt"
    s.export_triplets(path)
    rows = np.loadtxt(path)
    assert rows.shape[0] == s.matrix.nnz
    back = sp.coo_matrix((rows[:, 2], (rows[:, 0].astype(int), rows[:, 1].astype(int))), shape=s.matrix.shape)
    assert abs(back - s.matrix).max() == 0


def test_vector_block_decouples():
    g = Grid(2, 8)
    p1 = laplace(m=1)
    p2 = laplace(m=2)
    K1, _ = stiffness_and_load(p1, g)
    K2, _ = stiffness_and_load(p2, g)
    N = g.num_nodes
    assert abs(K2[:N, :N] - K1).max() < 1e-14
    assert abs(K2[:N, N:]).max() == 0


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 5.0))
def test_patch_test_property(c, g1, g2, value):
    A = CoefficientTensor.isotropic(2, 1, value)
    p = TransmissionProblem(A, A, Empty(), boundary=lambda x: c + g1 * x[:, 0] + g2 * x[:, 1])
    grid = Grid(2, 16)
    u = solve_cg(assemble(p, grid), tol=1e-12)
    assert np.abs(u - (c + grid.nodes @ [g1, g2])).max() < 1e-8 * (1 + abs(c) + abs(g1) + abs(g2))


def test_identity_block_stiffness_is_laplacian():
    g = Grid(1, 4)
    A = CoefficientTensor.constant_tensor(identity_block(1, 1))
    K, _ = stiffness_and_load(laplace(n=1, A=A), g)
    assert np.allclose(K.toarray()[1, :3], np.array([-1, 2, -1]) / g.h)
