import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from coherent_graphs.benchmarks import rotating_double_well, three_ring_graph
from coherent_graphs.errors import NotSymmetric, NotSymmetrizable, SingularNu, ZeroDegree
from coherent_graphs.graph import add_self_loops, build_graph, from_sparse, out_degrees
from coherent_graphs.operators import (
    forward_backward_matrix,
    nu_vector,
    random_walk_laplacian,
    temporal_transition_matrix,
    transition_matrix,
)
from coherent_graphs.spectral import (
    degenerate_groups,
    eigs_undirected_rw,
    fix_signs,
    forward_backward_operator,
    right_singular_vectors,
    top_eigs_symmetric,
)

from conftest import dense_q, digraphs


def three_ring_P():
    return transition_matrix(add_self_loops(three_ring_graph(), 1.0))


def principal_angles_max(A, B):
    return float(np.max(scipy.linalg.subspace_angles(A, B)))


def test_three_ring_top_eigs(three_ring_dense):
    Q = forward_backward_matrix(three_ring_P())
    s = top_eigs_symmetric(Q, 4)
    oracle = np.sort(np.linalg.eigvalsh(dense_q(three_ring_dense)))[::-1][:4]
    np.testing.assert_allclose(s.eigenvalues, oracle, atol=1e-12)
    assert s.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert s.eigenvalues[2] > 0.99 and s.eigenvalues[2] - s.eigenvalues[3] > 0.1
    assert (1, 2) in s.degenerate  # lambda2 = lambda3 by the threefold rotation symmetry


def test_identity_top_eigs():
    s = top_eigs_symmetric(np.eye(4), 2)
    np.testing.assert_array_equal(s.eigenvalues, [1, 1])


def test_double_well_two_dominant_eigenvalues():
    P = temporal_transition_matrix(rotating_double_well(), 1.0)
    s = top_eigs_symmetric(forward_backward_matrix(P), 3)
    assert s.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert s.eigenvalues[1] > 0.7 and s.eigenvalues[1] - s.eigenvalues[2] > 0.5


def test_not_symmetric():
    with pytest.raises(NotSymmetric):
        top_eigs_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_k_out_of_range():
    with pytest.raises(ValueError):
        top_eigs_symmetric(np.eye(3), 4)


def test_sign_convention():
    V = fix_signs(np.array([[0.1, -0.9], [-0.8, 0.2]]))
    np.testing.assert_array_equal(V, [[-0.1, 0.9], [0.8, -0.2]])


def test_degenerate_groups():
    assert degenerate_groups(np.array([1.0, 0.5, 0.5 - 1e-12, 0.2])) == ((1, 2),)


def test_k3_walk_spectrum():
    g = build_graph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)], directed=False)
    s = eigs_undirected_rw(transition_matrix(g), out_degrees(g), 3)
    np.testing.assert_allclose(s.eigenvalues, [1, -0.5, -0.5], atol=1e-14)


def test_two_k2_components():
    g = add_self_loops(build_graph(4, [(0, 1, 1), (2, 3, 1)], directed=False), 1.0)
    s = eigs_undirected_rw(transition_matrix(g), out_degrees(g), 2)
    np.testing.assert_allclose(s.eigenvalues, [1, 1], atol=1e-14)


def test_zero_degree():
    g = build_graph(2, [], directed=False)
    with pytest.raises(ZeroDegree):
        eigs_undirected_rw(np.eye(2), out_degrees(g), 1)


def test_not_symmetrizable():
    with pytest.raises(NotSymmetrizable):
        eigs_undirected_rw(three_ring_P(), np.ones(12), 2)


def test_svd_two_state():
    s = right_singular_vectors(np.array([[0.5, 0.5], [0.5, 0.5]]), np.ones(2), 2)
    np.testing.assert_allclose(s.eigenvalues, [1, 0], atol=1e-15)


def test_svd_identity():
    s = right_singular_vectors(np.eye(3), np.ones(3), 3)
    np.testing.assert_allclose(s.eigenvalues, 1)


def test_svd_singular_nu():
    with pytest.raises(SingularNu):
        right_singular_vectors(np.array([[1.0, 0], [1, 0]]), np.array([2.0, 0.0]), 1)


def test_svd_matches_eig_on_three_ring():
    P = three_ring_P()
    a = right_singular_vectors(P, nu_vector(P), 6)
    b = top_eigs_symmetric(forward_backward_matrix(P), 6)
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)
    # lambda2 = lambda3 and lambda4..6 are degenerate: compare subspaces
    assert principal_angles_max(a.eigenvectors[:, :3], b.eigenvectors[:, :3]) < 1e-6
    assert abs(a.eigenvectors[:, 0] @ b.eigenvectors[:, 0]) > 1 - 1e-8


def test_svds_route_agrees_with_dense():
    rng = np.random.default_rng(3)
    A = (rng.random((80, 80)) < 0.1).astype(float)
    P = transition_matrix(add_self_loops(from_sparse(A), 1.0))
    a = right_singular_vectors(P, nu_vector(P), 5, method="svds")
    b = right_singular_vectors(P, nu_vector(P), 5, method="dense")
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)


def test_constant_vector_is_top_eigenvector():
    Q = forward_backward_matrix(three_ring_P())
    n = Q.n
    assert np.abs(Q.matrix @ np.ones(n) - 1).max() < 1e-12
    s = top_eigs_symmetric(Q, 1)
    np.testing.assert_allclose(s.eigenvectors[:, 0], np.ones(n) / np.sqrt(n), atol=1e-12)


def test_lanczos_on_three_ring_subspaces():
    Q = forward_backward_matrix(three_ring_P())
    a = top_eigs_symmetric(Q, 3, method="lanczos")
    b = top_eigs_symmetric(Q, 3, method="dense")
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)
    assert principal_angles_max(a.eigenvectors, b.eigenvectors) < 1e-6


def test_lanczos_finds_repeated_eigenvalues():
    # four disjoint triangles: eigenvalue 1 has multiplicity four
    edges = [(b + i, b + (i + 1) % 3, 1.0) for b in range(0, 12, 3) for i in range(3)]
    Q = forward_backward_matrix(transition_matrix(add_self_loops(build_graph(12, edges), 1.0)))
    s = top_eigs_symmetric(Q, 4, method="lanczos")
    np.testing.assert_allclose(s.eigenvalues, 1, atol=1e-10)


def test_matrix_free_operator_matches_q():
    P = three_ring_P()
    op = forward_backward_operator(P)
    np.testing.assert_allclose(op @ np.eye(12), forward_backward_matrix(P).to_dense(), atol=1e-15)


def test_lanczos_large_sparse():
    rng = np.random.default_rng(0)
    n = 1500
    A = sp.random_array((n, n), density=4 / n, random_state=rng, format="csr")
    A.data[:] = 1
    P = transition_matrix(add_self_loops(from_sparse(A), 1.0))
    s = top_eigs_symmetric(forward_backward_operator(P), 8)
    assert s.method == "lanczos"
    assert s.residuals.max() < 1e-8
    oracle = np.sort(np.linalg.eigvalsh(forward_backward_matrix(P).to_dense()))[::-1][:8]
    np.testing.assert_allclose(s.eigenvalues, oracle, atol=1e-8)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(20, 200), st.integers(1, 6))
def test_lanczos_agrees_with_dense_on_random_symmetric(seed, n, k):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    M = (B + B.T) / 2
    a = top_eigs_symmetric(M, k, method="lanczos", seed=seed)
    oracle = scipy.linalg.eigh(M, eigvals_only=True)[::-1][:k]
    np.testing.assert_allclose(a.eigenvalues, oracle, atol=1e-8)
    assert np.all(a.residuals < 1e-8 * np.abs(M).sum(axis=0).max())
    G = a.eigenvectors.T @ a.eigenvectors
    np.testing.assert_allclose(G, np.eye(k), atol=1e-8)


@given(digraphs(max_n=30))
def test_decomposition_invariants(A):
    Q = forward_backward_matrix(transition_matrix(add_self_loops(from_sparse(A), 1.0)))
    k = min(4, Q.n)
    s = top_eigs_symmetric(Q, k)
    assert np.all(np.diff(s.eigenvalues) <= 0)
    np.testing.assert_allclose(np.linalg.norm(s.eigenvectors, axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(k), atol=1e-8)
    assert np.all(s.residuals < 1e-8 * max(1.0, abs(Q.matrix).sum(axis=0).max()))


@given(digraphs(max_n=30, symmetric=True))
def test_lrw_eigenpairs_from_p(A):
    g = add_self_loops(from_sparse(A, directed=False), 1.0)
    P = transition_matrix(g)
    s = eigs_undirected_rw(P, out_degrees(g), min(3, g.n))
    L = random_walk_laplacian(P).to_dense()
    for lam, u in zip(s.eigenvalues, s.eigenvectors.T):
        assert np.linalg.norm(L @ u - (1 - lam) * u) < 1e-8
