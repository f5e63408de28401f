import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from coherent_graphs.benchmarks import three_ring_graph
from coherent_graphs.errors import InvalidDistribution, NonpositiveEpsilon
from coherent_graphs.estimation import (
    GramMatrices,
    WalkDataset,
    convergence_study,
    estimate_equilibrium_pf,
    estimate_fb,
    estimate_koopman,
    estimate_pf,
    gram_matrices,
    simulate_trajectory,
    simulate_walks,
)
from coherent_graphs.graph import add_self_loops, build_graph, from_sparse
from coherent_graphs.operators import transition_matrix

from conftest import dense_q, digraphs


def limit_grams(P: np.ndarray) -> GramMatrices:
    """Closed-form m -> infinity Gram matrices for uniform starts and one step."""
    n = P.shape[0]
    return GramMatrices(np.full(n, 1 / n), sp.csr_array(P / n), P.sum(axis=0) / n, m=10**12)


def three_ring_P():
    return transition_matrix(add_self_loops(three_ring_graph(), 1.0))


# -- simulation -------------------------------------------------------------------

def test_permutation_walks_are_deterministic():
    perm = np.array([2, 0, 3, 1])
    P = np.eye(4)[perm]
    d = simulate_walks(P, 500, 3, seed=1)
    np.testing.assert_array_equal(d.y, perm[perm[perm[d.x]]])


def test_absorbing_point_mass():
    P = np.array([[1.0, 0.0], [0.5, 0.5]])
    d = simulate_walks(P, 100, 10, init=[1.0, 0.0], seed=0)
    assert d.pairs == [(0, 0)] * 100


def test_invalid_init():
    with pytest.raises(InvalidDistribution):
        simulate_walks(np.eye(2), 10, 1, init=[0.7, 0.7])
    with pytest.raises(InvalidDistribution):
        simulate_walks(np.eye(2), 10, 1, init=[1.5, -0.5])


def test_seed_determinism_and_prefix_stability():
    P = three_ring_P()
    a = simulate_walks(P, 1000, 7, seed=42)
    b = simulate_walks(P, 1000, 7, seed=42)
    c = simulate_walks(P, 300, 7, seed=42)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    # a walker's path depends only on (seed, index, length), not on m
    np.testing.assert_array_equal(a.x[:300], c.x)
    np.testing.assert_array_equal(a.y[:300], c.y)
    d = simulate_walks(P, 1000, 7, seed=43)
    assert not np.array_equal(a.y, d.y)


def test_one_step_frequencies_match_rows():
    P = three_ring_P().to_dense()
    m = 200_000
    d = simulate_walks(P, m, 1, init=np.eye(12)[3], seed=5)
    freq = np.bincount(d.y, minlength=12) / m
    sigma = np.sqrt(P[3] * (1 - P[3]) / m)
    assert np.all(np.abs(freq - P[3]) <= 5 * sigma + 1e-12)


def test_time_dependent_schedule_order():
    # step 0 follows the first matrix, every later step the last one
    shift = np.roll(np.eye(3), 1, axis=1)
    d = simulate_walks([shift, np.eye(3)], 50, 4, seed=0)
    np.testing.assert_array_equal(d.y, (d.x + 1) % 3)


def test_trajectories_recorded():
    d = simulate_walks(three_ring_P(), 20, 5, seed=0, record_trajectories=True)
    assert d.trajectories.shape == (20, 6)
    np.testing.assert_array_equal(d.trajectories[:, 0], d.x)
    np.testing.assert_array_equal(d.trajectories[:, -1], d.y)


def test_dataset_save_load(tmp_path):
    d = simulate_walks(three_ring_P(), 50, 3, seed=9, schedule_id="ring")
    d.save(tmp_path / "walks.tsv")
    e = WalkDataset.load(tmp_path / "walks.tsv")
    np.testing.assert_array_equal(e.x, d.x)
    np.testing.assert_array_equal(e.y, d.y)
    assert e.metadata() == d.metadata()


# -- Gram matrices ----------------------------------------------------------------

def test_gram_two_pairs():
    G = gram_matrices(WalkDataset(2, [0, 1], [1, 0], 1, 0))
    np.testing.assert_array_equal(G.C_xx.toarray(), np.diag([0.5, 0.5]))
    np.testing.assert_array_equal(G.C_xy.toarray(), [[0, 0.5], [0.5, 0]])
    np.testing.assert_array_equal(G.C_yy.toarray(), np.diag([0.5, 0.5]))


def test_gram_single_pair():
    G = gram_matrices(WalkDataset(3, [2], [2], 1, 0))
    np.testing.assert_array_equal(G.cxx, [0, 0, 1])
    np.testing.assert_array_equal(G.cyy, [0, 0, 1])


@given(st.integers(1, 10), st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=60))
def test_gram_invariants(n, pairs):
    pairs = [(a % n, b % n) for a, b in pairs]
    x, y = zip(*pairs)
    G = gram_matrices(WalkDataset(n, x, y, 1, 0))
    assert G.cxx.sum() == pytest.approx(1) and G.cyy.sum() == pytest.approx(1)
    assert G.cxy.sum() == pytest.approx(1)
    assert np.all(G.cxx >= 0) and np.all(G.cyy >= 0)
    K = estimate_koopman(G)
    visited = G.cxx > 0
    np.testing.assert_allclose(K[visited].sum(axis=1), 1, rtol=1e-12)
    np.testing.assert_array_equal(K[~visited], 0)


def test_gram_limits_empirically():
    P = three_ring_P().to_dense()
    G = gram_matrices(simulate_walks(P, 400_000, 1, seed=3))
    n = 12
    np.testing.assert_allclose(G.cxx, 1 / n, atol=3e-3)
    np.testing.assert_allclose(G.C_xy.toarray(), P / n, atol=3e-3)
    np.testing.assert_allclose(G.cyy, P.sum(axis=0) / n, atol=3e-3)


# -- estimators -------------------------------------------------------------------

def test_exact_limits_reproduce_p_pt_q(three_ring_dense):
    P = three_ring_P().to_dense()
    G = limit_grams(P)
    assert np.abs(estimate_koopman(G) - P).max() < 1e-12
    assert np.abs(estimate_pf(G) - P.T).max() < 1e-12
    assert np.abs(estimate_fb(G, "pinv") - dense_q(three_ring_dense)).max() < 1e-12


@given(digraphs(max_n=25))
def test_exact_limits_random_graphs(A):
    P = transition_matrix(add_self_loops(from_sparse(A), 1.0)).to_dense()
    G = limit_grams(P)
    assert np.abs(estimate_koopman(G) - P).max() < 1e-12
    assert np.abs(estimate_pf(G) - P.T).max() < 1e-12
    assert np.abs(estimate_fb(G, "pinv") - dense_q(A)).max() < 1e-12
    # Tikhonov shifts the result by O(epsilon * n)
    assert np.abs(estimate_fb(G) - dense_q(A)).max() < 1e-5


def test_koopman_missing_vertex_row_zero():
    G = gram_matrices(WalkDataset(3, [0, 1], [1, 0], 1, 0))
    np.testing.assert_array_equal(estimate_koopman(G)[2], 0)


def test_pf_single_pair():
    # C_xx^+ = diag(1, 0) and C_yx = [[0, 0], [1, 0]]: vertex 1 was never a
    # start, so its row is dropped by the pseudoinverse
    G = gram_matrices(WalkDataset(2, [0], [1], 1, 0))
    np.testing.assert_array_equal(G.C_yx.toarray(), [[0, 0], [1, 0]])
    np.testing.assert_array_equal(estimate_pf(G), [[0, 0], [0, 0]])
    G = gram_matrices(WalkDataset(2, [0, 1], [1, 1], 1, 0))
    np.testing.assert_array_equal(estimate_pf(G), [[0, 0], [1, 1]])


def test_fb_has_raw_formula_eigenvalues():
    P = three_ring_P()
    G = gram_matrices(simulate_walks(P, 3000, 2, seed=4))
    for reg in ("pinv", "tikhonov"):
        inv = (lambda c: np.where(c > 0, 1 / np.where(c > 0, c, 1), 0)) if reg == "pinv" else (lambda c: 1 / (c + 1e-8))
        raw = np.diag(inv(G.cxx)) @ G.C_xy.toarray() @ np.diag(inv(G.cyy)) @ G.C_yx.toarray()
        expected = np.sort(np.linalg.eigvals(raw).real)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(estimate_fb(G, reg))), expected, atol=1e-10)


def test_fb_equals_raw_formula_when_starts_balanced():
    G = gram_matrices(WalkDataset(3, [0, 1, 2, 0, 1, 2], [1, 1, 2, 0, 2, 2], 1, 0))
    raw = np.diag(1 / G.cxx) @ G.C_xy.toarray() @ np.diag(1 / G.cyy) @ G.C_yx.toarray()
    np.testing.assert_allclose(estimate_fb(G, "pinv"), raw, atol=1e-15)


def test_pf_is_koopman_transpose_for_symmetric_walk():
    g = add_self_loops(build_graph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)], directed=False), 1.0)
    P = transition_matrix(g)
    G = gram_matrices(simulate_walks(P, 300_000, 1, seed=0))
    np.testing.assert_allclose(estimate_pf(G), estimate_koopman(G).T, atol=0.01)


def test_fb_epsilon_must_be_positive():
    G = limit_grams(np.eye(2))
    with pytest.raises(NonpositiveEpsilon):
        estimate_fb(G, "tikhonov", 0.0)
    with pytest.raises(NonpositiveEpsilon):
        estimate_fb(G, "tikhonov", -1.0)


def test_fb_empty_target_column_dropped():
    # vertex 0 never receives a walker: C_yy is singular
    G = gram_matrices(WalkDataset(3, [0, 1, 2], [1, 2, 1], 1, 0))
    for reg in ("pinv", "tikhonov"):
        F = estimate_fb(G, reg)
        assert np.all(np.isfinite(F))
    F = estimate_fb(G, "pinv")
    np.testing.assert_allclose(F, F.T, atol=1e-15)


def test_fb_empirical_accuracy():
    P = three_ring_P()
    F = estimate_fb(gram_matrices(simulate_walks(P, 100_000, 1, seed=0)))
    Q = dense_q(three_ring_graph().to_dense())
    assert np.abs(F - Q).max() < 0.05


@settings(max_examples=30)
@given(digraphs(max_n=20), st.integers(0, 1000))
def test_fb_symmetric_psd_with_full_support(A, seed):
    P = transition_matrix(add_self_loops(from_sparse(A), 1.0))
    n = P.n
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        F = estimate_fb(gram_matrices(simulate_walks(P, 50 * n, 2, seed=seed)))
    np.testing.assert_array_equal(F, F.T)
    assert np.linalg.eigvalsh(F).min() >= -1e-10


def test_equilibrium_pf_on_k3_matches_p():
    g = build_graph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)], directed=False)
    P = transition_matrix(g)
    d = simulate_trajectory(P, 200_000, seed=1)
    assert d.equilibrium
    np.testing.assert_allclose(estimate_equilibrium_pf(gram_matrices(d)), P.to_dense(), atol=0.01)


def test_equilibrium_pf_single_vertex():
    d = simulate_trajectory(np.array([[1.0]]), 10, seed=0, burn_in=5)
    np.testing.assert_array_equal(estimate_equilibrium_pf(gram_matrices(d)), [[1.0]])


def test_koopman_error_shrinks_with_m():
    P = three_ring_P()
    Pd = P.to_dense()
    wins = 0
    for seed in range(20):
        small = estimate_koopman(gram_matrices(simulate_walks(P, 10_000, 1, seed=seed)))
        large = estimate_koopman(gram_matrices(simulate_walks(P, 1_000_000, 1, seed=1000 + seed)))
        wins += np.abs(large - Pd).max() < np.abs(small - Pd).max()
    assert wins >= 19


# -- convergence study ------------------------------------------------------------

def test_convergence_single_row():
    rows = convergence_study(three_ring_P(), [100], 5, trials=1, seed=0)
    assert len(rows) == 1 and rows[0].m == 100 and rows[0].std_error == 0.0


def test_convergence_permutation_schedule_is_exact():
    perm = np.roll(np.eye(6), 1, axis=1)
    rows = convergence_study([perm], [600, 1200], 4, trials=3, seed=0)
    for r in rows:
        assert r.mean_error < 1e-5


def test_convergence_grid_validation():
    with pytest.raises(ValueError):
        convergence_study(np.eye(2), [], 1)
    with pytest.raises(ValueError):
        convergence_study(np.eye(2), [10, 5], 1)
