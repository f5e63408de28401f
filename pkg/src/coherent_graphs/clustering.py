"""Spectral clustering of static and time-evolving graphs.

Rows of the dominant eigenvectors embed the vertices; the embedding is
partitioned by k-means or by sparse eigenbasis approximation (SEBA), which
may leave vertices unassigned.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import KMeans

from .config import (
    DEFAULT_EPSILON,
    DEFAULT_KMEANS_ITER,
    DEFAULT_RESTARTS,
    DEFAULT_SEBA_THRESHOLD,
    TOL,
)
from .errors import ConvergenceWarning, KTooLarge, TooFewEigenvalues
from .estimation import estimate_fb, gram_matrices, simulate_walks
from .graph import TemporalGraph, WeightedGraph, add_self_loops, out_degrees
from .operators import (
    forward_backward_matrix,
    snapshot_transition_matrices,
    temporal_transition_matrix,
    transition_matrix,
)
from .spectral import (
    SpectralDecomposition,
    eigs_undirected_rw,
    forward_backward_operator,
    top_eigs_symmetric,
)

UNASSIGNED = -1
METHODS = ("kmeans", "seba")


def canonical_labels(labels) -> np.ndarray:
    """Renumber clusters in order of their smallest member vertex.

    ``UNASSIGNED`` entries are left alone.
    """
    labels = np.asarray(labels, dtype=np.int64)
    out = np.full_like(labels, UNASSIGNED)
    mapping: dict[int, int] = {}
    for i, c in enumerate(labels):
        if c == UNASSIGNED:
            continue
        if c not in mapping:
            mapping[c] = len(mapping)
        out[i] = mapping[c]
    return out


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Cluster label per vertex (``UNASSIGNED`` = -1) in canonical order."""

    labels: np.ndarray
    k: int
    method: str
    spectrum: SpectralDecomposition | None = None
    basis: np.ndarray | None = field(default=None, repr=False)
    converged: bool = True

    @property
    def n(self) -> int:
        return self.labels.size

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def clusters(self) -> list[np.ndarray]:
        return [self.members(c) for c in range(self.k)]

    @property
    def unassigned(self) -> np.ndarray:
        return np.flatnonzero(self.labels == UNASSIGNED)

    def to_json(self) -> dict:
        out = {
            "k": self.k,
            "method": self.method,
            "labels": [None if c == UNASSIGNED else int(c) for c in self.labels],
        }
        if self.spectrum is not None:
            out["eigenvalues"] = [float(v) for v in self.spectrum.eigenvalues]
        return out


def _check_k(E: np.ndarray, k: int):
    n = E.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of vertices n={n}")


def kmeans(E, k: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> np.ndarray:
    """k-means++ initialised Lloyd iterations; best of ``restarts`` runs.

    Returns canonical labels; identical inputs and seeds give identical labels.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    _check_k(E, k)
    if k == 1:
        return np.zeros(E.shape[0], dtype=np.int64)
    with warnings.catch_warnings():
        # duplicate embedding rows make sklearn warn about fewer distinct clusters
        warnings.simplefilter("ignore", category=UserWarning)
        km = KMeans(
            n_clusters=k,
            init="k-means++",
            n_init=restarts,
            max_iter=DEFAULT_KMEANS_ITER,
            tol=0.0,
            algorithm="lloyd",
            random_state=seed,
        ).fit(E)
    return canonical_labels(km.labels_)


@dataclass(frozen=True, eq=False)
class SebaResult:
    basis: np.ndarray
    labels: np.ndarray
    iterations: int
    converged: bool


def seba(
    E,
    max_iter: int = 5000,
    tol: float = 1e-14,
    threshold: float = DEFAULT_SEBA_THRESHOLD,
) -> SebaResult:
    """Sparse eigenbasis approximation of the columns of ``E``.

    Alternates soft thresholding of the rotated basis with a polar
    (orthogonal Procrustes) update of the rotation. The resulting sparse
    vectors are made nonnegative and scaled to a maximum of one. A vertex
    joins the vector where it attains its largest value, provided that value
    exceeds ``threshold``; otherwise it stays ``UNASSIGNED``.
    """
    V = np.asarray(E, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    n, k = V.shape
    _check_k(V, k)
    if np.abs(V.T @ V - np.eye(k)).max() > 1e-8:
        V, _ = np.linalg.qr(V)
    mu = 0.99 / np.sqrt(n)
    R = np.eye(k)
    converged = False
    it = 0
    S = V
    for it in range(1, max_iter + 1):
        R_old = R
        Z = V @ R.T
        S = np.sign(Z) * np.maximum(np.abs(Z) - mu, 0.0)
        norms = np.linalg.norm(S, axis=0)
        norms[norms == 0] = 1.0
        S = S / norms
        U, _, Wt = np.linalg.svd(S.T @ V)
        R = U @ Wt
        if np.linalg.norm(R - R_old) < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"SEBA did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    # orient each vector to be mostly positive, then keep the positive part
    signs = np.sign(S.sum(axis=0))
    signs[signs == 0] = 1.0
    S = np.maximum(S * signs, 0.0)
    peak = S.max(axis=0)
    peak[peak == 0] = 1.0
    S = S / peak
    best = np.argmax(S, axis=1)
    value = S[np.arange(n), best]
    labels = np.where(value > threshold, best, UNASSIGNED)
    return SebaResult(S, canonical_labels(labels), it, converged)


def cluster_embedding(
    E,
    k: int,
    method: str = "kmeans",
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    seba_threshold: float = DEFAULT_SEBA_THRESHOLD,
    spectrum: SpectralDecomposition | None = None,
) -> ClusterAssignment:
    """Partition the rows of an embedding with the chosen method."""
    E = np.asarray(E, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    if method == "kmeans":
        labels = kmeans(E, k, seed=seed, restarts=restarts)
        return ClusterAssignment(labels, k, method, spectrum)
    if method == "seba":
        res = seba(E[:, :k], threshold=seba_threshold)
        return ClusterAssignment(res.labels, k, method, spectrum, res.basis, res.converged)
    raise ValueError(f"unknown clustering method {method!r}; expected one of {METHODS}")


def _k_for(g_n: int, k: int):
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > g_n:
        raise KTooLarge(f"k={k} exceeds the number of vertices n={g_n}")


def cluster_undirected(
    g: WeightedGraph,
    k: int,
    method: str = "kmeans",
    seed: int = 0,
    eig_method: str = "auto",
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Cluster an undirected graph with the leading eigenvectors of ``D^{-1} A``."""
    if g.directed:
        raise ValueError("cluster_undirected needs an undirected graph; use cluster_directed")
    _k_for(g.n, k)
    P = transition_matrix(g)
    decomp = eigs_undirected_rw(P, out_degrees(g), k, method=eig_method, seed=seed)
    return cluster_embedding(decomp.eigenvectors, k, method, seed, restarts, spectrum=decomp)


def forward_backward_spectrum(P, k: int, eig_method: str = "auto", seed: int = 0) -> SpectralDecomposition:
    """Top ``k`` eigenpairs of ``Q``; matrix-free beyond the dense cutoff."""
    n = P.n if hasattr(P, "n") else P.shape[0]
    if eig_method == "dense" or (eig_method == "auto" and n <= TOL.dense_cutoff):
        return top_eigs_symmetric(forward_backward_matrix(P), k, method="dense", seed=seed)
    return top_eigs_symmetric(forward_backward_operator(P), k, method="lanczos", seed=seed)


def cluster_directed(
    g: WeightedGraph,
    k: int,
    method: str = "kmeans",
    seed: int = 0,
    self_loop_weight: float = 1.0,
    teleport=None,
    eig_method: str = "auto",
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Cluster a directed graph with the leading eigenvectors of ``Q``."""
    _k_for(g.n, k)
    P = transition_matrix(add_self_loops(g, self_loop_weight), teleport)
    decomp = forward_backward_spectrum(P, k, eig_method, seed)
    return cluster_embedding(decomp.eigenvectors, k, method, seed, restarts, spectrum=decomp)


@dataclass(frozen=True)
class ApproachA:
    """Data-driven: estimate ``Q`` from ``m`` random walks of ``length`` steps."""

    m: int
    length: int | None = None  # defaults to the number of snapshots
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0


@dataclass(frozen=True)
class ApproachB:
    """Exact: ``Q`` of the product of the snapshot transition matrices."""


def cluster_temporal(
    tg: TemporalGraph,
    k: int,
    method: str = "kmeans",
    approach: ApproachA | ApproachB | None = None,
    seed: int = 0,
    self_loop_weight: float = 1.0,
    teleport=None,
    eig_method: str = "auto",
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Cluster a time-evolving graph into finite-time coherent sets."""
    _k_for(tg.n, k)
    approach = approach if approach is not None else ApproachB()
    if isinstance(approach, ApproachB):
        P = temporal_transition_matrix(tg, self_loop_weight, teleport)
        decomp = forward_backward_spectrum(P, k, eig_method, seed)
    elif isinstance(approach, ApproachA):
        schedule = snapshot_transition_matrices(tg, self_loop_weight, teleport)
        length = approach.length if approach.length is not None else len(tg)
        data = simulate_walks(schedule, approach.m, length, seed=approach.seed)
        F = estimate_fb(gram_matrices(data), "tikhonov", approach.epsilon)
        decomp = top_eigs_symmetric(F, k, method=eig_method, seed=seed)
    else:
        raise TypeError("approach must be ApproachA or ApproachB")
    return cluster_embedding(decomp.eigenvectors, k, method, seed, restarts, spectrum=decomp)


def suggest_k(eigenvalues) -> int:
    """Number of clusters at the largest gap of a descending spectrum.

    Ties go to the smaller count.
    """
    vals = np.asarray(eigenvalues, dtype=np.float64)
    if vals.size < 2:
        raise TooFewEigenvalues("at least two eigenvalues are needed to locate a gap")
    gaps = vals[:-1] - vals[1:]
    return int(np.argmax(gaps)) + 1
