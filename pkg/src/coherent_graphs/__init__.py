"""Spectral clustering of directed and time-evolving graphs via the
forward-backward random-walk matrix."""

from .benchmarks import (
    DoubleWellConfig,
    GyreConfig,
    quadruple_gyre_graph,
    random_block_digraph,
    rotating_double_well,
    three_ring_graph,
)
from .clustering import (
    UNASSIGNED,
    ApproachA,
    ApproachB,
    ClusterAssignment,
    cluster_directed,
    cluster_temporal,
    cluster_undirected,
    kmeans,
    seba,
    suggest_k,
)
from .estimation import (
    estimate_fb,
    estimate_koopman,
    estimate_pf,
    gram_matrices,
    simulate_walks,
)
from .graph import TemporalGraph, WeightedGraph, add_self_loops, build_graph
from .metrics import adjusted_rand_index, coherence_ratio, confusion_table, forward_mass
from .operators import forward_backward_matrix, nu_vector, transition_matrix
from .spectral import SpectralDecomposition, top_eigs_symmetric

__version__ = "0.1.0"

__all__ = [
    "DoubleWellConfig",
    "GyreConfig",
    "quadruple_gyre_graph",
    "random_block_digraph",
    "rotating_double_well",
    "three_ring_graph",
    "UNASSIGNED",
    "ApproachA",
    "ApproachB",
    "ClusterAssignment",
    "cluster_directed",
    "cluster_temporal",
    "cluster_undirected",
    "kmeans",
    "seba",
    "suggest_k",
    "estimate_fb",
    "estimate_koopman",
    "estimate_pf",
    "gram_matrices",
    "simulate_walks",
    "TemporalGraph",
    "WeightedGraph",
    "add_self_loops",
    "build_graph",
    "adjusted_rand_index",
    "coherence_ratio",
    "confusion_table",
    "forward_mass",
    "forward_backward_matrix",
    "nu_vector",
    "transition_matrix",
    "SpectralDecomposition",
    "top_eigs_symmetric",
]
