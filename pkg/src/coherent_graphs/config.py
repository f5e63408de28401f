"""Numerical tolerances shared by the library and its tests."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # row sums of stochastic matrices, scaled by n
    row_sum: float = 1e-12
    # symmetry of Q, entrywise
    symmetry: float = 1e-12
    # probabilities may overshoot [0, 1] by this much
    entry: float = 1e-12
    # Laplacian row sums
    laplacian_row_sum: float = 1e-10
    # slack for positive semidefiniteness checks
    psd: float = 1e-10
    # nu entries at or below this are treated as zero
    nu_threshold: float = 1e-14
    # symmetry check before an eigensolve
    eig_symmetry: float = 1e-10
    # Lanczos stops when all Ritz residuals fall below this
    lanczos_residual: float = 1e-9
    # eigenvalues closer than this are reported as one degenerate group
    degeneracy_gap: float = 1e-10
    # matrices up to this size are solved densely
    dense_cutoff: int = 512


TOL = Tolerances()

DEFAULT_TELEPORT = 0.15
DEFAULT_SELF_LOOP_WEIGHT = 1.0
DEFAULT_EPSILON = 1e-8
DEFAULT_RESTARTS = 10
DEFAULT_KMEANS_ITER = 300
DEFAULT_SEBA_THRESHOLD = 0.5
