"""Transition matrices, Laplacians and the forward-backward matrix.

For a graph with adjacency ``A`` and out-degree matrix ``D``:

* ``P = D^{-1} A`` is the random-walk transition matrix,
* ``nu = P^T 1`` are its column sums,
* ``Q = P diag(nu)^{-1} P^T`` is the forward-backward matrix, which is
  symmetric and doubly stochastic,
* ``L_rw = I - P`` and ``L_fb = I - Q`` are the corresponding Laplacians.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import DEFAULT_TELEPORT, TOL
from .errors import DanglingVertex, KindMismatch, SingularNu
from .graph import TemporalGraph, WeightedGraph, add_self_loops, out_degrees


class Kind(enum.Enum):
    ROW_STOCHASTIC = "row_stochastic"
    DOUBLY_STOCHASTIC_SYMMETRIC = "doubly_stochastic_symmetric"


class Flavor(enum.Enum):
    RANDOM_WALK = "random_walk"
    FORWARD_BACKWARD = "forward_backward"


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    matrix: sp.csr_array
    kind: Kind = Kind.ROW_STOCHASTIC

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def violations(self) -> list[str]:
        """Invariant violations of this matrix; empty when it is valid."""
        problems = []
        m = self.matrix
        rows = np.asarray(m.sum(axis=1)).ravel()
        if np.abs(rows - 1).max(initial=0) > TOL.row_sum * self.n:
            problems.append(f"row sums deviate from 1 by {np.abs(rows - 1).max():.3g}")
        if m.nnz and (m.data.min() < -TOL.entry or m.data.max() > 1 + TOL.entry):
            problems.append("entries outside [0, 1]")
        if self.kind is Kind.DOUBLY_STOCHASTIC_SYMMETRIC:
            cols = np.asarray(m.sum(axis=0)).ravel()
            if np.abs(cols - 1).max(initial=0) > TOL.row_sum * self.n:
                problems.append(f"column sums deviate from 1 by {np.abs(cols - 1).max():.3g}")
            asym = m - m.T
            if asym.nnz and abs(asym).max() > TOL.symmetry:
                problems.append(f"asymmetry {abs(asym).max():.3g}")
        return problems


@dataclass(frozen=True, eq=False)
class Laplacian:
    matrix: sp.csr_array
    flavor: Flavor

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class NuVector:
    values: np.ndarray
    threshold: float = TOL.nu_threshold

    @property
    def invertible(self) -> bool:
        return bool(np.all(self.values > self.threshold))

    def first_singular(self) -> int | None:
        bad = np.flatnonzero(self.values <= self.threshold)
        return int(bad[0]) if bad.size else None


def as_csr(mat) -> sp.csr_array:
    if isinstance(mat, (StochasticMatrix, Laplacian)):
        mat = mat.matrix
    return sp.csr_array(mat, dtype=np.float64)


def _resolve_teleport(teleport) -> float:
    if teleport is None or teleport is False:
        return 0.0
    if teleport is True:
        return DEFAULT_TELEPORT
    alpha = float(teleport)
    if not 0 <= alpha <= 1:
        raise ValueError(f"teleportation probability must lie in [0, 1], got {alpha}")
    return alpha


def transition_matrix(g: WeightedGraph, teleport=None) -> StochasticMatrix:
    """Row-normalise the adjacency matrix.

    ``teleport`` (a probability, or ``True`` for 0.15) mixes every row with
    the uniform distribution and makes rows of dangling vertices uniform.
    The result is then dense, stored in CSR form.
    """
    alpha = _resolve_teleport(teleport)
    deg = out_degrees(g)
    dangling = deg <= 0
    if alpha == 0:
        if dangling.any():
            raise DanglingVertex(int(np.flatnonzero(dangling)[0]))
        P = sp.diags_array(1.0 / deg) @ g.adjacency
        return StochasticMatrix(sp.csr_array(P))
    n = g.n
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))
    dense = (sp.diags_array(inv) @ g.adjacency).toarray()
    dense *= 1 - alpha
    dense += alpha / n
    dense[dangling] = 1.0 / n
    return StochasticMatrix(sp.csr_array(dense))


def nu_vector(P) -> NuVector:
    """Column sums of ``P``: mass arriving at each vertex from the uniform start."""
    return NuVector(np.asarray(as_csr(P).sum(axis=0)).ravel())


def forward_backward_matrix(P) -> StochasticMatrix:
    """``Q = P diag(nu)^{-1} P^T``, assembled sparsely as ``M M^T``.

    ``M = P diag(nu)^{-1/2}``, so ``Q`` is the sum over target vertices ``j``
    of the outer products of column ``j`` of ``P`` scaled by ``1/nu_j``.
    """
    P = as_csr(P)
    nu = nu_vector(P)
    bad = nu.first_singular()
    if bad is not None:
        raise SingularNu(bad)
    M = P @ sp.diags_array(1.0 / np.sqrt(nu.values))
    Q = sp.csr_array(M @ M.T)
    Q = sp.csr_array((Q + Q.T) * 0.5)
    Q.sum_duplicates()
    Q.sort_indices()
    return StochasticMatrix(Q, Kind.DOUBLY_STOCHASTIC_SYMMETRIC)


def random_walk_laplacian(P) -> Laplacian:
    P = as_csr(P)
    return Laplacian(sp.csr_array(sp.eye_array(P.shape[0], format="csr") - P), Flavor.RANDOM_WALK)


def forward_backward_laplacian(Q: StochasticMatrix) -> Laplacian:
    if not isinstance(Q, StochasticMatrix) or Q.kind is not Kind.DOUBLY_STOCHASTIC_SYMMETRIC:
        raise KindMismatch("the forward-backward Laplacian needs a symmetric doubly stochastic Q")
    n = Q.n
    return Laplacian(sp.csr_array(sp.eye_array(n, format="csr") - Q.matrix), Flavor.FORWARD_BACKWARD)


def snapshot_transition_matrices(
    tg: TemporalGraph, self_loop_weight: float = 1.0, teleport=None
) -> list[StochasticMatrix]:
    """Per-snapshot transition matrices after adding self-loops."""
    out = []
    for t, g in enumerate(tg.snapshots):
        try:
            out.append(transition_matrix(add_self_loops(g, self_loop_weight), teleport))
        except DanglingVertex as exc:
            raise DanglingVertex(exc.vertex, snapshot=t) from None
    return out


def temporal_transition_matrix(
    tg: TemporalGraph, self_loop_weight: float = 1.0, teleport=None
) -> StochasticMatrix:
    """Product ``P(0) P(1) ... P(T)`` of the snapshot transition matrices."""
    mats = snapshot_transition_matrices(tg, self_loop_weight, teleport)
    P = mats[0].matrix
    for Pt in mats[1:]:
        P = sp.csr_array(P @ Pt.matrix)
        P.eliminate_zeros()
    return StochasticMatrix(P)
