"""Cluster quality measures: forward-backward retention, forward mass
evolution, confusion tables and the adjusted Rand index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from .clustering import UNASSIGNED, ClusterAssignment
from .errors import EmptyCluster, LengthMismatch
from .graph import TemporalGraph
from .operators import as_csr, snapshot_transition_matrices


def _labels(assignment) -> np.ndarray:
    if isinstance(assignment, ClusterAssignment):
        return assignment.labels
    return np.array([UNASSIGNED if c is None else c for c in assignment], dtype=np.int64)


def _cluster_count(assignment, labels) -> int:
    if isinstance(assignment, ClusterAssignment):
        return assignment.k
    assigned = labels[labels != UNASSIGNED]
    return int(assigned.max()) + 1 if assigned.size else 0


@dataclass(frozen=True)
class LeakageReport:
    """Retained and leaked mass per cluster, plus the size-weighted mean retained."""

    per_cluster: list[tuple[int, float, float]]
    overall: float

    def to_json(self) -> dict:
        return {
            "clusters": [
                {"cluster": c, "retained": r, "leaked": lk} for c, r, lk in self.per_cluster
            ],
            "overall_retained": self.overall,
        }

    def to_text(self) -> str:
        lines = [f"{'cluster':>7}  {'retained':>10}  {'leaked':>10}"]
        for c, r, lk in self.per_cluster:
            lines.append(f"{c:>7}  {r:>10.6f}  {lk:>10.6f}")
        lines.append(f"{'overall':>7}  {self.overall:>10.6f}")
        return "\n".join(lines)


def coherence_ratio(Q, assignment) -> LeakageReport:
    """Probability that a walker started uniformly in a cluster is back in it
    after one forward-backward step, ``1_S^T Q 1_S / |S|``.

    Unassigned vertices belong to no cluster.
    """
    Q = as_csr(Q)
    labels = _labels(assignment)
    if labels.size != Q.shape[0]:
        raise LengthMismatch(f"{labels.size} labels for a {Q.shape[0]}-vertex matrix")
    k = _cluster_count(assignment, labels)
    per, sizes = [], []
    for c in range(k):
        ind = (labels == c).astype(np.float64)
        size = ind.sum()
        if size == 0:
            raise EmptyCluster(f"cluster {c} has no members")
        retained = float(np.clip(ind @ (Q @ ind) / size, 0.0, 1.0))
        per.append((c, retained, 1.0 - retained))
        sizes.append(size)
    overall = float(np.average([r for _, r, _ in per], weights=sizes)) if per else float("nan")
    return LeakageReport(per, overall)


def forward_mass(tg: TemporalGraph, assignment, self_loop_weight: float = 1.0, teleport=None) -> list[np.ndarray]:
    """Evolve the uniform density of every cluster through the snapshots.

    Returns ``len(tg) + 1`` matrices of shape ``(n, k)``; column ``c`` of
    entry ``t`` is the distribution of walkers started uniformly in cluster
    ``c`` after ``t`` steps.
    """
    labels = _labels(assignment)
    if labels.size != tg.n:
        raise LengthMismatch(f"{labels.size} labels for a {tg.n}-vertex graph")
    k = _cluster_count(assignment, labels)
    rho = np.zeros((tg.n, k))
    for c in range(k):
        members = labels == c
        if not members.any():
            raise EmptyCluster(f"cluster {c} has no members")
        rho[members, c] = 1.0 / members.sum()
    out = [rho]
    for P in snapshot_transition_matrices(tg, self_loop_weight, teleport):
        rho = np.asarray(P.matrix.T @ rho)
        out.append(rho)
    return out


def cluster_mass_matrix(rho: np.ndarray, assignment) -> np.ndarray:
    """Entry ``(c, d)``: mass from cluster ``c`` that sits on cluster ``d``'s
    initial members. The extra last column collects unassigned vertices."""
    labels = _labels(assignment)
    k = rho.shape[1]
    M = np.zeros((k, k + 1))
    for d in range(k):
        M[:, d] = rho[labels == d].sum(axis=0)
    M[:, k] = rho[labels == UNASSIGNED].sum(axis=0)
    return M


def retained_mass(tg: TemporalGraph, assignment, self_loop_weight: float = 1.0) -> np.ndarray:
    """Per-time retained mass, shape ``(len(tg) + 1, k)``."""
    series = forward_mass(tg, assignment, self_loop_weight)
    return np.array([np.diag(cluster_mass_matrix(rho, assignment)[:, :-1]) for rho in series])


@dataclass(frozen=True)
class ConfusionTable:
    """Counts of true classes (rows) against predicted clusters plus n/a."""

    classes: list
    clusters: list[int]
    counts: np.ndarray  # len(classes) x (len(clusters) + 1); last column n/a

    @property
    def unassigned(self) -> int:
        return int(self.counts[:, -1].sum())

    def matching(self) -> dict:
        """Cluster-to-class matching that maximises the agreeing count."""
        rows, cols = linear_sum_assignment(-self.counts[:, :-1])
        return {self.clusters[c]: self.classes[r] for r, c in zip(rows, cols)}

    def summary(self) -> dict:
        """Correct, unassigned and misclassified totals under :meth:`matching`."""
        match = self.matching()
        correct = sum(
            int(self.counts[self.classes.index(cls), self.clusters.index(c)]) for c, cls in match.items()
        )
        total = int(self.counts.sum())
        na = self.unassigned
        return {"total": total, "correct": correct, "unassigned": na, "misclassified": total - correct - na}

    def to_json(self) -> dict:
        return {
            "classes": [str(c) for c in self.classes],
            "clusters": [int(c) for c in self.clusters] + ["n/a"],
            "counts": self.counts.astype(int).tolist(),
            "summary": self.summary(),
        }

    def to_text(self) -> str:
        head = [""] + [str(c) for c in self.clusters] + ["n/a"]
        body = [[str(cls)] + [str(int(v)) for v in row] for cls, row in zip(self.classes, self.counts)]
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in [head] + body)


def confusion_table(true_labels, assignment) -> ConfusionTable:
    truth = list(true_labels)
    labels = _labels(assignment)
    if len(truth) != labels.size:
        raise LengthMismatch(f"{len(truth)} true labels but {labels.size} predictions")
    classes = sorted(set(truth), key=lambda c: (str(type(c)), c))
    k = max(_cluster_count(assignment, labels), 0)
    clusters = list(range(k))
    counts = np.zeros((len(classes), k + 1), dtype=np.int64)
    row = {c: i for i, c in enumerate(classes)}
    for cls, c in zip(truth, labels):
        counts[row[cls], k if c == UNASSIGNED else c] += 1
    return ConfusionTable(classes, clusters, counts)


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement of two labelings; unassigned vertices are
    dropped from both before comparison."""
    a = _labels(a)
    b = _labels(b)
    if a.size != b.size:
        raise LengthMismatch(f"labelings have lengths {a.size} and {b.size}")
    keep = (a != UNASSIGNED) & (b != UNASSIGNED)
    a, b = a[keep], b[keep]
    n = a.size
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = sp.coo_array((np.ones(n), (ai, bi))).toarray()
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    expected = sa * sb / _comb2(n)
    best = (sa + sb) / 2
    if best == expected:
        # both labelings are trivial (all singletons or one cluster)
        return 1.0
    return float((index - expected) / (best - expected))
