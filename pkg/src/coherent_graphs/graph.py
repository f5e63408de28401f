"""Weighted (temporal) graphs and the file formats they are read from.

Graphs are stored as immutable CSR adjacency matrices. Weights are
nonnegative, zero weights are never stored, and duplicate edges are summed
on construction.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    EmptyDayWarning,
    EmptyDirectory,
    InconsistentVertexCount,
    IndexOutOfRange,
    NegativeWeight,
    ParseError,
    UnsupportedField,
)

SNAPSHOT_PATTERN = re.compile(r"^snapshot_(\d+)\.tsv$")
SNAPSHOT_FORMAT = "snapshot_{:03d}.tsv"


def _freeze(mat: sp.csr_array) -> sp.csr_array:
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    for arr in (mat.data, mat.indices, mat.indptr):
        arr.flags.writeable = False
    return mat


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Sparse weighted adjacency matrix over ``n`` vertices.

    ``adjacency[i, j]`` is the weight of the edge ``i -> j``. For undirected
    graphs the matrix is symmetric.
    """

    adjacency: sp.csr_array
    directed: bool = True

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def nnz(self) -> int:
        return self.adjacency.nnz

    def entries(self) -> list[tuple[int, int, float]]:
        """Stored ``(i, j, w)`` triples in row-major order."""
        coo = self.adjacency.tocoo()
        return [(int(i), int(j), float(w)) for i, j, w in zip(coo.row, coo.col, coo.data)]

    def to_dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"WeightedGraph(n={self.n}, nnz={self.nnz}, {kind})"


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """Ordered, non-empty sequence of snapshots over a fixed vertex set."""

    snapshots: tuple[WeightedGraph, ...]
    times: tuple[int, ...] | None = None

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if not snaps:
            raise ValueError("a temporal graph needs at least one snapshot")
        n = snaps[0].n
        for t, g in enumerate(snaps):
            if g.n != n:
                raise InconsistentVertexCount(
                    f"snapshot {t} has {g.n} vertices, expected {n}"
                )
        object.__setattr__(self, "snapshots", snaps)
        if self.times is not None:
            times = tuple(int(t) for t in self.times)
            if len(times) != len(snaps):
                raise ValueError("times must have one label per snapshot")
            object.__setattr__(self, "times", times)

    @property
    def n(self) -> int:
        return self.snapshots[0].n

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, t):
        return self.snapshots[t]

    def __iter__(self):
        return iter(self.snapshots)


@dataclass(frozen=True)
class ContactData:
    """Output of :func:`load_contact_data`."""

    temporal: TemporalGraph
    ids: np.ndarray  # vertex index -> original student ID
    classes: list[str]  # vertex index -> class label
    index: dict = field(repr=False, default_factory=dict)  # ID -> vertex index


def from_sparse(mat, directed: bool = True) -> WeightedGraph:
    """Wrap an existing (square, nonnegative) sparse or dense matrix."""
    mat = sp.csr_array(mat, dtype=np.float64, copy=True)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {mat.shape}")
    if mat.nnz and mat.data.min() < 0:
        raise NegativeWeight("adjacency contains negative weights")
    if not np.all(np.isfinite(mat.data)):
        raise ValueError("adjacency contains non-finite weights")
    mat = _freeze(mat)
    if not directed and mat.nnz and abs(mat - mat.T).max() > 0:
        raise ValueError("undirected graph requires a symmetric adjacency matrix")
    return WeightedGraph(mat, directed)


def build_graph(n: int, edges: Iterable[Sequence], directed: bool = True) -> WeightedGraph:
    """Build a graph from ``(i, j, w)`` triples.

    Duplicate ``(i, j)`` keys are summed and zero weights dropped. For
    undirected graphs a missing reverse edge is added with the same weight;
    if both directions are listed their (summed) weights must agree.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"vertex count must be a positive integer, got {n}")
    n = int(n)
    edges = list(edges)
    if edges:
        arr = np.asarray(edges, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("edges must be (i, j, w) triples")
        rows, cols, w = arr[:, 0], arr[:, 1], arr[:, 2]
    else:
        rows = cols = w = np.empty(0)
    for idx in (rows, cols):
        bad = np.flatnonzero((idx < 0) | (idx >= n) | (idx != np.floor(idx)))
        if bad.size:
            k = bad[0]
            raise IndexOutOfRange(
                f"edge {k} = ({edges[k][0]}, {edges[k][1]}) out of range for n={n}"
            )
    if not np.all(np.isfinite(w)):
        raise ValueError("edge weights must be finite")
    bad = np.flatnonzero(w < 0)
    if bad.size:
        raise NegativeWeight(f"edge {bad[0]} has negative weight {w[bad[0]]}")
    mat = sp.coo_array((w, (rows.astype(np.int64), cols.astype(np.int64))), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    if not directed:
        mat_t = mat.T.tocsr()
        pattern = mat.copy()
        pattern.data[:] = 1.0
        pattern_t = mat_t.copy()
        pattern_t.data[:] = 1.0
        both = pattern.multiply(pattern_t)
        conflict = (mat - mat_t).multiply(both)
        if conflict.nnz and abs(conflict).max() > 0:
            coo = sp.coo_array(conflict)
            k = np.flatnonzero(coo.data)[0]
            raise ValueError(
                f"conflicting weights for undirected edge ({coo.row[k]}, {coo.col[k]})"
            )
        # union of both directions; overlapping entries already agree
        mat = mat + mat_t - mat.multiply(both)
    return WeightedGraph(_freeze(sp.csr_array(mat)), bool(directed))


def add_self_loops(g: WeightedGraph, w: float = 1.0) -> WeightedGraph:
    """Increase every diagonal weight by ``w``."""
    if w < 0:
        raise NegativeWeight(f"self-loop weight must be nonnegative, got {w}")
    if w == 0:
        return g
    mat = g.adjacency + w * sp.eye_array(g.n, format="csr")
    return WeightedGraph(_freeze(sp.csr_array(mat)), g.directed)


def out_degrees(g: WeightedGraph) -> np.ndarray:
    """Row sums of the adjacency matrix."""
    return np.asarray(g.adjacency.sum(axis=1)).ravel()


def in_degrees(g: WeightedGraph) -> np.ndarray:
    return np.asarray(g.adjacency.sum(axis=0)).ravel()


# -- Matrix Market ------------------------------------------------------------

def load_matrix_market(path, weights: str = "value") -> WeightedGraph:
    """Read a Matrix Market coordinate file as a graph.

    ``weights`` selects how stored values become edge weights: ``"value"``
    uses them as-is (negative values raise), ``"abs"`` takes magnitudes and
    ``"pattern"`` sets every stored entry to 1. Files with ``symmetric``
    storage are expanded and yield undirected graphs.
    """
    if weights not in ("value", "abs", "pattern"):
        raise ValueError(f"unknown weights mode {weights!r}")
    path = Path(path)
    with open(path) as fh:
        header = fh.readline()
        lineno = 1
        tokens = header.strip().split()
        if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
            raise ParseError("missing %%MatrixMarket header", path, 1)
        obj, fmt, field_, symmetry = (t.lower() for t in tokens[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise UnsupportedField(f"only 'matrix coordinate' is supported, got {obj} {fmt}", path, 1)
        if field_ not in ("real", "integer", "pattern"):
            raise UnsupportedField(f"unsupported field {field_!r}", path, 1)
        if symmetry not in ("general", "symmetric"):
            raise UnsupportedField(f"unsupported symmetry {symmetry!r}", path, 1)

        size = None
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            parts = s.split()
            if len(parts) != 3:
                raise ParseError("size line must be 'rows cols nnz'", path, lineno)
            try:
                size = tuple(int(p) for p in parts)
            except ValueError:
                raise ParseError(f"bad size line {s!r}", path, lineno) from None
            break
        if size is None:
            raise ParseError("missing size line", path, lineno)
        nrows, ncols, nnz = size
        if nrows != ncols:
            raise ParseError(f"adjacency must be square, got {nrows}x{ncols}", path, lineno)
        if nrows < 1 or nnz < 0:
            raise ParseError("invalid size line", path, lineno)

        ncol_expected = 2 if field_ == "pattern" else 3
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.ones(nnz, dtype=np.float64)
        k = 0
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            parts = s.split()
            if len(parts) != ncol_expected:
                raise ParseError(f"expected {ncol_expected} fields, got {len(parts)}", path, lineno)
            if k >= nnz:
                raise ParseError(f"more entries than the declared {nnz}", path, lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
                if ncol_expected == 3:
                    vals[k] = float(parts[2])
            except ValueError:
                raise ParseError(f"malformed entry {s!r}", path, lineno) from None
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise ParseError(f"index ({i}, {j}) outside 1..{nrows}", path, lineno)
            if symmetry == "symmetric" and i < j:
                raise ParseError("symmetric storage expects lower-triangle entries", path, lineno)
            if weights == "value" and vals[k] < 0:
                raise NegativeWeight(f"{path}:{lineno}: negative value {vals[k]}")
            rows[k], cols[k] = i - 1, j - 1
            k += 1
        if k != nnz:
            raise ParseError(f"declared {nnz} entries, found {k}", path, lineno)

    if weights == "abs":
        vals = np.abs(vals)
    elif weights == "pattern":
        vals = np.ones(nnz)
    mat = sp.coo_array((vals, (rows, cols)), shape=(nrows, nrows)).tocsr()
    if symmetry == "symmetric":
        mat.eliminate_zeros()
        off = sp.triu(mat.T, k=1, format="csr")
        mat = mat + off
    return WeightedGraph(_freeze(sp.csr_array(mat)), symmetry == "general")


def write_matrix_market(g: WeightedGraph, path) -> None:
    """Write ``g`` in coordinate format (``symmetric`` storage if undirected)."""
    coo = g.adjacency.tocoo()
    if g.directed:
        sel = np.ones(coo.nnz, dtype=bool)
        symmetry = "general"
    else:
        sel = coo.row >= coo.col
        symmetry = "symmetric"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {symmetry}\n")
        fh.write(f"{g.n} {g.n} {int(sel.sum())}\n")
        for i, j, w in zip(coo.row[sel], coo.col[sel], coo.data[sel]):
            fh.write(f"{i + 1} {j + 1} {float(w)!r}\n")


# -- edge lists ---------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no"):
        return False
    raise ValueError(text)


def _read_edge_list(path):
    """Return (edges, declared_n, declared_directed) of an edge-list file."""
    edges = []
    declared_n = None
    declared_directed = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip().replace(" ", "")
                try:
                    if body.startswith("n="):
                        declared_n = int(body[2:])
                        if declared_n < 1:
                            raise ValueError
                    elif body.startswith("directed="):
                        declared_directed = _parse_bool(body[9:])
                except ValueError:
                    raise ParseError(f"bad header {s!r}", path, lineno) from None
                continue
            parts = s.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'i j [w]', got {s!r}", path, lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ParseError(f"malformed edge {s!r}", path, lineno) from None
            if i < 0 or j < 0:
                raise ParseError(f"negative vertex index in {s!r}", path, lineno)
            if w < 0 or not np.isfinite(w):
                raise ParseError(f"invalid weight in {s!r}", path, lineno)
            edges.append((i, j, w))
    return edges, declared_n, declared_directed


def load_edge_list(path, directed: bool | None = None) -> WeightedGraph:
    """Read whitespace-separated ``i j [w]`` lines (weight defaults to 1).

    A ``#n=<N>`` header fixes the vertex count; otherwise it is the largest
    index plus one. A ``#directed=<bool>`` header is honoured when
    ``directed`` is not given explicitly (the default is directed).
    """
    edges, declared_n, declared_directed = _read_edge_list(path)
    if directed is None:
        directed = True if declared_directed is None else declared_directed
    max_index = max((max(e[0], e[1]) for e in edges), default=-1)
    n = declared_n if declared_n is not None else max_index + 1
    if max_index >= n:
        raise ParseError(f"vertex index {max_index} exceeds declared n={n}", path)
    if n < 1:
        raise ParseError("empty edge list without '#n=' header", path)
    return build_graph(n, edges, directed)


def write_edge_list(g: WeightedGraph, path) -> None:
    """Write every stored entry (both directions for undirected graphs)."""
    coo = g.adjacency.tocoo()
    with open(path, "w") as fh:
        fh.write(f"#n={g.n}\n")
        fh.write(f"#directed={'true' if g.directed else 'false'}\n")
        for i, j, w in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i}\t{j}\t{float(w)!r}\n")


def load_temporal_dir(path) -> TemporalGraph:
    """Load ``snapshot_000.tsv, snapshot_001.tsv, ...`` from a directory.

    Snapshots are ordered by the number in the file name. All files that
    declare ``#n=`` must agree; files without the header adopt the common n.
    """
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"{path} is not a directory")
    found = []
    for p in path.iterdir():
        m = SNAPSHOT_PATTERN.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    if not found:
        raise EmptyDirectory(f"no snapshot_*.tsv files in {path}")
    found.sort()

    parsed = [(idx, p, *_read_edge_list(p)) for idx, p in found]
    declared = {p.name: dn for _, p, _, dn, _ in parsed if dn is not None}
    if len(set(declared.values())) > 1:
        detail = ", ".join(f"{name}: n={dn}" for name, dn in sorted(declared.items()))
        raise InconsistentVertexCount(f"snapshots disagree on vertex count ({detail})")
    max_index = max(
        (max(max(e[0], e[1]) for e in edges) for _, _, edges, _, _ in parsed if edges),
        default=-1,
    )
    n = next(iter(declared.values())) if declared else max_index + 1
    if max_index >= n:
        raise InconsistentVertexCount(f"vertex index {max_index} exceeds declared n={n}")
    if n < 1:
        raise EmptyDirectory(f"snapshots in {path} contain no vertices")
    snapshots = []
    for _, p, edges, _, dd in parsed:
        snapshots.append(build_graph(n, edges, True if dd is None else dd))
    return TemporalGraph(tuple(snapshots), times=tuple(idx for idx, _ in found))


def write_temporal_dir(tg: TemporalGraph, path) -> list[Path]:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    written = []
    for t, g in enumerate(tg.snapshots):
        label = tg.times[t] if tg.times is not None else t
        p = path / SNAPSHOT_FORMAT.format(label)
        write_edge_list(g, p)
        written.append(p)
    return written


# -- SocioPatterns contact data -----------------------------------------------

def read_contacts(path):
    """Parse ``t i j Ci Cj`` lines into arrays and an ID -> class map."""
    times, a, b = [], [], []
    classes = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 5:
                raise ParseError(f"expected 't i j Ci Cj', got {s!r}", path, lineno)
            try:
                t, i, j = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(f"malformed contact {s!r}", path, lineno) from None
            for sid, cls in ((i, parts[3]), (j, parts[4])):
                if classes.setdefault(sid, cls) != cls:
                    raise ParseError(
                        f"student {sid} listed with classes {classes[sid]!r} and {cls!r}",
                        path,
                        lineno,
                    )
            times.append(t)
            a.append(i)
            b.append(j)
    return np.asarray(times, dtype=np.int64), np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64), classes


def read_metadata(path) -> dict:
    """Read an ``ID class [gender]`` metadata file into an ID -> class map."""
    classes = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 2:
                raise ParseError(f"expected 'ID class [gender]', got {s!r}", path, lineno)
            try:
                classes[int(parts[0])] = parts[1]
            except ValueError:
                raise ParseError(f"malformed ID in {s!r}", path, lineno) from None
    return classes


def infer_day_boundaries(times, min_gap: int = 6 * 3600) -> list[tuple[int, int]]:
    """Split timestamps into sessions separated by gaps of at least ``min_gap``.

    Returns half-open ``(start, end)`` ranges usable as ``day_boundaries``.
    """
    t = np.unique(np.asarray(times, dtype=np.int64))
    if t.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(t) >= min_gap)
    starts = np.concatenate([[t[0]], t[cuts + 1]])
    ends = np.concatenate([t[cuts], [t[-1]]]) + 1
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def load_contact_data(path, day_boundaries, metadata=None) -> ContactData:
    """Aggregate face-to-face contacts into one undirected snapshot per day.

    ``day_boundaries`` is a list of half-open ``(start, end)`` timestamp
    ranges. The weight of edge ``{i, j}`` in snapshot ``d`` is the number of
    contact records between the two students inside range ``d``. Students
    listed in the optional ``metadata`` file but absent from the contacts
    become isolated vertices. Vertices are numbered by ascending student ID.
    """
    times, a, b, classes = read_contacts(path)
    if metadata is not None:
        for sid, cls in read_metadata(metadata).items():
            classes.setdefault(sid, cls)
    bounds = [(int(s), int(e)) for s, e in day_boundaries]
    if not bounds:
        raise ValueError("day_boundaries must not be empty")
    for (s0, e0), (s1, _) in zip(bounds, bounds[1:]):
        if e0 > s1:
            raise ValueError("day_boundaries must be ordered and non-overlapping")
    if any(s >= e for s, e in bounds):
        raise ValueError("each day range must have start < end")

    ids = np.asarray(sorted(classes), dtype=np.int64)
    index = {int(sid): k for k, sid in enumerate(ids)}
    n = len(ids)
    if n == 0:
        raise ParseError("no students found", path)
    ia = np.searchsorted(ids, a)
    ib = np.searchsorted(ids, b)

    covered = np.zeros(times.size, dtype=bool)
    snapshots = []
    for d, (start, end) in enumerate(bounds):
        sel = (times >= start) & (times < end)
        covered |= sel
        lo = np.minimum(ia[sel], ib[sel])
        hi = np.maximum(ia[sel], ib[sel])
        upper = sp.coo_array((np.ones(lo.size), (lo, hi)), shape=(n, n)).tocsr()
        upper.sum_duplicates()
        # self-contacts (i == j) would be counted twice by upper + upper.T
        diag = sp.diags_array(upper.diagonal())
        mat = sp.csr_array(upper + upper.T - diag)
        if mat.nnz == 0:
            warnings.warn(f"day {d} ({start}..{end}) has no contacts", EmptyDayWarning, stacklevel=2)
        snapshots.append(WeightedGraph(_freeze(mat), directed=False))
    dropped = int((~covered).sum())
    if dropped:
        warnings.warn(f"{dropped} contacts fall outside every day range and were ignored", stacklevel=2)
    return ContactData(
        temporal=TemporalGraph(tuple(snapshots), times=tuple(range(len(bounds)))),
        ids=ids,
        classes=[classes[int(s)] for s in ids],
        index=index,
    )
