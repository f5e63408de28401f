"""Command-line interface.

Exit codes: 0 on success, 1 for usage or precondition errors, 2 for I/O
errors (missing or unreadable input, unwritable output, malformed files).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import (
    DoubleWellConfig,
    GyreConfig,
    gyre_quadrants,
    quadruple_gyre_graph,
    random_block_digraph,
    rotating_double_well,
    three_ring_graph,
    well_vertices,
)
from .clustering import (
    UNASSIGNED,
    ApproachA,
    ApproachB,
    cluster_directed,
    cluster_temporal,
    cluster_undirected,
    forward_backward_spectrum,
    suggest_k,
)
from .config import DEFAULT_EPSILON
from .errors import CoherentGraphsError, ParseError
from .estimation import convergence_study, estimate_fb, gram_matrices, simulate_walks
from .graph import (
    add_self_loops,
    infer_day_boundaries,
    load_contact_data,
    load_edge_list,
    load_matrix_market,
    load_temporal_dir,
    out_degrees,
    read_contacts,
    write_edge_list,
    write_temporal_dir,
)
from .metrics import cluster_mass_matrix, coherence_ratio, confusion_table, forward_mass
from .operators import (
    forward_backward_matrix,
    snapshot_transition_matrices,
    temporal_transition_matrix,
    transition_matrix,
)
from .spectral import eigs_undirected_rw, top_eigs_symmetric

THREADS_ENV = "COHERENT_GRAPHS_THREADS"


class UsageError(Exception):
    """Inconsistent or missing command-line flags (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- run manifest ----------------------------------------------------------------

def _sha256(path: Path) -> dict:
    if path.is_dir():
        return {str(p): _sha256_file(p) for p in sorted(path.iterdir()) if p.is_file()}
    return {str(path): _sha256_file(path)}


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    input_digests: dict = field(default_factory=dict)
    version: str = __version__
    wall_time_seconds: float = 0.0

    @classmethod
    def start(cls, args, inputs=()):
        params = {
            k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads") and not callable(v)
        }
        digests = {}
        for p in inputs:
            if p is not None:
                digests.update(_sha256(Path(p)))
        m = cls(args.command, params, getattr(args, "seed", None), digests)
        m._t0 = time.perf_counter()
        return m

    def finish(self) -> dict:
        self.wall_time_seconds = round(time.perf_counter() - self._t0, 6)
        return {k: v for k, v in asdict(self).items()}


def _write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _sidecar(out, suffix: str) -> Path | None:
    if out is None:
        return None
    out = Path(out)
    return out.with_name(out.stem + suffix)


# -- cluster ----------------------------------------------------------------------

STATIC_FORMATS = ("mm", "edgelist")
TEMPORAL_FORMATS = ("temporal-dir", "contacts")


def _load_input(args):
    """Returns (graph or temporal graph, ground-truth classes or None)."""
    path = Path(args.input)
    if args.format == "mm":
        return load_matrix_market(path, weights=args.mm_weights), None
    if args.format == "edgelist":
        return load_edge_list(path), None
    if args.format == "temporal-dir":
        return load_temporal_dir(path), None
    times, *_ = read_contacts(path)
    data = load_contact_data(path, infer_day_boundaries(times, args.day_gap), metadata=args.metadata)
    return data.temporal, data.classes


def _spectrum(obj, args, count):
    """Leading ``count`` eigenvalues of the operator that ``--mode`` clusters with."""
    mode = args.mode
    if mode == "undirected":
        return eigs_undirected_rw(transition_matrix(obj), out_degrees(obj), count, seed=args.seed).eigenvalues
    if mode == "directed":
        P = transition_matrix(add_self_loops(obj, args.self_loops), args.teleport)
        return forward_backward_spectrum(P, count, seed=args.seed).eigenvalues
    if mode == "temporal-b":
        P = temporal_transition_matrix(obj, args.self_loops, args.teleport)
        return forward_backward_spectrum(P, count, seed=args.seed).eigenvalues
    sched = snapshot_transition_matrices(obj, args.self_loops, args.teleport)
    data = simulate_walks(sched, args.walks, args.walk_length, seed=args.seed)
    F = estimate_fb(gram_matrices(data), "tikhonov", args.epsilon)
    return top_eigs_symmetric(F, count, seed=args.seed).eigenvalues


def cmd_cluster(args) -> int:
    temporal_mode = args.mode.startswith("temporal")
    if args.mode == "temporal-a" and (args.walks is None or args.walk_length is None):
        raise UsageError("--mode temporal-a requires --walks and --walk-length")
    if temporal_mode and args.format in STATIC_FORMATS:
        raise UsageError(f"--mode {args.mode} needs --format temporal-dir or contacts")
    if not temporal_mode and args.format in TEMPORAL_FORMATS:
        raise UsageError(f"--mode {args.mode} needs --format mm or edgelist")
    if args.k is not None and args.k < 1:
        raise UsageError("--k must be at least 1")
    if args.epsilon <= 0:
        raise UsageError("--epsilon must be positive")
    if args.metadata and args.format != "contacts":
        raise UsageError("--metadata only applies to --format contacts")

    manifest = RunManifest.start(args, [args.input, args.metadata])
    obj, classes = _load_input(args)
    if args.mode == "undirected" and obj.directed:
        raise UsageError("--mode undirected needs an undirected graph (header #directed=false or symmetric storage)")

    k = args.k
    if k is None:
        count = min(args.num_eigs, obj.n)
        vals = _spectrum(obj, args, count)
        k = suggest_k(vals)
        print(f"suggested k = {k} (largest gap among the leading {count} eigenvalues)", file=sys.stderr)

    if args.mode == "undirected":
        a = cluster_undirected(obj, k, args.method, args.seed)
    elif args.mode == "directed":
        a = cluster_directed(obj, k, args.method, args.seed, args.self_loops, args.teleport)
    else:
        approach = ApproachB() if args.mode == "temporal-b" else ApproachA(
            args.walks, args.walk_length, args.epsilon, args.seed
        )
        a = cluster_temporal(obj, k, args.method, approach, args.seed, args.self_loops, args.teleport)

    payload = a.to_json()
    if classes is not None:
        payload["confusion"] = confusion_table(classes, a).to_json()
    payload["manifest"] = manifest.finish()
    _write_json(args.out, payload)
    csv_path = _sidecar(args.out, "_eigenvalues.csv")
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, v in enumerate(a.spectrum.eigenvalues, start=1):
                w.writerow([i, repr(float(v))])
    return 0


# -- benchmark --------------------------------------------------------------------

def _labels_json(labels):
    return [None if c == UNASSIGNED else int(c) for c in labels]


def cmd_benchmark(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.start(args)
    truth = None
    if args.name == "three-ring":
        write_edge_list(three_ring_graph(), out / "graph.tsv")
        truth = np.repeat(np.arange(3), 4)
    elif args.name == "blocks":
        g, truth = random_block_digraph(
            args.blocks, args.block_size, args.intra_density, args.inter_edges, args.seed
        )
        write_edge_list(g, out / "graph.tsv")
    elif args.name == "double-well":
        cfg = DoubleWellConfig(
            args.ring_size, args.well_width, args.rotation_period, args.rotation_step, args.steps or 100
        )
        tg = rotating_double_well(cfg)
        write_temporal_dir(tg, out)
        truth = np.full(cfg.n, UNASSIGNED)
        for c, wells in enumerate(well_vertices(cfg, 0)):
            truth[sorted(wells)] = c
    else:
        cfg = GyreConfig(
            delta=args.delta,
            omega=args.omega,
            boxes_per_axis=args.boxes,
            points_per_box=args.points_per_box,
            tau=args.tau,
            steps=args.steps or 20,
            substeps=args.substeps,
            unswapped_field=args.unswapped_field,
        )
        tg, centers = quadruple_gyre_graph(cfg)
        write_temporal_dir(tg, out)
        with open(out / "box_centers.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["box", "x", "y"])
            for i, (x, y) in enumerate(centers):
                w.writerow([i, repr(float(x)), repr(float(y))])
        truth = gyre_quadrants(cfg.boxes_per_axis)
    if truth is not None:
        _write_json(out / "ground_truth.json", {"labels": _labels_json(truth)})
    _write_json(out / "manifest.json", manifest.finish())
    return 0


# -- leakage ----------------------------------------------------------------------

def _read_labels(path):
    with open(path) as fh:
        data = json.load(fh)
    labels = data.get("labels") if isinstance(data, dict) else data
    if not isinstance(labels, list):
        raise ParseError("expected a list of labels or an object with a 'labels' list", path)
    return np.array([UNASSIGNED if c is None else int(c) for c in labels], dtype=np.int64)


def cmd_leakage(args) -> int:
    manifest = RunManifest.start(args, [args.input, args.labels])
    tg = load_temporal_dir(args.input)
    labels = _read_labels(args.labels)
    if labels.size != tg.n:
        raise UsageError(f"{labels.size} labels for a {tg.n}-vertex graph")
    Q = forward_backward_matrix(temporal_transition_matrix(tg, args.self_loops))
    report = coherence_ratio(Q, labels)
    series = forward_mass(tg, labels, args.self_loops)
    k = series[0].shape[1]
    mass = [cluster_mass_matrix(rho, labels) for rho in series]
    payload = {
        "leakage": report.to_json(),
        "retained_by_time": [[float(m[c, c]) for c in range(k)] for m in mass],
        "final_mass_matrix": mass[-1].tolist(),
        "manifest": manifest.finish(),
    }
    _write_json(args.out, payload)
    csv_path = _sidecar(args.out, "_mass.csv")
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "cluster"] + [f"mass_in_{d}" for d in range(k)] + ["mass_unassigned"])
            for t, m in enumerate(mass):
                for c in range(k):
                    w.writerow([t, c] + [repr(float(v)) for v in m[c]])
    return 0


# -- convergence ------------------------------------------------------------------

def _parse_grid(text: str) -> list[int]:
    try:
        grid = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--m-grid must be comma-separated integers, got {text!r}") from None
    if not grid:
        raise UsageError("--m-grid must not be empty")
    if any(m < 1 for m in grid):
        raise UsageError("--m-grid entries must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("--m-grid must be strictly ascending")
    return grid


def cmd_convergence(args) -> int:
    grid = _parse_grid(args.m_grid)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    manifest = RunManifest.start(args)
    cfg = DoubleWellConfig(args.ring_size, args.well_width, args.rotation_period, args.rotation_step, args.steps)
    tg = rotating_double_well(cfg)
    sched = snapshot_transition_matrices(tg, args.self_loops)
    length = args.walk_length or cfg.total_steps
    rows = convergence_study(sched, grid, length, args.trials, args.seed, args.epsilon)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "mean_error", "std_error"])
        for r in rows:
            w.writerow([r.m, repr(r.mean_error), repr(r.std_error)])
    _write_json(_sidecar(out, ".manifest.json"), manifest.finish())
    return 0


# -- argument parsing -------------------------------------------------------------

def _add_double_well_flags(p, steps_default):
    p.add_argument("--ring-size", type=int, default=12)
    p.add_argument("--well-width", type=int, default=6)
    p.add_argument("--rotation-period", type=int, default=10)
    p.add_argument("--rotation-step", type=int, default=1)
    p.add_argument("--steps", type=int, default=steps_default, help="snapshot count")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coherent-graphs", description="Spectral clustering of directed and time-evolving graphs.")
    parser.add_argument("--threads", type=int, default=None, help=f"cap on worker threads (fallback: ${THREADS_ENV})")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="cluster a graph or a time-evolving graph")
    p.add_argument("input")
    p.add_argument("--format", choices=STATIC_FORMATS + TEMPORAL_FORMATS, default="edgelist")
    p.add_argument("--k", type=int, default=None, help="cluster count (eigengap suggestion when omitted)")
    p.add_argument("--method", choices=("kmeans", "seba"), default="kmeans")
    p.add_argument("--mode", choices=("undirected", "directed", "temporal-a", "temporal-b"), default=None)
    p.add_argument("--self-loops", type=float, default=1.0, metavar="W")
    p.add_argument("--teleport", type=float, default=None, metavar="ALPHA")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--walks", type=int, default=None, metavar="M")
    p.add_argument("--walk-length", type=int, default=None, metavar="L")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-eigs", type=int, default=10, help="eigenvalues inspected when --k is omitted")
    p.add_argument("--mm-weights", choices=("value", "abs", "pattern"), default="value")
    p.add_argument("--metadata", default=None, help="student metadata file (contacts format)")
    p.add_argument("--day-gap", type=int, default=6 * 3600, help="seconds of silence separating days")
    p.add_argument("--out", default=None, help="JSON output path (stdout when omitted)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("benchmark", help="write a benchmark graph")
    p.add_argument("name", choices=("three-ring", "blocks", "double-well", "gyre"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blocks", type=int, default=10)
    p.add_argument("--block-size", type=int, default=10)
    p.add_argument("--intra-density", type=float, default=0.5)
    p.add_argument("--inter-edges", type=int, default=2)
    _add_double_well_flags(p, None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--omega", type=float, default=2 * np.pi)
    p.add_argument("--boxes", type=int, default=10)
    p.add_argument("--points-per-box", type=int, default=16)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--substeps", type=int, default=10)
    p.add_argument("--unswapped-field", action="store_true", help="use the unswapped y-velocity")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("leakage", help="retained and leaked mass of a clustering")
    p.add_argument("input", help="temporal snapshot directory")
    p.add_argument("labels", help="JSON labels (a list or a cluster output)")
    p.add_argument("--self-loops", type=float, default=1.0, metavar="W")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("convergence", help="walker-count convergence on the double well")
    _add_double_well_flags(p, 100)
    p.add_argument("--m-grid", required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=None)
    p.add_argument("--self-loops", type=float, default=1.0, metavar="W")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_convergence)
    return parser


def _thread_limit(args):
    n = args.threads
    if n is None and os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise UsageError(f"${THREADS_ENV} must be an integer") from None
    if n is None:
        return nullcontext()
    if n < 1:
        raise UsageError("--threads must be at least 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "cluster" and args.mode is None:
        args.mode = "temporal-b" if args.format in TEMPORAL_FORMATS else "directed"
    try:
        with _thread_limit(args):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ParseError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except (CoherentGraphsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
