"""Benchmark graphs: three coupled rings, random block digraphs, a rotating
double well and the box discretization of the quadruple-gyre flow."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .graph import TemporalGraph, WeightedGraph, build_graph


def three_ring_graph(intra_weight: float = 1.0, inter_weight: float = 0.01) -> WeightedGraph:
    """Three directed 4-cycles joined in a directed ring by weak edges.

    Vertices 0-3, 4-7 and 8-11 form the cycles; the weak edges are
    3 -> 4, 7 -> 8 and 11 -> 0. No self-loops are included.
    """
    edges = []
    for start in (0, 4, 8):
        for i in range(4):
            edges.append((start + i, start + (i + 1) % 4, intra_weight))
    edges += [(3, 4, inter_weight), (7, 8, inter_weight), (11, 0, inter_weight)]
    return build_graph(12, edges, directed=True)


def random_block_digraph(
    blocks: int = 10,
    block_size: int = 10,
    intra_density: float = 0.5,
    inter_edges_per_block: int = 2,
    seed: int = 0,
) -> tuple[WeightedGraph, np.ndarray]:
    """Sparse directed Erdos-Renyi blocks joined by a few random edges.

    Every ordered pair inside a block (diagonal included) is an edge with
    probability ``intra_density``. Each block then sends
    ``inter_edges_per_block`` unit edges to uniformly chosen vertices of
    other blocks. Returns the graph and the block label of every vertex.
    """
    if blocks < 2:
        raise InvalidConfig("need at least two blocks")
    if block_size < 1:
        raise InvalidConfig("block_size must be positive")
    if not 0 < intra_density <= 1:
        raise InvalidConfig("intra_density must lie in (0, 1]")
    if inter_edges_per_block < 0:
        raise InvalidConfig("inter_edges_per_block must be nonnegative")
    rng = np.random.default_rng(seed)
    n = blocks * block_size
    edges = []
    for b in range(blocks):
        off = b * block_size
        mask = rng.random((block_size, block_size)) < intra_density
        for i, j in zip(*np.nonzero(mask)):
            edges.append((off + int(i), off + int(j), 1.0))
        for _ in range(inter_edges_per_block):
            src = off + int(rng.integers(block_size))
            other = int(rng.integers(blocks - 1))
            other += other >= b
            dst = other * block_size + int(rng.integers(block_size))
            edges.append((src, dst, 1.0))
    labels = np.repeat(np.arange(blocks), block_size)
    return build_graph(n, edges, directed=True), labels


# -- rotating double well -------------------------------------------------------

@dataclass(frozen=True)
class DoubleWellConfig:
    """Two concentric rings with two rotating attracting arcs.

    Vertex ``2 p`` is the inner and ``2 p + 1`` the outer vertex at ring
    position ``p`` (1-based labels: odd inner, even outer).
    """

    ring_size: int = 12
    well_width: int = 6
    rotation_period: int = 10
    rotation_step: int = 1
    total_steps: int = 100

    def validate(self):
        if self.ring_size < 4 or self.ring_size % 2:
            raise InvalidConfig("ring_size must be an even number >= 4")
        if self.well_width < 2 or self.well_width % 2:
            raise InvalidConfig("well_width must be an even number >= 2 (it spans both rings)")
        if 2 * (self.well_width // 2) >= self.ring_size:
            raise InvalidConfig("the two wells must not cover the whole ring")
        if self.rotation_period < 1 or self.total_steps < 1:
            raise InvalidConfig("rotation_period and total_steps must be positive")

    @property
    def n(self) -> int:
        return 2 * self.ring_size


def _well_positions(cfg: DoubleWellConfig, t: int):
    R = cfg.ring_size
    w = cfg.well_width // 2
    shift = (t // cfg.rotation_period) * cfg.rotation_step
    first = R // 4 + shift
    centers = [first % R, (first + R // 2) % R]
    half = (w - 1) // 2
    arcs = [{(c - half + i) % R for i in range(w)} for c in centers]
    return centers, arcs


def well_vertices(cfg: DoubleWellConfig, t: int = 0) -> list[set[int]]:
    """0-based vertex sets of the two wells during step ``t``."""
    _, arcs = _well_positions(cfg, t)
    return [{v for p in arc for v in (2 * p, 2 * p + 1)} for arc in arcs]


def double_well_snapshot(cfg: DoubleWellConfig, t: int) -> WeightedGraph:
    R = cfg.ring_size
    centers, arcs = _well_positions(cfg, t)

    def dist(p):
        return min(min((p - c) % R, (c - p) % R) for c in centers)

    edges = []
    for p in range(R):
        edges += [(2 * p, 2 * p + 1, 1.0), (2 * p + 1, 2 * p, 1.0)]
    for p in range(R):
        q = (p + 1) % R
        same_well = any(p in arc and q in arc for arc in arcs)
        for ring in (0, 1):
            a, b = 2 * p + ring, 2 * q + ring
            if same_well or dist(p) == dist(q):
                edges += [(a, b, 1.0), (b, a, 1.0)]
            elif dist(p) > dist(q):
                edges.append((a, b, 1.0))
            else:
                edges.append((b, a, 1.0))
    return build_graph(cfg.n, edges, directed=True)


def rotating_double_well(config: DoubleWellConfig | None = None) -> TemporalGraph:
    """Snapshot ``t`` is the graph governing step ``t`` of the walk.

    Ring edges inside a well are undirected, all other ring edges point
    towards the nearer well centre, and spokes join the two rings. Every
    ``rotation_period`` steps the pattern rotates counterclockwise by
    ``rotation_step`` positions.
    """
    cfg = config or DoubleWellConfig()
    cfg.validate()
    cache = {}
    snaps = []
    for t in range(cfg.total_steps):
        phase = (t // cfg.rotation_period) * cfg.rotation_step % cfg.ring_size
        if phase not in cache:
            cache[phase] = double_well_snapshot(cfg, t)
        snaps.append(cache[phase])
    return TemporalGraph(tuple(snaps), times=tuple(range(cfg.total_steps)))


# -- quadruple gyre -------------------------------------------------------------

DOMAIN = 2.0


@dataclass(frozen=True)
class GyreConfig:
    delta: float = 0.1
    omega: float = 2 * math.pi
    boxes_per_axis: int = 10
    points_per_box: int = 16
    tau: float = 0.05
    steps: int = 20
    substeps: int = 10
    # y' = g(t, x, y) instead of g(t, y, x); that field is diagonal and has no gyres
    unswapped_field: bool = False

    def validate(self):
        if not 0 <= self.delta < 0.5:
            raise InvalidConfig("delta must lie in [0, 0.5)")
        if self.boxes_per_axis < 2:
            raise InvalidConfig("boxes_per_axis must be at least 2")
        side = math.isqrt(self.points_per_box)
        if self.points_per_box < 1 or side * side != self.points_per_box:
            raise InvalidConfig("points_per_box must be a perfect square")
        if self.tau <= 0 or self.steps < 1 or self.substeps < 1:
            raise InvalidConfig("tau, steps and substeps must be positive")


def _f(t, z, cfg):
    s = cfg.delta * np.sin(cfg.omega * t)
    return s * z**2 + (1 - 2 * s) * z


def _df(t, z, cfg):
    s = cfg.delta * np.sin(cfg.omega * t)
    return 2 * s * z + 1 - 2 * s


def _g(t, z1, z2, cfg):
    return np.pi * np.sin(np.pi * _f(t, z1, cfg)) * np.cos(np.pi * _f(t, z2, cfg)) * _df(t, z2, cfg)


def gyre_velocity(t, x, y, cfg: GyreConfig | None = None):
    """Velocity ``(dx/dt, dy/dt)`` of the quadruple gyre; vectorized in x, y."""
    cfg = cfg or GyreConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = -_g(t, x, y, cfg)
    dy = _g(t, x, y, cfg) if cfg.unswapped_field else _g(t, y, x, cfg)
    return dx, dy


def integrate_flow(p, t0: float, tau: float, cfg: GyreConfig | None = None) -> np.ndarray:
    """Advance points (shape ``(2,)`` or ``(N, 2)``) by ``tau`` with fixed-step RK4.

    Results are wrapped onto the torus ``[0, 2)^2``.
    """
    cfg = cfg or GyreConfig()
    if tau <= 0:
        raise ValueError("tau must be positive")
    z = np.array(p, dtype=np.float64)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    h = tau / cfg.substeps

    def rhs(t, pts):
        return np.column_stack(gyre_velocity(t, pts[:, 0], pts[:, 1], cfg))

    t = t0
    for _ in range(cfg.substeps):
        k1 = rhs(t, z)
        k2 = rhs(t + h / 2, z + h / 2 * k1)
        k3 = rhs(t + h / 2, z + h / 2 * k2)
        k4 = rhs(t + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    z = np.mod(z, DOMAIN)
    return z[0] if single else z


def box_index(points, boxes_per_axis: int) -> np.ndarray:
    """Row-major box index (``iy * boxes + ix``) of points in ``[0, 2)^2``."""
    width = DOMAIN / boxes_per_axis
    pts = np.atleast_2d(points)
    ij = np.clip(np.floor(pts / width).astype(np.int64), 0, boxes_per_axis - 1)
    return ij[:, 1] * boxes_per_axis + ij[:, 0]


def gyre_test_points(cfg: GyreConfig) -> tuple[np.ndarray, np.ndarray]:
    """Uniform interior lattice of test points in every box and their box ids."""
    nb = cfg.boxes_per_axis
    width = DOMAIN / nb
    side = math.isqrt(cfg.points_per_box)
    offsets = (np.arange(side) + 0.5) / side * width
    ox, oy = np.meshgrid(offsets, offsets, indexing="xy")
    local = np.column_stack([ox.ravel(), oy.ravel()])
    pts, owner = [], []
    for iy in range(nb):
        for ix in range(nb):
            pts.append(local + [ix * width, iy * width])
            owner.append(np.full(len(local), iy * nb + ix))
    return np.vstack(pts), np.concatenate(owner)


def box_centers(boxes_per_axis: int) -> np.ndarray:
    width = DOMAIN / boxes_per_axis
    c = (np.arange(boxes_per_axis) + 0.5) * width
    cx, cy = np.meshgrid(c, c, indexing="xy")
    return np.column_stack([cx.ravel(), cy.ravel()])


def quadruple_gyre_graph(cfg: GyreConfig | None = None) -> tuple[TemporalGraph, np.ndarray]:
    """One directed snapshot per lag step of the box-discretized gyre flow.

    Snapshot ``t`` maps every test point from time ``t * tau`` over one lag
    ``tau``; edge ``(i, j)`` counts the test points of box ``i`` that land in
    box ``j``.
    """
    cfg = cfg or GyreConfig()
    cfg.validate()
    pts, owner = gyre_test_points(cfg)
    n = cfg.boxes_per_axis**2
    snaps = []
    for t in range(cfg.steps):
        moved = integrate_flow(pts, t * cfg.tau, cfg.tau, cfg)
        target = box_index(moved, cfg.boxes_per_axis)
        edges = np.column_stack([owner, target, np.ones(len(owner))])
        snaps.append(build_graph(n, edges.tolist(), directed=True))
    return TemporalGraph(tuple(snaps), times=tuple(range(cfg.steps))), box_centers(cfg.boxes_per_axis)


def gyre_quadrants(boxes_per_axis: int = 10) -> np.ndarray:
    """Quadrant label (0..3, row-major over quadrants) of every box."""
    c = box_centers(boxes_per_axis)
    qx = (c[:, 0] >= DOMAIN / 2).astype(int)
    qy = (c[:, 1] >= DOMAIN / 2).astype(int)
    return qy * 2 + qx
