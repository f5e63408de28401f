"""Random-walk simulation and data-driven transfer operator estimates.

With one-hot (indicator) features the EDMD Gram matrices reduce to
transition counts between start and end vertices of the walkers:

    C_xx = diag(#{x = i}) / m,  C_xy[i, j] = #{x = i, y = j} / m,
    C_yy = diag(#{y = j}) / m.

From these we form the Koopman estimate ``C_xx^+ C_xy``, the
Perron-Frobenius estimate ``C_xx^+ C_yx`` and the forward-backward estimate
``C_xx^+ C_xy C_yy^+ C_yx``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .config import DEFAULT_EPSILON, TOL
from .errors import AsymmetryWarning, InvalidDistribution, NonpositiveEpsilon
from .operators import StochasticMatrix, as_csr, forward_backward_matrix
from .spectral import top_eigs_symmetric

# walkers draw their random numbers from Philox streams keyed by
# (seed, walker // WALKER_BLOCK); fixed so results never depend on batching
WALKER_BLOCK = 256


@dataclass(frozen=True, eq=False)
class WalkDataset:
    n: int
    x: np.ndarray
    y: np.ndarray
    walk_length: int
    seed: int
    schedule_id: str = "static"
    equilibrium: bool = False
    trajectories: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size < 1:
            raise ValueError("a walk dataset needs at least one pair")
        for arr in (x, y):
            if arr.min() < 0 or arr.max() >= self.n:
                raise ValueError(f"vertex indices must lie in [0, {self.n})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.x.size

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "walk_length": self.walk_length,
            "seed": self.seed,
            "schedule_id": self.schedule_id,
            "equilibrium": self.equilibrium,
        }

    def save(self, path) -> tuple[Path, Path]:
        """Write ``x<TAB>y`` lines to ``path`` and metadata to ``path.json``."""
        path = Path(path)
        np.savetxt(path, np.column_stack([self.x, self.y]), fmt="%d", delimiter="\t")
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return path, sidecar

    @classmethod
    def load(cls, path) -> "WalkDataset":
        path = Path(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text())
        data = np.loadtxt(path, dtype=np.int64, delimiter="\t", ndmin=2)
        return cls(
            n=meta["n"],
            x=data[:, 0],
            y=data[:, 1],
            walk_length=meta["walk_length"],
            seed=meta["seed"],
            schedule_id=meta.get("schedule_id", "static"),
            equilibrium=meta.get("equilibrium", False),
        )


@dataclass(frozen=True, eq=False)
class GramMatrices:
    """Indicator-feature Gram matrices; the diagonal ones are kept as vectors."""

    cxx: np.ndarray
    cxy: sp.csr_array
    cyy: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return self.cxx.size

    @property
    def C_xx(self) -> sp.dia_array:
        return sp.diags_array(self.cxx)

    @property
    def C_yy(self) -> sp.dia_array:
        return sp.diags_array(self.cyy)

    @property
    def C_xy(self) -> sp.csr_array:
        return self.cxy

    @property
    def C_yx(self) -> sp.csr_array:
        return sp.csr_array(self.cxy.T)


class _Sampler:
    """Inverse-CDF sampling from the rows of a sparse stochastic matrix."""

    def __init__(self, P):
        P = as_csr(P)
        P.sort_indices()
        self.indptr = P.indptr
        self.indices = P.indices
        rows = np.repeat(np.arange(P.shape[0]), np.diff(P.indptr))
        cum = np.empty_like(P.data)
        for r in range(P.shape[0]):
            lo, hi = P.indptr[r], P.indptr[r + 1]
            cum[lo:hi] = np.cumsum(P.data[lo:hi])
        self.keys = rows + cum

    def step(self, cur, u):
        pos = np.searchsorted(self.keys, cur + u, side="right")
        lo = self.indptr[cur]
        hi = self.indptr[cur + 1] - 1
        pos = np.clip(pos, lo, hi)
        return self.indices[pos]


def _walker_uniforms(seed: int, m: int, width: int) -> np.ndarray:
    """``m x width`` uniforms; row ``i`` depends only on (seed, i, width)."""
    out = np.empty((m, width))
    n_blocks = -(-m // WALKER_BLOCK)
    for b in range(n_blocks):
        key = np.array([seed & 0xFFFFFFFFFFFFFFFF, b], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        block = gen.random((WALKER_BLOCK, width))
        lo = b * WALKER_BLOCK
        hi = min(lo + WALKER_BLOCK, m)
        out[lo:hi] = block[: hi - lo]
    return out


def _as_schedule(schedule) -> list:
    if isinstance(schedule, (StochasticMatrix,)) or sp.issparse(schedule) or isinstance(schedule, np.ndarray):
        return [schedule]
    schedule = list(schedule)
    if not schedule:
        raise ValueError("schedule must contain at least one matrix")
    return schedule


def _check_distribution(init, n):
    if init is None:
        return np.full(n, 1.0 / n)
    p = np.asarray(init, dtype=np.float64)
    if p.shape != (n,):
        raise InvalidDistribution(f"initial distribution must have length {n}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidDistribution("initial distribution has negative or non-finite entries")
    if abs(p.sum() - 1) > 1e-10:
        raise InvalidDistribution(f"initial distribution sums to {p.sum()}, not 1")
    return p


def simulate_walks(
    schedule,
    m: int,
    length: int,
    init=None,
    seed: int = 0,
    schedule_id: str | None = None,
    record_trajectories: bool = False,
) -> WalkDataset:
    """Run ``m`` independent walkers for ``length`` steps.

    Step ``t`` uses ``schedule[min(t, len(schedule) - 1)]``, so a static
    graph passes a single matrix and a time-evolving one its per-step
    matrices. Walkers start from ``init`` (uniform by default); only start
    and end vertices are kept unless ``record_trajectories`` is set.
    """
    sched = _as_schedule(schedule)
    if m < 1:
        raise ValueError("m must be at least 1")
    if length < 1:
        raise ValueError("length must be at least 1")
    n = as_csr(sched[0]).shape[0]
    p0 = _check_distribution(init, n)
    samplers = [_Sampler(P) for P in sched]

    u = _walker_uniforms(int(seed), m, length + 1)
    cdf = np.cumsum(p0)
    x = np.minimum(np.searchsorted(cdf, u[:, 0] * cdf[-1], side="right"), n - 1)
    cur = x.copy()
    traj = None
    if record_trajectories:
        traj = np.empty((m, length + 1), dtype=np.int64)
        traj[:, 0] = x
    for t in range(length):
        cur = samplers[min(t, len(samplers) - 1)].step(cur, u[:, t + 1])
        if traj is not None:
            traj[:, t + 1] = cur
    if schedule_id is None:
        schedule_id = "static" if len(sched) == 1 else f"schedule[{len(sched)}]"
    return WalkDataset(n, x, cur, length, int(seed), schedule_id, False, traj)


def simulate_trajectory(P, length: int, seed: int = 0, burn_in: int = 1000, start: int = 0) -> WalkDataset:
    """Consecutive pairs ``(x_t, x_{t+1})`` of one long trajectory.

    After ``burn_in`` steps the samples are (approximately) distributed
    according to the invariant distribution; the dataset is flagged as such.
    """
    n = as_csr(P).shape[0]
    sampler = _Sampler(P)
    u = _walker_uniforms(int(seed), 1, burn_in + length)[0]
    cur = np.array([start])
    states = np.empty(length + 1, dtype=np.int64)
    for t in range(burn_in):
        cur = sampler.step(cur, u[t : t + 1])
    states[0] = cur[0]
    for t in range(length):
        cur = sampler.step(cur, u[burn_in + t : burn_in + t + 1])
        states[t + 1] = cur[0]
    return WalkDataset(n, states[:-1], states[1:], 1, int(seed), "trajectory", True)


def gram_matrices(d: WalkDataset) -> GramMatrices:
    m = d.m
    cxx = np.bincount(d.x, minlength=d.n) / m
    cyy = np.bincount(d.y, minlength=d.n) / m
    cxy = sp.coo_array((np.ones(m), (d.x, d.y)), shape=(d.n, d.n)).tocsr()
    cxy.sum_duplicates()
    cxy.data /= m
    return GramMatrices(cxx, sp.csr_array(cxy), cyy, m)


def _pinv_diag(c):
    out = np.zeros_like(c, dtype=np.float64)
    nz = c > 0
    out[nz] = 1.0 / c[nz]
    return out


def _inverse_diag(c, regularization, epsilon):
    if regularization == "pinv":
        return _pinv_diag(c)
    if regularization == "tikhonov":
        if epsilon is None or epsilon <= 0:
            raise NonpositiveEpsilon(f"Tikhonov regularization needs epsilon > 0, got {epsilon}")
        return 1.0 / (c + epsilon)
    raise ValueError(f"unknown regularization {regularization!r}")


def estimate_koopman(G: GramMatrices) -> np.ndarray:
    """``C_xx^+ C_xy``; rows of never-visited start vertices are zero."""
    return (sp.diags_array(_pinv_diag(G.cxx)) @ G.cxy).toarray()


def estimate_pf(G: GramMatrices) -> np.ndarray:
    """``C_xx^+ C_yx``."""
    return (sp.diags_array(_pinv_diag(G.cxx)) @ G.C_yx).toarray()


def estimate_equilibrium_pf(G: GramMatrices) -> np.ndarray:
    """Same formula as :func:`estimate_pf`, for data from one equilibrated trajectory.

    With ``x ~ pi`` the result approximates the Perron-Frobenius operator
    with respect to the invariant density rather than ``P^T``.
    """
    return estimate_pf(G)


def estimate_fb(G: GramMatrices, regularization: str = "tikhonov", epsilon: float | None = DEFAULT_EPSILON) -> np.ndarray:
    """Forward-backward estimate from the Gram matrices.

    The raw estimate ``F = C_xx^+ C_xy C_yy^+ C_yx`` is ``D^{-1} S`` with
    ``D = C_xx`` diagonal and ``S`` symmetric positive semidefinite. We return
    the similar matrix ``D^{-1/2} S D^{-1/2}``: it has exactly the eigenvalues
    of ``F``, is symmetric and PSD, and equals ``F`` whenever ``C_xx`` is a
    multiple of the identity (in particular in the large-data limit).

    ``regularization`` is ``"pinv"`` or ``"tikhonov"``; the latter replaces
    both pseudoinverses by ``(C + epsilon I)^{-1}``. Residual asymmetry above
    1e-12 triggers an :class:`AsymmetryWarning` before the result is
    symmetrized.
    """
    ax = np.sqrt(_inverse_diag(G.cxx, regularization, epsilon))
    ay = _inverse_diag(G.cyy, regularization, epsilon)
    M = (sp.diags_array(ax) @ G.cxy @ sp.diags_array(np.sqrt(ay))).toarray()
    F = M @ M.T
    asym = np.abs(F - F.T).max(initial=0.0)
    if asym > TOL.symmetry:
        warnings.warn(f"forward-backward estimate asymmetric by {asym:.3g}", AsymmetryWarning, stacklevel=2)
    return 0.5 * (F + F.T)


def schedule_product(schedule, length: int) -> sp.csr_array:
    """Transition matrix of ``length`` steps following ``schedule``."""
    sched = _as_schedule(schedule)
    P = as_csr(sched[0])
    for t in range(1, length):
        P = sp.csr_array(P @ as_csr(sched[min(t, len(sched) - 1)]))
    return P


class ConvergenceRow(NamedTuple):
    m: int
    mean_error: float
    std_error: float


def second_eigenvalue(M) -> float:
    return float(top_eigs_symmetric(M, 2).eigenvalues[1])


def convergence_study(
    schedule,
    m_grid: Sequence[int],
    length: int,
    trials: int = 10,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    init=None,
) -> list[ConvergenceRow]:
    """Error of the data-driven second eigenvalue of ``Q`` versus walker count.

    The reference is the second eigenvalue of ``Q`` built from the exact
    ``length``-step transition matrix of ``schedule``. For every ``m`` and
    trial a fresh dataset is simulated; the table holds the mean and
    standard deviation of the absolute error over trials.
    """
    m_grid = [int(m) for m in m_grid]
    if not m_grid:
        raise ValueError("m_grid must not be empty")
    if any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ValueError("m_grid must be strictly ascending")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    reference = second_eigenvalue(forward_backward_matrix(schedule_product(schedule, length)))
    rows = []
    for i, m in enumerate(m_grid):
        errors = []
        for trial in range(trials):
            walk_seed = int(np.random.SeedSequence([int(seed), i, trial]).generate_state(1, np.uint64)[0])
            data = simulate_walks(schedule, m, length, init=init, seed=walk_seed)
            F = estimate_fb(gram_matrices(data), "tikhonov", epsilon)
            errors.append(abs(second_eigenvalue(F) - reference))
        errors = np.asarray(errors)
        rows.append(ConvergenceRow(m, float(errors.mean()), float(errors.std())))
    return rows
