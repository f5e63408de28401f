"""Dominant eigenpairs of symmetric (or symmetrizable) operators.

Small problems are solved densely. Larger ones go through a Lanczos
iteration with full reorthogonalization; eigenvalues that Lanczos can miss
because of exact multiplicity are recovered by a deflated second pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import TOL
from .errors import NoConvergence, NotSymmetric, NotSymmetrizable, SingularNu, ZeroDegree
from .operators import NuVector, StochasticMatrix, as_csr


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (descending) with unit-norm eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    degenerate: tuple = field(default=())  # index groups with (near-)equal eigenvalues
    method: str = "dense"

    @property
    def k(self) -> int:
        return self.eigenvalues.size


def _is_operator(M) -> bool:
    return isinstance(M, spla.LinearOperator)


def _to_matrix(M):
    if isinstance(M, StochasticMatrix):
        return M.matrix
    if _is_operator(M) or sp.issparse(M):
        return M
    return np.asarray(M, dtype=np.float64)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def degenerate_groups(eigenvalues, gap: float = TOL.degeneracy_gap) -> tuple:
    """Runs of consecutive eigenvalues closer than ``gap``, as index tuples."""
    groups = []
    current = [0]
    for i in range(1, len(eigenvalues)):
        if abs(eigenvalues[i - 1] - eigenvalues[i]) < gap:
            current.append(i)
        else:
            if len(current) > 1:
                groups.append(tuple(current))
            current = [i]
    if len(current) > 1:
        groups.append(tuple(current))
    return tuple(groups)


def residual_norms(M, values, vectors) -> np.ndarray:
    MV = M @ vectors
    return np.linalg.norm(MV - vectors * values, axis=0)


def _check_symmetric(M, tol=TOL.eig_symmetry):
    if _is_operator(M):
        return
    if sp.issparse(M):
        diff = M - M.T
        asym = abs(diff).max() if diff.nnz else 0.0
    else:
        asym = np.abs(M - M.T).max(initial=0.0)
    if asym > tol:
        raise NotSymmetric(f"matrix is not symmetric (max |M - M^T| = {asym:.3g})")


def _lanczos_run(matvec, n, nev, locked, rng, max_iter, tol):
    """One Lanczos run on the complement of ``locked``.

    Returns the ``nev`` largest Ritz pairs, their residual estimates and a
    convergence flag.
    """
    n_locked = locked.shape[1]
    dim = n - n_locked
    m_max = min(max_iter, dim)
    V = np.zeros((n, m_max + 1))
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)

    def orthogonalize(w, upto):
        # two passes of classical Gram-Schmidt ("twice is enough")
        for _ in range(2):
            if n_locked:
                w -= locked @ (locked.T @ w)
            w -= V[:, :upto] @ (V[:, :upto].T @ w)
        return w

    v = orthogonalize(rng.standard_normal(n), 0)
    V[:, 0] = v / np.linalg.norm(v)
    scale = 0.0
    last_b = 0.0
    j_done = 0
    for j in range(m_max):
        w = matvec(V[:, j])
        alpha[j] = V[:, j] @ w
        w = orthogonalize(w, j + 1)
        b = np.linalg.norm(w)
        last_b = b
        scale = max(scale, abs(alpha[j]), b)
        j_done = j + 1
        exhausted = j_done == m_max
        check = j_done >= nev and (j_done % 5 == 0 or exhausted or b <= 1e-12 * max(scale, 1.0))
        if check:
            theta, S = scipy.linalg.eigh_tridiagonal(alpha[:j_done], beta[: j_done - 1])
            top = np.argsort(theta)[::-1][:nev]
            est = np.abs(b * S[-1, top]) if j_done < dim else np.zeros(nev)
            if np.all(est < tol):
                break
        if exhausted:
            break
        if b <= 1e-12 * max(scale, 1.0):
            # invariant subspace reached: continue from a fresh direction
            w = orthogonalize(rng.standard_normal(n), j + 1)
            w = orthogonalize(w, j + 1)
            b_new = np.linalg.norm(w)
            if b_new < 1e-12:
                break
            beta[j] = 0.0
            V[:, j + 1] = w / b_new
        else:
            beta[j] = b
            V[:, j + 1] = w / b

    theta, S = scipy.linalg.eigh_tridiagonal(alpha[:j_done], beta[: j_done - 1])
    top = np.argsort(theta)[::-1][:nev]
    vecs = V[:, :j_done] @ S[:, top]
    vecs /= np.linalg.norm(vecs, axis=0)
    est = np.abs(last_b * S[-1, top]) if j_done < dim else np.zeros(top.size)
    return theta[top], vecs, est, bool(np.all(est < tol))


def lanczos_top(M, k, seed=0, max_iter=None, tol=TOL.lanczos_residual):
    """``k`` largest eigenpairs of a symmetric matrix or operator via Lanczos.

    Raises :class:`NoConvergence` if the Ritz residuals do not drop below
    ``tol`` within ``max_iter`` (default ``10 k + 200``) iterations.
    """
    n = M.shape[0]
    if max_iter is None:
        max_iter = 10 * k + 200
    rng = np.random.default_rng(seed)

    def matvec(x):
        return np.asarray(M @ x).ravel()

    vals, vecs, est, ok = _lanczos_run(matvec, n, k, np.zeros((n, 0)), rng, max_iter, tol)
    if not ok:
        raise NoConvergence(
            f"Lanczos did not converge in {max_iter} iterations "
            f"(max residual estimate {est.max():.3g})",
            residuals=est,
        )
    # An eigenvalue of multiplicity > 1 contributes a single direction to a
    # Krylov space, so look for leftovers in the complement of what we have.
    for _ in range(k):
        if vecs.shape[1] >= n:
            break
        mu, u, est_u, ok_u = _lanczos_run(matvec, n, 1, vecs, rng, max_iter, tol)
        if mu[0] <= vals.min() + TOL.degeneracy_gap:
            break
        if not ok_u:
            raise NoConvergence(
                "Lanczos found an additional dominant direction but could not converge it",
                residuals=est_u,
            )
        drop = int(np.argmin(vals))
        vals[drop] = mu[0]
        vecs[:, drop] = u[:, 0]
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def top_eigs_symmetric(M, k: int, method: str = "auto", seed: int = 0, max_iter=None) -> SpectralDecomposition:
    """The ``k`` largest eigenvalues of a symmetric matrix, sorted descending.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense up to
    512 vertices). ``M`` may also be a :class:`scipy.sparse.linalg.LinearOperator`,
    which always uses Lanczos.
    """
    M = _to_matrix(M)
    n = M.shape[0]
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got {M.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    _check_symmetric(M)
    if method == "auto":
        method = "lanczos" if _is_operator(M) or n > TOL.dense_cutoff else "dense"
    if method == "dense":
        if _is_operator(M):
            raise ValueError("dense method needs an explicit matrix")
        A = M.toarray() if sp.issparse(M) else M
        A = 0.5 * (A + A.T)
        vals, vecs = scipy.linalg.eigh(A, subset_by_index=[n - k, n - 1])
        vals, vecs = vals[::-1], vecs[:, ::-1]
    elif method == "lanczos":
        vals, vecs = lanczos_top(M, k, seed=seed, max_iter=max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    vecs = fix_signs(vecs)
    return SpectralDecomposition(
        eigenvalues=np.asarray(vals, dtype=np.float64),
        eigenvectors=vecs,
        residuals=residual_norms(M, vals, vecs),
        degenerate=degenerate_groups(vals),
        method=method,
    )


def eigs_undirected_rw(P, degrees, k: int, method: str = "auto", seed: int = 0) -> SpectralDecomposition:
    """Largest eigenpairs of the transition matrix of an undirected graph.

    ``P = D^{-1} A`` is similar to ``D^{-1/2} A D^{-1/2}``; that symmetric
    matrix is diagonalised and its eigenvectors mapped back by ``D^{-1/2}``.
    The eigenvalues of ``L_rw = I - P`` are one minus these.
    """
    P = as_csr(P)
    d = np.asarray(degrees, dtype=np.float64)
    if d.shape != (P.shape[0],):
        raise ValueError("degrees must have one entry per vertex")
    if np.any(d <= 0):
        raise ZeroDegree(f"vertex {int(np.flatnonzero(d <= 0)[0])} has zero degree")
    sq = np.sqrt(d)
    S = sp.csr_array(sp.diags_array(sq) @ P @ sp.diags_array(1.0 / sq))
    diff = S - S.T
    asym = abs(diff).max() if diff.nnz else 0.0
    if asym > TOL.eig_symmetry * max(1.0, abs(S).max()):
        raise NotSymmetrizable(f"D^(1/2) P D^(-1/2) is not symmetric (deviation {asym:.3g})")
    S = sp.csr_array((S + S.T) * 0.5)
    sym = top_eigs_symmetric(S, k, method=method, seed=seed)
    vecs = sym.eigenvectors / sq[:, None]
    vecs = fix_signs(vecs / np.linalg.norm(vecs, axis=0))
    vals = sym.eigenvalues
    return SpectralDecomposition(
        eigenvalues=vals,
        eigenvectors=vecs,
        residuals=residual_norms(P, vals, vecs),
        degenerate=sym.degenerate,
        method=sym.method,
    )


def right_singular_vectors(P, nu, k: int, method: str = "auto") -> SpectralDecomposition:
    """Top right singular vectors of ``diag(nu)^{-1/2} P^T``.

    The squared singular values are the eigenvalues of ``Q`` and the right
    singular vectors its eigenvectors; they are returned in those roles.
    """
    P = as_csr(P)
    values = nu.values if isinstance(nu, NuVector) else np.asarray(nu, dtype=np.float64)
    bad = np.flatnonzero(values <= TOL.nu_threshold)
    if bad.size:
        raise SingularNu(int(bad[0]))
    n = P.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    B = sp.csr_array(sp.diags_array(1.0 / np.sqrt(values)) @ P.T)
    if method == "auto":
        method = "dense" if n <= TOL.dense_cutoff else "svds"
    if method == "dense":
        _, s, Vt = np.linalg.svd(B.toarray())
        s, V = s[:k], Vt[:k].T
    elif method == "svds":
        if k >= n:
            raise ValueError("svds needs k < n; use method='dense'")
        _, s, Vt = spla.svds(B, k=k, random_state=0)
        order = np.argsort(s)[::-1]
        s, V = s[order], Vt[order].T
    else:
        raise ValueError(f"unknown method {method!r}")
    V = fix_signs(V)
    vals = s**2
    BtB = spla.LinearOperator((n, n), matvec=lambda x: B.T @ (B @ x), matmat=lambda X: B.T @ (B @ X))
    return SpectralDecomposition(
        eigenvalues=vals,
        eigenvectors=V,
        residuals=residual_norms(BtB, vals, V),
        degenerate=degenerate_groups(vals),
        method=method,
    )


def forward_backward_operator(P) -> spla.LinearOperator:
    """``Q = P diag(nu)^{-1} P^T`` as a matrix-free operator."""
    P = as_csr(P)
    nu = np.asarray(P.sum(axis=0)).ravel()
    bad = np.flatnonzero(nu <= TOL.nu_threshold)
    if bad.size:
        raise SingularNu(int(bad[0]))
    inv = 1.0 / nu
    PT = sp.csr_array(P.T)
    n = P.shape[0]

    def mv(x):
        return P @ (inv * (PT @ x))

    def mm(X):
        return P @ (inv[:, None] * (PT @ X))

    return spla.LinearOperator((n, n), matvec=mv, matmat=mm, rmatvec=mv, dtype=np.float64)
