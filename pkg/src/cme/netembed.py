"""Interaction-network embeddings: adjacency -> cosine -> truncated SVD.

The chain: a sparse source x target count matrix, row-stochastic
normalization, a square pairwise cosine-similarity matrix between source
users, then a rank-k factorization whose row space is the network
embedding.

Two scaling modes exist for the final step because the factorization can
be folded back with either the inverse singular values (mode "paper",
which whitens the components) or the singular values themselves (mode
"conventional", which weights by importance). Both ship; "paper" is the
default.

The factorization is computed by symmetric eigendecomposition written
in-house: cyclic Jacobi rotations for small matrices, block power
iteration with QR re-orthogonalization and a final Rayleigh-Ritz step for
large ones. Column signs are canonicalized so output is deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import InteractionRecord
from .wemodel import WEModel, save_model

logger = logging.getLogger(__name__)

JACOBI_MAX_ROWS = 400
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 1000


@dataclass
class InteractionMatrix:
    """Sparse count matrix; rows are source users, columns target users."""

    matrix: sp.csr_matrix
    row_ids: list[str]
    col_ids: list[str]
    skipped: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass
class CosineMatrix:
    """Dense symmetric user-user similarity, entries in [0, 1] for count input."""

    values: np.ndarray
    row_ids: list[str]
    zero_rows: list[int] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass
class SVDFactors:
    """Top-k orthonormal columns and descending nonnegative singular values."""

    u: np.ndarray
    sigma: np.ndarray


@dataclass
class NetworkEmbedding:
    matrix: np.ndarray
    row_ids: list[str]
    mode: str
    zero_rows: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.matrix.shape[1])

    def vector_for(self, user_id: str) -> Optional[np.ndarray]:
        try:
            idx = self.row_ids.index(user_id)
        except ValueError:
            return None
        return self.matrix[idx]


def build_adjacency(
    interactions: Sequence[InteractionRecord],
    rows: Sequence[str],
    cols: Sequence[str],
) -> InteractionMatrix:
    """Sum mention and retweet counts into a sparse source x target matrix.

    Interactions whose source is not in rows or target not in cols are
    skipped and counted (target lists are usually longer than source
    lists, so some drop-off is expected, but it is never silent).
    """
    rows = list(rows)
    cols = list(cols)
    if len(set(rows)) != len(rows):
        raise ValueError("row index list contains duplicates")
    if len(set(cols)) != len(cols):
        raise ValueError("col index list contains duplicates")
    row_index = {uid: i for i, uid in enumerate(rows)}
    col_index = {uid: j for j, uid in enumerate(cols)}

    data, ii, jj = [], [], []
    skipped = 0
    for rec in interactions:
        i = row_index.get(rec.source)
        j = col_index.get(rec.target)
        if i is None or j is None:
            skipped += 1
            continue
        ii.append(i)
        jj.append(j)
        data.append(float(rec.count))
    if skipped:
        logger.warning("build_adjacency: skipped %d interactions outside the index lists", skipped)

    matrix = sp.coo_matrix(
        (data, (ii, jj)), shape=(len(rows), len(cols)), dtype=np.float64
    ).tocsr()
    matrix.sum_duplicates()
    return InteractionMatrix(matrix=matrix, row_ids=rows, col_ids=cols, skipped=skipped)


def row_normalize(im: InteractionMatrix) -> InteractionMatrix:
    """Scale every nonzero row to sum to 1; all-zero rows stay all-zero."""
    mat = im.matrix.tocsr(copy=True)
    sums = np.asarray(mat.sum(axis=1)).ravel()
    scale = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    mat = sp.diags(scale) @ mat
    return InteractionMatrix(
        matrix=mat.tocsr(), row_ids=im.row_ids, col_ids=im.col_ids, skipped=im.skipped
    )


def cosine_similarity_matrix(im: InteractionMatrix) -> CosineMatrix:
    """Pairwise cosine between rows of the interaction matrix.

    Rows of zero norm produce 0 everywhere, including their own diagonal,
    so 0/0 never occurs. For nonnegative input the entries land in [0, 1]
    and the diagonal of every nonzero row is exactly 1.
    """
    mat = im.matrix.tocsr()
    norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
    nonzero = norms > 0
    zero_rows = [int(i) for i in np.nonzero(~nonzero)[0]]

    gram = np.asarray((mat @ mat.T).todense(), dtype=np.float64)
    denom = np.outer(norms, norms)
    values = np.divide(gram, denom, out=np.zeros_like(gram), where=denom > 0)

    idx = np.nonzero(nonzero)[0]
    values[idx, idx] = 1.0
    values = (values + values.T) / 2.0
    if im.matrix.nnz == 0 or im.matrix.data.min() >= 0:
        np.clip(values, 0.0, 1.0, out=values)
    else:
        np.clip(values, -1.0, 1.0, out=values)
    return CosineMatrix(values=values, row_ids=im.row_ids, zero_rows=zero_rows)


def _jacobi_eigh(mat: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (eigenvalues, eigenvectors) unsorted; mat = V diag(w) V^T.
    """
    a = np.array(mat, dtype=np.float64, copy=True)
    n = a.shape[0]
    basis = np.eye(n)
    if n == 1:
        return np.array([a[0, 0]]), basis
    scale = max(np.linalg.norm(a), np.finfo(np.float64).tiny)

    for _sweep in range(max_sweeps):
        # norm of the strict upper triangle; subtracting squared sums from
        # the full norm cancels catastrophically and stalls convergence
        off = np.sqrt(2.0 * (np.triu(a, 1) ** 2).sum())
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e154:  # theta**2 would overflow; use the limit
                    t = 0.5 / theta
                elif theta >= 0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                vec_p, vec_q = basis[:, p].copy(), basis[:, q].copy()
                basis[:, p] = c * vec_p - s * vec_q
                basis[:, q] = s * vec_p + c * vec_q
    return np.diag(a).copy(), basis


def _block_power_eigh(
    mat: np.ndarray, k: int, tol: float, max_iter: int
) -> tuple[np.ndarray, np.ndarray]:
    """Top-k eigenpairs by subspace iteration with QR re-orthogonalization.

    Oversamples the block and iterates in two phases: a capped power phase
    tracking cheap Rayleigh quotients, then Rayleigh-Ritz rounds (Jacobi on
    the projected matrix) with short power bursts in between, until the
    Ritz values are stable to the tolerance. Clustered eigenvalues at the
    block boundary rotate within their cluster, so raw quotient tracking
    alone would never settle; the Ritz values do.
    """
    m = mat.shape[0]
    block = min(m, k + 10)
    rng = np.random.default_rng(0)  # fixed seed: decomposition is deterministic
    q, _ = np.linalg.qr(rng.standard_normal((m, block)))

    used = 0
    phase_cap = max(1, max_iter // 3)
    prev = None
    while used < phase_cap:
        z = mat @ q
        theta = np.sort(np.einsum("ij,ij->j", q, z))[::-1][:k]
        q, _ = np.linalg.qr(z)
        used += 1
        if prev is not None:
            denom = max(float(np.abs(theta).max()), np.finfo(np.float64).tiny)
            if float(np.abs(theta - prev).max()) <= max(tol, 1e-6) * denom:
                break
        prev = theta

    def rayleigh_ritz(basis):
        projected = basis.T @ (mat @ basis)
        projected = (projected + projected.T) / 2.0
        evals, evecs = _jacobi_eigh(projected, tol, max_sweeps=DEFAULT_MAX_ITERATIONS)
        order = np.argsort(evals)[::-1]
        return evals[order], evecs[:, order]

    ritz_vals, ritz_vecs = rayleigh_ritz(q)
    burst = 20
    while used < max_iter:
        for _ in range(min(burst, max_iter - used)):
            q, _ = np.linalg.qr(mat @ q)
            used += 1
        new_vals, ritz_vecs = rayleigh_ritz(q)
        denom = max(float(np.abs(new_vals[:k]).max()), np.finfo(np.float64).tiny)
        settled = float(np.abs(new_vals[:k] - ritz_vals[:k]).max()) <= tol * denom
        ritz_vals = new_vals
        if settled:
            break
    return ritz_vals, q @ ritz_vecs


def _canonical_signs(u: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    u = u.copy()
    for j in range(u.shape[1]):
        lead = np.argmax(np.abs(u[:, j]))
        if u[lead, j] < 0:
            u[:, j] = -u[:, j]
    return u


def truncated_svd(
    cosine,
    k: int,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> SVDFactors:
    """Top-k singular triples of a symmetric PSD matrix.

    Accepts a CosineMatrix or a plain symmetric ndarray. Because the input
    is symmetric PSD, left and right factors coincide (up to sign) and the
    singular values are the eigenvalues; tiny negative eigenvalues from
    rounding are clamped to zero.
    """
    mat = cosine.values if isinstance(cosine, CosineMatrix) else np.asarray(cosine, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    m = mat.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    if not np.allclose(mat, mat.T, atol=1e-8 * max(1.0, float(np.abs(mat).max()))):
        raise ValueError("matrix is not symmetric")
    mat = (mat + mat.T) / 2.0

    if m <= JACOBI_MAX_ROWS:
        evals, evecs = _jacobi_eigh(mat, tolerance, max_iterations)
    else:
        evals, evecs = _block_power_eigh(mat, k, tolerance, max_iterations)

    order = np.argsort(evals)[::-1][:k]
    sigma = np.maximum(evals[order], 0.0)
    u = _canonical_signs(evecs[:, order])
    return SVDFactors(u=u, sigma=sigma)


def network_embedding(
    factors: SVDFactors,
    mode: str = "paper",
    row_ids: Optional[Sequence[str]] = None,
    zero_rows: Optional[Sequence[int]] = None,
    sigma_tolerance: float = 1e-12,
) -> NetworkEmbedding:
    """Fold the factors into per-user rows.

    mode "paper" divides each component by its singular value (requires
    every retained value above sigma_tolerance); mode "conventional"
    multiplies instead.
    """
    if mode not in ("paper", "conventional"):
        raise ValueError(f"unknown mode {mode!r} (expected 'paper' or 'conventional')")
    sigma = np.asarray(factors.sigma, dtype=np.float64)
    if mode == "paper":
        bad = np.nonzero(sigma <= sigma_tolerance)[0]
        if bad.size:
            raise ValueError(
                f"singular value at index {int(bad[0])} is {sigma[int(bad[0])]:.3g} "
                f"<= tolerance {sigma_tolerance:.3g}; cannot divide (drop it or use "
                f"mode='conventional')"
            )
        matrix = factors.u / sigma
    else:
        matrix = factors.u * sigma
    ids = list(row_ids) if row_ids is not None else [str(i) for i in range(matrix.shape[0])]
    return NetworkEmbedding(
        matrix=matrix, row_ids=ids, mode=mode, zero_rows=list(zero_rows or [])
    )


def embed_interactions(
    interactions: Sequence[InteractionRecord],
    rows: Sequence[str],
    cols: Sequence[str],
    k: Optional[int] = None,
    mode: str = "paper",
    normalize_before_cosine: bool = True,
    tolerance: float = DEFAULT_TOLERANCE,
) -> NetworkEmbedding:
    """Run the full chain: counts -> normalize -> cosine -> t-SVD -> embedding.

    k defaults to min(300, number of source users). normalize_before_cosine
    applies the row-stochastic step first (the default reading); cosine is
    scale-invariant per row, so this mainly matters for downstream
    inspection of the intermediate matrix.
    """
    adjacency = build_adjacency(interactions, rows, cols)
    if normalize_before_cosine:
        adjacency = row_normalize(adjacency)
    cosine = cosine_similarity_matrix(adjacency)
    k = k if k is not None else min(300, len(adjacency.row_ids))
    factors = truncated_svd(cosine, k, tolerance=tolerance)
    return network_embedding(
        factors, mode=mode, row_ids=adjacency.row_ids, zero_rows=cosine.zero_rows
    )


def save_network_embedding(embedding: NetworkEmbedding, path) -> None:
    """Persist in the text embedding layout, user_id in place of word."""
    model = WEModel(
        vocabulary={uid: i for i, uid in enumerate(embedding.row_ids)},
        vectors=embedding.matrix,
    )
    save_model(model, path)
