"""Embedding-based reference metrics.

Four metrics over continuous representations: mean-vector cosine,
per-dimension extreme-value cosine, symmetric greedy token matching with
static vectors, and greedy token F1 over contextual token matrices.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .embeddings import EmbeddingTable, average_pool, cosine


def token_matrix(tokens, table: EmbeddingTable) -> np.ndarray:
    """Stack per-token vectors (OOV policy applied) into a (n, dim) array."""
    if len(tokens) == 0:
        raise ValueError("token list must be non-empty")
    return np.stack([table.vector(t) for t in tokens])


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return mat / safe


def embedding_average(candidate, reference, table: EmbeddingTable) -> float:
    """Cosine between the mean-pooled candidate and reference vectors."""
    cand = average_pool(candidate, table).vector
    ref = average_pool(reference, table).vector
    return cosine(cand, ref)


def vector_extrema(candidate, reference, table: EmbeddingTable) -> float:
    """Cosine between per-dimension extreme values of the token stacks.

    For each dimension the entry with the largest magnitude is kept,
    sign preserved.
    """
    scand = _extreme(token_matrix(candidate, table))
    sref = _extreme(token_matrix(reference, table))
    return cosine(scand, sref)


def _extreme(mat: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(mat), axis=0)
    return mat[idx, np.arange(mat.shape[1])]


def greedy_matching(candidate, reference, table: EmbeddingTable) -> float:
    """Symmetric mean of per-token best cosine matches.

    Each candidate token greedily matches its most similar reference
    token and vice versa; the two directional means are averaged.
    """
    cand = _normalize_rows(token_matrix(candidate, table))
    ref = _normalize_rows(token_matrix(reference, table))
    forward = kernels.mean_max_rowsim(cand, ref)
    backward = kernels.mean_max_rowsim(ref, cand)
    return 0.5 * (forward + backward)


def bertscore_f1(cand_matrix: np.ndarray, ref_matrix: np.ndarray) -> float:
    """Greedy token-level F1 over two contextual embedding matrices.

    Rows are token embeddings.  Precision is each candidate row's best
    cosine against the reference rows, recall the reverse; F1 is their
    harmonic mean, defined as 0 unless both are positive.
    """
    cand_matrix = np.asarray(cand_matrix, dtype=np.float64)
    ref_matrix = np.asarray(ref_matrix, dtype=np.float64)
    if cand_matrix.ndim != 2 or ref_matrix.ndim != 2:
        raise ValueError("token matrices must be 2-D")
    if cand_matrix.shape[0] == 0 or ref_matrix.shape[0] == 0:
        raise ValueError("token matrices must have at least one row")
    if cand_matrix.shape[1] != ref_matrix.shape[1]:
        raise ValueError(
            f"dim mismatch: {cand_matrix.shape[1]} vs {ref_matrix.shape[1]}"
        )
    cand = _normalize_rows(cand_matrix)
    ref = _normalize_rows(ref_matrix)
    precision = kernels.mean_max_rowsim(cand, ref)
    recall = kernels.mean_max_rowsim(ref, cand)
    if precision <= 0.0 or recall <= 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
