"""Token-vs-segment similarity matrices.

The rectangular matrix keeps one row per token, so long segments contribute
evidence in proportion to their length; cached speaker centroids are appended
as extra columns. The square cosine matrix is the classical baseline used for
contrast and for offline clustering.
"""
from __future__ import annotations

import numpy as np

from ._validation import as_unit_matrix, check_positive
from .core import AffinityMatrix, logistic

__all__ = ["build_affinity", "cosine_affinity"]


def build_affinity(token_embs, segment_embs, cache_centroids=None,
                   scale: float = 10.0, bias: float = -7.0) -> AffinityMatrix:
    """Build the token-by-(segment + cache) affinity matrix.

    ``A[i, j] = logistic(scale * <token_i, col_j> + bias)``, columns ordered
    segments first, cached centroids after. The defaults map cosine 1.0 to
    roughly 0.95 and cosine 0.4 or less to under 0.05, giving a near-binary
    matrix for well-separated speakers.
    """
    tokens = as_unit_matrix(token_embs, "token_embs")
    segments = as_unit_matrix(segment_embs, "segment_embs")
    check_positive(scale, "scale")
    n_cached = 0
    blocks = [segments]
    if cache_centroids is not None:
        cache = as_unit_matrix(cache_centroids, "cache_centroids")
        if cache.shape[0]:
            if segments.shape[0] and cache.shape[1] != segments.shape[1]:
                raise ValueError(
                    f"cache centroid dim {cache.shape[1]} != segment dim {segments.shape[1]}")
            blocks.append(cache)
            n_cached = cache.shape[0]
    columns = np.vstack([b for b in blocks if b.shape[0]]) if any(b.shape[0] for b in blocks) \
        else segments
    if columns.shape[0] == 0:
        raise ValueError("need at least one segment or cached centroid column")
    if tokens.shape[1] != columns.shape[1]:
        raise ValueError(f"token dim {tokens.shape[1]} != column dim {columns.shape[1]}")
    values = logistic(scale * (tokens @ columns.T) + bias)
    return AffinityMatrix(values, n_segments=segments.shape[0], n_cached=n_cached)


def cosine_affinity(segment_embs) -> np.ndarray:
    """Square segment-by-segment cosine similarity matrix with unit diagonal."""
    segments = as_unit_matrix(segment_embs, "segment_embs")
    if segments.shape[0] < 1:
        raise ValueError("need at least one segment")
    sims = segments @ segments.T
    sims = (sims + sims.T) / 2.0
    np.fill_diagonal(sims, 1.0)
    return sims
