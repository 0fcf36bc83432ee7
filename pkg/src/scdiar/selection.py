"""Representative-segment selection from a relaxed solver run.

Turns the box-constrained least-squares solution over the affinity matrix
into the set of segments that anchor new speakers for the current chunk:
short segments are dropped before solving, the relaxed vector is thresholded,
and near-duplicate survivors are collapsed so split relaxation mass cannot
manufacture extra speakers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_open_unit
from .bvls import solve_bvls
from .core import AffinityMatrix, cosine

__all__ = ["RepresentativeSet", "select_representatives"]


@dataclass(frozen=True, eq=False)
class RepresentativeSet:
    """Chosen representatives plus the relaxed solver diagnostics.

    ``segment_indices`` are chunk-local ordinals of the final representatives.
    ``candidate_indices`` are the thresholded ordinals before deduplication.
    ``solved_segment_indices`` are the ordinals whose columns entered the
    solver (the length filter's survivors); ``relaxed_x`` is the solver vector
    over those columns followed by the cache columns, and ``cache_x`` is the
    cache tail (reported for diagnostics, never a representative source).
    """

    segment_indices: tuple[int, ...]
    candidate_indices: tuple[int, ...]
    solved_segment_indices: tuple[int, ...]
    relaxed_x: np.ndarray
    cache_x: np.ndarray
    predicted_new_speakers: int


def select_representatives(A: AffinityMatrix, segments, select_threshold: float = 0.3,
                           min_tokens: int = 10, dedup_threshold: float = 0.55,
                           solver_tol: float = 1e-10) -> RepresentativeSet:
    """Pick at most one representative segment per (apparent) new speaker.

    Steps: drop segment columns with fewer than ``min_tokens`` tokens, solve
    the relaxation on the reduced matrix (cache columns retained), keep
    segment entries with ``x_i >= select_threshold``, then visit candidates in
    descending token count (ties: lower ordinal) and drop any whose embedding
    has cosine ``>= dedup_threshold`` with an already-kept candidate.

    An empty result is valid: it means no new speakers this chunk.
    """
    segments = list(segments)
    if len(segments) != A.n_segments:
        raise ValueError(f"{len(segments)} segments but affinity has {A.n_segments} columns")
    check_open_unit(select_threshold, "select_threshold")
    check_open_unit(dedup_threshold, "dedup_threshold")

    kept = tuple(i for i, seg in enumerate(segments) if seg.token_count >= min_tokens)
    n_cached = A.n_cached
    if not kept and n_cached == 0:
        return RepresentativeSet((), (), (), np.zeros(0), np.zeros(0), 0)

    cache_cols = list(range(A.n_segments, A.n_segments + n_cached))
    reduced = A.values[:, list(kept) + cache_cols]
    solution = solve_bvls(reduced, tol=solver_tol)
    seg_x = solution.x[:len(kept)]
    cache_x = solution.x[len(kept):]

    candidates = tuple(kept[i] for i in np.flatnonzero(seg_x >= select_threshold))
    order = sorted(candidates, key=lambda i: (-segments[i].token_count, i))
    chosen: list[int] = []
    for i in order:
        if any(cosine(segments[i].emb, segments[k].emb) >= dedup_threshold for k in chosen):
            continue
        chosen.append(i)
    chosen.sort()
    return RepresentativeSet(
        segment_indices=tuple(chosen),
        candidate_indices=candidates,
        solved_segment_indices=kept,
        relaxed_x=solution.x,
        cache_x=cache_x,
        predicted_new_speakers=len(chosen),
    )
