"""Token-level speaker change detection, segmentation, and label transfer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_vector, check_open_unit
from .core import SegmentRecord, TokenRecord, cosine, logistic, renormalize

__all__ = [
    "ChangePointSet",
    "TpstAlignment",
    "detect_change_points",
    "segment_chunk",
    "score_changes_from_embeddings",
    "tpst_align",
    "tpst_transfer",
]


@dataclass(frozen=True)
class ChangePointSet:
    """Chunk-local token ordinals where a new speaker begins."""

    indices: tuple[int, ...]
    threshold_used: float

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("change point indices must be strictly increasing")
        if self.indices and self.indices[0] == 0:
            raise ValueError("index 0 cannot be a change point (it starts the first segment)")


@dataclass(frozen=True)
class TpstAlignment:
    """Edit script between hypothesis and reference texts plus transferred labels.

    ``ops`` entries are ``(op, hyp_index, ref_index)`` with ``op`` one of
    match / substitute / insert / delete; the side an op does not touch is
    ``None``. Replaying the ops reconstructs both token sequences.
    """

    ops: tuple[tuple[str, int | None, int | None], ...]
    transferred: tuple[str, ...]


def detect_change_points(scores, threshold: float = 0.25) -> ChangePointSet:
    """Pick local maxima of the change-score sequence at or above ``threshold``.

    A position qualifies when it is strictly greater than its left neighbor
    and at least its right neighbor (missing neighbors count as -inf), so a
    flat plateau contributes only its leftmost index. Index 0 never qualifies:
    the first token always opens the first segment.
    """
    s = as_float_vector(scores, "scores")
    if s.size == 0:
        raise ValueError("scores must be nonempty")
    if float(s.min()) < 0.0 or float(s.max()) > 1.0:
        raise ValueError("scores must lie in [0, 1]")
    check_open_unit(threshold, "threshold")
    left = np.concatenate(([-np.inf], s[:-1]))
    right = np.concatenate((s[1:], [-np.inf]))
    peaks = (s >= threshold) & (s > left) & (s >= right)
    peaks[0] = False
    return ChangePointSet(tuple(np.flatnonzero(peaks).tolist()), float(threshold))


def segment_chunk(chunk_tokens, change_points: ChangePointSet) -> list[SegmentRecord]:
    """Split a chunk at its change points into single-speaker segments.

    Segment embeddings are the renormalized mean of member token embeddings;
    timestamps come from the first and last member tokens. Chunk tokens must
    carry consecutive global indices.
    """
    tokens = list(chunk_tokens)
    if not tokens:
        raise ValueError("chunk must contain at least one token")
    base = tokens[0].index
    for offset, token in enumerate(tokens):
        if token.index != base + offset:
            raise ValueError("chunk tokens must carry consecutive global indices")
    for idx in change_points.indices:
        if idx >= len(tokens):
            raise ValueError(f"change point {idx} outside chunk of {len(tokens)} tokens")

    bounds = [0, *change_points.indices, len(tokens)]
    segments = []
    for seg_index, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        members = tokens[lo:hi]
        emb = renormalize(np.mean([t.emb for t in members], axis=0))
        segments.append(SegmentRecord(
            seg_index=seg_index,
            token_range=(members[0].index, members[-1].index + 1),
            start_s=members[0].start_s,
            end_s=members[-1].end_s,
            emb=emb,
            token_count=hi - lo,
            chunk_id=members[0].chunk_id,
        ))
    return segments


def score_changes_from_embeddings(chunk_tokens, steepness: float = 8.0) -> np.ndarray:
    """Change scores from consecutive-embedding dissimilarity.

    Substitute used when the input stream carries no change scores:
    ``score[i] = logistic(steepness * (1 - cos(emb[i-1], emb[i])) - steepness / 2)``
    with ``score[0] = 0``. Identical neighbors score ``logistic(-steepness/2)``,
    well under the default detection threshold.
    """
    tokens = list(chunk_tokens)
    if not tokens:
        raise ValueError("chunk must contain at least one token")
    if len(tokens) == 1:
        return np.zeros(1)
    embs = np.stack([t.emb for t in tokens])
    sims = np.einsum("ij,ij->i", embs[:-1], embs[1:])
    scores = logistic(steepness * (1.0 - sims) - steepness / 2.0)
    return np.concatenate(([0.0], scores))


def _suffix_distances(hyp: list[str], ref: list[str]) -> np.ndarray:
    """D[i, j] = minimum edit distance between hyp[i:] and ref[j:], unit costs."""
    n_h, n_r = len(hyp), len(ref)
    ref_arr = np.array(ref, dtype=object)
    D = np.zeros((n_h + 1, n_r + 1), dtype=np.int32)
    D[n_h, :] = np.arange(n_r, -1, -1, dtype=np.int32)
    idx = np.arange(n_r + 1, dtype=np.int64)
    for i in range(n_h - 1, -1, -1):
        nxt = D[i + 1].astype(np.int64)
        # cheapest non-delete op at each column: diagonal (match/substitute)
        # or insert hyp[i]; the last column only allows the insert.
        base = np.empty(n_r + 1, dtype=np.int64)
        base[:-1] = np.minimum(nxt[1:] + (ref_arr != hyp[i]), nxt[:-1] + 1)
        base[-1] = nxt[-1] + 1
        # fold in deletions of ref[j:k]:  D[i, j] = min_{k >= j} base[k] + (k - j)
        shifted = base + idx
        suffix_min = np.minimum.accumulate(shifted[::-1])[::-1]
        D[i] = (suffix_min - idx).astype(np.int32)
    return D


def tpst_align(hyp_texts, ref_texts, ref_speakers) -> TpstAlignment:
    """Minimum-edit alignment that moves reference speaker labels onto
    hypothesis tokens without altering the hypothesis text.

    Among equal-cost scripts the preference, resolved left to right, is
    match > substitute > delete > insert. Matched and substituted hypothesis
    tokens take the aligned reference token's speaker; inserted tokens take
    the nearest preceding labeled token's speaker, or the following one when
    nothing precedes.
    """
    hyp = [str(t) for t in hyp_texts]
    ref = [str(t) for t in ref_texts]
    speakers = list(ref_speakers)
    if not ref:
        raise ValueError("reference must be nonempty")
    if len(speakers) != len(ref):
        raise ValueError(f"{len(speakers)} speakers for {len(ref)} reference tokens")

    D = _suffix_distances(hyp, ref)
    n_h, n_r = len(hyp), len(ref)
    ops: list[tuple[str, int | None, int | None]] = []
    transferred: list[str | None] = [None] * n_h
    i = j = 0
    while i < n_h or j < n_r:
        here = D[i, j]
        if i < n_h and j < n_r and hyp[i] == ref[j] and here == D[i + 1, j + 1]:
            ops.append(("match", i, j))
            transferred[i] = speakers[j]
            i += 1
            j += 1
        elif i < n_h and j < n_r and hyp[i] != ref[j] and here == D[i + 1, j + 1] + 1:
            ops.append(("substitute", i, j))
            transferred[i] = speakers[j]
            i += 1
            j += 1
        elif j < n_r and here == D[i, j + 1] + 1:
            ops.append(("delete", None, j))
            j += 1
        else:
            ops.append(("insert", i, None))
            i += 1

    last_seen: str | None = None
    for k in range(n_h):
        if transferred[k] is None:
            transferred[k] = last_seen
        else:
            last_seen = transferred[k]
    next_seen: str | None = None
    for k in range(n_h - 1, -1, -1):
        if transferred[k] is None:
            transferred[k] = next_seen
        else:
            next_seen = transferred[k]
    return TpstAlignment(tuple(ops), tuple(transferred))  # type: ignore[arg-type]


def tpst_transfer(hyp_texts, ref_texts, ref_speakers) -> list[str]:
    """Speaker label per hypothesis token (see ``tpst_align``)."""
    return list(tpst_align(hyp_texts, ref_texts, ref_speakers).transferred)


def reference_change_points(labels) -> set[int]:
    """Token positions whose speaker differs from the previous token's."""
    labels = list(labels)
    return {i for i in range(1, len(labels)) if labels[i] != labels[i - 1]}
