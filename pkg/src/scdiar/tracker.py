"""Streaming speaker cache: dedup, segment-to-speaker mapping, centroid updates.

The cache is an append-only sequence of (speaker id, centroid, cumulative
token count) entries. Chunks are folded in strictly sequential order; every
function here returns new values and never mutates its inputs, so snapshots
can be read (or serialized) concurrently with processing.
"""
from __future__ import annotations

import numpy as np

from ._validation import check_open_unit
from .core import SegmentRecord, SpeakerCache, SpeakerCacheEntry, renormalize

__all__ = [
    "dedup_against_cache",
    "assign_segments",
    "update_centroids",
    "promote_cold_start",
    "cache_to_jsonable",
    "cache_from_jsonable",
]

_METRICS = ("similarity", "distance")


def _discard_cos(threshold: float, metric: str) -> float:
    """Cosine level at or above which a representative counts as known."""
    if metric not in _METRICS:
        raise ValueError(f"metric must be one of {_METRICS}, got {metric!r}")
    # similarity semantics: discard when cos >= threshold;
    # distance semantics: discard when (1 - cos) <= threshold.
    return threshold if metric == "similarity" else 1.0 - threshold


def dedup_against_cache(rep_segments, cache: SpeakerCache, cache_threshold: float = 0.55,
                        metric: str = "similarity", chunk_id: int = 0,
                        ) -> list[SpeakerCacheEntry]:
    """Turn representative segments into new cache entries.

    A representative is discarded when it is highly similar to any cached
    centroid (or, in arrival order, to a representative kept earlier in the
    same call). Survivors get fresh sequential ids ``spk_001, spk_002, ...``
    and start with their segment's token count.
    """
    check_open_unit(cache_threshold, "cache_threshold")
    cutoff = _discard_cos(cache_threshold, metric)
    known = [entry.centroid for entry in cache.entries]
    new_entries: list[SpeakerCacheEntry] = []
    seq = cache.size
    for seg in rep_segments:
        if known:
            sims = np.stack(known) @ seg.emb
            if float(sims.max()) >= cutoff:
                continue
        seq += 1
        entry = SpeakerCacheEntry(
            speaker_id=f"spk_{seq:03d}",
            centroid=seg.emb,
            token_count=seg.token_count,
            first_seen_chunk=chunk_id,
        )
        new_entries.append(entry)
        known.append(entry.centroid)
    return new_entries


def assign_segments(segments, cache: SpeakerCache) -> list[str]:
    """Map each segment to the cached speaker with maximal cosine similarity.

    Ties go to the speaker seen earliest (cache entries are ordered by
    creation, which follows first_seen_chunk).
    """
    segments = list(segments)
    if cache.size == 0:
        if segments:
            raise ValueError("cannot assign segments with an empty speaker cache")
        return []
    if not segments:
        return []
    embs = np.stack([seg.emb for seg in segments])
    sims = embs @ cache.centroid_matrix(embs.shape[1]).T
    winners = np.argmax(sims, axis=1)  # first maximum = earliest entry
    return [cache.entries[int(w)].speaker_id for w in winners]


def update_centroids(cache: SpeakerCache, assignments, min_tokens: int = 10) -> SpeakerCache:
    """Fold assigned segments into their speakers' centroids, in chunk order.

    Each qualifying segment (token count at least ``min_tokens``) moves its
    speaker's centroid to the token-count-weighted average
    ``(N_c * centroid + N_m * emb) / (N_c + N_m)``, renormalized to unit
    length, and accumulates ``N_c += N_m``. Shorter segments are skipped.
    """
    state: dict[str, tuple[np.ndarray, int]] = {
        e.speaker_id: (e.centroid, e.token_count) for e in cache.entries}
    for seg, speaker_id in assignments:
        if not isinstance(seg, SegmentRecord):
            raise TypeError(f"expected SegmentRecord, got {type(seg).__name__}")
        if speaker_id not in state:
            raise ValueError(f"assignment to unknown speaker {speaker_id!r}")
        if seg.token_count < min_tokens:
            continue
        centroid, count = state[speaker_id]
        merged = (count * centroid + seg.token_count * seg.emb) / (count + seg.token_count)
        state[speaker_id] = (renormalize(merged), count + seg.token_count)
    entries = tuple(
        SpeakerCacheEntry(e.speaker_id, state[e.speaker_id][0], state[e.speaker_id][1],
                          e.first_seen_chunk)
        for e in cache.entries)
    return SpeakerCache(entries)


def promote_cold_start(segments, cache: SpeakerCache, chunk_id: int) -> list[SpeakerCacheEntry]:
    """First-contact fallback: when the cache is empty and selection produced
    nothing, promote the chunk's longest segment (ties: lowest ordinal) to a
    provisional speaker so that assignment is total."""
    if cache.size != 0:
        return []
    segments = list(segments)
    if not segments:
        return []
    longest = min(segments, key=lambda s: (-s.token_count, s.seg_index))
    return [SpeakerCacheEntry(
        speaker_id=f"spk_{cache.size + 1:03d}",
        centroid=longest.emb,
        token_count=longest.token_count,
        first_seen_chunk=chunk_id,
    )]


def cache_to_jsonable(cache: SpeakerCache) -> dict:
    return {
        "speakers": [
            {
                "id": e.speaker_id,
                "centroid": e.centroid.tolist(),
                "token_count": e.token_count,
                "first_seen_chunk": e.first_seen_chunk,
            }
            for e in cache.entries
        ]
    }


def cache_from_jsonable(obj: dict) -> SpeakerCache:
    try:
        speakers = obj["speakers"]
    except (TypeError, KeyError) as exc:
        raise ValueError("cache document must contain a 'speakers' list") from exc
    entries = tuple(
        SpeakerCacheEntry(
            speaker_id=str(item["id"]),
            centroid=np.asarray(item["centroid"], dtype=np.float64),
            token_count=int(item["token_count"]),
            first_seen_chunk=int(item["first_seen_chunk"]),
        )
        for item in speakers)
    return SpeakerCache(entries)
