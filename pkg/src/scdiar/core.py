"""Domain records and small vector helpers shared by every stage of the engine.

All records are immutable values: embedding arrays are copied on construction
and marked read-only, so instances can be shared freely between workers.
All arithmetic is 64-bit regardless of on-disk precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._validation import as_float_vector, as_unit_vector, readonly

DEFAULT_EMB_DIM = 192

__all__ = [
    "DEFAULT_EMB_DIM",
    "TokenRecord",
    "SegmentRecord",
    "AffinityMatrix",
    "SpeakerCacheEntry",
    "SpeakerCache",
    "DiarizationOutput",
    "cosine",
    "renormalize",
    "logistic",
]


def logistic(x):
    """Numerically stable sigmoid 1 / (1 + exp(-x))."""
    return expit(x)


def cosine(a, b) -> float:
    """Cosine similarity of two unit vectors (their dot product).

    Inputs are assumed unit-norm; only the dimensions are checked.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(a @ b)


def renormalize(v) -> np.ndarray:
    """Scale a vector to unit length, preserving direction.

    Raises ValueError for near-zero vectors (degenerate embeddings).
    """
    arr = as_float_vector(v, "vector")
    norm = float(np.linalg.norm(arr))
    if norm <= 1e-12:
        raise ValueError(f"cannot renormalize a near-zero vector (norm {norm!r})")
    return arr / norm


@dataclass(frozen=True, eq=False)
class TokenRecord:
    """One recognized token with timestamp and unit-norm speaker embedding."""

    index: int
    start_s: float
    end_s: float
    emb: np.ndarray
    chunk_id: int | None = None
    text: str | None = None
    scd_score: float | None = None
    ref_speaker: str | None = None

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"token index must be nonnegative, got {self.index}")
        if self.end_s < self.start_s:
            raise ValueError(f"token {self.index}: end_s {self.end_s} < start_s {self.start_s}")
        object.__setattr__(self, "emb", readonly(as_unit_vector(self.emb, "emb")))
        if self.scd_score is not None and not (0.0 <= self.scd_score <= 1.0):
            raise ValueError(f"token {self.index}: scd_score {self.scd_score} outside [0, 1]")

    @property
    def dim(self) -> int:
        return self.emb.shape[0]


@dataclass(frozen=True, eq=False)
class SegmentRecord:
    """A contiguous token run between change points, with its pooled embedding.

    ``token_range`` is a half-open ``[first, last)`` pair of global token
    indices, so ``token_count == last - first`` is the length signal carried
    through selection and cache updates.
    """

    seg_index: int
    token_range: tuple[int, int]
    start_s: float
    end_s: float
    emb: np.ndarray
    token_count: int
    chunk_id: int | None = None

    def __post_init__(self):
        first, last = self.token_range
        if self.token_count != last - first or self.token_count < 1:
            raise ValueError(
                f"segment {self.seg_index}: token_count {self.token_count} "
                f"inconsistent with range [{first}, {last})")
        if self.end_s < self.start_s:
            raise ValueError(f"segment {self.seg_index}: end_s < start_s")
        object.__setattr__(self, "emb", readonly(as_unit_vector(self.emb, "emb")))


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Dense token-vs-column similaritiy scores, strictly inside (0, 1).

    Rows are chunk tokens; the first ``n_segments`` columns are the chunk's
    segments and the remaining ``n_cached`` columns are cached speaker
    centroids.
    """

    values: np.ndarray
    n_segments: int
    n_cached: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ValueError(f"affinity values must be 2-dimensional, got {values.shape}")
        if values.shape[1] != self.n_segments + self.n_cached:
            raise ValueError(
                f"affinity has {values.shape[1]} columns, expected "
                f"{self.n_segments} segments + {self.n_cached} cached")
        if values.size:
            lo, hi = float(values.min()), float(values.max())
            if not (0.0 < lo and hi < 1.0):
                raise ValueError(f"affinity entries must lie in (0, 1), got range [{lo}, {hi}]")
        object.__setattr__(self, "values", readonly(values))

    @property
    def n_tokens(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SpeakerCacheEntry:
    """Centroid and cumulative token count for one tracked speaker."""

    speaker_id: str
    centroid: np.ndarray
    token_count: int
    first_seen_chunk: int

    def __post_init__(self):
        if self.token_count < 1:
            raise ValueError(f"{self.speaker_id}: token_count must be >= 1")
        object.__setattr__(self, "centroid", readonly(as_unit_vector(self.centroid, "centroid")))


@dataclass(frozen=True, eq=False)
class SpeakerCache:
    """Ordered, append-only set of tracked speakers (the streaming state)."""

    entries: tuple[SpeakerCacheEntry, ...] = ()

    @property
    def size(self) -> int:
        return len(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(e.speaker_id for e in self.entries)

    def centroid_matrix(self, dim: int) -> np.ndarray:
        if not self.entries:
            return np.empty((0, dim), dtype=np.float64)
        return np.stack([e.centroid for e in self.entries])

    def extend(self, new_entries) -> "SpeakerCache":
        return SpeakerCache(self.entries + tuple(new_entries))


@dataclass(frozen=True, eq=False)
class DiarizationOutput:
    """Per-segment and per-token speaker labels for one processed stream."""

    segments: tuple[tuple[SegmentRecord, str], ...]
    token_labels: tuple[str, ...]
    speaker_count: int

    def __post_init__(self):
        total = sum(seg.token_count for seg, _ in self.segments)
        if total != len(self.token_labels):
            raise ValueError(
                f"segments cover {total} tokens but {len(self.token_labels)} labels given")
