"""Stream orchestration: chunking, per-chunk stage composition, output assembly.

Chunks are cut at silence gaps or at the maximum chunk span, then each chunk
runs change scoring -> change detection -> segmentation -> affinity ->
relaxed selection -> cache dedup -> assignment -> centroid update. The
tracker state is strictly sequential; everything else is pure per chunk.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import check_open_unit, check_positive
from .affinity import build_affinity
from .core import DiarizationOutput, SegmentRecord, SpeakerCache, TokenRecord
from .scd import detect_change_points, score_changes_from_embeddings, segment_chunk
from .selection import select_representatives
from .tracker import (assign_segments, dedup_against_cache, promote_cold_start,
                      update_centroids)

__all__ = ["PipelineConfig", "chunk_stream", "process_chunk", "run",
           "iter_diarize", "StreamingSession", "StreamingDiarizer"]


@dataclass(frozen=True)
class PipelineConfig:
    """Operating point of the streaming engine.

    All thresholds are open-interval (0, 1) values; ``max_chunk_s`` caps the
    span of one chunk and ``silence_gap_s`` is the inter-token gap that forces
    a chunk boundary. ``cache_dedup_metric`` selects whether the cache
    threshold cuts on cosine similarity (default) or cosine distance.
    """

    scd_threshold: float = 0.25
    select_threshold: float = 0.3
    cache_threshold: float = 0.55
    min_segment_tokens: int = 10
    max_chunk_s: float = 15.0
    silence_gap_s: float = 0.8
    affinity_scale: float = 10.0
    affinity_bias: float = -7.0
    solver_tol: float = 1e-10
    cache_dedup_metric: str = "similarity"

    def __post_init__(self):
        check_open_unit(self.scd_threshold, "scd_threshold")
        check_open_unit(self.select_threshold, "select_threshold")
        check_open_unit(self.cache_threshold, "cache_threshold")
        if self.min_segment_tokens < 1:
            raise ValueError("min_segment_tokens must be >= 1")
        check_positive(self.max_chunk_s, "max_chunk_s")
        check_positive(self.silence_gap_s, "silence_gap_s")
        check_positive(self.affinity_scale, "affinity_scale")
        check_positive(self.solver_tol, "solver_tol")
        if self.cache_dedup_metric not in ("similarity", "distance"):
            raise ValueError(f"cache_dedup_metric must be 'similarity' or 'distance', "
                             f"got {self.cache_dedup_metric!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown pipeline config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class _Chunker:
    """Incremental chunk cutter shared by the batch and streaming paths."""

    def __init__(self, max_chunk_s: float, silence_gap_s: float, next_chunk_id: int = 0,
                 last_token_index: int | None = None):
        self.max_chunk_s = max_chunk_s
        self.silence_gap_s = silence_gap_s
        self.next_chunk_id = next_chunk_id
        self.last_token_index = last_token_index
        self._pending: list[TokenRecord] = []
        self._last_start: float | None = None

    def push(self, token: TokenRecord) -> list[TokenRecord] | None:
        if self.last_token_index is not None and token.index <= self.last_token_index:
            raise ValueError(
                f"token indices must be strictly increasing "
                f"({token.index} after {self.last_token_index})")
        if self._last_start is not None and token.start_s < self._last_start:
            raise ValueError(
                f"unordered timestamps: token {token.index} starts at {token.start_s} "
                f"before previous start {self._last_start}")
        self.last_token_index = token.index
        self._last_start = token.start_s

        done: list[TokenRecord] | None = None
        if self._pending:
            gap = token.start_s - self._pending[-1].end_s
            span = token.end_s - self._pending[0].start_s
            if gap >= self.silence_gap_s or span > self.max_chunk_s:
                done = self._close()
        self._pending.append(dataclasses.replace(token, chunk_id=self.next_chunk_id))
        return done

    def flush(self) -> list[TokenRecord] | None:
        return self._close() if self._pending else None

    def _close(self) -> list[TokenRecord]:
        chunk = self._pending
        self._pending = []
        self.next_chunk_id += 1
        return chunk


def chunk_stream(tokens: Iterable[TokenRecord], max_chunk_s: float = 15.0,
                 silence_gap_s: float = 0.8) -> list[list[TokenRecord]]:
    """Cut a time-ordered token sequence into chunks.

    A boundary is inserted at any inter-token silence gap of at least
    ``silence_gap_s`` seconds, or whenever adding a token would stretch the
    chunk span beyond ``max_chunk_s``. Tokens are re-tagged with their chunk
    ordinal; order is preserved and every token lands in exactly one chunk.
    """
    chunker = _Chunker(max_chunk_s, silence_gap_s)
    chunks: list[list[TokenRecord]] = []
    for token in tokens:
        done = chunker.push(token)
        if done is not None:
            chunks.append(done)
    tail = chunker.flush()
    if tail is not None:
        chunks.append(tail)
    return chunks


def process_chunk(chunk: list[TokenRecord], cache: SpeakerCache, cfg: PipelineConfig,
                  timings: dict | None = None,
                  ) -> tuple[list[tuple[SegmentRecord, str]], SpeakerCache]:
    """Run the full per-chunk stage chain and return labeled segments.

    Input change scores are used when every token carries one; otherwise
    scores are derived from consecutive embeddings. All segments receive a
    label, including those too short to influence selection or updates.
    """
    if not chunk:
        raise ValueError("chunk must be nonempty")
    marks = [time.perf_counter()]

    def lap(name):
        if timings is not None:
            marks.append(time.perf_counter())
            timings[name] = timings.get(name, 0.0) + (marks[-1] - marks[-2])

    if all(t.scd_score is not None for t in chunk):
        scores = np.array([t.scd_score for t in chunk], dtype=np.float64)
    else:
        scores = score_changes_from_embeddings(chunk)
    change_points = detect_change_points(scores, cfg.scd_threshold)
    lap("scd")

    segments = segment_chunk(chunk, change_points)
    lap("segmentation")

    chunk_id = chunk[0].chunk_id or 0
    token_embs = np.stack([t.emb for t in chunk])
    seg_embs = np.stack([s.emb for s in segments])
    matrix = build_affinity(token_embs, seg_embs,
                            cache.centroid_matrix(token_embs.shape[1]),
                            scale=cfg.affinity_scale, bias=cfg.affinity_bias)
    lap("affinity")

    reps = select_representatives(matrix, segments,
                                  select_threshold=cfg.select_threshold,
                                  min_tokens=cfg.min_segment_tokens,
                                  dedup_threshold=cfg.cache_threshold,
                                  solver_tol=cfg.solver_tol)
    lap("selection")

    new_entries = dedup_against_cache([segments[i] for i in reps.segment_indices], cache,
                                      cache_threshold=cfg.cache_threshold,
                                      metric=cfg.cache_dedup_metric, chunk_id=chunk_id)
    cache = cache.extend(new_entries)
    cache = cache.extend(promote_cold_start(segments, cache, chunk_id))
    labels = assign_segments(segments, cache)
    labeled = list(zip(segments, labels))
    cache = update_centroids(cache, labeled, min_tokens=cfg.min_segment_tokens)
    lap("tracking")
    return labeled, cache


class StreamingSession:
    """Token-at-a-time driver around the chunker and tracker.

    Feed tokens with :meth:`push`; each call returns the labeled segments of
    any chunk it completed (usually none). Call :meth:`finish` once to flush
    the final chunk. Memory held between calls is the current chunk plus the
    speaker cache, independent of stream length.
    """

    def __init__(self, cfg: PipelineConfig | None = None, cache: SpeakerCache | None = None,
                 next_chunk_id: int = 0, last_token_index: int | None = None):
        self.cfg = cfg or PipelineConfig()
        self.cache = cache or SpeakerCache()
        self.timings: dict[str, float] = {}
        self.chunks_processed = 0
        self.tokens_processed = 0
        self.last_emitted_token_index: int | None = last_token_index
        self._chunker = _Chunker(self.cfg.max_chunk_s, self.cfg.silence_gap_s,
                                 next_chunk_id=next_chunk_id,
                                 last_token_index=last_token_index)
        self._finished = False

    @property
    def speaker_count(self) -> int:
        return self.cache.size

    @property
    def next_chunk_id(self) -> int:
        return self._chunker.next_chunk_id

    def push(self, token: TokenRecord) -> list[tuple[SegmentRecord, str]]:
        if self._finished:
            raise RuntimeError("session already finished")
        done = self._chunker.push(token)
        return self._process(done) if done is not None else []

    def finish(self) -> list[tuple[SegmentRecord, str]]:
        if self._finished:
            raise RuntimeError("session already finished")
        self._finished = True
        done = self._chunker.flush()
        return self._process(done) if done is not None else []

    def _process(self, chunk: list[TokenRecord]) -> list[tuple[SegmentRecord, str]]:
        try:
            labeled, self.cache = process_chunk(chunk, self.cache, self.cfg, self.timings)
        except Exception as exc:
            raise RuntimeError(
                f"stream aborted in chunk {chunk[0].chunk_id} "
                f"(tokens {chunk[0].index}..{chunk[-1].index}): {exc}") from exc
        self.chunks_processed += 1
        self.tokens_processed += len(chunk)
        self.last_emitted_token_index = chunk[-1].index
        return labeled


def iter_diarize(tokens: Iterable[TokenRecord], cfg: PipelineConfig | None = None,
                 ) -> Iterator[tuple[SegmentRecord, str]]:
    """Lazily diarize a token iterable, yielding (segment, speaker) pairs."""
    session = StreamingSession(cfg)
    for token in tokens:
        yield from session.push(token)
    yield from session.finish()


def run(tokens: Iterable[TokenRecord], cfg: PipelineConfig | None = None) -> DiarizationOutput:
    """Diarize a whole stream and assemble the output document."""
    session = StreamingSession(cfg)
    segments: list[tuple[SegmentRecord, str]] = []
    for token in tokens:
        segments.extend(session.push(token))
    segments.extend(session.finish())
    token_labels: list[str] = []
    for seg, label in segments:
        token_labels.extend([label] * seg.token_count)
    return DiarizationOutput(tuple(segments), tuple(token_labels), session.speaker_count)


class StreamingDiarizer(BaseEstimator, ClusterMixin):
    """Scikit-learn style front end for the streaming engine.

    Parameters mirror :class:`PipelineConfig`. ``fit`` consumes a sequence of
    :class:`TokenRecord` and exposes ``labels_`` (speaker id per token),
    ``n_speakers_``, ``output_`` and the final ``cache_``; ``fit_predict``
    returns the labels directly, so the estimator composes with tooling that
    expects the clusterer protocol.
    """

    def __init__(self, scd_threshold=0.25, select_threshold=0.3, cache_threshold=0.55,
                 min_segment_tokens=10, max_chunk_s=15.0, silence_gap_s=0.8,
                 affinity_scale=10.0, affinity_bias=-7.0, solver_tol=1e-10,
                 cache_dedup_metric="similarity"):
        self.scd_threshold = scd_threshold
        self.select_threshold = select_threshold
        self.cache_threshold = cache_threshold
        self.min_segment_tokens = min_segment_tokens
        self.max_chunk_s = max_chunk_s
        self.silence_gap_s = silence_gap_s
        self.affinity_scale = affinity_scale
        self.affinity_bias = affinity_bias
        self.solver_tol = solver_tol
        self.cache_dedup_metric = cache_dedup_metric

    def _config(self) -> PipelineConfig:
        return PipelineConfig(**self.get_params())

    def fit(self, X, y=None):
        """Diarize the token sequence ``X`` (a sequence of TokenRecord)."""
        cfg = self._config()
        session = StreamingSession(cfg)
        segments: list[tuple[SegmentRecord, str]] = []
        for token in X:
            segments.extend(session.push(token))
        segments.extend(session.finish())
        token_labels: list[str] = []
        for seg, label in segments:
            token_labels.extend([label] * seg.token_count)
        self.output_ = DiarizationOutput(tuple(segments), tuple(token_labels),
                                         session.speaker_count)
        self.cache_ = session.cache
        self.labels_ = np.asarray(token_labels, dtype=object)
        self.n_speakers_ = session.speaker_count
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
