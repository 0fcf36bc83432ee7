"""Offline clustering baseline: the whole-meeting reference point.

Average-linkage agglomerative clustering on cosine similarity over all
segment embeddings of a completed stream. Deterministic by construction
(merge ties resolved toward the lowest index pair).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import as_unit_matrix, check_open_unit
from .core import DiarizationOutput, SegmentRecord, TokenRecord
from .pipeline import PipelineConfig, chunk_stream, process_chunk
from .scd import detect_change_points, score_changes_from_embeddings, segment_chunk

__all__ = ["ahc_offline", "CosineAgglomerative", "offline_diarize"]


def ahc_offline(segment_embs, token_counts=None, stop_threshold: float = 0.55,
                min_tokens: int = 10) -> np.ndarray:
    """Cluster segment embeddings by average-linkage agglomeration.

    Merging is greedy on the highest average pairwise cosine similarity and
    stops once the best pair falls below ``stop_threshold``; ties pick the
    lowest index pair. Segments with fewer than ``min_tokens`` tokens are held
    out of the merge phase and assigned afterwards to the nearest cluster
    centroid (renormalized mean of member embeddings). Labels are compact
    integers ordered by each cluster's earliest member.
    """
    embs = as_unit_matrix(segment_embs, "segment_embs")
    check_open_unit(stop_threshold, "stop_threshold")
    m = embs.shape[0]
    if m == 0:
        raise ValueError("need at least one segment")
    if token_counts is None:
        counts = np.full(m, min_tokens, dtype=np.int64)
    else:
        counts = np.asarray(token_counts, dtype=np.int64)
        if counts.shape != (m,):
            raise ValueError(f"token_counts must have shape ({m},), got {counts.shape}")
    eligible = np.flatnonzero(counts >= min_tokens)
    if eligible.size == 0:
        eligible = np.arange(m)

    core = embs[eligible]
    n = core.shape[0]
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    members: list[list[int]] = [[i] for i in range(n)]

    # rows/columns of retired clusters are parked at -inf so a plain row-major
    # argmax always lands on the active pair with the lowest indices
    work = core @ core.T
    np.fill_diagonal(work, -np.inf)
    for _ in range(max(n - 1, 0)):
        flat = int(np.argmax(work))
        best = float(work.flat[flat])
        if not np.isfinite(best) or best < stop_threshold:
            break
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        ni, nj = sizes[i], sizes[j]
        merged_row = (ni * work[i] + nj * work[j]) / (ni + nj)
        work[i] = merged_row
        work[:, i] = merged_row
        work[i, i] = -np.inf
        work[j, :] = -np.inf
        work[:, j] = -np.inf
        active[j] = False
        sizes[i] = ni + nj
        members[i].extend(members[j])
        members[j] = []

    clusters = [sorted(members[i]) for i in np.flatnonzero(active)]
    clusters.sort(key=lambda c: c[0])
    labels = np.full(m, -1, dtype=np.int64)
    centroids = []
    for label, cluster in enumerate(clusters):
        original = eligible[cluster]
        labels[original] = label
        centroid = core[cluster].mean(axis=0)
        centroids.append(centroid / np.linalg.norm(centroid))
    centroid_matrix = np.stack(centroids)

    short = np.flatnonzero(labels < 0)
    if short.size:
        sims = embs[short] @ centroid_matrix.T
        labels[short] = np.argmax(sims, axis=1)
    return labels


class CosineAgglomerative(BaseEstimator, ClusterMixin):
    """Scikit-learn clusterer wrapper around :func:`ahc_offline`.

    ``fit(X, token_counts=...)`` expects unit-norm segment embeddings as rows
    of ``X`` and exposes ``labels_`` and ``n_clusters_``.
    """

    def __init__(self, stop_threshold: float = 0.55, min_tokens: int = 10):
        self.stop_threshold = stop_threshold
        self.min_tokens = min_tokens

    def fit(self, X, y=None, token_counts=None):
        labels = ahc_offline(X, token_counts, stop_threshold=self.stop_threshold,
                             min_tokens=self.min_tokens)
        self.labels_ = labels
        self.n_clusters_ = int(labels.max()) + 1 if labels.size else 0
        return self

    def fit_predict(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).labels_


def offline_diarize(tokens, cfg: PipelineConfig | None = None) -> DiarizationOutput:
    """Diarize a completed stream with the offline baseline.

    Uses the same chunking and change-point segmentation as the streaming
    engine, then clusters every segment of the whole stream at once, so the
    only difference from the online path is global versus incremental
    clustering.
    """
    cfg = cfg or PipelineConfig()
    segments: list[SegmentRecord] = []
    for chunk in chunk_stream(tokens, cfg.max_chunk_s, cfg.silence_gap_s):
        if all(t.scd_score is not None for t in chunk):
            scores = np.array([t.scd_score for t in chunk], dtype=np.float64)
        else:
            scores = score_changes_from_embeddings(chunk)
        change_points = detect_change_points(scores, cfg.scd_threshold)
        segments.extend(segment_chunk(chunk, change_points))
    if not segments:
        return DiarizationOutput((), (), 0)
    embs = np.stack([s.emb for s in segments])
    counts = np.array([s.token_count for s in segments], dtype=np.int64)
    cluster_labels = ahc_offline(embs, counts, stop_threshold=cfg.cache_threshold,
                                 min_tokens=cfg.min_segment_tokens)
    name_of: dict[int, str] = {}
    labeled = []
    token_labels: list[str] = []
    for seg, cl in zip(segments, cluster_labels):
        cl = int(cl)
        if cl not in name_of:
            name_of[cl] = f"spk_{len(name_of) + 1:03d}"
        labeled.append((seg, name_of[cl]))
        token_labels.extend([name_of[cl]] * seg.token_count)
    return DiarizationOutput(tuple(labeled), tuple(token_labels), len(name_of))
