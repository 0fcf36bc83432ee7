"""Streaming token-level speaker diarization.

Token streams with precomputed speaker embeddings are split at detected
speaker-change tokens, one representative segment per speaker is selected by
box-constrained least squares over a token-segment affinity matrix, and
speakers are tracked across arbitrarily long streams with a centroid cache.
Ships with a synthetic-meeting simulator, an offline clustering baseline,
and WDER/cpWER scoring.
"""

from .affinity import build_affinity, cosine_affinity
from .baseline import CosineAgglomerative, ahc_offline, offline_diarize
from .bvls import (BvlsNonConvergence, BvlsSolution, IntegerSolution, solve_bvls,
                   solve_integer)
from .core import (DEFAULT_EMB_DIM, AffinityMatrix, DiarizationOutput, SegmentRecord,
                   SpeakerCache, SpeakerCacheEntry, TokenRecord, cosine, logistic,
                   renormalize)
from .metrics import cpwer, group_by_speaker, speaker_count_error, wder, word_edit_distance
from .pipeline import (PipelineConfig, StreamingDiarizer, StreamingSession, chunk_stream,
                       iter_diarize, process_chunk, run)
from .scd import (ChangePointSet, TpstAlignment, detect_change_points,
                  score_changes_from_embeddings, segment_chunk, tpst_align, tpst_transfer)
from .selection import RepresentativeSet, select_representatives
from .simulate import (MeetingConfig, MeetingTruth, corrupt_scd, generate_meeting,
                       iter_meeting_tokens)
from .tracker import (assign_segments, dedup_against_cache, promote_cold_start,
                      update_centroids)

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix", "BvlsNonConvergence", "BvlsSolution", "ChangePointSet",
    "CosineAgglomerative", "DEFAULT_EMB_DIM", "DiarizationOutput", "IntegerSolution",
    "MeetingConfig", "MeetingTruth", "PipelineConfig", "RepresentativeSet",
    "SegmentRecord", "SpeakerCache", "SpeakerCacheEntry", "StreamingDiarizer",
    "StreamingSession", "TokenRecord", "TpstAlignment", "ahc_offline",
    "assign_segments", "build_affinity", "chunk_stream", "corrupt_scd", "cosine",
    "cosine_affinity", "cpwer", "dedup_against_cache", "detect_change_points",
    "generate_meeting", "group_by_speaker", "iter_diarize", "iter_meeting_tokens",
    "logistic",
    "offline_diarize", "process_chunk", "promote_cold_start", "renormalize", "run",
    "score_changes_from_embeddings", "segment_chunk", "select_representatives",
    "solve_bvls", "solve_integer", "speaker_count_error", "tpst_align",
    "tpst_transfer", "update_centroids", "wder", "word_edit_distance",
]
