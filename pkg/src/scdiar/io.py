"""File formats: token JSONL, truth/output/checkpoint JSON, RTTM, matrix CSV.

Token streams are JSON Lines with a header record so readers can verify the
embedding dimension before touching data. All writers emit deterministic
bytes for identical inputs (fixed key order, compact separators, ``repr``
float formatting via the json module).
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import DiarizationOutput, SpeakerCache, TokenRecord
from .simulate import MeetingTruth
from .tracker import cache_from_jsonable, cache_to_jsonable

__all__ = [
    "TOKEN_FORMAT", "TRUTH_FORMAT", "OUTPUT_FORMAT", "CHECKPOINT_FORMAT",
    "dump_json", "write_tokens", "read_tokens", "read_token_rows",
    "write_truth", "read_truth", "output_document", "write_output",
    "read_output", "write_rttm", "read_rttm", "write_checkpoint",
    "read_checkpoint", "read_matrix_csv",
]

TOKEN_FORMAT = "scdiar-tokens"
TRUTH_FORMAT = "scdiar-truth"
OUTPUT_FORMAT = "scdiar-output"
CHECKPOINT_FORMAT = "scdiar-checkpoint"

_TOKEN_KEYS = {"i", "chunk", "start_s", "end_s", "emb", "scd", "ref_spk", "text"}


def dump_json(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _token_line(token: TokenRecord) -> str:
    row: dict = {"i": token.index}
    if token.chunk_id is not None:
        row["chunk"] = token.chunk_id
    row["start_s"] = token.start_s
    row["end_s"] = token.end_s
    row["emb"] = token.emb.tolist()
    if token.scd_score is not None:
        row["scd"] = token.scd_score
    if token.ref_speaker is not None:
        row["ref_spk"] = token.ref_speaker
    if token.text is not None:
        row["text"] = token.text
    return dump_json(row)


def write_tokens(path, dim: int, tokens: Iterable[TokenRecord]) -> int:
    """Stream a token sequence to JSONL; returns the number of tokens written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json({"format": TOKEN_FORMAT, "version": 1, "dim": dim}) + "\n")
        for token in tokens:
            if token.dim != dim:
                raise ValueError(f"token {token.index} has dim {token.dim}, header says {dim}")
            fh.write(_token_line(token) + "\n")
            count += 1
    return count


def _read_header(fh, path) -> dict:
    first = fh.readline()
    if not first.strip():
        raise ValueError(f"{path}: missing token header line")
    header = json.loads(first)
    if header.get("format") != TOKEN_FORMAT:
        raise ValueError(f"{path}: expected format {TOKEN_FORMAT!r}, "
                         f"got {header.get('format')!r}")
    if "dim" not in header:
        raise ValueError(f"{path}: token header lacks 'dim'")
    return header


def read_tokens(path) -> tuple[int, Iterator[TokenRecord]]:
    """Open a token JSONL file; returns (dim, lazy token iterator)."""
    fh = open(path, "r", encoding="utf-8")
    try:
        header = _read_header(fh, path)
    except Exception:
        fh.close()
        raise
    dim = int(header["dim"])

    def tokens() -> Iterator[TokenRecord]:
        with fh:
            for line_no, line in enumerate(fh, 2):
                if not line.strip():
                    continue
                row = json.loads(line)
                unknown = sorted(set(row) - _TOKEN_KEYS)
                if unknown:
                    raise ValueError(f"{path}:{line_no}: unknown token keys: "
                                     f"{', '.join(unknown)}")
                emb = row.get("emb")
                if emb is None or len(emb) != dim:
                    raise ValueError(f"{path}:{line_no}: token embedding must have "
                                     f"dim {dim}")
                yield TokenRecord(
                    index=int(row["i"]),
                    start_s=float(row["start_s"]),
                    end_s=float(row["end_s"]),
                    emb=np.asarray(emb, dtype=np.float64),
                    chunk_id=row.get("chunk"),
                    text=row.get("text"),
                    scd_score=row.get("scd"),
                    ref_speaker=row.get("ref_spk"),
                )

    return dim, tokens()


def read_token_rows(path) -> tuple[dict, list[dict]]:
    """Light token reader for evaluation: header plus raw row dicts."""
    with open(path, "r", encoding="utf-8") as fh:
        header = _read_header(fh, path)
        rows = [json.loads(line) for line in fh if line.strip()]
    return header, rows


def write_truth(path, truth: MeetingTruth) -> None:
    doc = {
        "format": TRUTH_FORMAT,
        "version": 1,
        "n_speakers": truth.n_speakers,
        "ref_speakers": list(truth.ref_speakers),
        "change_points": list(truth.change_points),
        "bases": truth.bases.tolist(),
    }
    Path(path).write_text(dump_json(doc) + "\n", encoding="utf-8")


def read_truth(path) -> MeetingTruth:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != TRUTH_FORMAT:
        raise ValueError(f"{path}: expected format {TRUTH_FORMAT!r}")
    return MeetingTruth(
        ref_speakers=tuple(doc["ref_speakers"]),
        change_points=tuple(doc["change_points"]),
        n_speakers=int(doc["n_speakers"]),
        bases=np.asarray(doc["bases"], dtype=np.float64),
    )


def output_document(segment_rows: list[dict], token_rows: list[dict],
                    speaker_count: int) -> dict:
    return {
        "format": OUTPUT_FORMAT,
        "version": 1,
        "speaker_count": speaker_count,
        "segments": segment_rows,
        "tokens": token_rows,
    }


def segment_row(seg, speaker: str) -> dict:
    first, last = seg.token_range
    return {
        "chunk": seg.chunk_id,
        "seg": seg.seg_index,
        "first": first,
        "last": last,
        "start_s": seg.start_s,
        "end_s": seg.end_s,
        "token_count": seg.token_count,
        "speaker": speaker,
    }


def token_row(index: int, start_s: float, end_s: float, text, speaker: str) -> dict:
    row = {"i": index, "start_s": start_s, "end_s": end_s}
    if text is not None:
        row["text"] = text
    row["speaker"] = speaker
    return row


def write_output(path, document: dict) -> None:
    Path(path).write_text(dump_json(document) + "\n", encoding="utf-8")


def read_output(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != OUTPUT_FORMAT:
        raise ValueError(f"{path}: expected format {OUTPUT_FORMAT!r}")
    return doc


def output_from_result(output: DiarizationOutput, token_meta: list[tuple]) -> dict:
    """Build the output document from a run result plus (i, start, end, text)
    metadata collected while streaming."""
    if len(token_meta) != len(output.token_labels):
        raise ValueError("token metadata and labels differ in length")
    segment_rows = [segment_row(seg, spk) for seg, spk in output.segments]
    token_rows = [token_row(i, s, e, t, spk)
                  for (i, s, e, t), spk in zip(token_meta, output.token_labels)]
    return output_document(segment_rows, token_rows, output.speaker_count)


def write_rttm(path, segment_rows: list[dict], file_id: str = "stream") -> None:
    """Standard 10-field SPEAKER lines, seconds to 3 decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in segment_rows:
            start = row["start_s"]
            dur = row["end_s"] - row["start_s"]
            fh.write(f"SPEAKER {file_id} 1 {start:.3f} {dur:.3f} "
                     f"<NA> <NA> {row['speaker']} <NA> <NA>\n")


def read_rttm(path) -> list[tuple[float, float, str]]:
    """Parse SPEAKER lines into (start_s, duration_s, speaker) triples."""
    spans = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "SPEAKER" or len(parts) < 8:
                raise ValueError(f"{path}:{line_no}: not a SPEAKER line")
            spans.append((float(parts[3]), float(parts[4]), parts[7]))
    return spans


def write_checkpoint(path, cache: SpeakerCache, next_chunk_id: int,
                     last_token_index: int) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "last_token_index": last_token_index,
        "next_chunk_id": next_chunk_id,
        "cache": cache_to_jsonable(cache),
    }
    Path(path).write_text(dump_json(doc) + "\n", encoding="utf-8")


def read_checkpoint(path) -> tuple[SpeakerCache, int, int]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: expected format {CHECKPOINT_FORMAT!r}")
    return (cache_from_jsonable(doc["cache"]), int(doc["next_chunk_id"]),
            int(doc["last_token_index"]))


def read_matrix_csv(path) -> np.ndarray:
    """Dense matrix CSV: first line ``rows,cols``, then one row per line."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        try:
            rows, cols = (int(p) for p in header.split(","))
        except ValueError as exc:
            raise ValueError(f"{path}: header must be 'rows,cols', got {header!r}") from exc
        values = []
        for line_no, line in enumerate(fh, 2):
            if not line.strip():
                continue
            entries = [float(p) for p in line.strip().split(",")]
            if len(entries) != cols:
                raise ValueError(f"{path}:{line_no}: expected {cols} values, "
                                 f"got {len(entries)}")
            values.append(entries)
    if len(values) != rows:
        raise ValueError(f"{path}: expected {rows} rows, got {len(values)}")
    return np.asarray(values, dtype=np.float64)


def load_json_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
