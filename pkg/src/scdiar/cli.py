"""Command-line frontend.

Exit codes: 0 success, 1 runtime error, 2 configuration or usage error.
All commands are deterministic given their inputs and seeds; wall-clock
timing reports go to stderr so stdout and output files stay byte-stable.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from collections import deque
from pathlib import Path

import numpy as np

from . import io as fileio
from .bvls import BvlsNonConvergence, solve_bvls, solve_integer
from .metrics import cpwer, group_by_speaker, speaker_count_error, wder
from .pipeline import PipelineConfig, StreamingSession
from .scd import tpst_transfer
from .simulate import MeetingConfig, generate_meeting

_ENV_SEED = "SCDIAR_SEED"


def _fail(message: str, code: int) -> int:
    print(f"scdiar: error: {message}", file=sys.stderr)
    return code


def _env_seed() -> int | None:
    raw = os.environ.get(_ENV_SEED)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{_ENV_SEED} must be an integer, got {raw!r}")


def _load_pipeline_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_dict(fileio.load_json_file(path))


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    try:
        data = fileio.load_json_file(args.config)
        seed = _env_seed()
        if seed is not None:
            data["seed"] = seed
        cfg = MeetingConfig.from_dict(data)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 2)

    tokens, truth = generate_meeting(cfg)
    n = fileio.write_tokens(args.output, cfg.emb_dim, tokens)
    truth_path = args.truth or str(Path(args.output).with_suffix("")) + ".truth.json"
    fileio.write_truth(truth_path, truth)
    print(f"tokens={n} speakers={truth.n_speakers} changes={len(truth.change_points)}")
    return 0


# ----------------------------------------------------------------- diarize

def cmd_diarize(args) -> int:
    try:
        cfg = _load_pipeline_config(args.config)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 2)

    cache = None
    next_chunk_id = 0
    last_index = None
    segment_rows: list[dict] = []
    token_rows: list[dict] = []
    if args.resume:
        cache, next_chunk_id, last_index = fileio.read_checkpoint(args.resume)
        partial = fileio.read_output(args.output)
        segment_rows = list(partial["segments"])
        token_rows = list(partial["tokens"])
        if token_rows and token_rows[-1]["i"] != last_index:
            return _fail(
                f"partial output ends at token {token_rows[-1]['i']} but checkpoint "
                f"says {last_index}; outputs and checkpoint are out of sync", 2)

    session = StreamingSession(cfg, cache=cache, next_chunk_id=next_chunk_id,
                               last_token_index=last_index)
    _, tokens = fileio.read_tokens(args.input)
    pending_meta: deque = deque()
    started = time.perf_counter()
    stopped_early = False

    def emit(segments):
        for seg, label in segments:
            segment_rows.append(fileio.segment_row(seg, label))
            for _ in range(seg.token_count):
                i, s, e, text = pending_meta.popleft()
                token_rows.append(fileio.token_row(i, s, e, text, label))

    for token in tokens:
        if last_index is not None and token.index <= last_index:
            continue
        emit(session.push(token))
        pending_meta.append((token.index, token.start_s, token.end_s, token.text))
        if args.stop_after_chunks and session.chunks_processed >= args.stop_after_chunks:
            stopped_early = True
            break
    if not stopped_early:
        emit(session.finish())

    doc = fileio.output_document(segment_rows, token_rows, session.speaker_count)
    fileio.write_output(args.output, doc)
    if args.rttm:
        fileio.write_rttm(args.rttm, segment_rows, file_id=Path(args.input).stem)
    if args.checkpoint:
        if session.last_emitted_token_index is None:
            return _fail("nothing processed yet; refusing to write a checkpoint", 1)
        fileio.write_checkpoint(args.checkpoint, session.cache, session.next_chunk_id,
                                session.last_emitted_token_index)

    elapsed = time.perf_counter() - started
    print(f"speaker_count={session.speaker_count}")
    print(f"chunks={session.chunks_processed} tokens={session.tokens_processed}")
    stages = " ".join(f"{k}={v:.4f}s" for k, v in session.timings.items())
    rate = session.tokens_processed / elapsed if elapsed > 0 else float("inf")
    print(f"timing {stages} total={elapsed:.4f}s tokens_per_s={rate:.0f}",
          file=sys.stderr)
    return 0


# ---------------------------------------------------------------- baseline

def cmd_baseline(args) -> int:
    from .baseline import offline_diarize

    try:
        cfg = _load_pipeline_config(args.config)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 2)
    _, token_iter = fileio.read_tokens(args.input)
    tokens = list(token_iter)
    output = offline_diarize(tokens, cfg)
    meta = [(t.index, t.start_s, t.end_s, t.text) for t in tokens]
    doc = fileio.output_from_result(output, meta)
    fileio.write_output(args.output, doc)
    if args.rttm:
        fileio.write_rttm(args.rttm, doc["segments"], file_id=Path(args.input).stem)
    print(f"speaker_count={output.speaker_count}")
    return 0


# ---------------------------------------------------------------- evaluate

def _sniff_side(path):
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("SPEAKER "):
        return "rttm", fileio.read_rttm(path)
    if not first.startswith("{"):
        raise ValueError(f"{path}: unrecognized file format")
    import json

    head = json.loads(first)
    fmt = head.get("format")
    if fmt == fileio.TOKEN_FORMAT:
        _, rows = fileio.read_token_rows(path)
        return "tokens", rows
    if fmt == fileio.OUTPUT_FORMAT:
        return "output", fileio.read_output(path)
    raise ValueError(f"{path}: unrecognized document format {fmt!r}")


def _side_tokens(kind, payload, path, label_key):
    """Extract (times, texts, labels) from a token-bearing side."""
    if kind == "tokens":
        rows = payload
    elif kind == "output":
        rows = payload["tokens"]
    else:
        return None
    times, texts, labels = [], [], []
    for row in rows:
        times.append((float(row["start_s"]), float(row["end_s"])))
        texts.append(row.get("text") or f"tok{row['i']:06d}")
        label = row.get(label_key)
        if label is None:
            raise ValueError(f"{path}: token {row['i']} lacks a {label_key!r} label")
        labels.append(str(label))
    return times, texts, labels


def _rttm_labels(spans, times):
    """Map segment spans onto token midpoints (containment, else nearest)."""
    labels = []
    for start, end in times:
        mid = (start + end) / 2.0
        chosen = None
        best_dist = None
        for s, d, speaker in spans:
            if s <= mid < s + d:
                chosen = speaker
                break
            dist = abs(mid - s) if mid < s else mid - (s + d)
            if best_dist is None or dist < best_dist:
                best_dist = dist
                chosen = speaker
        if chosen is None:
            raise ValueError("RTTM side has no spans to map tokens onto")
        labels.append(chosen)
    return labels


def cmd_evaluate(args) -> int:
    try:
        hyp_kind, hyp_payload = _sniff_side(args.hyp)
        ref_kind, ref_payload = _sniff_side(args.ref)
        if hyp_kind == "rttm" and ref_kind == "rttm":
            raise ValueError("at least one side must be token-based "
                             "(RTTM carries no token timestamps)")
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 2)

    hyp_side = _side_tokens(hyp_kind, hyp_payload, args.hyp,
                            "speaker" if hyp_kind == "output" else "ref_spk")
    ref_side = _side_tokens(ref_kind, ref_payload, args.ref,
                            "speaker" if ref_kind == "output" else "ref_spk")
    if hyp_side is None:
        times, texts, ref_labels = ref_side
        hyp_labels = _rttm_labels(hyp_payload, times)
        hyp_texts = texts
        ref_texts = texts
    elif ref_side is None:
        times, texts, hyp_labels = hyp_side
        ref_labels = _rttm_labels(ref_payload, times)
        hyp_texts = texts
        ref_texts = texts
    else:
        _, hyp_texts, hyp_labels = hyp_side
        _, ref_texts, ref_labels = ref_side

    if len(hyp_labels) == len(ref_labels):
        wder_value = wder(hyp_labels, ref_labels)
    else:
        transferred = tpst_transfer(hyp_texts, ref_texts, ref_labels)
        wder_value = wder(hyp_labels, transferred)
    cpwer_value = cpwer(group_by_speaker(hyp_texts, hyp_labels),
                        group_by_speaker(ref_texts, ref_labels))
    count_err = speaker_count_error(len(set(hyp_labels)), len(set(ref_labels)))

    print(fileio.dump_json({"wder": wder_value, "cpwer": cpwer_value,
                            "speaker_count_error": count_err}))
    print(f"{'metric':<22}{'value':>12}")
    print(f"{'WDER':<22}{wder_value:>12.4f}")
    print(f"{'cpWER':<22}{cpwer_value:>12.4f}")
    print(f"{'speaker count error':<22}{count_err:>12d}")
    return 0


# -------------------------------------------------------------------- bvls

def cmd_bvls(args) -> int:
    try:
        matrix = fileio.read_matrix_csv(args.matrix)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 2)
    try:
        solution = solve_bvls(matrix)
    except BvlsNonConvergence as exc:
        return _fail(str(exc), 1)
    print(f"x={fileio.dump_json(solution.x.tolist())}")
    print(f"objective={solution.objective!r}")
    print(f"kkt_residual={solution.kkt_residual!r}")
    print(f"iterations={solution.iterations}")
    if args.integer:
        integer = solve_integer(matrix)
        print(f"integer_x={fileio.dump_json(integer.x.tolist())}")
        print(f"integer_objective={integer.objective!r}")
        print(f"enumerated={integer.enumerated}")
    return 0


# ------------------------------------------------------------------- sweep

def cmd_sweep(args) -> int:
    try:
        sim_data = fileio.load_json_file(args.sim_config)
        seed_override = _env_seed()
        sim_cfg = MeetingConfig.from_dict(sim_data)
        base_cfg = _load_pipeline_config(args.config)
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
        if not grid:
            raise ValueError("empty parameter grid")
        field_types = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
        if args.param not in field_types:
            raise ValueError(f"unknown pipeline parameter {args.param!r}; "
                             f"choose from {', '.join(sorted(field_types))}")
        if seed_override is not None:
            seeds = [seed_override]
        elif args.seeds:
            seeds = [int(v) for v in args.seeds.split(",") if v.strip()]
        else:
            seeds = [sim_cfg.seed]
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 2)

    from .pipeline import run

    lines = ["value,wder,cpwer,speaker_count"]
    for value in grid:
        if args.param == "min_segment_tokens":
            cfg = dataclasses.replace(base_cfg, **{args.param: int(value)})
        else:
            cfg = dataclasses.replace(base_cfg, **{args.param: value})
        wders, cpwers, counts = [], [], []
        for seed in seeds:
            tokens, truth = generate_meeting(dataclasses.replace(sim_cfg, seed=seed))
            output = run(tokens, cfg)
            texts = [t.text for t in tokens]
            wders.append(wder(output.token_labels, truth.ref_speakers))
            cpwers.append(cpwer(group_by_speaker(texts, output.token_labels),
                                group_by_speaker(texts, truth.ref_speakers)))
            counts.append(output.speaker_count)
        lines.append(f"{value!r},{float(np.mean(wders))!r},"
                     f"{float(np.mean(cpwers))!r},{float(np.mean(counts))!r}")
    csv_text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8")
        print(f"rows={len(grid)} output={args.output}")
    else:
        sys.stdout.write(csv_text)
    return 0


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scdiar",
        description="Streaming token-level speaker diarization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic meeting token stream")
    p.add_argument("--config", required=True, help="meeting config JSON")
    p.add_argument("--output", required=True, help="token JSONL path")
    p.add_argument("--truth", help="truth JSON path (default: <output>.truth.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diarize", help="run the streaming engine over a token file")
    p.add_argument("--input", required=True, help="token JSONL path")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--output", required=True, help="output JSON path")
    p.add_argument("--rttm", help="also write RTTM here")
    p.add_argument("--checkpoint", help="write a resume checkpoint here")
    p.add_argument("--resume", help="resume from this checkpoint "
                                    "(requires the partial --output from the same run)")
    p.add_argument("--stop-after-chunks", type=int, default=0,
                   help="stop after N chunks (for checkpoint testing)")
    p.set_defaults(func=cmd_diarize)

    p = sub.add_parser("baseline", help="offline agglomerative-clustering baseline")
    p.add_argument("--input", required=True)
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--output", required=True)
    p.add_argument("--rttm")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="score a hypothesis against a reference")
    p.add_argument("--hyp", required=True, help="output JSON, token JSONL, or RTTM")
    p.add_argument("--ref", required=True, help="token JSONL, output JSON, or RTTM")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bvls", help="solve a box-constrained least-squares instance")
    p.add_argument("--matrix", required=True, help="CSV with a 'rows,cols' header line")
    p.add_argument("--integer", action="store_true",
                   help="also run the exhaustive binary solver")
    p.set_defaults(func=cmd_bvls)

    p = sub.add_parser("sweep", help="sweep one pipeline parameter over a grid")
    p.add_argument("--sim-config", required=True, help="meeting config JSON")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--param", default="max_chunk_s", help="pipeline field to sweep")
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--seeds", help="comma-separated simulation seeds")
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
