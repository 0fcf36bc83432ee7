from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scdiar import (ChangePointSet, detect_change_points, score_changes_from_embeddings,
                    segment_chunk, tpst_align, tpst_transfer)

from conftest import basis, make_tokens, unit

OP_RANK = {"match": 0, "substitute": 1, "delete": 2, "insert": 3}


def edit_distance_ref(a, b):
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
                          d[i - 1][j] + 1, d[i][j - 1] + 1)
    return d[len(a)][len(b)]


def enumerate_minimal_scripts(hyp, ref):
    """All minimal edit scripts as op-name sequences (exhaustive oracle)."""
    total = edit_distance_ref(hyp, ref)
    scripts = []

    def walk(i, j, used, script):
        if used > total:
            return
        if i == len(hyp) and j == len(ref):
            if used == total:
                scripts.append(tuple(script))
            return
        if i < len(hyp) and j < len(ref):
            cost = 0 if hyp[i] == ref[j] else 1
            op = "match" if cost == 0 else "substitute"
            walk(i + 1, j + 1, used + cost, script + [op])
        if j < len(ref):
            walk(i, j + 1, used + 1, script + ["delete"])
        if i < len(hyp):
            walk(i + 1, j, used + 1, script + ["insert"])

    walk(0, 0, 0, [])
    return scripts


class TestDetectChangePoints:
    def test_single_spike(self):
        assert detect_change_points([0.1, 0.9, 0.1], 0.25).indices == (1,)

    def test_all_below_threshold(self):
        assert detect_change_points([0.2, 0.2, 0.2], 0.25).indices == ()

    def test_plateau_keeps_leftmost(self):
        assert detect_change_points([0.1, 0.5, 0.5, 0.1], 0.25).indices == (1,)

    def test_index_zero_excluded(self):
        assert detect_change_points([0.9, 0.1, 0.1], 0.25).indices == ()

    def test_final_index_can_peak(self):
        assert detect_change_points([0.1, 0.1, 0.9], 0.25).indices == (2,)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            detect_change_points([], 0.25)

    def test_scores_outside_unit_rejected(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            detect_change_points([0.5, 1.2], 0.25)

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40),
           st.floats(0.05, 0.95), st.floats(0.0, 0.9))
    def test_monotone_in_threshold(self, scores, low, bump):
        high = min(low + bump, 0.99)
        at_low = set(detect_change_points(scores, low).indices)
        at_high = set(detect_change_points(scores, high).indices)
        assert at_high <= at_low


class TestSegmentChunk:
    def test_range_arithmetic(self):
        tokens = make_tokens([basis(4, i % 2) for i in range(5)])
        segs = segment_chunk(tokens, ChangePointSet((2,), 0.25))
        assert [(s.token_range, s.token_count) for s in segs] == [((0, 2), 2), ((2, 5), 3)]
        assert [s.seg_index for s in segs] == [0, 1]

    def test_singleton(self):
        tokens = make_tokens([basis(3, 0)])
        segs = segment_chunk(tokens, ChangePointSet((), 0.25))
        assert len(segs) == 1 and segs[0].token_count == 1

    def test_identical_embeddings_mean_is_identity(self):
        e = unit([1.0, 2.0, 2.0])
        segs = segment_chunk(make_tokens([e] * 6), ChangePointSet((3,), 0.25))
        for seg in segs:
            np.testing.assert_allclose(seg.emb, e, atol=1e-12)

    def test_partition_reconstructs_chunk(self, rng):
        tokens = make_tokens(rng.normal(size=(17, 8)))
        segs = segment_chunk(tokens, ChangePointSet((4, 5, 11), 0.25))
        covered = []
        for seg in segs:
            covered.extend(range(*seg.token_range))
        assert covered == [t.index for t in tokens]

    def test_timestamps_from_member_tokens(self):
        tokens = make_tokens([basis(3, 0)] * 4, token_len=0.5)
        seg = segment_chunk(tokens, ChangePointSet((), 0.25))[0]
        assert seg.start_s == tokens[0].start_s
        assert seg.end_s == tokens[-1].end_s

    def test_nonconsecutive_indices_rejected(self):
        tokens = make_tokens([basis(3, 0)] * 2) + make_tokens([basis(3, 0)], first_index=5)
        with pytest.raises(ValueError, match="consecutive"):
            segment_chunk(tokens, ChangePointSet((), 0.25))


class TestScoreChangesFromEmbeddings:
    def test_identical_neighbors_score_low(self):
        tokens = make_tokens([basis(4, 0)] * 3)
        scores = score_changes_from_embeddings(tokens)
        expected = 1.0 / (1.0 + math.exp(4.0))
        np.testing.assert_allclose(scores, [0.0, expected, expected], atol=1e-12)
        assert scores[1] < 0.25

    def test_orthogonal_neighbors_score_high(self):
        tokens = make_tokens([basis(4, 0), basis(4, 1)])
        scores = score_changes_from_embeddings(tokens)
        expected = 1.0 / (1.0 + math.exp(-4.0))
        assert scores[1] == pytest.approx(expected, abs=1e-12)
        assert scores[1] >= 0.25

    def test_single_token(self):
        np.testing.assert_array_equal(
            score_changes_from_embeddings(make_tokens([basis(4, 2)])), [0.0])


class TestTpst:
    def test_identity_alignment(self):
        assert tpst_transfer(["a", "b", "c"], ["a", "b", "c"],
                             ["S1", "S1", "S2"]) == ["S1", "S1", "S2"]

    def test_substitution_preserves_position(self):
        assert tpst_transfer(["a", "x", "c"], ["a", "b", "c"],
                             ["S1", "S1", "S2"]) == ["S1", "S1", "S2"]

    def test_insertion_inherits_preceding_label(self):
        # Oracle: enumerate every minimal script and confirm the preferred one
        # (match > substitute > delete > insert, left to right) inserts q
        # after the match of a, so q takes the preceding token's speaker.
        hyp, ref = ["a", "q", "b"], ["a", "b"]
        scripts = enumerate_minimal_scripts(hyp, ref)
        preferred = min(scripts, key=lambda s: [OP_RANK[op] for op in s])
        assert preferred == ("match", "insert", "match")
        assert tpst_transfer(hyp, ref, ["S1", "S2"]) == ["S1", "S1", "S2"]

    def test_leading_insertion_takes_following_label(self):
        assert tpst_transfer(["q", "a"], ["a"], ["S1"]) == ["S1", "S1"]

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            tpst_transfer(["a"], [], [])

    def test_speaker_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="speakers"):
            tpst_transfer(["a"], ["a", "b"], ["S1"])

    def test_replay_reconstructs_both_sequences(self, rng):
        vocab = ["a", "b", "c", "d"]
        for _ in range(25):
            hyp = [vocab[i] for i in rng.integers(0, 4, size=rng.integers(1, 9))]
            ref = [vocab[i] for i in rng.integers(0, 4, size=rng.integers(1, 9))]
            speakers = [f"S{i}" for i in rng.integers(0, 3, size=len(ref))]
            alignment = tpst_align(hyp, ref, speakers)
            replay_hyp = [hyp[i] for op, i, _ in alignment.ops if i is not None]
            replay_ref = [ref[j] for op, _, j in alignment.ops if j is not None]
            assert replay_hyp == hyp
            assert replay_ref == ref
            cost = sum(op != "match" for op, _, _ in alignment.ops)
            assert cost == edit_distance_ref(hyp, ref)

    def test_script_is_the_preferred_minimal_script(self, rng):
        vocab = ["a", "b", "c"]
        for _ in range(40):
            hyp = [vocab[i] for i in rng.integers(0, 3, size=rng.integers(1, 6))]
            ref = [vocab[i] for i in rng.integers(0, 3, size=rng.integers(1, 6))]
            alignment = tpst_align(hyp, ref, ["S"] * len(ref))
            got = tuple(op for op, _, _ in alignment.ops)
            scripts = enumerate_minimal_scripts(hyp, ref)
            preferred = min(scripts, key=lambda s: [OP_RANK[op] for op in s])
            assert got == preferred

    @given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=10),
           st.integers(0, 5))
    def test_identity_for_any_labeling(self, texts, label_seed):
        rng = np.random.default_rng(label_seed)
        speakers = [f"S{i}" for i in rng.integers(0, 3, size=len(texts))]
        assert tpst_transfer(texts, texts, speakers) == speakers

    def test_change_labels_invariant_to_renaming(self, rng):
        from scdiar.scd import reference_change_points

        hyp = ["a", "x", "b", "c", "c"]
        ref = ["a", "b", "c", "c"]
        speakers = ["S1", "S2", "S2", "S3"]
        renamed = {"S1": "alpha", "S2": "beta", "S3": "gamma"}
        before = reference_change_points(tpst_transfer(hyp, ref, speakers))
        after = reference_change_points(
            tpst_transfer(hyp, ref, [renamed[s] for s in speakers]))
        assert before == after
