from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest

from scdiar import (MeetingConfig, build_affinity, cosine_affinity, detect_change_points,
                    generate_meeting, logistic, segment_chunk)

from conftest import basis, unit


class TestBuildAffinity:
    def test_identical_vectors_hit_calibration_target(self):
        e = unit([1.0, 1.0, 0.0])
        A = build_affinity([e], [e])
        expected = 1.0 / (1.0 + math.exp(-3.0))  # logistic(10*1 - 7)
        assert A.values[0, 0] == pytest.approx(expected, abs=1e-12)
        assert A.values[0, 0] == pytest.approx(0.9526, abs=1e-4)

    def test_orthogonal_vectors_score_tiny(self):
        A = build_affinity([basis(4, 0)], [basis(4, 1)])
        expected = 1.0 / (1.0 + math.exp(7.0))  # logistic(-7)
        assert A.values[0, 0] == pytest.approx(expected, abs=1e-12)
        assert A.values[0, 0] < 0.001

    def test_no_cache_gives_segment_columns_only(self, rng):
        tokens = [unit(v) for v in rng.normal(size=(5, 6))]
        segs = [unit(v) for v in rng.normal(size=(3, 6))]
        A = build_affinity(tokens, segs)
        assert A.values.shape == (5, 3)
        assert A.n_segments == 3 and A.n_cached == 0

    def test_cache_columns_appended_after_segments(self, rng):
        tokens = [unit(v) for v in rng.normal(size=(4, 6))]
        segs = [unit(v) for v in rng.normal(size=(2, 6))]
        cache = [unit(v) for v in rng.normal(size=(3, 6))]
        A = build_affinity(tokens, segs, cache)
        assert A.values.shape == (4, 5)
        assert A.n_segments == 2 and A.n_cached == 3
        alone = build_affinity(tokens, segs)
        np.testing.assert_allclose(A.values[:, :2], alone.values, atol=0.0)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dim"):
            build_affinity([basis(4, 0)], [basis(5, 0)])

    def test_monotone_in_inner_product(self, rng):
        col = unit(rng.normal(size=8))
        tokens = [unit(col + 0.2 * rng.normal(size=8)) for _ in range(10)]
        A = build_affinity(tokens, [col])
        dots = np.array([t @ col for t in tokens])
        order = np.argsort(dots)
        entries = A.values[:, 0][order]
        assert (np.diff(entries) > 0).all()

    def test_column_order_follows_segment_order(self, rng):
        tokens = [unit(v) for v in rng.normal(size=(6, 5))]
        segs = [unit(v) for v in rng.normal(size=(4, 5))]
        perm = [2, 0, 3, 1]
        A = build_affinity(tokens, segs)
        B = build_affinity(tokens, [segs[p] for p in perm])
        np.testing.assert_allclose(B.values, A.values[:, perm], atol=0.0)


class TestCosineAffinity:
    def test_single_segment(self):
        np.testing.assert_allclose(cosine_affinity([basis(3, 0)]), [[1.0]])

    def test_orthogonal_pair(self):
        M = cosine_affinity([basis(3, 0), basis(3, 1)])
        np.testing.assert_allclose(M, np.eye(2), atol=1e-15)

    def test_identical_pair(self):
        e = unit([2.0, 1.0])
        M = cosine_affinity([e, e])
        np.testing.assert_allclose(M, np.ones((2, 2)), atol=1e-12)

    def test_symmetric_unit_diagonal(self, rng):
        M = cosine_affinity([unit(v) for v in rng.normal(size=(5, 7))])
        np.testing.assert_allclose(M, M.T, atol=0.0)
        np.testing.assert_allclose(np.diag(M), np.ones(5), atol=0.0)


class TestContrast:
    def test_rectangular_matrix_separates_better_than_rescaled_cosine(self):
        # The (0,1)-rescaled cosine matrix (c+1)/2 is the contrast baseline;
        # the logistic-calibrated rectangular matrix must separate same- from
        # different-speaker entries at least as widely.
        for seed in range(3):
            cfg = MeetingConfig(n_speakers=3, duration_s=120, emb_dim=64,
                                noise_sigma=0.1, pause_mean_s=0.05, seed=seed)
            tokens, truth = generate_meeting(cfg)
            scores = np.array([t.scd_score for t in tokens])
            segs = segment_chunk(tokens, detect_change_points(scores, 0.25))
            tok_spk = list(truth.ref_speakers)
            seg_spk = []
            pos = 0
            for seg in segs:
                seg_spk.append(Counter(tok_spk[pos:pos + seg.token_count]).most_common(1)[0][0])
                pos += seg.token_count

            T = np.stack([t.emb for t in tokens])
            S = np.stack([s.emb for s in segs])
            A = build_affinity(T, S).values
            same = np.array([[tok_spk[i] == seg_spk[j] for j in range(len(segs))]
                             for i in range(len(tokens))])
            gap_rect = A[same].mean() - A[~same].mean()

            C = (cosine_affinity(S) + 1.0) / 2.0
            off = ~np.eye(len(segs), dtype=bool)
            seg_same = np.array([[seg_spk[i] == seg_spk[j] for j in range(len(segs))]
                                 for i in range(len(segs))])
            gap_cos = C[seg_same & off].mean() - C[~seg_same & off].mean()
            assert gap_rect >= gap_cos, f"seed {seed}: {gap_rect} < {gap_cos}"
