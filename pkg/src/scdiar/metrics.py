"""Speaker-attributed scoring: WDER, cpWER, speaker-count error.

Both metrics are invariant to renaming hypothesis speakers: WDER maximizes
correctly labeled tokens over one-to-one speaker mappings, cpWER minimizes
total word edits between concatenated per-speaker transcripts over speaker
assignments. Assignments are solved with the Hungarian method
(``scipy.optimize.linear_sum_assignment``); the test suite anchors both
against exhaustive enumeration.
"""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["wder", "cpwer", "speaker_count_error", "word_edit_distance",
           "group_by_speaker"]


def word_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance over word sequences (unit costs)."""
    a = list(a)
    b = list(b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    vocab: dict[str, int] = {}
    a_ids = np.array([vocab.setdefault(w, len(vocab)) for w in a], dtype=np.int64)
    b_ids = np.array([vocab.setdefault(w, len(vocab)) for w in b], dtype=np.int64)
    n = len(b_ids)
    idx = np.arange(n + 1, dtype=np.int64)
    prev = idx.copy()
    cur = np.empty(n + 1, dtype=np.int64)
    for i in range(1, len(a_ids) + 1):
        cur[0] = i
        cur[1:] = np.minimum(prev[:-1] + (b_ids != a_ids[i - 1]), prev[1:] + 1)
        # insertion chain: cur[j] = min_{k <= j} cur_candidate[k] + (j - k)
        np.minimum.accumulate(cur - idx, out=cur)
        cur += idx
        prev, cur = cur, prev
    return int(prev[-1])


def wder(hyp_labels: Sequence[str], ref_labels: Sequence[str]) -> float:
    """Fraction of tokens attributed to the wrong speaker under the best
    one-to-one mapping of hypothesis speakers onto reference speakers.

    Requires token-aligned label sequences; misaligned external transcripts
    must be reconciled first (see ``scd.tpst_transfer``).
    """
    hyp = list(hyp_labels)
    ref = list(ref_labels)
    if len(hyp) != len(ref):
        raise ValueError(
            f"label sequences differ in length ({len(hyp)} vs {len(ref)}); "
            "align hypothesis tokens to the reference with tpst_transfer first")
    if not ref:
        return 0.0
    hyp_ids = {s: i for i, s in enumerate(dict.fromkeys(hyp))}
    ref_ids = {s: i for i, s in enumerate(dict.fromkeys(ref))}
    table = np.zeros((len(hyp_ids), len(ref_ids)), dtype=np.int64)
    for h, r in zip(hyp, ref):
        table[hyp_ids[h], ref_ids[r]] += 1
    rows, cols = linear_sum_assignment(table, maximize=True)
    correct = int(table[rows, cols].sum())
    return 1.0 - correct / len(ref)


def cpwer(hyp: Mapping[str, Sequence[str]], ref: Mapping[str, Sequence[str]]) -> float:
    """Concatenated minimum-assignment word error rate.

    The smaller side is padded with empty transcripts, per-pair word edit
    distances form the cost matrix, and the total cost of the optimal
    one-to-one assignment is divided by the total reference word count.
    Can exceed 1 for insertion-heavy hypotheses.
    """
    hyp_texts = [list(v) for v in hyp.values()]
    ref_texts = [list(v) for v in ref.values()]
    total_ref = sum(len(t) for t in ref_texts)
    total_hyp = sum(len(t) for t in hyp_texts)
    if total_ref == 0:
        if total_hyp == 0:
            return 0.0
        raise ValueError("cpwer undefined: empty reference with nonempty hypothesis")
    k = max(len(hyp_texts), len(ref_texts))
    hyp_texts += [[] for _ in range(k - len(hyp_texts))]
    ref_texts += [[] for _ in range(k - len(ref_texts))]
    cost = np.zeros((k, k), dtype=np.int64)
    for i, h in enumerate(hyp_texts):
        for j, r in enumerate(ref_texts):
            cost[i, j] = word_edit_distance(h, r)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum()) / total_ref


def speaker_count_error(hyp_count: int, ref_count: int) -> int:
    """Signed difference between predicted and true speaker counts."""
    if hyp_count < 0 or ref_count < 0:
        raise ValueError("speaker counts must be nonnegative")
    return int(hyp_count) - int(ref_count)


def group_by_speaker(texts: Sequence[str], labels: Sequence[str]) -> dict[str, list[str]]:
    """Per-speaker transcripts in stream order, for feeding ``cpwer``."""
    if len(texts) != len(labels):
        raise ValueError("texts and labels must have equal length")
    grouped: dict[str, list[str]] = {}
    for text, label in zip(texts, labels):
        grouped.setdefault(label, []).append(text)
    return grouped
